import logging

import numpy as np
import pytest

from conformal_energy.circle_maps import FourierMap, identity, make_moebius, make_square
from conformal_energy.disk_extension import (
    FourierBoundary,
    boundary_fourier,
    deformation_bound_curve,
    deformation_derivative,
    deformation_limit,
    deformation_value,
    douglas_energy,
    extension_energy,
    poisson_field,
)
from conformal_energy.energy import QuadratureSpec, conformal_energy
from conformal_energy.errors import NonConvergentError, ParameterDomainError


@pytest.fixture(scope="module")
def square_field():
    return poisson_field(boundary_fourier(make_square().inverse(), M=1024))


@pytest.fixture(scope="module")
def smooth_field():
    return poisson_field(boundary_fourier(FourierMap(identity(), [0.0, 0.1]).inverse(), M=64))


# ----------------------------
# Boundary coefficients
# ----------------------------
@pytest.mark.parametrize("a", [0.0, 0.3, 0.7])
def test_moebius_coefficients_are_geometric(a):
    fb = boundary_fourier(make_moebius(a, 0.0), M=32)
    assert fb.coefficient(0) == pytest.approx(-a, abs=1e-12)
    for m in range(1, 12):
        assert fb.coefficient(m) == pytest.approx((1.0 - a * a) * a ** (m - 1), abs=1e-12)
        assert abs(fb.coefficient(-m)) <= 1e-12
    assert fb.coefficient(100) == 0j


def test_identity_boundary_is_a_single_mode():
    fb = boundary_fourier(identity(), M=16)
    assert fb.coefficient(1) == pytest.approx(1.0, abs=1e-14)
    assert fb.parseval_sum == pytest.approx(1.0, abs=1e-12)
    assert not fb.aliasing_advisory


def test_parseval_sum_is_one_for_unimodular_boundaries():
    fb = boundary_fourier(FourierMap(identity(), [0.1, 0.05]), M=64)
    assert fb.parseval_sum == pytest.approx(1.0, abs=1e-12)


def test_coefficient_frame_columns():
    frame = boundary_fourier(identity(), M=16).to_frame()
    assert list(frame.columns) == ["k", "re", "im"]
    assert len(frame) == 33
    assert frame["k"].iloc[0] == -16


def test_truncation_and_sampling_domain():
    with pytest.raises(ParameterDomainError):
        boundary_fourier(identity(), M=8)
    with pytest.raises(ParameterDomainError):
        boundary_fourier(identity(), M=32, sampling_factor=4)


# ----------------------------
# Douglas energy
# ----------------------------
@pytest.mark.parametrize("a, rot", [(0.3, 0.0), (0.5, 0.7), (-0.4, 2.0)])
def test_moebius_douglas_energy_is_one(a, rot):
    assert douglas_energy(boundary_fourier(make_moebius(a, rot), M=64)) == pytest.approx(1.0, abs=1e-12)
    assert extension_energy(make_moebius(a, rot), M=64) == pytest.approx(1.0, abs=1e-12)


def test_extension_energy_matches_double_integral_for_smooth_map(small_q):
    angle_map = FourierMap(identity(), [0.0, 0.02])
    dual = extension_energy(angle_map, M=64)
    assert dual == pytest.approx(conformal_energy(angle_map, small_q).value, abs=1e-7)
    assert dual == pytest.approx(1.0002, abs=1e-5)


def test_extension_energy_matches_double_integral_for_square():
    dual = extension_energy(make_square(), M=512)
    direct = conformal_energy(make_square(), QuadratureSpec(n=1024, refine=1))
    assert dual == pytest.approx(direct.value, abs=1e-3 + direct.err)


def test_douglas_sum_refuses_a_growing_tail():
    fb = FourierBoundary(
        coefficients=np.ones(33, dtype=complex),
        M=16,
        sampling=256,
        tail_energy=2.0,
        previous_octave_energy=1.0,
        aliasing_advisory=True,
        label="flat",
    )
    with pytest.raises(NonConvergentError):
        douglas_energy(fb)


# ----------------------------
# Poisson field and deformation curve
# ----------------------------
def test_moebius_field_is_holomorphic():
    field = poisson_field(boundary_fourier(make_moebius(0.3, 0.0), M=32), grid=(32, 64))
    assert np.max(np.abs(field.nu)) <= 1e-10
    assert field.douglas == pytest.approx(1.0, abs=1e-10)
    assert not field.invalid.any()

    curve = deformation_bound_curve(field)
    assert np.allclose(curve.values, 1.0, atol=1e-10)
    assert not curve.strictly_increasing


def test_square_field_area_and_limit(square_field):
    curve = deformation_bound_curve(square_field)
    assert curve.b0 == pytest.approx(1.0, abs=1e-6)
    assert curve.strictly_increasing
    assert curve.b_limit == pytest.approx(square_field.douglas, abs=1e-12)
    fb = boundary_fourier(make_square().inverse(), M=1024)
    assert curve.b_limit == pytest.approx(douglas_energy(fb), abs=1e-9)
    assert list(curve.to_frame().columns) == ["t", "B"]
    assert len(curve.to_frame()) == curve.t.size


def test_square_field_summary_counts(square_field):
    summary = square_field.summary()
    assert summary["radial"] == 1024
    assert summary["angular"] == 1024
    assert summary["min_jacobian"] <= summary["douglas"]


def test_square_field_beltrami_coefficient_inside_the_disk(square_field):
    inner = square_field.r <= 0.9
    assert np.max(np.abs(square_field.nu[inner])) < 1.0


def test_exact_grid_logs_no_resolution_warning(caplog):
    fb = boundary_fourier(make_square().inverse(), M=64)
    with caplog.at_level(logging.WARNING, logger="conformal_energy.disk_extension"):
        poisson_field(fb, grid=(64, 64))
    assert "under-resolves" not in caplog.text
    with caplog.at_level(logging.WARNING, logger="conformal_energy.disk_extension"):
        poisson_field(fb, grid=(64, 32))
    assert "under-resolves" in caplog.text


def test_holomorphy_residual_shrinks_under_refinement():
    fb = boundary_fourier(make_square().inverse(), M=64)
    residuals = [poisson_field(fb, grid=(n, n)).holomorphy_residual() for n in (64, 128, 256)]
    assert residuals[0] > residuals[1] > residuals[2]


@pytest.mark.parametrize("t", [0.2, 0.5, 0.8])
def test_deformation_derivative_matches_difference_quotient(smooth_field, t):
    h = 1e-5
    numeric = (deformation_value(smooth_field, t + h) - deformation_value(smooth_field, t - h)) / (2 * h)
    exact = deformation_derivative(smooth_field, t)
    assert exact > 0.0
    assert exact == pytest.approx(numeric, rel=1e-5)
    assert deformation_derivative(smooth_field, 0.0) == 0.0


def test_deformation_parameters_must_lie_below_one(square_field):
    with pytest.raises(ParameterDomainError):
        deformation_bound_curve(square_field, [0.5, 1.0])
    with pytest.raises(ParameterDomainError):
        deformation_value(square_field, -0.1)


# ----------------------------
# Fields that are not orientation preserving
# ----------------------------
@pytest.fixture
def folding_field():
    """H = 0.5w + 0.6w̄, so |ν| = 1.2 everywhere."""
    M = 16
    coefficients = np.zeros(2 * M + 1, dtype=complex)
    coefficients[M + 1] = 0.5
    coefficients[M - 1] = 0.6
    fb = FourierBoundary(
        coefficients=coefficients,
        M=M,
        sampling=256,
        tail_energy=0.0,
        previous_octave_energy=0.0,
        aliasing_advisory=False,
        label="folding",
    )
    return poisson_field(fb, grid=(16, 16))


def test_curve_is_truncated_where_beltrami_coefficient_reaches_one(folding_field):
    assert folding_field.invalid.all()
    assert deformation_limit(folding_field) == pytest.approx(1.0 / 1.2, rel=1e-12)

    curve = deformation_bound_curve(folding_field, [0.0, 0.5, 0.8, 0.85, 0.9])
    assert curve.truncated
    assert curve.t_limit == pytest.approx(1.0 / 1.2, rel=1e-12)
    assert curve.t.tolist() == [0.0, 0.5, 0.8]
    assert curve.summary()["points"] == 3

    a, b = 0.25, 0.36
    expected = [(a + t * t * b) / (a - t * t * b) * (a - b) for t in (0.0, 0.5, 0.8)]
    np.testing.assert_allclose(curve.values, expected, rtol=1e-10)
    assert curve.b_limit == pytest.approx(a + b, rel=1e-10)


def test_value_past_the_limit_is_refused(folding_field):
    with pytest.raises(ParameterDomainError) as info:
        deformation_value(folding_field, 0.9)
    assert info.value.details["limit"] == pytest.approx(1.0 / 1.2)
    with pytest.raises(ParameterDomainError):
        deformation_derivative(folding_field, 0.85)


def test_untruncated_curve_reports_unit_limit(smooth_field):
    curve = deformation_bound_curve(smooth_field)
    assert not curve.truncated
    assert curve.t_limit == 1.0
    assert curve.t.size == 32
