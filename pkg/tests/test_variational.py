import numpy as np
import pytest

from conformal_energy.circle_maps import FourierMap, compose, identity, make_moebius, make_pwl, make_square
from conformal_energy.energy import QuadratureSpec
from conformal_energy.errors import ParameterDomainError, RegularityError, WindowError
from conformal_energy.variational import (
    Perturbation,
    critical_residual,
    descend,
    finite_difference_variation,
    first_variation,
    first_variation_gradient,
    fit_moebius,
    residual_profile,
    u_form_factor,
    u_form_residual,
)

SMOOTH = FourierMap(identity(), [0.0, 0.2])


@pytest.mark.parametrize(
    "theta",
    [SMOOTH, FourierMap(identity(), [0.1, 0.0, 0.05]), make_square(), make_pwl(0.5),
     compose(make_moebius(0.3), FourierMap(identity(), [0.0, 0.1]))],
    ids=str,
)
def test_first_variation_matches_finite_differences(theta, small_q):
    gradient = first_variation_gradient(theta, 3, small_q)
    for k in (1, 2, 3):
        numeric = finite_difference_variation(theta, Perturbation.mode(k), small_q)
        assert abs(gradient[k - 1] - numeric) <= 1e-4 * abs(numeric) + 1e-8


def test_first_variation_is_linear_in_the_perturbation(small_q):
    gradient = first_variation_gradient(SMOOTH, 3, small_q)
    phi = Perturbation(np.array([0.5, -1.0, 2.0]))
    assert first_variation(SMOOTH, phi, small_q) == pytest.approx(float(gradient @ phi.coefficients))


def test_identity_and_moebius_are_critical(small_q):
    assert np.all(np.abs(first_variation_gradient(identity(), 4, small_q)) <= 1e-12)
    assert np.all(np.abs(first_variation_gradient(make_moebius(0.3), 4, small_q)) <= 1e-8)


def test_cusp_map_fails_regularity(small_q):
    cusp = compose(make_square(), make_square())
    with pytest.raises(RegularityError):
        first_variation(cusp, Perturbation.mode(1), small_q)


def test_perturbation_helpers():
    phi = Perturbation.mode(3, 0.5)
    assert phi.coefficients.tolist() == [0.0, 0.0, 0.5]
    assert float(phi(np.pi / 6)) == pytest.approx(0.5)
    wide = Perturbation(np.array([1.0, 1.0])).normalized()
    assert wide.coefficients.tolist() == pytest.approx([1 / 3, 1 / 3])
    assert phi.apply(identity(), 0.1).coefficients.tolist() == pytest.approx([0.0, 0.0, 0.05])


@pytest.mark.parametrize("y", [0.0, 1.0, 4.0])
def test_residual_vanishes_for_moebius(y, small_q):
    assert abs(critical_residual(make_moebius(0.3), y, small_q)) <= 1e-4
    assert abs(critical_residual(identity(), y, small_q)) <= 1e-8


@pytest.mark.parametrize("theta, y", [(make_square(), 3.0), (SMOOTH, 1.0), (make_moebius(0.4, 0.5), 2.0)], ids=str)
def test_u_form_agrees_with_cotangent_form(theta, y, small_q):
    expected = critical_residual(theta, y, small_q)
    assert u_form_factor(theta, y) * u_form_residual(theta, y, small_q) == pytest.approx(expected, rel=1e-4, abs=1e-5)


@pytest.mark.parametrize("y", [0.7, 3.5])
def test_residual_half_interval_matches_full_interval(y, small_q):
    center = float(SMOOTH(y))
    n = 8192
    x = -np.pi + (np.arange(n) + 0.5) * (2.0 * np.pi / n)
    left = 1.0 / np.tan(0.5 * (center - SMOOTH(y - x)))
    right = 1.0 / np.tan(0.5 * (SMOOTH(y + x) - center))
    full = float(np.sum((left - right) * np.cos(x)) * (2.0 * np.pi / n))
    assert critical_residual(SMOOTH, y, small_q) == pytest.approx(full, abs=5e-5)


def test_u_form_without_recentering_hits_a_pole(small_q):
    with pytest.raises(WindowError):
        u_form_residual(identity(), 2.0, small_q, recenter=False)


def test_square_residual_profile(small_q):
    profile = residual_profile(make_square(), 32, small_q)
    assert 0 in profile.nonconvergent
    assert np.isnan(profile.values[0])
    assert profile.max_abs >= 1e-2
    assert list(profile.to_frame().columns) == ["y", "R"]


def test_moebius_residual_profile(small_q):
    profile = residual_profile(make_moebius(0.3), 16, small_q, form="u")
    assert profile.nonconvergent == []
    assert profile.max_abs <= 1e-3


def test_residual_profile_rejects_unknown_form(small_q):
    with pytest.raises(ParameterDomainError):
        residual_profile(identity(), 8, small_q, form="sin")


def test_fit_recovers_moebius_parameters():
    fit = fit_moebius(make_moebius(0.4, 1.0))
    assert fit.a == pytest.approx(0.4, abs=5e-3)
    assert fit.rot == pytest.approx(1.0, abs=5e-3)
    assert fit.sup_distance <= 1e-2


def test_descent_lowers_energy():
    q = QuadratureSpec(n=128)
    trace = descend(SMOOTH, K=4, max_steps=8, q=q)
    energies = np.asarray(trace.energies)
    assert np.all(np.diff(energies) < 0.0)
    assert trace.final_energy.value >= 1.0 - trace.final_energy.err - 1e-12
    assert trace.final_energy.value < energies[0]
    assert list(trace.to_frame().columns) == ["step", "energy", "grad_norm", "step_size"]
    assert trace.summary()["moebius_fit"] is not None


def test_descent_from_identity_stops_immediately():
    trace = descend(identity(), K=4, max_steps=5, q=QuadratureSpec(n=128))
    assert trace.steps == 0
    assert trace.converged
    assert trace.fit.a == pytest.approx(0.0, abs=5e-3)
    assert trace.fit.sup_distance <= 1e-2
    assert trace.final_energy.value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("theta, K", [(make_pwl(0.5), 4), (SMOOTH, 0), (SMOOTH, 33)], ids=str)
def test_descent_rejects_bad_input(theta, K):
    with pytest.raises(ParameterDomainError):
        descend(theta, K=K, max_steps=1, q=QuadratureSpec(n=64))
