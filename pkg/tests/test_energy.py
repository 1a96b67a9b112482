import math

import pytest

from config import settings
from conformal_energy.circle_maps import FourierMap, identity, invert, make_moebius, make_pwl, make_square, rotation
from conformal_energy.energy import (
    EXCLUDED,
    QuadratureSpec,
    bilip_bounds_report,
    complex_kernel_imaginary_part,
    conformal_energy,
    discrete_energy,
    energy_oracle,
    energy_series,
    invariance_gap,
    log_sin_moment,
)
from conformal_energy.errors import CertificateError, DegenerateMapError, ParameterDomainError


@pytest.mark.parametrize("a", [0.0, 0.3, 0.6, 0.2 - 0.5j])
@pytest.mark.parametrize("rot", [0.0, 1.1])
def test_moebius_energy_is_one(a, rot, small_q):
    estimate = conformal_energy(make_moebius(a, rot), small_q)
    assert estimate.value == pytest.approx(1.0, abs=1e-9)
    assert estimate.err <= 1e-9
    assert estimate.n_used == 256


def test_estimate_reports_levels(small_q):
    estimate = conformal_energy(make_square(), small_q)
    assert [n for n, _ in estimate.levels] == [128, 256]
    assert estimate.err == pytest.approx(abs(estimate.levels[1][1] - estimate.levels[0][1]))
    assert estimate.to_dict()["method"] == "midpoint-subtracted"


@pytest.mark.parametrize("k", [2, 3])
def test_small_sine_perturbation_energy(k, small_q):
    eps = 0.02
    value = conformal_energy(FourierMap(identity(), [0.0] * (k - 1) + [eps]), small_q).value
    assert value == pytest.approx(1.0 + (k - 1) * eps ** 2 / 2, abs=1e-5)


def test_energy_floor_on_corpus(corpus, small_q):
    for name, angle_map in corpus.items():
        estimate = conformal_energy(angle_map, small_q)
        assert estimate.value >= 1.0 - estimate.err - 1e-12, name


def test_pwl_energy_exceeds_one(medium_q):
    assert conformal_energy(make_pwl(0.1), medium_q).value > 1.0


@pytest.mark.parametrize("angle_map", [make_square(), make_pwl(0.1), invert(make_square())], ids=str)
def test_invariance_gap_is_rounding_level(angle_map, small_q):
    phi = make_moebius(0.4 - 0.2j, 2.0)
    assert invariance_gap(angle_map, phi, small_q) <= 1e-9


def test_invariance_gap_rejects_non_moebius(small_q):
    with pytest.raises(ParameterDomainError):
        invariance_gap(make_square(), make_pwl(0.5), small_q)
    assert invariance_gap(make_square(), identity(), small_q) == 0.0


def test_oracle_agrees_with_subtracted_energy():
    assert energy_oracle(identity(), 512) == pytest.approx(1.0, abs=2e-3)
    assert energy_oracle(make_moebius(0.3), 512) == pytest.approx(1.0, abs=2e-3)
    assert discrete_energy(identity(), 512, EXCLUDED) == energy_oracle(identity(), 512)


def test_oracle_needs_enough_nodes():
    with pytest.raises(ParameterDomainError):
        energy_oracle(identity(), 32)


def test_energy_series_orders_levels():
    series = energy_series(make_square(), [256, 64, 128])
    assert series["n"] == [64, 128, 256]
    assert len(series["values"]) == 3


def test_observed_order_under_grid_doubling():
    series = energy_series(make_moebius(0.9), [64, 128, 256])
    assert series["observed_order"] >= 1.0
    errors = [abs(v - 1.0) for v in series["values"]]
    assert errors[0] > errors[1] > errors[2]


@pytest.mark.parametrize("angle_map", [make_square(), make_pwl(0.1)], ids=str)
def test_energy_does_not_depend_on_worker_count(angle_map, small_q, monkeypatch):
    monkeypatch.setattr(settings, "TILE_ROWS", 32)
    monkeypatch.setattr(settings, "WORKERS", 1)
    serial = conformal_energy(angle_map, small_q)
    monkeypatch.setattr(settings, "WORKERS", 4)
    threaded = conformal_energy(angle_map, small_q)
    assert threaded.value == serial.value
    assert threaded.err == serial.err


def test_imaginary_part_vanishes():
    assert abs(complex_kernel_imaginary_part(make_square(), 128)) <= 1e-10


@pytest.mark.parametrize("k", [1, 2, 5])
def test_log_sin_moment(k):
    assert log_sin_moment(k) == pytest.approx(-math.pi / k, abs=1e-10)


@pytest.mark.parametrize("kwargs", [{"n": 32}, {"n": 100, "refine": 3}, {"refine": 0}, {"scheme": "trapezoid"}])
def test_quadrature_spec_validation(kwargs):
    with pytest.raises(ParameterDomainError):
        QuadratureSpec(**kwargs)


def test_collapsed_map_is_degenerate():
    nearly_flat = make_pwl(1e-12)
    with pytest.raises(DegenerateMapError):
        conformal_energy(invert(nearly_flat), QuadratureSpec(n=64))


def test_bilipschitz_bounds_for_rotation(small_q):
    report = bilip_bounds_report(rotation(0.7), make_square(), 1.0, small_q, certificate_samples=256)
    assert report.lower_ok and report.upper_ok
    assert report.standalone_ok
    assert not report.unshifted_standalone_ok
    assert report.discrepancy_flag


def test_bilipschitz_certificate_rejects_wrong_constant(small_q):
    with pytest.raises(CertificateError):
        bilip_bounds_report(make_pwl(0.1), identity(), 1.5, small_q, certificate_samples=256)
    with pytest.raises(ParameterDomainError):
        bilip_bounds_report(rotation(0.1), identity(), 0.5, small_q)
