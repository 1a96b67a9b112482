import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from conformal_energy.circle_maps import (
    TWO_PI,
    FourierMap,
    MoebiusMap,
    PiecewiseLinearMap,
    TabulatedMap,
    chordal_bilipschitz_constant,
    compose,
    eval_angle,
    identity,
    invert,
    make_moebius,
    make_pwl,
    make_square,
    moebius_arctan_oracle,
    rotation,
    singular_integral_converges,
    validate,
)
from conformal_energy.errors import MapValidationError, ParameterDomainError

MAPS = [
    make_moebius(0.3 + 0.2j, 0.4),
    make_moebius(-0.7, 0.0),
    make_pwl(0.1),
    make_square(),
    FourierMap(identity(), [0.1, 0.0, 0.05]),
    compose(make_moebius(0.3, 0.0), make_square()),
]


@pytest.mark.parametrize("angle_map", MAPS, ids=lambda m: m.describe())
@given(t=st.floats(-20.0, 20.0))
@settings(max_examples=50, deadline=None)
def test_lift_is_degree_one(angle_map, t):
    assert float(eval_angle(angle_map, t + TWO_PI)) == pytest.approx(float(eval_angle(angle_map, t)) + TWO_PI, abs=1e-10)


@pytest.mark.parametrize("angle_map", MAPS, ids=lambda m: m.describe())
@given(t=st.floats(0.0, TWO_PI))
@settings(max_examples=50, deadline=None)
def test_inverse_round_trip(angle_map, t):
    back = invert(angle_map)
    assert float(back(angle_map(t))) == pytest.approx(t, abs=1e-9)


@given(a=st.floats(-0.8, 0.8), t=st.floats(0.01, np.pi - 0.01))
@settings(max_examples=100, deadline=None)
def test_moebius_matches_arctan_form(a, t):
    assert float(make_moebius(a)(t)) == pytest.approx(float(moebius_arctan_oracle(a, t)), abs=1e-10)


def test_moebius_is_pinned_and_closes():
    m = make_moebius(0.5)
    assert m(0.0) == pytest.approx(0.0, abs=1e-15)
    assert m(TWO_PI) == pytest.approx(TWO_PI)
    assert m.pinned


def test_moebius_derivative_matches_difference_quotient():
    m = make_moebius(0.4 - 0.3j, 0.7)
    t = np.linspace(0.1, 6.0, 7)
    step = 1e-6
    numeric = (m(t + step) - m(t - step)) / (2 * step)
    assert np.allclose(m.derivative(t), numeric, rtol=1e-7)


def test_moebius_inverse_is_closed_form():
    m = make_moebius(0.3 + 0.2j, 1.1)
    back = m.inverse()
    assert isinstance(back, MoebiusMap)
    t = np.linspace(0.0, TWO_PI, 9)
    assert np.allclose(back(m(t)), t, atol=1e-12)


def test_rotation_shifts_angles():
    assert rotation(0.5)(1.0) == pytest.approx(1.5)


@pytest.mark.parametrize("a", [1.0, 1.5, 0.8 + 0.8j])
def test_moebius_rejects_points_off_the_disk(a):
    with pytest.raises(ParameterDomainError):
        make_moebius(a)


@pytest.mark.parametrize("lam", [0.0, -0.1, 1.5])
def test_pwl_rejects_lambda_outside_unit_interval(lam):
    with pytest.raises(ParameterDomainError):
        make_pwl(lam)


def test_pwl_knots_and_inverse():
    f = make_pwl(0.01)
    assert f(0.01) == pytest.approx(1.0)
    assert f.derivative(0.005) == pytest.approx(100.0)
    back = invert(f)
    assert back(1.0) == pytest.approx(0.01)
    assert back.describe() == "inv(pwl:lambda=0.01)"


def test_square_inverse_is_square_root():
    s = make_square()
    assert s(0.5) == pytest.approx(0.25)
    assert invert(s)(0.25) == pytest.approx(0.5)
    assert invert(s).describe() == "inv(square)"


def test_composition_evaluates_inner_first():
    outer, inner = make_moebius(0.3), make_square()
    t = np.linspace(0.0, TWO_PI, 11)
    assert np.allclose(compose(outer, inner)(t), outer(inner(t)))
    assert compose(outer, inner).describe() == f"comp({outer.describe()},square)"


def test_tabulated_map_rejects_decreasing_column():
    with pytest.raises(MapValidationError) as info:
        PiecewiseLinearMap([0.0, 2.0, 1.0, TWO_PI], [0.0, 1.0, 2.0, TWO_PI])
    assert info.value.details["offending_indices"] == [2]


def test_tabulated_map_rejects_open_endpoints():
    with pytest.raises(MapValidationError):
        PiecewiseLinearMap([0.0, 1.0, 6.0], [0.0, 1.0, 6.0])


def test_tabulated_map_from_csv(tmp_path):
    path = tmp_path / "map.csv"
    path.write_text("t,theta\n0,0\n1,2\n6.283185307179586,6.283185307179586\n")
    m = TabulatedMap.from_csv(path)
    assert m(0.5) == pytest.approx(1.0)
    assert m.describe() == f"table:{path}"


def test_tabulated_map_on_uniform_grid():
    values = np.linspace(0.0, TWO_PI, 5)
    m = TabulatedMap(values)
    assert np.allclose(m(np.linspace(0.0, TWO_PI, 9)), np.linspace(0.0, TWO_PI, 9))


def test_validate_identity():
    report = validate(identity(), 256)
    assert report.monotone_ok and report.endpoint_ok
    assert report.hoelder_p == 1.0
    assert report.hoelder_alpha == pytest.approx(1.0, rel=1e-9)
    assert report.regular


def test_validate_square_needs_exponent_two():
    report = validate(make_square(), 256)
    assert report.hoelder_p == 2.0
    assert 0.1 < report.hoelder_alpha < 0.2
    assert report.singular_integral_ok
    assert report.regular


def test_validate_flags_non_monotone_map():
    folded = FourierMap(identity(), [2.0])
    with pytest.raises(MapValidationError) as info:
        validate(folded, 256)
    assert info.value.details["offending_indices"]
    report = validate(folded, 256, strict=False)
    assert not report.monotone_ok
    assert not report.regular


def test_validate_reports_whether_one_is_fixed():
    assert validate(make_moebius(0.4, 0.0), 256).pinned_at_one
    moved = validate(make_moebius(0.3 + 0.2j, 1.1), 256)
    assert moved.endpoint_ok
    assert not moved.pinned_at_one
    assert moved.regular
    assert moved.to_dict()["pinned_at_one"] is False
    assert validate(make_moebius(0.0, TWO_PI), 256).pinned_at_one


def test_validate_needs_enough_samples():
    with pytest.raises(ParameterDomainError):
        validate(identity(), 8)


def test_singular_integral_converges_for_smooth_map():
    assert singular_integral_converges(make_moebius(0.4))


def test_bilipschitz_constant_of_rotation_and_pwl():
    L, lo, hi = chordal_bilipschitz_constant(rotation(0.3), 256)
    assert L == pytest.approx(1.0, abs=1e-9)
    L_pwl, _, _ = chordal_bilipschitz_constant(make_pwl(0.1), 256)
    assert L_pwl > 5.0
