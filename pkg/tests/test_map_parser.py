import math

import numpy as np
import pytest

from conformal_energy.circle_maps import MoebiusMap, PwlMap
from conformal_energy.errors import ConfigurationError, MapSyntaxError, MapValidationError, ParameterDomainError
from energy_cli.map_parser import parse_float_list, parse_gauge, parse_map


@pytest.mark.parametrize(
    "expr",
    [
        "identity",
        "square",
        "pwl:lambda=0.01",
        "inv(pwl:lambda=0.01)",
        "inv(square)",
        "mobius:a=0.3+0.0i,rot=0.0",
        "mobius:a=0.2-0.5i,rot=1.1",
        "fourier:c1=0.1,c3=0.05",
        "comp(mobius:a=0.3+0.0i,rot=0.0,square)",
    ],
)
def test_descriptions_round_trip(expr):
    angle_map = parse_map(expr)
    assert angle_map.describe() == expr
    assert parse_map(angle_map.describe()).describe() == expr


def test_moebius_shorthand_forms():
    angle_map = parse_map("mobius:a=0.3+0i,rot=0")
    assert isinstance(angle_map, MoebiusMap)
    assert angle_map.a == complex(0.3, 0.0)
    assert parse_map("moebius:a=0.5i").a == complex(0.0, 0.5)
    assert parse_map("mobius:a=-0.4").rot == 0.0


def test_whitespace_is_ignored():
    angle_map = parse_map("comp( mobius:a=0.3+0i, rot=0 , square )")
    t = np.linspace(0.0, 2 * math.pi, 9)
    reference = parse_map("comp(mobius:a=0.3+0i,rot=0,square)")
    np.testing.assert_allclose(angle_map(t), reference(t))


def test_pwl_map_values():
    angle_map = parse_map("pwl:lambda=0.5")
    assert isinstance(angle_map, PwlMap)
    assert float(angle_map(0.5)) == pytest.approx(1.0)
    assert float(angle_map(2 * math.pi)) == pytest.approx(2 * math.pi)


@pytest.mark.parametrize(
    "expr, position",
    [
        ("mobius:b=0.3", 7),
        ("identity)", 8),
        ("foo", 0),
        ("pwl:lambda=0.1,lambda=0.2", 15),
        ("pwl:lambda=0.1,", 14),
        ("inv(square", 10),
        ("mobius:a=0.3+0.2", 16),
    ],
)
def test_syntax_errors_point_at_the_offending_character(expr, position):
    with pytest.raises(MapSyntaxError) as info:
        parse_map(expr)
    assert info.value.position == position
    assert info.value.details["position"] == position
    assert "^" in info.value.message
    assert isinstance(info.value, ConfigurationError)


def test_unknown_parameter_is_named():
    with pytest.raises(MapSyntaxError, match="Unknown parameter 'alpha'"):
        parse_map("pwl:alpha=0.1")


@pytest.mark.parametrize("expr", ["pwl:lambda=2", "mobius:a=1.5+0i", "pwl:lambda=0"])
def test_parameter_domain_is_reported_as_validation_error(expr):
    with pytest.raises(MapValidationError):
        parse_map(expr)


def test_missing_table_is_a_validation_error(tmp_path):
    with pytest.raises(MapValidationError):
        parse_map(f"table:{tmp_path / 'missing.csv'}")


def test_table_map_from_csv(tmp_path):
    path = tmp_path / "lift.csv"
    path.write_text(f"t,theta\n0,0\n1,2\n{2 * math.pi!r},{2 * math.pi!r}\n", encoding="utf-8")
    angle_map = parse_map(f"table:{path}")
    assert angle_map.describe() == f"table:{path}"
    assert float(angle_map(0.5)) == pytest.approx(1.0)
    assert float(angle_map(1.0)) == pytest.approx(2.0)


def test_non_monotone_table_is_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(f"0,0\n1,2\n2,1.5\n{2 * math.pi!r},{2 * math.pi!r}\n", encoding="utf-8")
    with pytest.raises(MapValidationError) as info:
        parse_map(f"table:{path}")
    assert info.value.details["column"] == "theta"
    assert info.value.details["offending_indices"] == [2]


# ----------------------------
# Gauges and lists
# ----------------------------
def test_gauges():
    assert parse_gauge("identity").kind == "identity"
    gauge = parse_gauge("linear:alpha=3")
    assert gauge.kind == "linear"
    assert float(gauge(2.0)) == pytest.approx(6.0)
    with pytest.raises(ParameterDomainError):
        parse_gauge("linear:alpha=0.5")
    with pytest.raises(MapSyntaxError):
        parse_gauge("quadratic")


def test_table_gauge(tmp_path):
    path = tmp_path / "eta.csv"
    path.write_text("0.5,1\n1,2\n2,5\n", encoding="utf-8")
    gauge = parse_gauge(f"table:{path}")
    assert gauge.kind == "tabulated"
    assert float(gauge(1.0)) == pytest.approx(2.0)
    assert float(gauge(2.0)) == pytest.approx(5.0)


def test_float_lists():
    assert parse_float_list("0.1, 0.5,2") == [0.1, 0.5, 2.0]
    assert parse_float_list("") == []
    with pytest.raises(MapSyntaxError):
        parse_float_list("a,b")
