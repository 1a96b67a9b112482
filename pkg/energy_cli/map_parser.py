"""
Parser for the map and gauge mini-languages.

    identity | square
    mobius:a=<re>+<im>i,rot=<r>
    pwl:lambda=<x>
    fourier:c1=<x>,c2=<x>,...
    table:<path.csv>
    inv(<expr>) | comp(<outer>,<inner>)

Gauges: identity | linear:alpha=<x> | table:<path.csv>
"""
import re
from typing import Callable, Dict, List, Tuple

import numpy as np
import pandas as pd

from conformal_energy.circle_maps import (
    AngleMap,
    FourierMap,
    IdentityMap,
    TabulatedMap,
    compose,
    invert,
    make_moebius,
    make_pwl,
    make_square,
    validate,
)
from conformal_energy.errors import MapSyntaxError, MapValidationError, ParameterDomainError
from conformal_energy.moebius_bounds import DistortionGauge, identity_gauge, linear_gauge, tabulated_gauge

NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
KEY = re.compile(r"([A-Za-z][A-Za-z0-9_]*)=")
WORD = re.compile(r"[A-Za-z][A-Za-z0-9_-]*")


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, position: int = None) -> MapSyntaxError:
        return MapSyntaxError(message, self.text, self.pos if position is None else position)

    def peek(self, literal: str) -> bool:
        return self.text.startswith(literal, self.pos)

    def expect(self, literal: str) -> None:
        if not self.peek(literal):
            raise self.error(f"Expected {literal!r}")
        self.pos += len(literal)

    def match(self, pattern: re.Pattern):
        found = pattern.match(self.text, self.pos)
        if found:
            self.pos = found.end()
        return found

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def number(self) -> float:
        found = self.match(NUMBER)
        if not found:
            raise self.error("Expected a number")
        return float(found.group(0))

    def complex_number(self) -> complex:
        start = self.pos
        first = self.number()
        if self.peek("i"):
            self.pos += 1
            return complex(0.0, first)
        if self.peek("+") or self.peek("-"):
            second = self.number()
            if not self.peek("i"):
                raise self.error("Expected 'i' after the imaginary part", self.pos)
            self.pos += 1
            return complex(first, second)
        if self.pos == start:
            raise self.error("Expected a complex number")
        return complex(first, 0.0)

    def params(self, parsers: Dict[str, Callable[["_Cursor"], object]]) -> Dict[str, object]:
        """key=value pairs separated by commas; stops at a comma not followed by a known key."""
        values: Dict[str, object] = {}
        while True:
            key_pos = self.pos
            found = self.match(KEY)
            if not found:
                raise self.error("Expected key=value")
            key = found.group(1)
            if key not in parsers:
                raise self.error(f"Unknown parameter {key!r}", key_pos)
            if key in values:
                raise self.error(f"Duplicate parameter {key!r}", key_pos)
            values[key] = parsers[key](self)
            if self.peek(",") and KEY.match(self.text, self.pos + 1):
                candidate = KEY.match(self.text, self.pos + 1).group(1)
                if candidate in parsers:
                    self.pos += 1
                    continue
            return values

    def path(self) -> str:
        start = self.pos
        while not self.at_end() and self.text[self.pos] not in ",)":
            self.pos += 1
        if self.pos == start:
            raise self.error("Expected a file path")
        return self.text[start:self.pos]


def _fourier_parsers() -> Dict[str, Callable[[_Cursor], float]]:
    return {f"c{k}": _Cursor.number for k in range(1, 33)}


def _expression(cursor: _Cursor) -> AngleMap:
    start = cursor.pos
    word = cursor.match(WORD)
    if not word:
        raise cursor.error("Expected a map expression")
    name = word.group(0)
    try:
        if name == "identity":
            return IdentityMap()
        if name == "square":
            return make_square()
        if name in ("inv", "comp"):
            cursor.expect("(")
            first = _expression(cursor)
            if name == "inv":
                cursor.expect(")")
                return invert(first)
            cursor.expect(",")
            second = _expression(cursor)
            cursor.expect(")")
            return compose(first, second)
        if name in ("mobius", "moebius"):
            cursor.expect(":")
            values = cursor.params({"a": _Cursor.complex_number, "rot": _Cursor.number})
            if "a" not in values:
                raise cursor.error("mobius needs a=<complex>", start)
            return make_moebius(values["a"], values.get("rot", 0.0))
        if name == "pwl":
            cursor.expect(":")
            values = cursor.params({"lambda": _Cursor.number})
            return make_pwl(values["lambda"])
        if name == "fourier":
            cursor.expect(":")
            values = cursor.params(_fourier_parsers())
            size = max(int(key[1:]) for key in values)
            coefficients = np.zeros(size)
            for key, value in values.items():
                coefficients[int(key[1:]) - 1] = value
            return FourierMap(IdentityMap(), coefficients)
        if name == "table":
            cursor.expect(":")
            return TabulatedMap.from_csv(cursor.path())
    except (ParameterDomainError, MapValidationError) as exc:
        raise MapValidationError(f"{exc.message} (in {cursor.text[start:cursor.pos]!r})", exc.details) from exc
    except (FileNotFoundError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise MapValidationError(f"Cannot read table: {exc}") from exc
    raise cursor.error(f"Unknown map kind {name!r}", start)


def parse_map(expr: str, check: bool = True, n_samples: int = 256) -> AngleMap:
    """
    Build an AngleMap from a mini-language expression.

    Args:
        expr: expression text, whitespace is ignored
        check: run validate() on the result
        n_samples: grid used by validate()

    Returns:
        the constructed map
    """
    text = "".join(expr.split())
    cursor = _Cursor(text)
    angle_map = _expression(cursor)
    if not cursor.at_end():
        raise cursor.error("Unexpected trailing input")
    if check:
        validate(angle_map, n_samples)
    return angle_map


def parse_gauge(expr: str) -> DistortionGauge:
    text = "".join(expr.split())
    cursor = _Cursor(text)
    word = cursor.match(WORD)
    if not word:
        raise cursor.error("Expected a gauge expression")
    name = word.group(0)
    if name == "identity":
        gauge = identity_gauge()
    elif name == "linear":
        cursor.expect(":")
        gauge = linear_gauge(cursor.params({"alpha": _Cursor.number})["alpha"])
    elif name == "table":
        cursor.expect(":")
        path = cursor.path()
        try:
            frame = pd.read_csv(path, header=None, comment="#").apply(pd.to_numeric, errors="coerce").dropna()
        except (FileNotFoundError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise MapValidationError(f"Cannot read gauge table: {exc}") from exc
        gauge = tabulated_gauge(frame.iloc[:, 0].to_numpy(), frame.iloc[:, 1].to_numpy())
    else:
        raise cursor.error(f"Unknown gauge kind {name!r}", 0)
    if not cursor.at_end():
        raise cursor.error("Unexpected trailing input")
    return gauge


def parse_float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise MapSyntaxError(f"Expected a comma-separated list of numbers ({exc})", text, 0) from exc


__all__: Tuple[str, ...] = ("parse_map", "parse_gauge", "parse_float_list")
