"""
Small config grammar for terminal conditions and coefficient functions.

A node is a mapping with a "kind" among const, exp_wT, power_wT, affine,
clamp and sum. Compiled nodes take an array of shape (k, n) and return
shape (k,); time functions are evaluated with n = 1.
"""
from decimal import Decimal, InvalidOperation

import numpy as np

from core.errors import ConfigError

PRIMITIVES = ("const", "exp_wT", "power_wT", "affine", "clamp", "sum")


def to_number(value, key="value"):
    """Accept ints, floats and decimal strings (bit-exact seeds and tolerances)"""
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", key=key)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Decimal(value.strip()))
        except InvalidOperation:
            pass
    raise ConfigError(f"expected a number or decimal string, got {value!r}", key=key)


def to_int(value, key="value"):
    number = to_number(value, key)
    if number != int(number):
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    return int(number)


def _param(node, name, key, default=None):
    if name not in node:
        if default is None:
            raise ConfigError(f"missing parameter '{name}'", key=key)
        return default
    return to_number(node[name], f"{key}.{name}")


def _column(x, coord, key):
    if coord >= x.shape[1]:
        raise ConfigError(f"coord {coord} exceeds Brownian dimension {x.shape[1]}", key=key)
    return x[:, coord]


def compile_expression(node, key="expr"):
    if not isinstance(node, dict) or "kind" not in node:
        raise ConfigError("expression must be a mapping with a 'kind'", key=key)
    kind = node["kind"]
    coord = int(_param(node, "coord", key, 0.0))

    if kind == "const":
        value = _param(node, "value", key)
        return lambda x: np.full(x.shape[0], value)

    if kind == "exp_wT":
        scale = _param(node, "scale", key, 1.0)
        coef = _param(node, "coef", key, 1.0)
        return lambda x: coef * np.exp(scale * _column(x, coord, key))

    if kind == "power_wT":
        exponent = _param(node, "exponent", key)
        coef = _param(node, "coef", key, 1.0)
        return lambda x: coef * np.abs(_column(x, coord, key)) ** exponent

    if kind == "affine":
        intercept = _param(node, "intercept", key, 0.0)
        slope = _param(node, "slope", key, 0.0)
        return lambda x: intercept + slope * _column(x, coord, key)

    if kind == "clamp":
        if "of" not in node:
            raise ConfigError("clamp needs an inner expression 'of'", key=key)
        inner = compile_expression(node["of"], f"{key}.of")
        lower = to_number(node["lower"], f"{key}.lower") if "lower" in node else -np.inf
        upper = to_number(node["upper"], f"{key}.upper") if "upper" in node else np.inf
        if lower > upper:
            raise ConfigError(f"clamp lower {lower} exceeds upper {upper}", key=key)
        return lambda x: np.clip(inner(x), lower, upper)

    if kind == "sum":
        terms = node.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ConfigError("sum needs a non-empty list of 'terms'", key=key)
        compiled = [compile_expression(t, f"{key}.terms[{i}]") for i, t in enumerate(terms)]
        return lambda x: np.sum([c(x) for c in compiled], axis=0)

    raise ConfigError(f"unknown primitive '{kind}' (expected one of {', '.join(PRIMITIVES)})", key=key)


def compile_time_function(node, key="expr"):
    """Coefficient functions of time; numbers are shorthand for const"""
    if isinstance(node, (int, float, str)) and not isinstance(node, bool):
        value = to_number(node, key)
        return lambda t: value
    expression = compile_expression(node, key)
    return lambda t: float(expression(np.array([[float(t)]]))[0])
