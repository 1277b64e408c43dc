import numpy as np
import pytest

from core.errors import ConfigError, DomainError
from core.expressions import compile_expression, to_number
from core.terminal import Positivity, TerminalCondition


def test_exponential_payoff_values():
    X = TerminalCondition.exponential(scale=2.0, coef=3.0)
    w = np.array([-1.0, 0.0, 1.0])
    assert np.allclose(X(w), 3.0 * np.exp(2.0 * w))
    assert X.is_positive


def test_declared_positivity_is_enforced():
    X = TerminalCondition.from_config({"expression": {"kind": "affine", "slope": 1.0}, "positivity": "strict"})
    with pytest.raises(DomainError):
        X(np.array([-1.0, 1.0]))


def test_bounded_below_payoff():
    node = {
        "expression": {"kind": "clamp", "of": {"kind": "affine", "slope": 1.0}, "lower": 0.5},
        "positivity": {"lower_bound": "0.5"},
    }
    X = TerminalCondition.from_config(node)
    assert X.positivity is Positivity.BOUNDED_BELOW
    assert X.is_positive
    assert np.all(X(np.linspace(-3, 3, 7)) >= 0.5)


def test_decimal_strings_are_exact():
    assert to_number("0.1") == 0.1
    assert to_number("20240601") == 20240601.0
    with pytest.raises(ConfigError):
        to_number(True)


def test_unknown_primitive_names_the_key():
    with pytest.raises(ConfigError) as info:
        compile_expression({"kind": "sum", "terms": [{"kind": "bogus"}]}, key="terminal")
    assert info.value.key == "terminal.terms[0]"


def test_combinators():
    X = TerminalCondition.exponential(scale=1.0)
    Y = TerminalCondition.exponential(scale=-1.0)
    w = np.array([-0.5, 0.25, 2.0])
    assert np.allclose(X.scaled(2.0)(w), 2.0 * np.exp(w))
    assert np.allclose(X.power(2.0)(w), np.exp(2.0 * w))
    assert np.allclose(X.clamped(0.5, 2.0)(w), np.clip(np.exp(w), 0.5, 2.0))
    assert np.allclose(X.geometric_mix(Y, 0.25)(w), np.exp(-0.5 * w))
    assert np.allclose(X.log()(w), w)
    assert np.allclose(X.log().exp()(w), np.exp(w))
    assert np.allclose(X.with_state_scaling(lambda s: np.exp(s[:, 0]))(w), np.exp(2.0 * w))


def test_power_maps_the_lower_bound():
    X = TerminalCondition.exponential(scale=1.0).clamped(0.5, 2.0)
    w = np.array([-3.0, 0.0, 3.0])
    squared = X.power(2.0)
    assert squared.positivity is Positivity.BOUNDED_BELOW
    assert squared.lower_bound == pytest.approx(0.25)
    assert np.allclose(squared(w), [0.25, 1.0, 4.0])

    inverse = X.power(-1.0)
    assert inverse.positivity is Positivity.STRICT
    assert np.allclose(inverse(w), [2.0, 1.0, 0.5])

    assert TerminalCondition.from_config({"kind": "affine", "slope": 1.0}).power(3.0).positivity is Positivity.UNRESTRICTED


def test_log_rejects_non_positive_payoff():
    X = TerminalCondition.from_config({"kind": "affine", "slope": 1.0})
    with pytest.raises(DomainError):
        X.log()(np.array([-1.0, 1.0]))
