from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

from core.errors import ConfigError, DomainError
from core.expressions import compile_expression, to_number


class Positivity(str, Enum):
    STRICT = "strict"
    BOUNDED_BELOW = "bounded_below"
    UNRESTRICTED = "unrestricted"


def as_states(w):
    """Lattice states come as (k,), ensemble states as (k, n)"""
    w = np.asarray(w, dtype=float)
    return w.reshape(-1, 1) if w.ndim <= 1 else w


@dataclass(frozen=True, eq=False)
class TerminalCondition:
    """
    Payoff X = phi(W_T), Markovian in the terminal Brownian state.
    The declared positivity is enforced on every evaluation.
    """
    phi: Callable
    positivity: Positivity = Positivity.UNRESTRICTED
    lower_bound: float = 0.0
    moment_order: float = 2.0
    label: str = "X"

    def __call__(self, w):
        states = as_states(w)
        values = np.asarray(self.phi(states), dtype=float).reshape(-1)
        if values.shape[0] != states.shape[0]:
            values = np.broadcast_to(values, (states.shape[0],)).copy()
        if not np.all(np.isfinite(values)):
            raise DomainError(f"terminal condition {self.label} produced non-finite values")
        if self.positivity is Positivity.STRICT and np.any(values <= 0):
            raise DomainError(f"terminal condition {self.label} declared strictly positive, min {values.min():.3e}")
        if self.positivity is Positivity.BOUNDED_BELOW and np.any(values < self.lower_bound):
            raise DomainError(
                f"terminal condition {self.label} declared >= {self.lower_bound}, min {values.min():.3e}"
            )
        return values

    @property
    def is_positive(self):
        return self.positivity is Positivity.STRICT or (
            self.positivity is Positivity.BOUNDED_BELOW and self.lower_bound > 0
        )

    @classmethod
    def constant(cls, value):
        value = float(value)
        positivity = Positivity.STRICT if value > 0 else Positivity.UNRESTRICTED
        return cls(lambda w: np.full(w.shape[0], value), positivity, label=f"{value:g}")

    @classmethod
    def exponential(cls, scale=1.0, coef=1.0, coord=0):
        """coef * exp(scale * W_T[coord])"""
        return cls(
            lambda w: coef * np.exp(scale * w[:, coord]),
            Positivity.STRICT if coef > 0 else Positivity.UNRESTRICTED,
            label=f"{coef:g}*exp({scale:g}*W_T)",
        )

    @classmethod
    def from_config(cls, node, key="terminal"):
        if not isinstance(node, dict):
            raise ConfigError("terminal condition must be a mapping", key=key)
        expression = node.get("expression", node)
        phi = compile_expression(expression, f"{key}.expression" if "expression" in node else key)
        positivity = node.get("positivity", "unrestricted")
        lower_bound = 0.0
        if isinstance(positivity, dict):
            lower_bound = to_number(positivity.get("lower_bound"), f"{key}.positivity.lower_bound")
            if lower_bound <= 0:
                raise ConfigError("lower_bound must be positive", key=f"{key}.positivity")
            positivity = Positivity.BOUNDED_BELOW
        else:
            try:
                positivity = Positivity(positivity)
            except ValueError:
                raise ConfigError(f"unknown positivity '{positivity}'", key=f"{key}.positivity")
        moment_order = to_number(node.get("moment_order", 2.0), f"{key}.moment_order")
        return cls(phi, positivity, lower_bound, moment_order, label=node.get("label", "X"))

    def map(self, fn, label, positivity=None, lower_bound=0.0):
        phi = self.phi
        return replace(
            self,
            phi=lambda w: fn(np.asarray(phi(w), dtype=float)),
            positivity=positivity or Positivity.UNRESTRICTED,
            lower_bound=lower_bound,
            label=label,
        )

    def scaled(self, factor):
        factor = float(factor)
        keep = self.positivity if factor > 0 else Positivity.UNRESTRICTED
        return self.map(lambda x: factor * x, f"{factor:g}*{self.label}", keep, self.lower_bound * factor)

    def with_state_scaling(self, xi, label="xi"):
        """xi(W_T) * X for a state function xi with values in (0, inf)"""
        phi = self.phi

        def scaled_phi(w):
            factor = np.asarray(xi(w), dtype=float).reshape(-1)
            if np.any(factor <= 0):
                raise DomainError(f"state scaling {label} must be strictly positive")
            return factor * np.asarray(phi(w), dtype=float).reshape(-1)

        return replace(self, phi=scaled_phi, lower_bound=0.0, label=f"{label}*{self.label}",
                       positivity=self.positivity if self.positivity is Positivity.STRICT else Positivity.UNRESTRICTED)

    def shifted(self, amount):
        return self.map(lambda x: x + amount, f"{self.label}+{amount:g}")

    def clamped(self, lower, upper):
        positivity = Positivity.BOUNDED_BELOW if lower > 0 else Positivity.UNRESTRICTED
        return self.map(
            lambda x: np.clip(x, lower, upper), f"clamp({self.label},{lower:g},{upper:g})", positivity, max(lower, 0.0)
        )

    def power(self, exponent):
        """X^eta; a lower bound b >= 0 maps to b^eta for eta > 0 and to strict positivity for eta < 0 when b > 0"""
        exponent = float(exponent)
        positivity, lower_bound = Positivity.UNRESTRICTED, 0.0
        if self.positivity is Positivity.STRICT or exponent == 0:
            positivity = Positivity.STRICT
        elif self.positivity is Positivity.BOUNDED_BELOW and self.lower_bound >= 0:
            if exponent > 0:
                positivity, lower_bound = Positivity.BOUNDED_BELOW, self.lower_bound ** exponent
            elif self.lower_bound > 0:
                positivity = Positivity.STRICT
        return self.map(lambda x: x ** exponent, f"{self.label}^{exponent:g}", positivity, lower_bound)

    def geometric_mix(self, other, lam):
        """X^lam * Y^(1-lam) for strictly positive X, Y"""
        phi_x, phi_y = self.phi, other.phi
        return TerminalCondition(
            lambda w: np.asarray(phi_x(w), dtype=float) ** lam * np.asarray(phi_y(w), dtype=float) ** (1 - lam),
            Positivity.STRICT,
            label=f"{self.label}^{lam:g}*{other.label}^{1 - lam:g}",
        )

    def log(self, floor=0.0):
        """ln X; non-positive samples are rejected, tiny positive ones floored"""
        phi, label = self.phi, self.label

        def log_phi(w):
            x = np.asarray(phi(w), dtype=float)
            if np.any(x <= 0):
                raise DomainError(f"log route needs a strictly positive payoff; {label} has min {x.min():.3e}")
            return np.log(np.maximum(x, floor))

        return TerminalCondition(log_phi, Positivity.UNRESTRICTED, moment_order=self.moment_order, label=f"ln({label})")

    def exp(self):
        phi = self.phi
        return TerminalCondition(
            lambda w: np.exp(np.asarray(phi(w), dtype=float)),
            Positivity.STRICT,
            moment_order=self.moment_order,
            label=f"exp({self.label})",
        )
