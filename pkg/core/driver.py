import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from core.errors import DomainError, GridError

logger = logging.getLogger(__name__)


class Family(str, Enum):
    ORDINARY = "ordinary"
    LNQ = "lnq"
    GEOMETRIC = "geometric"
    TWO_DRIVER = "two_driver"


class Domain(str, Enum):
    REAL = "real"
    POSITIVE = "positive"


def sqnorm(z):
    z = np.asarray(z, dtype=float)
    return np.sum(z * z, axis=-1)


def norm(z):
    return np.sqrt(sqnorm(z))


def _zero(t):
    return 0.0


@dataclass(frozen=True, eq=False)
class CoefficientBundle:
    """
    Deterministic coefficients (alpha, beta, gamma) as functions of time plus
    the scalar delta. A and B are the time integrals of alpha and beta.
    """
    alpha: Callable = _zero
    beta: Callable = _zero
    gamma: Callable = _zero
    delta: float = 0.0
    horizon: float = 1.0
    eta: Optional[Callable] = None
    A: float = field(init=False)
    B: float = field(init=False)

    def __post_init__(self):
        if not self.horizon > 0:
            raise GridError(f"coefficient horizon must be positive, got {self.horizon}")
        if not (np.isfinite(self.delta) and self.delta >= 0):
            raise DomainError(f"delta must be a finite nonnegative scalar, got {self.delta}")
        times = np.linspace(0.0, self.horizon, 33)
        for name in ("alpha", "beta", "gamma"):
            values = np.array([getattr(self, name)(t) for t in times], dtype=float)
            if not np.all(np.isfinite(values)) or np.any(values < 0):
                raise DomainError(f"coefficient {name} must be finite and nonnegative on [0, {self.horizon}]")
        object.__setattr__(self, "A", self._integral(self.alpha))
        object.__setattr__(self, "B", self._integral(self.beta))

    def _integral(self, fn):
        value, _ = integrate.quad(fn, 0.0, self.horizon, epsabs=0.0, epsrel=1e-12, limit=200)
        return float(value)

    @classmethod
    def constant(cls, alpha=0.0, beta=0.0, gamma=0.0, delta=0.0, horizon=1.0, eta=None):
        a, b, c = float(alpha), float(beta), float(gamma)
        return cls(
            alpha=lambda t: a,
            beta=lambda t: b,
            gamma=lambda t: c,
            delta=float(delta),
            horizon=horizon,
            eta=eta,
        )

    def at(self, t):
        return float(self.alpha(t)), float(self.beta(t)), float(self.gamma(t))

    def with_delta(self, delta):
        return replace(self, delta=float(delta))

    def with_horizon(self, horizon):
        return replace(self, horizon=float(horizon))

    def scaled_for_two_driver(self, K):
        """Bundle of the reduced LN-Q driver: (alpha, beta, gamma/K, delta/K^2)"""
        if not K > 0:
            raise DomainError(f"two-driver constant K must be positive, got {K}")
        gamma = self.gamma
        return replace(self, gamma=lambda t: gamma(t) / K, delta=self.delta / K ** 2)

    def describe(self):
        alpha0, beta0, gamma0 = self.at(0.0)
        return {
            "alpha(0)": alpha0,
            "beta(0)": beta0,
            "gamma(0)": gamma0,
            "delta": self.delta,
            "A": self.A,
            "B": self.B,
            "horizon": self.horizon,
            "eta": self.eta is not None,
        }


@dataclass(frozen=True, eq=False)
class DriverParts:
    """
    Additive decomposition f~(t, y, z) = y_part(t, y) + z_part(t, z) of a
    geometric driver. ambiguity is the sublinear z-term with its constant C.
    """
    y_part: Callable
    z_part: Callable
    ambiguity: Optional[Callable] = None
    ambiguity_constant: float = 0.0


@dataclass(frozen=True, eq=False)
class DriverSpec:
    """
    Evaluable driver (t, y, z) -> value with y of shape (k,) and z of shape (k, n).
    Two-driver specs use fn for g1 and carry g2, g2_inv and the constant K.
    """
    name: str
    family: Family
    fn: Callable
    coefficients: CoefficientBundle = field(default_factory=CoefficientBundle)
    domain_y: Domain = Domain.REAL
    K: Optional[float] = None
    g2: Optional[Callable] = None
    g2_inv: Optional[Callable] = None
    lineage: tuple = ()
    records: tuple = ()
    tags: frozenset = frozenset()
    exemptions: frozenset = frozenset()
    parts: Optional[DriverParts] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family is Family.TWO_DRIVER and (self.g2 is None or self.g2_inv is None):
            raise DomainError(f"two-driver spec {self.name} needs both g2 and its inverse")
        if not self.lineage:
            object.__setattr__(self, "lineage", (self.name,))

    @staticmethod
    def prepare(y, z):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        z = np.asarray(z, dtype=float)
        if z.ndim < 2:
            z = z.reshape(y.shape[0], -1)
        return y, z

    def __call__(self, t, y, z):
        y, z = self.prepare(y, z)
        if self.domain_y is Domain.POSITIVE and np.any(y <= 0):
            raise DomainError(f"driver {self.name} is defined for y > 0 only (min y = {y.min():.3e})")
        values = np.asarray(self.fn(float(t), y, z), dtype=float)
        return np.broadcast_to(values, y.shape).astype(float)

    def vol(self, t, y, z):
        y, z = self.prepare(y, z)
        return np.asarray(self.g2(float(t), y, z), dtype=float).reshape(z.shape)

    def vol_inv(self, t, y, v):
        y, v = self.prepare(y, v)
        return np.asarray(self.g2_inv(float(t), y, v), dtype=float).reshape(v.shape)

    def derived(self, name, family, fn, coefficients=None, domain_y=None, record=None, **changes):
        """New spec derived from this one; lineage and transform records are extended"""
        return replace(
            self,
            name=name,
            family=family,
            fn=fn,
            coefficients=coefficients or self.coefficients,
            domain_y=domain_y or self.domain_y,
            lineage=self.lineage + (name,),
            records=self.records + ((record,) if record is not None else ()),
            **changes,
        )

    def describe(self):
        return {
            "name": self.name,
            "family": self.family.value,
            "domain_y": self.domain_y.value,
            "K": self.K,
            "lineage": list(self.lineage),
            "transforms": [r.describe() for r in self.records],
            "tags": sorted(self.tags),
            "exemptions": sorted(self.exemptions),
            "coefficients": self.coefficients.describe(),
            "params": dict(self.params),
        }
