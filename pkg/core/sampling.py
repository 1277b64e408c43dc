import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import qmc

from core.errors import ConfigError
from core.settings import section

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CertificationWindow:
    """Finite box [0, T] x [y_lo, y_hi] x [-z_bound, z_bound]^n used by sampling audits"""
    horizon: float = 1.0
    y_range: tuple = (0.1, 10.0)
    z_bound: float = 5.0
    dimension: int = 1
    y_scale: str = "log"

    def __post_init__(self):
        lo, hi = self.y_range
        if not lo < hi:
            raise ConfigError(f"empty y range {self.y_range}", key="window.y_range")
        if self.y_scale == "log" and lo <= 0:
            raise ConfigError("a log-scaled y range must be positive", key="window.y_range")
        if self.z_bound < 0 or self.dimension < 1:
            raise ConfigError("z_bound must be >= 0 and dimension >= 1", key="window")

    @classmethod
    def from_settings(cls, horizon=1.0, dimension=1, **overrides):
        defaults = section("certification")
        window = cls(
            horizon=float(horizon),
            y_range=tuple(float(v) for v in defaults.get("y_range", (0.1, 10.0))),
            z_bound=float(defaults.get("z_bound", 5.0)),
            dimension=int(dimension),
        )
        return replace(window, **overrides) if overrides else window

    def log_image(self):
        """The same window seen through y -> ln y"""
        lo, hi = self.y_range
        return replace(self, y_range=(float(np.log(lo)), float(np.log(hi))), y_scale="linear")

    def _y(self, u):
        lo, hi = self.y_range
        if self.y_scale == "log":
            return np.exp(np.log(lo) + u * (np.log(hi) - np.log(lo)))
        return lo + u * (hi - lo)

    def sample(self, count, seed, replicas=1):
        """
        Scrambled Halton points (t, y, z). With replicas > 1 the return value is
        a list of independent point sets drawn from one higher-dimensional sequence.
        """
        n = self.dimension
        width = 2 + n
        sampler = qmc.Halton(d=width * replicas, scramble=True, seed=int(seed))
        u = sampler.random(int(count))
        logger.info(
            "certification window t in [0, %g], y in [%g, %g] (%s), |z_k| <= %g, n=%d: %d points, seed %s",
            self.horizon, self.y_range[0], self.y_range[1], self.y_scale, self.z_bound, n, count, seed,
        )
        sets = []
        for r in range(replicas):
            block = u[:, r * width:(r + 1) * width]
            t = block[:, 0] * self.horizon
            y = self._y(block[:, 1])
            z = (2.0 * block[:, 2:] - 1.0) * self.z_bound
            sets.append((t, y, z))
        return sets[0] if replicas == 1 else sets

    def describe(self):
        return {
            "horizon": self.horizon,
            "y_range": list(self.y_range),
            "z_bound": self.z_bound,
            "dimension": self.dimension,
            "y_scale": self.y_scale,
        }


def lambda_values(seed, extra=None):
    """Fixed convex weights from the settings plus seeded uniform draws in (0, 1)"""
    defaults = section("certification")
    fixed = [float(v) for v in defaults.get("lambdas", (0.25, 0.5, 0.75))]
    count = int(defaults.get("random_lambdas", 100) if extra is None else extra)
    rng = np.random.default_rng(int(seed))
    return np.concatenate([fixed, rng.uniform(0.0, 1.0, count)])


def default_samples():
    return int(section("certification").get("samples", 1000))


def default_seed():
    return int(section("certification").get("seed", 0))
