import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from core.errors import GridError

logger = logging.getLogger(__name__)


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Ordered time nodes 0 = t_0 < ... < t_N = T"""
    nodes: np.ndarray

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise GridError("a time grid needs at least two nodes (N >= 1)")
        if nodes[0] != 0.0:
            raise GridError(f"first node must be 0, got {nodes[0]}")
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0):
            raise GridError("grid nodes must be finite and strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, horizon, steps):
        if steps < 1:
            raise GridError(f"steps must be >= 1, got {steps}")
        if not horizon > 0:
            raise GridError(f"horizon must be positive, got {horizon}")
        return cls(np.linspace(0.0, float(horizon), int(steps) + 1))

    @property
    def horizon(self):
        return float(self.nodes[-1])

    @property
    def steps(self):
        return self.nodes.size - 1

    @property
    def increments(self):
        return np.diff(self.nodes)

    def is_uniform(self, rtol=1e-10):
        dt = self.increments
        return bool(np.allclose(dt, self.horizon / self.steps, rtol=rtol, atol=0.0))

    def describe(self):
        return {"horizon": self.horizon, "steps": self.steps, "uniform": self.is_uniform()}


@dataclass(frozen=True, eq=False)
class Lattice:
    """
    Recombining binomial approximation of a 1-D Brownian motion.
    Node (i, j) carries j up-moves out of i; its children are (i+1, j+1) and (i+1, j).
    """
    grid: TimeGrid
    dt: float = None

    def __post_init__(self):
        if self.dt is None:
            object.__setattr__(self, "dt", self.grid.horizon / self.grid.steps)

    @property
    def steps(self):
        return self.grid.steps

    @property
    def sqrt_dt(self):
        return float(np.sqrt(self.dt))

    def time(self, level):
        return float(self.grid.nodes[level])

    def states(self, level):
        j = np.arange(level + 1)
        return (2 * j - level) * self.sqrt_dt

    def weights(self, level):
        return binom.pmf(np.arange(level + 1), level, 0.5)

    def expectation(self, terminal_values):
        return float(self.weights(self.steps) @ np.asarray(terminal_values, dtype=float))

    def conditional_expectations(self, terminal_values):
        """Backward averages of terminal node values, one array per level"""
        values = np.asarray(terminal_values, dtype=float)
        levels = [values]
        for _ in range(self.steps):
            values = 0.5 * (values[1:] + values[:-1])
            levels.append(values)
        return levels[::-1]

    def expectation_at_level(self, terminal_values, level):
        remaining = self.steps - level
        pmf = binom.pmf(np.arange(remaining + 1), remaining, 0.5)
        return np.correlate(np.asarray(terminal_values, dtype=float), pmf, mode="valid")

    def truncate(self, level):
        """Lattice on [0, t_level] sharing this lattice's nodes and step"""
        if not 1 <= level <= self.steps:
            raise GridError(f"truncation level must lie in [1, {self.steps}], got {level}")
        return Lattice(TimeGrid(self.grid.nodes[: level + 1]), dt=self.dt)


def build_lattice(grid):
    if not grid.is_uniform():
        raise GridError("the lattice solver needs a uniform time grid")
    lattice = Lattice(grid)
    logger.debug("built lattice with %d levels, dt=%.6g", grid.steps + 1, lattice.dt)
    return lattice


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """M seeded n-dimensional Brownian paths; increments have shape (M, N, n)"""
    grid: TimeGrid
    dimension: int
    count: int
    seed: int
    increments: np.ndarray = field(repr=False)

    @property
    def paths(self):
        M, N, n = self.increments.shape
        paths = np.zeros((M, N + 1, n))
        np.cumsum(self.increments, axis=1, out=paths[:, 1:, :])
        return paths

    @property
    def terminal(self):
        return self.paths[:, -1, :]


def sample_ensemble(grid, n, M, seed):
    if M < 1 or n < 1:
        raise GridError(f"need M >= 1 paths and dimension n >= 1, got M={M}, n={n}")
    rng = np.random.default_rng(int(seed))
    scale = np.sqrt(grid.increments)[None, :, None]
    increments = rng.standard_normal((int(M), grid.steps, int(n))) * scale
    increments.setflags(write=False)
    logger.debug("sampled %d paths of dimension %d on %d steps (seed %s)", M, n, grid.steps, seed)
    return PathEnsemble(grid=grid, dimension=int(n), count=int(M), seed=int(seed), increments=increments)
