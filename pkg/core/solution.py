import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import pandas as pd

from core.errors import DiscretizationMismatchError, DomainError
from core.grid import TimeGrid

logger = logging.getLogger(__name__)

LATTICE = "lattice"
ENSEMBLE = "ensemble"


@dataclass(frozen=True, eq=False)
class SolutionField:
    """
    (Y, Z) on a lattice or an ensemble, one array per time index.

    y[i] has one entry per node (lattice level i) or per path; z[i] has shape
    (len(y[i]), n) and exists for i < N only. states[i] holds the Brownian
    state of each entry with the same leading shape as z[i].
    """
    support: str
    grid: TimeGrid
    y: list
    z: Optional[list]
    states: list
    positive: bool = False
    metadata: dict = field(default_factory=dict)
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.y) != self.grid.steps + 1:
            raise DiscretizationMismatchError(
                f"field has {len(self.y)} time slices for a grid with {self.grid.steps + 1} nodes"
            )
        if self.positive and any(np.any(level <= 0) for level in self.y):
            raise DomainError("field is flagged positive but holds non-positive values")

    @property
    def steps(self):
        return self.grid.steps

    @property
    def dimension(self):
        return int(self.states[-1].shape[1])

    @property
    def y0(self):
        return float(np.mean(self.y[0]))

    @property
    def terminal(self):
        return self.y[-1]

    def same_discretization(self, other):
        return (
            self.support == other.support
            and self.grid.steps == other.grid.steps
            and np.array_equal(self.grid.nodes, other.grid.nodes)
            and all(a.shape == b.shape for a, b in zip(self.y, other.y))
            and all(np.array_equal(a, b) for a, b in zip(self.states, other.states))
        )

    def require_same_discretization(self, other):
        if not self.same_discretization(other):
            raise DiscretizationMismatchError(
                f"fields live on different discretizations ({self.support}/{self.steps} vs {other.support}/{other.steps})"
            )

    def max_abs_diff(self, other):
        self.require_same_discretization(other)
        return float(max(np.max(np.abs(a - b)) for a, b in zip(self.y, other.y)))

    def max_rel_diff(self, other):
        self.require_same_discretization(other)
        return float(max(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)) for a, b in zip(self.y, other.y)))

    def transformed(self, y_map, z_map=None, positive=False, note=None):
        """Push-forward (y, z) -> (y_map(y), z_map(y, z)) slice by slice"""
        y = [np.asarray(y_map(level), dtype=float) for level in self.y]
        z = None
        if self.z is not None and z_map is not None:
            z = [np.asarray(z_map(self.y[i], self.z[i]), dtype=float) for i in range(len(self.z))]
        metadata = dict(self.metadata)
        if note:
            metadata["push_forward"] = metadata.get("push_forward", []) + [note]
        return replace(self, y=y, z=z, positive=positive, metadata=metadata, aux=dict(self.aux))

    def exponentiate(self, z_scaled=False, note="exp"):
        """Y = exp(Y'); Z = Z' (geometric route) or Y * Z' (LN-Q route)"""
        if z_scaled:
            return self.transformed(np.exp, lambda y, z: np.exp(y)[:, None] * z, positive=True, note=note)
        return self.transformed(np.exp, lambda y, z: z, positive=True, note=note)

    def logarithm(self, note="ln"):
        if not self.positive:
            raise DomainError("only positive fields can be taken to the log domain")
        return self.transformed(np.log, lambda y, z: z, positive=False, note=note)

    def to_frame(self):
        rows = []
        n = self.dimension
        for i, level in enumerate(self.y):
            states = self.states[i]
            frame = {
                "time_index": np.full(level.shape[0], i),
                "node_or_path_index": np.arange(level.shape[0]),
                "time": np.full(level.shape[0], self.grid.nodes[i]),
            }
            for k in range(n):
                frame[f"state_{k}" if n > 1 else "state"] = states[:, k]
            frame["y"] = level
            for k in range(n):
                column = f"z_{k}" if n > 1 else "z"
                if self.z is not None and i < len(self.z):
                    frame[column] = self.z[i][:, k]
                else:
                    frame[column] = np.nan
            rows.append(pd.DataFrame(frame))
        return pd.concat(rows, ignore_index=True)

    def summary(self):
        return {
            "support": self.support,
            "steps": self.steps,
            "horizon": self.grid.horizon,
            "y0": self.y0,
            "positive": self.positive,
            "y_min": float(min(level.min() for level in self.y)),
            "y_max": float(max(level.max() for level in self.y)),
            **{k: v for k, v in self.metadata.items() if np.isscalar(v)},
        }
