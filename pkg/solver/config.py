from dataclasses import asdict, dataclass, replace

from core.errors import ConfigError
from core.settings import section

METHODS = ("lattice", "lsmc")


@dataclass(frozen=True)
class SolverConfig:
    method: str = "lattice"
    tolerance: float = 1e-12
    max_iterations: int = 200
    basis_degree: int = 4
    positivity_floor: float = 1e-12
    seed: int = 0
    damping: float = 0.5
    initial_shift: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method '{self.method}' (expected one of {', '.join(METHODS)})", key="solver.method")
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance}", key="solver.tolerance")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}", key="solver.max_iterations")
        if self.basis_degree < 1:
            raise ConfigError(f"basis_degree must be >= 1, got {self.basis_degree}", key="solver.basis_degree")
        if not 0 < self.damping <= 1:
            raise ConfigError(f"damping must lie in (0, 1], got {self.damping}", key="solver.damping")
        if not self.positivity_floor >= 0:
            raise ConfigError("positivity_floor must be nonnegative", key="solver.positivity_floor")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}", key="solver.workers")

    @classmethod
    def from_settings(cls, **overrides):
        defaults = section("solver")
        base = cls(
            tolerance=float(defaults.get("tolerance", 1e-12)),
            max_iterations=int(defaults.get("max_iterations", 200)),
            basis_degree=int(defaults.get("basis_degree", 4)),
            positivity_floor=float(defaults.get("positivity_floor", 1e-12)),
            damping=float(defaults.get("damping", 0.5)),
        )
        return replace(base, **overrides) if overrides else base

    def describe(self):
        return asdict(self)
