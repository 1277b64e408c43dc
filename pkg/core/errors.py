class BSDELabError(Exception):
    """Base class for every error raised by the laboratory"""


class GridError(BSDELabError, ValueError):
    pass


class DomainError(BSDELabError, ValueError):
    pass


class TransformError(BSDELabError):
    """Driver transformation failed verification at a sampled witness point"""

    def __init__(self, message, witness=None, residual=None):
        super().__init__(message)
        self.witness = witness
        self.residual = residual


class SolverError(BSDELabError):
    pass


class FixedPointError(SolverError):
    def __init__(self, level, node, residual, iterations):
        super().__init__(
            f"fixed point did not converge at level {level}, node {node}: "
            f"residual {residual:.3e} after {iterations} iterations"
        )
        self.level = level
        self.node = node
        self.residual = residual


class NonFiniteDriverError(SolverError):
    def __init__(self, level, node):
        super().__init__(f"driver returned a non-finite value at level {level}, node {node}")
        self.level = level
        self.node = node


class RegressionError(SolverError):
    def __init__(self, step, rank, columns):
        super().__init__(
            f"regression matrix is rank deficient at step {step} (rank {rank} < {columns} basis functions)"
        )
        self.step = step
        self.rank = rank


class ProbabilityError(SolverError):
    pass


class DiscretizationMismatchError(BSDELabError, ValueError):
    pass


class ConfigError(BSDELabError, ValueError):
    """Invalid experiment config, anchored to a line when the source is known"""

    def __init__(self, message, path=None, line=None, key=None):
        self.message = message
        self.path = path
        self.line = line
        self.key = key
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        prefix = f"{key}: " if key else ""
        super().__init__(f"{location}{prefix}{message}")


class CatalogError(BSDELabError, LookupError):
    pass
