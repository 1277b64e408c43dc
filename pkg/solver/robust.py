import logging

import numpy as np

from core.errors import ProbabilityError, SolverError
from core.solution import LATTICE, SolutionField

logger = logging.getLogger(__name__)


def drift_grid(C, size):
    if C == 0:
        return np.zeros(1)
    if size < 2:
        raise SolverError(f"a drift grid on [-C, C] needs at least 2 points, got {size}")
    return np.linspace(-C, C, int(size))


def robust_oracle(lattice, X, gamma, C, drift_grid_size=21):
    """
    Dynamic program for sup over tilted measures of E_Q[X^gamma | F_t]^(1/gamma).

    A tilt mu moves the up-probability to (1 + mu sqrt(dt))/2; at each node the
    sup over the drift grid is taken on u = X^gamma and the root is applied at
    the end. Independent of the BSDE solvers.
    """
    if not gamma > 1:
        raise SolverError(f"gamma must exceed 1, got {gamma}")
    if C < 0:
        raise SolverError(f"ambiguity constant C must be nonnegative, got {C}")
    sqrt_dt = lattice.sqrt_dt
    if C * sqrt_dt >= 1:
        raise ProbabilityError(f"C sqrt(dt) = {C * sqrt_dt:.4g} >= 1 leaves tilted probabilities outside (0, 1)")

    mus = drift_grid(C, drift_grid_size)
    p_up = 0.5 * (1.0 + mus * sqrt_dt)
    if np.any(p_up <= 0) or np.any(p_up >= 1):
        raise ProbabilityError(f"tilted up-probability outside (0, 1): {p_up.min():.4g}..{p_up.max():.4g}")

    N = lattice.steps
    u = [None] * (N + 1)
    drift = [None] * N
    u[N] = X(lattice.states(N)) ** gamma
    for i in range(N - 1, -1, -1):
        up, down = u[i + 1][1:], u[i + 1][:-1]
        candidates = p_up[:, None] * up[None, :] + (1.0 - p_up)[:, None] * down[None, :]
        best = np.argmax(candidates, axis=0)
        u[i] = candidates[best, np.arange(i + 1)]
        drift[i] = mus[best]

    y = [level ** (1.0 / gamma) for level in u]
    z = [((y[i + 1][1:] - y[i + 1][:-1]) / (2.0 * sqrt_dt))[:, None] for i in range(N)]
    field = SolutionField(
        support=LATTICE,
        grid=lattice.grid,
        y=y,
        z=z,
        states=[lattice.states(i)[:, None] for i in range(N + 1)],
        positive=bool(all(np.all(level > 0) for level in y)),
        metadata={
            "method": "robust_dp",
            "driver": f"robust_oracle(gamma={gamma:g}, C={C:g})",
            "terminal": X.label,
            "drift_grid_size": int(mus.size),
            "standard_error": 0.0,
        },
        aux={"drift": drift},
    )
    logger.info("robust oracle gamma=%g C=%g N=%d: y0=%.12g", gamma, C, N, field.y0)
    return field
