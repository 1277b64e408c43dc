import logging

import numpy as np

from core.driver import Family
from core.errors import FixedPointError, NonFiniteDriverError, SolverError
from core.solution import LATTICE, SolutionField

logger = logging.getLogger(__name__)


def implicit_step(f, t, m, z, dt, cfg, level):
    """
    Solve y = m + f(t, y, z) dt nodewise by fixed-point iteration.
    Iterates undamped until the residual grows, then with cfg.damping.
    Returns (y, max residual, iterations).
    """
    y = m + cfg.initial_shift
    omega = 1.0
    previous = np.inf
    for iteration in range(1, cfg.max_iterations + 1):
        drift = f(t, y, z)
        bad = ~np.isfinite(drift)
        if np.any(bad):
            raise NonFiniteDriverError(level, int(np.argmax(bad)))
        target = m + drift * dt
        residual = np.abs(y - target)
        worst = float(residual.max())
        if worst <= cfg.tolerance:
            return y, worst, iteration - 1
        if worst > previous and omega == 1.0:
            omega = cfg.damping
            logger.debug("level %d: residual grew to %.3e, damping %.2f", level, worst, omega)
        previous = worst
        y = (1.0 - omega) * y + omega * target

    drift = f(t, y, z)
    residual = np.abs(y - m - drift * dt)
    node = int(np.argmax(residual))
    if residual[node] <= cfg.tolerance:
        return y, float(residual[node]), cfg.max_iterations
    raise FixedPointError(level, node, float(residual[node]), cfg.max_iterations)


def backward_induction(lattice, terminal_values, f, cfg, label=None):
    """Binomial backward recursion from arbitrary terminal node values"""
    if f.family is not Family.ORDINARY:
        raise SolverError(f"the lattice solver takes ordinary drivers, got {f.name} ({f.family.value})")
    N = lattice.steps
    dt, sqrt_dt = lattice.dt, lattice.sqrt_dt
    values = np.asarray(terminal_values, dtype=float)
    if values.shape != (N + 1,):
        raise SolverError(f"expected {N + 1} terminal node values, got shape {values.shape}")

    y = [None] * (N + 1)
    z = [None] * N
    residuals = np.zeros(N)
    iterations = np.zeros(N, dtype=int)
    y[N] = values
    for i in range(N - 1, -1, -1):
        up, down = y[i + 1][1:], y[i + 1][:-1]
        z[i] = ((up - down) / (2.0 * sqrt_dt))[:, None]
        m = 0.5 * (up + down)
        y[i], residuals[i], iterations[i] = implicit_step(f, lattice.time(i), m, z[i], dt, cfg, i)
        logger.debug("level %d: %d iterations, residual %.3e", i, iterations[i], residuals[i])

    field = SolutionField(
        support=LATTICE,
        grid=lattice.grid,
        y=y,
        z=z,
        states=[lattice.states(i)[:, None] for i in range(N + 1)],
        metadata={
            "method": "lattice",
            "driver": f.name,
            "lineage": list(f.lineage),
            "terminal": label,
            "max_residual": float(residuals.max()),
            "max_iterations_used": int(iterations.max()),
            "standard_error": 0.0,
        },
        aux={"residuals": residuals, "iterations": iterations},
    )
    logger.info("lattice solve %s: N=%d, y0=%.12g, worst residual %.3e", f.name, N, field.y0, residuals.max())
    return field


def solve_lattice(lattice, X, f, cfg):
    terminal = X(lattice.states(lattice.steps))
    return backward_induction(lattice, terminal, f, cfg, label=X.label)


def lattice_residuals(lattice, field, f):
    """Nodewise |y - (y_up + y_down)/2 - f dt| recomputed from a solved field"""
    worst = []
    for i in range(lattice.steps):
        up, down = field.y[i + 1][1:], field.y[i + 1][:-1]
        z = ((up - down) / (2.0 * lattice.sqrt_dt))[:, None]
        drift = f(lattice.time(i), field.y[i], z)
        worst.append(np.abs(field.y[i] - 0.5 * (up + down) - drift * lattice.dt))
    return worst
