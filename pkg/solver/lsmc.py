import logging

import numpy as np
from sklearn.preprocessing import PolynomialFeatures

from core.driver import Family
from core.errors import RegressionError, SolverError
from core.solution import ENSEMBLE, SolutionField
from solver.lattice import implicit_step

logger = logging.getLogger(__name__)


def regression_basis(states, t, degree):
    """Global polynomials in W_t / sqrt(t); constant only at t = 0"""
    if t <= 0:
        return np.ones((states.shape[0], 1))
    return PolynomialFeatures(degree=degree).fit_transform(states / np.sqrt(t))


def project(basis, target, step):
    rank = np.linalg.matrix_rank(basis)
    if rank < basis.shape[1]:
        raise RegressionError(step, int(rank), basis.shape[1])
    coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
    return basis @ coef


def solve_lsmc(ensemble, X, f, cfg):
    """
    Backward Euler with least-squares projection on M paths.

    Z_i regresses (Y_{i+1} - E_i[Y_{i+1}]) dW_i / dt_i on the basis; Y_i then
    solves y = E_i[Y_{i+1}] + f(t_i, y, Z_i) dt_i pathwise.
    """
    if f.family is not Family.ORDINARY:
        raise SolverError(f"the regression solver takes ordinary drivers, got {f.name} ({f.family.value})")
    grid = ensemble.grid
    N, M = grid.steps, ensemble.count
    paths = ensemble.paths
    dts = grid.increments

    y = [None] * (N + 1)
    z = [None] * N
    regression_residuals = np.zeros(N)
    fixed_point_residuals = np.zeros(N)
    y[N] = X(paths[:, N, :])
    accumulated = y[N].copy()

    for i in range(N - 1, -1, -1):
        t, dt = float(grid.nodes[i]), float(dts[i])
        basis = regression_basis(paths[:, i, :], t, cfg.basis_degree)
        if M <= basis.shape[1]:
            raise RegressionError(i, M, basis.shape[1])
        mean = project(basis, y[i + 1], i)
        innovation = (y[i + 1] - mean)[:, None] * ensemble.increments[:, i, :] / dt
        z[i] = project(basis, innovation, i)
        y[i], fixed_point_residuals[i], _ = implicit_step(f, t, mean, z[i], dt, cfg, i)
        accumulated += f(t, y[i], z[i]) * dt
        regression_residuals[i] = float(np.sqrt(np.mean((y[i + 1] - mean) ** 2)))
        logger.debug("step %d: regression rms %.4g, fixed point residual %.3e", i, regression_residuals[i], fixed_point_residuals[i])

    standard_error = float(np.std(accumulated, ddof=1) / np.sqrt(M)) if M > 1 else float("nan")
    field = SolutionField(
        support=ENSEMBLE,
        grid=grid,
        y=y,
        z=z,
        states=[paths[:, i, :] for i in range(N + 1)],
        metadata={
            "method": "lsmc",
            "driver": f.name,
            "lineage": list(f.lineage),
            "terminal": X.label,
            "paths": M,
            "seed": ensemble.seed,
            "basis_degree": cfg.basis_degree,
            "max_residual": float(fixed_point_residuals.max()),
            "standard_error": standard_error,
        },
        aux={"regression_residuals": regression_residuals, "residuals": fixed_point_residuals},
    )
    logger.info("lsmc solve %s: M=%d, N=%d, y0=%.8g +/- %.2g", f.name, M, N, field.y0, standard_error)
    return field
