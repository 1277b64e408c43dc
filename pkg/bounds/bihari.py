import logging

import numpy as np
from scipy import integrate

from bounds.psi import psi, psi_inv
from core.errors import DomainError
from core.solution import LATTICE, SolutionField

logger = logging.getLogger(__name__)

# y ln(1 + y) <= (ln 3 / ln 2) psibar(y), equality at y = 2
LOG_STAR_FACTOR = np.log(3.0) / np.log(2.0)


def _as_function(beta):
    if callable(beta):
        return beta
    value = float(beta)
    return lambda t: value


def remaining_integral(beta, t, horizon):
    value, _ = integrate.quad(_as_function(beta), t, horizon, epsabs=0.0, epsrel=1e-12, limit=200)
    return float(value)


def bihari_bound(X_values, beta, lattice):
    """
    Nodewise E[psi^-1(psi(X) + int_t^T beta ds) | F_t] on the lattice.
    X_values are the terminal node values (or a TerminalCondition).
    """
    N = lattice.steps
    if callable(X_values) and not isinstance(X_values, np.ndarray):
        X_values = X_values(lattice.states(N))
    x = np.asarray(X_values, dtype=float)
    if x.shape != (N + 1,):
        raise DomainError(f"expected {N + 1} terminal node values, got shape {x.shape}")
    rates = np.array([_as_function(beta)(t) for t in lattice.grid.nodes])
    if np.any(rates < 0):
        raise DomainError("beta must be nonnegative")

    base = psi(x)
    horizon = lattice.grid.horizon
    y = []
    for i in range(N + 1):
        shifted = psi_inv(base + remaining_integral(beta, lattice.time(i), horizon))
        y.append(lattice.expectation_at_level(shifted, i))
    field = SolutionField(
        support=LATTICE,
        grid=lattice.grid,
        y=y,
        z=None,
        states=[lattice.states(i)[:, None] for i in range(N + 1)],
        positive=bool(all(np.all(level > 0) for level in y)),
        metadata={"method": "bihari_bound", "B": remaining_integral(beta, 0.0, horizon), "standard_error": 0.0},
    )
    logger.info("bihari bound on N=%d: value %.8g at t=0", N, field.y0)
    return field


def log_star_rate(beta):
    """Rate for which beta y ln(1 + y) lies below rate * psibar(y)"""
    return float(beta) * LOG_STAR_FACTOR
