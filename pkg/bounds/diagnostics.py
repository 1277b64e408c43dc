"""
Integrability diagnostics for the Z component. Nothing here is a pass/fail
check: the numbers are reported next to a solve as advisories.
"""
import logging

import numpy as np

from core.driver import sqnorm
from core.errors import DomainError
from core.solution import LATTICE

logger = logging.getLogger(__name__)

DEFAULT_PATHS = 20000


def _lattice_paths(field, count, seed):
    """Node indices of seeded random walks through the lattice, shape (count, N + 1)"""
    rng = np.random.default_rng(int(seed))
    ups = rng.integers(0, 2, size=(count, field.steps))
    nodes = np.zeros((count, field.steps + 1), dtype=int)
    np.cumsum(ups, axis=1, out=nodes[:, 1:])
    return nodes


def _pathwise(field, values, count, seed):
    """values[i] is one number per node or path at level i; returns (paths, N) samples"""
    if field.support == LATTICE:
        nodes = _lattice_paths(field, count, seed)
        return np.stack([values[i][nodes[:, i]] for i in range(field.steps)], axis=1)
    return np.stack(values, axis=1)


def quadratic_variation_moment(field, p, paths=DEFAULT_PATHS, seed=0):
    """
    Empirical E[(int |Z|^2 / Y dt)^p]. On a lattice the expectation runs over
    seeded random walks through the nodes; on an ensemble over its paths.
    """
    if field.z is None:
        raise DomainError("the field carries no Z component")
    if not field.positive:
        raise DomainError("the |Z|^2 / Y functional needs a positive field")
    dt = field.grid.increments
    density = [sqnorm(field.z[i]) / field.y[i] * dt[i] for i in range(field.steps)]
    energy = _pathwise(field, density, paths, seed).sum(axis=1)
    values = energy ** float(p)
    M = values.size
    moment = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(M)) if M > 1 else float("inf")
    logger.info("E[(int |Z|^2/Y dt)^%g] = %.6g +- %.2g over %d paths", p, moment, se, M)
    return {
        "p": float(p),
        "moment": moment,
        "standard_error": se,
        "paths": int(M),
        "finite": bool(np.isfinite(moment)),
    }


def z_energy_advisory(field, paths=DEFAULT_PATHS, seed=0):
    """
    Pathwise int |Z|^2 dt and, on a lattice, the largest conditional tail
    energy E_t[int_t^T |Z|^2 ds] over all nodes (an empirical BMO proxy).
    """
    if field.z is None:
        raise DomainError("the field carries no Z component")
    dt = field.grid.increments
    density = [sqnorm(field.z[i]) * dt[i] for i in range(field.steps)]
    energy = _pathwise(field, density, paths, seed).sum(axis=1)

    report = {
        "advisory": True,
        "finite": bool(np.all(np.isfinite(energy))),
        "mean_energy": float(energy.mean()),
        "max_energy": float(energy.max()),
    }
    if field.support == LATTICE:
        tail = np.zeros(field.steps + 1)
        worst = 0.0
        for i in range(field.steps - 1, -1, -1):
            tail = density[i] + 0.5 * (tail[1:] + tail[:-1])
            worst = max(worst, float(tail.max()))
        report["bmo_proxy"] = worst
    else:
        tails = np.cumsum(np.stack(density, axis=1)[:, ::-1], axis=1)
        report["bmo_proxy"] = float(tails.mean(axis=0).max())
    logger.info("Z energy advisory: mean %.4g, max %.4g, BMO proxy %.4g",
                report["mean_energy"], report["max_energy"], report["bmo_proxy"])
    return report
