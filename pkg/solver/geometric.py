"""
Log-domain wrappers: geometric, LN-Q and two-driver equations are mapped to
an ordinary quadratic equation for ln Y, solved, and pushed back.
"""
import logging
from typing import NamedTuple

import numpy as np

from core.driver import Family
from core.errors import DomainError, SolverError
from core.grid import Lattice, PathEnsemble
from core.solution import SolutionField
from core.terminal import Positivity
from core.transforms import gbsde_to_ordinary, lnq_to_quadratic, twodriver_reduce
from solver.lattice import solve_lattice
from solver.lsmc import solve_lsmc

logger = logging.getLogger(__name__)


class TwoDriverSolution(NamedTuple):
    yz: SolutionField
    yv: SolutionField


def solve_ordinary(support, X, f, cfg):
    if isinstance(support, Lattice):
        return solve_lattice(support, X, f, cfg)
    if isinstance(support, PathEnsemble):
        return solve_lsmc(support, X, f, cfg)
    raise SolverError(f"unsupported discretization {type(support).__name__}")


def _positive_log(X, cfg):
    if X.positivity is Positivity.UNRESTRICTED:
        logger.debug("payoff %s has no declared positivity; checked on visited states", X.label)
    return X.log(floor=cfg.positivity_floor)


def _exponentiate(field, X, z_scaled, note, lineage):
    result = field.exponentiate(z_scaled=z_scaled, note=note)
    # Y_N = X exactly, not exp(ln X) up to rounding or the positivity floor
    result.y[-1] = X(field.states[-1])
    se = field.metadata.get("standard_error", 0.0)
    result.metadata["standard_error"] = float(np.exp(field.y0) * se)
    result.metadata["log_standard_error"] = se
    result.metadata["lineage"] = list(lineage)
    return result


def solve_gbsde(support, X, ftilde, cfg):
    """Geometric equation via f = f~(t, e^y, z) + |z|^2/2 on ln X; Z~ = Z'"""
    if ftilde.family is not Family.GEOMETRIC:
        raise SolverError(f"solve_gbsde takes a geometric driver, got {ftilde.name} ({ftilde.family.value})")
    f = gbsde_to_ordinary(ftilde)
    field = solve_ordinary(support, _positive_log(X, cfg), f, cfg)
    return _exponentiate(field, X, False, "Y = exp(Y'), Z~ = Z'", f.lineage)


def solve_lnq(support, X, g, cfg):
    """LN-Q equation via lnq_to_quadratic on ln X; Z = Y Z'"""
    if g.family is not Family.LNQ:
        raise SolverError(f"solve_lnq takes an LN-Q driver, got {g.name} ({g.family.value})")
    quadratic = lnq_to_quadratic(g)
    field = solve_ordinary(support, _positive_log(X, cfg), quadratic, cfg)
    return _exponentiate(field, X, True, "Y = exp(Y'), Z = Y Z'", quadratic.lineage)


def solve_twodriver(support, X, spec, cfg, window=None):
    """
    Solve the reduced LN-Q equation in V = g2(t, Y, Z), then recover
    Z = g2_inv(t, Y, V) slice by slice.
    """
    reduced = twodriver_reduce(spec, window=window)
    yv = solve_lnq(support, X, reduced, cfg)
    grid = yv.grid
    z = [spec.vol_inv(float(grid.nodes[i]), yv.y[i], yv.z[i]) for i in range(len(yv.z))]
    yz = SolutionField(
        support=yv.support,
        grid=grid,
        y=yv.y,
        z=z,
        states=yv.states,
        positive=True,
        metadata={**yv.metadata, "recovered": "Z = g2_inv(t, Y, V)"},
        aux=dict(yv.aux),
    )
    return TwoDriverSolution(yz, yv)


def closed_form_value(driver, coef=1.0, scale=1.0, horizon=1.0, t=0.0, w=0.0):
    """
    Exact value at (t, W_t = w) of the catalog evaluations of c exp(a W_T).
    Drivers outside the catalog closed forms raise DomainError.
    """
    name = driver.params.get("catalog")
    a, tau = float(scale), float(horizon) - float(t)
    if name == "zero":
        rate = 0.5 * a ** 2
    elif name == "geom_cond_exp":
        rate = 0.0
    elif name == "gamma_norm":
        rate = 0.5 * driver.params["gamma"] * a ** 2
    elif name == "robust_gamma_norm":
        rate = 0.5 * driver.params["gamma"] * a ** 2 + driver.params["C"] * abs(a)
    else:
        raise DomainError(f"no closed form for driver {driver.name}")
    return float(coef) * np.exp(a * np.asarray(w, dtype=float) + rate * tau)
