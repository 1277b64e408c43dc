import logging
from dataclasses import dataclass

import numpy as np

from core.driver import Family
from core.errors import DomainError
from core.transforms import gbsde_to_ordinary, lnq_to_quadratic, ordinary_to_gbsde, twodriver_reduce
from solver.geometric import solve_gbsde, solve_ordinary, solve_twodriver

logger = logging.getLogger(__name__)

MONETARY = "monetary"
RETURN = "return"


@dataclass(frozen=True, eq=False)
class DynamicEvaluation:
    """
    A solved dynamic evaluation of one payoff. Keeps the driver, the
    discretization and the solver config so it can be re-applied.
    """
    kind: str
    driver: object
    support: object
    cfg: object
    field: object
    payoff: str = "X"

    def __post_init__(self):
        if self.kind == RETURN and not all(np.all(level > 0) for level in self.field.y):
            raise DomainError("a return evaluation must be strictly positive at every node")

    @property
    def value(self):
        return self.field.y0

    def at(self, level):
        return self.field.y[level]

    def apply(self, X):
        if self.kind == RETURN:
            return evaluate_return(self.support, X, self.driver, self.cfg)
        return evaluate_monetary(self.support, X, self.driver, self.cfg)

    def describe(self):
        return {
            "kind": self.kind,
            "payoff": self.payoff,
            "driver": self.driver.describe(),
            "value": self.value,
            "solver": self.cfg.describe(),
        }


def evaluate_return(support, X, ftilde, cfg):
    """rho~_t(X) from a geometric (or two-driver) driver, solved in the log domain"""
    if ftilde.family is Family.TWO_DRIVER:
        field = solve_twodriver(support, X, ftilde, cfg).yz
    elif ftilde.family is Family.GEOMETRIC:
        field = solve_gbsde(support, X, ftilde, cfg)
    else:
        raise DomainError(f"return evaluations need a geometric or two-driver driver, got {ftilde.family.value}")
    return DynamicEvaluation(RETURN, ftilde, support, cfg, field, X.label)


def evaluate_monetary(support, X, f, cfg):
    if f.family is not Family.ORDINARY:
        raise DomainError(f"monetary evaluations need an ordinary driver, got {f.family.value}")
    return DynamicEvaluation(MONETARY, f, support, cfg, solve_ordinary(support, X, f, cfg), X.label)


def return_from_monetary(rho, X):
    """rho~_t(X) = exp(rho_t(ln X)) nodewise"""
    if rho.kind != MONETARY:
        raise DomainError("return_from_monetary takes a monetary evaluation")
    monetary = rho.apply(X.log(floor=rho.cfg.positivity_floor))
    field = monetary.field.exponentiate(note="rho~ = exp(rho(ln X))")
    return DynamicEvaluation(RETURN, ordinary_to_gbsde(rho.driver), rho.support, rho.cfg, field, X.label)


def monetary_from_return(rho_tilde, X):
    """rho_t(X) = ln rho~_t(e^X) nodewise"""
    if rho_tilde.kind != RETURN:
        raise DomainError("monetary_from_return takes a return evaluation")
    evaluation = rho_tilde.apply(X.exp())
    field = evaluation.field.logarithm(note="rho = ln rho~(e^X)")
    if rho_tilde.driver.family is Family.TWO_DRIVER:
        driver = lnq_to_quadratic(twodriver_reduce(rho_tilde.driver))
    else:
        driver = gbsde_to_ordinary(rho_tilde.driver)
    return DynamicEvaluation(MONETARY, driver, rho_tilde.support, rho_tilde.cfg, field, X.label)
