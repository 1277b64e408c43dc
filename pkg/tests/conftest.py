import numpy as np
import pytest

from core.grid import TimeGrid, build_lattice
from core.sampling import CertificationWindow
from core.terminal import TerminalCondition
from solver.config import SolverConfig


@pytest.fixture
def cfg():
    return SolverConfig.from_settings()


@pytest.fixture
def lattice():
    return build_lattice(TimeGrid.uniform(1.0, 20))


@pytest.fixture
def exp_payoff():
    return TerminalCondition.exponential(scale=1.0)


@pytest.fixture
def half_exp_payoff():
    return TerminalCondition.exponential(scale=0.5)


@pytest.fixture
def window():
    return CertificationWindow.from_settings(1.0)


@pytest.fixture
def cosh_payoff():
    node = {
        "expression": {"kind": "sum", "terms": [
            {"kind": "exp_wT", "scale": 1.0, "coef": 0.5},
            {"kind": "exp_wT", "scale": -1.0, "coef": 0.5},
        ]},
        "positivity": "strict",
        "label": "cosh(W_T)",
    }
    return TerminalCondition.from_config(node)


@pytest.fixture
def cosh_norm():
    """E[cosh(W_1)^2]^(1/2) = ((1 + e^2) / 2)^(1/2)"""
    return float(np.sqrt((1.0 + np.exp(2.0)) / 2.0))
