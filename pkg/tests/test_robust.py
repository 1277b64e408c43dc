import numpy as np
import pytest

from core.errors import ProbabilityError
from core.grid import TimeGrid, build_lattice
from core.transforms import gbsde_to_twodriver
from drivers.catalog import catalog_get
from solver.geometric import solve_twodriver
from solver.robust import drift_grid, robust_oracle


def test_drift_grid():
    assert np.array_equal(drift_grid(0.0, 21), np.zeros(1))
    grid = drift_grid(0.5, 5)
    assert grid[0] == -0.5 and grid[-1] == 0.5


def test_no_ambiguity_is_conditional_norm(lattice, exp_payoff):
    field = robust_oracle(lattice, exp_payoff, 2.0, 0.0)
    expected = np.sqrt(lattice.expectation(exp_payoff(lattice.states(lattice.steps)) ** 2))
    assert field.y0 == pytest.approx(expected, rel=1e-12)


def test_ambiguity_raises_the_value(lattice, exp_payoff):
    low = robust_oracle(lattice, exp_payoff, 2.0, 0.0)
    high = robust_oracle(lattice, exp_payoff, 2.0, 0.5)
    assert high.y0 > low.y0
    # increasing payoff: the worst-case drift is the largest one
    assert np.all(high.aux["drift"][0] == 0.5)


def test_two_driver_agrees_with_oracle(cfg, half_exp_payoff):
    lattice = build_lattice(TimeGrid.uniform(1.0, 200))
    oracle = robust_oracle(lattice, half_exp_payoff, 2.0, 0.5)
    spec = gbsde_to_twodriver(catalog_get("robust_gamma_norm(2, 0.5)"))
    solved = solve_twodriver(lattice, half_exp_payoff, spec, cfg).yz
    assert solved.y0 == pytest.approx(oracle.y0, rel=0.005)
    assert solved.y0 == pytest.approx(np.exp(0.5), rel=1e-10)


def test_tilted_probability_out_of_range(lattice, exp_payoff):
    with pytest.raises(ProbabilityError):
        robust_oracle(lattice, exp_payoff, 2.0, 10.0)


@pytest.mark.parametrize("payoff", ["exp_payoff", "cosh_payoff"])
def test_oracle_is_monotone_in_ambiguity_at_every_node(lattice, payoff, request):
    X = request.getfixturevalue(payoff)
    fields = [robust_oracle(lattice, X, 2.0, C) for C in (0.0, 0.25, 0.5, 1.0)]
    for low, high in zip(fields, fields[1:]):
        for i in range(lattice.steps + 1):
            assert np.all(high.y[i] >= low.y[i] * (1.0 - 1e-12))


@pytest.mark.parametrize("payoff", ["exp_payoff", "cosh_payoff"])
def test_endpoint_drifts_match_fine_grid(lattice, payoff, request):
    X = request.getfixturevalue(payoff)
    coarse = robust_oracle(lattice, X, 2.0, 0.5, drift_grid_size=2)
    fine = robust_oracle(lattice, X, 2.0, 0.5, drift_grid_size=41)
    for i in range(lattice.steps + 1):
        assert np.allclose(coarse.y[i], fine.y[i], rtol=1e-12, atol=0.0)
