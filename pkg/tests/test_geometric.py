import numpy as np
import pytest

from core.errors import DomainError, SolverError
from core.grid import TimeGrid, build_lattice
from core.terminal import TerminalCondition
from core.transforms import gbsde_to_lnq, gbsde_to_ordinary, gbsde_to_twodriver
from drivers.catalog import catalog_get
from solver.geometric import closed_form_value, solve_gbsde, solve_lnq, solve_twodriver


def lattice_of(steps):
    return build_lattice(TimeGrid.uniform(1.0, steps))


def test_gamma_norm_reproduces_e(cfg, exp_payoff):
    field = solve_gbsde(lattice_of(256), exp_payoff, catalog_get("gamma_norm(2)"), cfg)
    assert field.y0 == pytest.approx(np.e, rel=0.01)
    assert field.positive


@pytest.mark.parametrize("steps", [1, 7, 50, 128])
def test_geometric_conditional_expectation_is_one(cfg, exp_payoff, steps):
    field = solve_gbsde(lattice_of(steps), exp_payoff, catalog_get("geom_cond_exp"), cfg)
    assert abs(field.y0 - 1.0) <= 1e-15


@pytest.mark.parametrize("name", ["zero", "geom_cond_exp", "gamma_norm(2)", "robust_gamma_norm(2, 0.5)"])
def test_nodewise_closed_forms(cfg, lattice, exp_payoff, name):
    driver = catalog_get(name)
    field = solve_gbsde(lattice, exp_payoff, driver, cfg)
    for i in range(lattice.steps + 1):
        expected = closed_form_value(driver, 1.0, 1.0, 1.0, lattice.time(i), lattice.states(i))
        assert np.allclose(field.y[i], expected, rtol=1e-10, atol=0.0)


def test_convergence_order_on_cosh(cfg, cosh_payoff, cosh_norm):
    reference = cosh_norm
    steps = [32, 64, 128, 256]
    errors = [abs(solve_gbsde(lattice_of(n), cosh_payoff, catalog_get("gamma_norm(2)"), cfg).y0 - reference)
              for n in steps]
    assert errors[-1] < errors[0]
    order = np.log(errors[-1] / errors[-2]) / np.log(steps[-1] / steps[-2])
    assert -1.3 <= order <= -0.7


def test_lnq_route_matches_geometric_route(cfg, lattice, half_exp_payoff):
    ftilde = catalog_get("log_star(1)")
    direct = solve_gbsde(lattice, half_exp_payoff, ftilde, cfg)
    via_lnq = solve_lnq(lattice, half_exp_payoff, gbsde_to_lnq(ftilde), cfg)
    assert direct.max_rel_diff(via_lnq) <= 1e-10
    # LN-Q Z is Y times the geometric Z
    assert np.allclose(via_lnq.z[4], direct.y[4][:, None] * direct.z[4], rtol=1e-10)


@pytest.mark.parametrize("name", ["gamma_norm(2)", "robust_gamma_norm(2, 0.5)", "log_star(1)"])
def test_two_driver_route_matches_direct_route(cfg, lattice, exp_payoff, name):
    ftilde = catalog_get(name)
    direct = solve_gbsde(lattice, exp_payoff, ftilde, cfg)
    solution = solve_twodriver(lattice, exp_payoff, gbsde_to_twodriver(ftilde), cfg)
    assert direct.max_rel_diff(solution.yz) <= 1e-10
    assert np.allclose(solution.yz.z[3], direct.z[3], rtol=1e-10)
    assert np.allclose(solution.yv.z[3], direct.y[3][:, None] * direct.z[3], rtol=1e-10)


def test_robust_with_zero_ambiguity_is_gamma_norm(cfg, exp_payoff):
    lattice = lattice_of(200)
    robust = solve_twodriver(lattice, exp_payoff, gbsde_to_twodriver(catalog_get("robust_gamma_norm(2, 0)")), cfg)
    plain = solve_gbsde(lattice, exp_payoff, catalog_get("gamma_norm(2)"), cfg)
    assert robust.yz.y0 == pytest.approx(plain.y0, rel=1e-12)


def test_log_route_rejects_non_positive_payoff(cfg, lattice):
    X = TerminalCondition.from_config({"kind": "affine", "slope": 1.0})
    with pytest.raises(DomainError):
        solve_gbsde(lattice, X, catalog_get("zero"), cfg)


def test_family_checked(cfg, lattice, exp_payoff):
    with pytest.raises(SolverError):
        solve_gbsde(lattice, exp_payoff, gbsde_to_ordinary(catalog_get("zero")), cfg)
    with pytest.raises(SolverError):
        solve_lnq(lattice, exp_payoff, catalog_get("zero"), cfg)


def test_closed_form_only_for_catalog_forms():
    with pytest.raises(DomainError):
        closed_form_value(catalog_get("log_star(1)"))


@pytest.mark.parametrize("name", ["zero", "gamma_norm(2)", "robust_gamma_norm(2, 0.5)"])
def test_terminal_layer_is_the_payoff_exactly(cfg, exp_payoff, name):
    lattice = lattice_of(50)
    driver = catalog_get(name)
    X = exp_payoff
    expected = X(lattice.states(50))
    assert np.array_equal(solve_gbsde(lattice, X, driver, cfg).terminal, expected)
    assert np.array_equal(solve_lnq(lattice, X, gbsde_to_lnq(driver), cfg).terminal, expected)
