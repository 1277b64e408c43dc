from dataclasses import replace

import numpy as np
import pytest

from core.errors import FixedPointError, SolverError
from core.terminal import TerminalCondition
from core.transforms import gbsde_to_ordinary
from drivers.catalog import catalog_get, custom
from solver.lattice import backward_induction, lattice_residuals, solve_lattice


def test_zero_ordinary_driver_is_conditional_expectation(lattice, cfg):
    f = gbsde_to_ordinary(catalog_get("geom_cond_exp"))
    X = TerminalCondition.from_config({"kind": "affine", "intercept": 1.0, "slope": 2.0})
    field = solve_lattice(lattice, X, f, cfg)
    expected = lattice.conditional_expectations(X(lattice.states(lattice.steps)))
    for got, want in zip(field.y, expected):
        assert np.allclose(got, want, rtol=0.0, atol=1e-13)
    assert np.allclose(field.z[0], 2.0)


def test_constant_driver_accrues_remaining_time(lattice, cfg):
    c = 0.7
    f = custom({"family": "ordinary", "terms": [{"kind": "const", "coef": c}]})
    field = solve_lattice(lattice, TerminalCondition.constant(0.0), f, cfg)
    for i in range(lattice.steps + 1):
        expected = c * (lattice.grid.horizon - lattice.time(i))
        assert np.allclose(field.y[i], expected, rtol=0.0, atol=1e-12)
    assert np.allclose(field.z[0], 0.0, atol=1e-12)


def test_exponential_payoff_matches_binomial_cosh(lattice, cfg):
    f = gbsde_to_ordinary(catalog_get("geom_cond_exp"))
    X = TerminalCondition.exponential(scale=1.0)
    field = solve_lattice(lattice, X, f, cfg)
    N = lattice.steps
    assert field.y0 == pytest.approx(np.cosh(lattice.sqrt_dt) ** N, rel=1e-13)
    for i in range(N + 1):
        expected = np.exp(lattice.states(i)) * np.cosh(lattice.sqrt_dt) ** (N - i)
        assert np.allclose(field.y[i], expected, rtol=1e-13, atol=0.0)


def test_field_shapes(lattice, cfg, exp_payoff):
    f = gbsde_to_ordinary(catalog_get("log_star(1)"))
    field = solve_lattice(lattice, exp_payoff.log(), f, cfg)
    N = lattice.steps
    assert len(field.y) == N + 1 and len(field.z) == N
    assert field.y[7].shape == (8,)
    assert field.z[7].shape == (8, 1)
    assert field.metadata["max_residual"] <= cfg.tolerance


def test_residuals_recomputed_from_field(lattice, cfg, exp_payoff):
    f = gbsde_to_ordinary(catalog_get("log_star(2)"))
    field = solve_lattice(lattice, exp_payoff.log(), f, cfg)
    worst = max(float(r.max()) for r in lattice_residuals(lattice, field, f))
    assert worst <= 10 * cfg.tolerance


def test_initial_guess_does_not_change_the_solution(lattice, cfg, exp_payoff):
    f = gbsde_to_ordinary(catalog_get("log_star(1)"))
    base = solve_lattice(lattice, exp_payoff.log(), f, cfg)
    shifted = solve_lattice(lattice, exp_payoff.log(), f, replace(cfg, initial_shift=0.5))
    assert base.max_abs_diff(shifted) <= 10 * cfg.tolerance


def test_divergent_fixed_point_raises(lattice, cfg):
    f = custom({"family": "ordinary", "terms": [{"kind": "linear_y", "coef": 1e6}]})
    X = TerminalCondition.constant(1.0)
    with pytest.raises(FixedPointError) as info:
        solve_lattice(lattice, X, f, replace(cfg, max_iterations=20))
    assert info.value.level == lattice.steps - 1


def test_backward_induction_needs_ordinary_driver(lattice, cfg):
    with pytest.raises(SolverError):
        backward_induction(lattice, np.ones(lattice.steps + 1), catalog_get("zero"), cfg)


def test_terminal_length_checked(lattice, cfg):
    f = gbsde_to_ordinary(catalog_get("zero"))
    with pytest.raises(SolverError):
        backward_induction(lattice, np.ones(lattice.steps), f, cfg)
