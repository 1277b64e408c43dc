from dataclasses import replace

import numpy as np
import pytest

from core.errors import RegressionError, SolverError
from core.grid import TimeGrid, build_lattice, sample_ensemble
from core.terminal import TerminalCondition
from core.transforms import gbsde_to_ordinary
from drivers.catalog import catalog_get
from solver.geometric import solve_gbsde
from solver.lsmc import project, regression_basis, solve_lsmc


def test_basis_is_constant_at_time_zero():
    states = np.zeros((50, 1))
    assert regression_basis(states, 0.0, 4).shape == (50, 1)
    assert regression_basis(np.linspace(-1, 1, 50)[:, None], 0.5, 3).shape == (50, 4)


def test_rank_deficient_basis_raises():
    basis = np.column_stack([np.ones(10), np.ones(10)])
    with pytest.raises(RegressionError):
        project(basis, np.arange(10.0), step=3)


def test_martingale_recovered_within_standard_errors(cfg):
    f = gbsde_to_ordinary(catalog_get("geom_cond_exp"))
    X = TerminalCondition.from_config({"kind": "affine", "slope": 1.0})
    ensemble = sample_ensemble(TimeGrid.uniform(1.0, 10), 1, 20000, seed=5)
    field = solve_lsmc(ensemble, X, f, replace(cfg, method="lsmc", basis_degree=3))
    se = field.metadata["standard_error"]
    assert se > 0
    assert abs(field.y0) <= 3 * se
    assert field.z[3].shape == (20000, 1)


def test_lsmc_needs_ordinary_driver(cfg):
    ensemble = sample_ensemble(TimeGrid.uniform(1.0, 4), 1, 100, seed=1)
    with pytest.raises(SolverError):
        solve_lsmc(ensemble, TerminalCondition.constant(1.0), catalog_get("zero"), cfg)


def test_too_few_paths_raise(cfg):
    f = gbsde_to_ordinary(catalog_get("zero"))
    ensemble = sample_ensemble(TimeGrid.uniform(1.0, 4), 1, 3, seed=1)
    with pytest.raises(RegressionError):
        solve_lsmc(ensemble, TerminalCondition.exponential(0.5).log(), f, cfg)


def test_constant_payoff_gives_constant_field(cfg):
    f = gbsde_to_ordinary(catalog_get("geom_cond_exp"))
    ensemble = sample_ensemble(TimeGrid.uniform(1.0, 8), 1, 2000, seed=2)
    field = solve_lsmc(ensemble, TerminalCondition.constant(1.0), f, replace(cfg, method="lsmc", basis_degree=3))
    for i in range(8):
        assert np.allclose(field.y[i], 1.0, rtol=0.0, atol=1e-12)
        assert np.allclose(field.z[i], 0.0, rtol=0.0, atol=1e-12)


def test_exponential_martingale_mean(cfg):
    f = gbsde_to_ordinary(catalog_get("geom_cond_exp"))
    ensemble = sample_ensemble(TimeGrid.uniform(1.0, 50), 1, 100000, seed=8)
    field = solve_lsmc(ensemble, TerminalCondition.exponential(scale=1.0), f, replace(cfg, method="lsmc", basis_degree=3))
    assert field.y0 == pytest.approx(np.exp(0.5), rel=0.02)


def test_gamma_norm_matches_lattice_within_standard_errors(cfg):
    driver = catalog_get("gamma_norm(2)")
    X = TerminalCondition.exponential(scale=1.0)
    grid = TimeGrid.uniform(1.0, 20)
    lattice_field = solve_gbsde(build_lattice(grid), X, driver, cfg)
    ensemble = sample_ensemble(grid, 1, 20000, seed=6)
    lsmc_field = solve_gbsde(ensemble, X, driver, replace(cfg, method="lsmc", basis_degree=3))
    se = lsmc_field.metadata["standard_error"]
    assert se > 0
    assert abs(lsmc_field.y0 - lattice_field.y0) <= 3 * se
