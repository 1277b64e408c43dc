import numpy as np
import pytest

from core.errors import GridError
from core.grid import TimeGrid, build_lattice, sample_ensemble


def test_uniform_grid():
    grid = TimeGrid.uniform(2.0, 8)
    assert grid.steps == 8
    assert grid.horizon == 2.0
    assert np.allclose(grid.increments, 0.25)
    assert grid.is_uniform()


@pytest.mark.parametrize("nodes", [[0.0], [0.1, 0.5], [0.0, 0.5, 0.5], [0.0, 0.7, 0.3]])
def test_invalid_grids_rejected(nodes):
    with pytest.raises(GridError):
        TimeGrid(np.array(nodes))


def test_lattice_needs_uniform_grid():
    with pytest.raises(GridError):
        build_lattice(TimeGrid(np.array([0.0, 0.1, 1.0])))


def test_lattice_moments(lattice):
    N = lattice.steps
    w = lattice.states(N)
    assert lattice.weights(N).sum() == pytest.approx(1.0, abs=1e-14)
    assert lattice.expectation(w) == pytest.approx(0.0, abs=1e-14)
    assert lattice.expectation(w ** 2) == pytest.approx(1.0, rel=1e-12)


def test_conditional_expectations_match_level_convolution(lattice):
    values = np.exp(lattice.states(lattice.steps))
    levels = lattice.conditional_expectations(values)
    for i in (0, 5, 13, lattice.steps):
        assert np.allclose(levels[i], lattice.expectation_at_level(values, i), rtol=1e-13, atol=0.0)
    assert levels[0].shape == (1,)


def test_truncate_keeps_nodes_and_step(lattice):
    short = lattice.truncate(7)
    assert short.steps == 7
    assert short.dt == lattice.dt
    assert np.array_equal(short.states(7), lattice.states(7))
    with pytest.raises(GridError):
        lattice.truncate(0)


def test_ensemble_is_seeded():
    grid = TimeGrid.uniform(1.0, 10)
    a = sample_ensemble(grid, 2, 500, seed=7)
    b = sample_ensemble(grid, 2, 500, seed=7)
    assert a.paths.shape == (500, 11, 2)
    assert np.array_equal(a.increments, b.increments)
    assert np.all(a.paths[:, 0, :] == 0.0)
    with pytest.raises(GridError):
        sample_ensemble(grid, 0, 10, seed=1)


def test_ensemble_terminal_variance():
    ensemble = sample_ensemble(TimeGrid.uniform(2.0, 10), 1, 20000, seed=11)
    w = ensemble.terminal[:, 0]
    assert abs(w.mean()) < 3 * np.sqrt(2.0 / 20000)
    assert w.var(ddof=1) == pytest.approx(2.0, rel=0.03)


def test_ensemble_increments_are_uncorrelated():
    ensemble = sample_ensemble(TimeGrid.uniform(1.0, 4), 2, 40000, seed=12)
    dW = ensemble.increments
    across_time = np.corrcoef(dW[:, 0, 0], dW[:, 1, 0])[0, 1]
    across_dimension = np.corrcoef(dW[:, 2, 0], dW[:, 2, 1])[0, 1]
    assert abs(across_time) < 0.02
    assert abs(across_dimension) < 0.02


def test_ensemble_mean_error_decays_like_inverse_root_m():
    grid = TimeGrid.uniform(1.0, 1)
    counts = np.array([250, 1000, 4000, 16000])
    rms = []
    for M in counts:
        means = [sample_ensemble(grid, 1, int(M), seed=s).terminal.mean() for s in range(100)]
        rms.append(np.sqrt(np.mean(np.square(means))))
    slope = np.polyfit(np.log(counts), np.log(rms), 1)[0]
    assert -0.6 <= slope <= -0.4
