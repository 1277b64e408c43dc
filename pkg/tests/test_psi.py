import numpy as np
import pytest

from bounds.psi import PSI_ZERO, psi, psi_inv, psi_quadrature
from core.errors import DomainError


def test_branches_meet_at_two():
    assert abs(psi(2.0)) <= 1e-15
    eps = 1e-9
    assert abs(psi(2.0 + eps) - psi(2.0 - eps)) < 1e-8
    assert psi(0.0) == pytest.approx(PSI_ZERO)


def test_increasing():
    x = np.concatenate([np.linspace(0.0, 2.0, 50), np.logspace(0.31, 6, 50)])
    assert np.all(np.diff(psi(x)) > 0)


def test_inverse_round_trip():
    x = np.array([0.0, 1e-6, 0.5, 1.0, 1.999, 2.0, 2.001, 10.0, 1e3, 1e6])
    back = psi_inv(psi(x))
    assert np.allclose(back, x, rtol=1e-12, atol=1e-15)
    v = np.array([PSI_ZERO, -0.5, 0.0, 0.3, 2.5])
    assert np.allclose(psi(psi_inv(v)), v, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("x", [0.0, 0.7, 2.0, 3.5, 50.0, 1e4])
def test_matches_quadrature(x):
    assert psi_quadrature(x) == pytest.approx(float(psi(x)), rel=1e-10, abs=1e-12)


def test_domain():
    with pytest.raises(DomainError):
        psi(-0.1)
    with pytest.raises(DomainError):
        psi_inv(PSI_ZERO - 1e-6)
    with pytest.raises(DomainError):
        psi_quadrature(-1.0)
