import numpy as np
from scipy import integrate

from core.errors import DomainError

LN4 = np.log(4.0)
LNLN2 = np.log(np.log(2.0))
PSI_ZERO = -2.0 / LN4


class PsiFunction:
    """
    The increasing function turning y|ln y| growth into a Gronwall-type bound:
    (x - 2)/ln 4 on [0, 2] and ln ln x - ln ln 2 above. Both branches vanish at 2.
    """

    lower = PSI_ZERO

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError(f"psi is defined on [0, inf), got min {x.min():.4g}")
        # np.where evaluates both branches; keep the log branch away from x <= 1
        safe = np.maximum(x, 2.0)
        return np.where(x <= 2.0, (x - 2.0) / LN4, np.log(np.log(safe)) - LNLN2)

    def inverse(self, v):
        v = np.asarray(v, dtype=float)
        if np.any(v < PSI_ZERO - 1e-15):
            raise DomainError(f"psi inverse needs v >= psi(0) = {PSI_ZERO:.6g}, got min {v.min():.6g}")
        v = np.maximum(v, PSI_ZERO)
        return np.where(v <= 0.0, np.maximum(2.0 + v * LN4, 0.0), np.exp(np.exp(np.maximum(v, 0.0) + LNLN2)))


_psi = PsiFunction()


def psi(x):
    return _psi(x)


def psi_inv(v):
    return _psi.inverse(v)


def psi_quadrature(x):
    """
    Cross-check of psi as the integral of 1/psibar from 2 to x, where psibar
    is 2 ln 2 below 2 and x ln x above.
    """
    def psibar(s):
        return 2.0 * np.log(2.0) if s <= 2.0 else s * np.log(s)

    x = float(x)
    if x < 0:
        raise DomainError(f"psi is defined on [0, inf), got {x}")
    value, _ = integrate.quad(lambda s: 1.0 / psibar(s), 2.0, x, epsabs=1e-14, epsrel=1e-12, limit=200)
    return float(value)
