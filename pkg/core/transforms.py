"""
Exact maps between the four driver families.

Every map returns a new DriverSpec whose lineage ends with the target name and
whose records end with a TransformRecord carrying the solution push-forward
(y, z) -> (y', z') and its inverse.
"""
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from core.driver import DriverSpec, Domain, Family, sqnorm
from core.errors import TransformError
from core.sampling import CertificationWindow, default_samples, default_seed

logger = logging.getLogger(__name__)

INVERSE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class TransformRecord:
    source: Family
    target: Family
    driver_map: str
    solution_map: str
    push_forward: Callable
    pull_back: Callable

    def describe(self):
        return {
            "source": self.source.value,
            "target": self.target.value,
            "driver_map": self.driver_map,
            "solution_map": self.solution_map,
        }

    def round_trip(self, t, y, z):
        """pull_back(push_forward(.)) on sampled points; max abs deviation in (y, z)"""
        y2, z2 = self.pull_back(t, *self.push_forward(t, y, z))
        return float(max(np.max(np.abs(y2 - y)), np.max(np.abs(z2 - z))))


def _expect(spec, family):
    if spec.family is not family:
        raise TransformError(f"expected a {family.value} driver, got {spec.name} ({spec.family.value})")


def gbsde_to_ordinary(ftilde: DriverSpec):
    _expect(ftilde, Family.GEOMETRIC)
    fn = ftilde.fn

    def f(t, y, z):
        return fn(t, np.exp(y), z) + 0.5 * sqnorm(z)

    record = TransformRecord(
        Family.GEOMETRIC, Family.ORDINARY,
        "f(t,y,z) = f~(t, e^y, z) + |z|^2/2",
        "Y' = ln Y, Z' = Z",
        lambda t, y, z: (np.log(y), z),
        lambda t, y, z: (np.exp(y), z),
    )
    bundle = ftilde.coefficients.with_delta(ftilde.coefficients.delta + 0.5)
    return ftilde.derived(f"ordinary[{ftilde.name}]", Family.ORDINARY, f, bundle, Domain.REAL, record)


def ordinary_to_gbsde(f: DriverSpec):
    _expect(f, Family.ORDINARY)
    fn = f.fn

    def ftilde(t, y, z):
        return fn(t, np.log(y), z) - 0.5 * sqnorm(z)

    record = TransformRecord(
        Family.ORDINARY, Family.GEOMETRIC,
        "f~(t,y,z) = f(t, ln y, z) - |z|^2/2",
        "Y = exp Y', Z = Z'",
        lambda t, y, z: (np.exp(y), z),
        lambda t, y, z: (np.log(y), z),
    )
    bundle = f.coefficients.with_delta(max(f.coefficients.delta - 0.5, 0.0))
    return f.derived(f"geometric[{f.name}]", Family.GEOMETRIC, ftilde, bundle, Domain.POSITIVE, record)


def gbsde_to_lnq(ftilde: DriverSpec):
    """g(t,y,z) = y f~(t, y, z/y); the bundle carries over unchanged"""
    _expect(ftilde, Family.GEOMETRIC)
    fn = ftilde.fn

    def g(t, y, z):
        return y * fn(t, y, z / y[:, None])

    record = TransformRecord(
        Family.GEOMETRIC, Family.LNQ,
        "g(t,y,z) = y f~(t, y, z/y)",
        "Y unchanged, Z = Y Z~",
        lambda t, y, z: (y, y[:, None] * z),
        lambda t, y, z: (y, z / y[:, None]),
    )
    return ftilde.derived(f"lnq[{ftilde.name}]", Family.LNQ, g, None, Domain.POSITIVE, record)


def lnq_to_gbsde(g: DriverSpec):
    _expect(g, Family.LNQ)
    fn = g.fn

    def ftilde(t, y, z):
        return fn(t, y, y[:, None] * z) / y

    record = TransformRecord(
        Family.LNQ, Family.GEOMETRIC,
        "f~(t,y,z) = g(t, y, y z)/y",
        "Y unchanged, Z~ = Z/Y",
        lambda t, y, z: (y, z / y[:, None]),
        lambda t, y, z: (y, y[:, None] * z),
    )
    return g.derived(f"geometric[{g.name}]", Family.GEOMETRIC, ftilde, None, Domain.POSITIVE, record)


def lnq_to_quadratic(g: DriverSpec):
    """g'(t,y,z) = e^-y g(t, e^y, e^y z) + |z|^2/2 with bundle delta -> delta + 1/2"""
    _expect(g, Family.LNQ)
    fn = g.fn

    def quadratic(t, y, z):
        ey = np.exp(y)
        return fn(t, ey, ey[:, None] * z) / ey + 0.5 * sqnorm(z)

    record = TransformRecord(
        Family.LNQ, Family.ORDINARY,
        "g'(t,y,z) = e^-y g(t, e^y, e^y z) + |z|^2/2",
        "Y' = ln Y, Z' = Z/Y",
        lambda t, y, z: (np.log(y), z / y[:, None]),
        lambda t, y, z: (np.exp(y), np.exp(y)[:, None] * z),
    )
    bundle = g.coefficients.with_delta(g.coefficients.delta + 0.5)
    return g.derived(f"quadratic[{g.name}]", Family.ORDINARY, quadratic, bundle, Domain.REAL, record)


def quadratic_to_lnq(quadratic: DriverSpec):
    _expect(quadratic, Family.ORDINARY)
    fn = quadratic.fn

    def g(t, y, z):
        return y * (fn(t, np.log(y), z / y[:, None]) - 0.5 * sqnorm(z) / y ** 2)

    record = TransformRecord(
        Family.ORDINARY, Family.LNQ,
        "g(t,y,z) = y (g'(t, ln y, z/y) - |z|^2/(2y^2))",
        "Y = exp Y', Z = Y Z'",
        lambda t, y, z: (np.exp(y), np.exp(y)[:, None] * z),
        lambda t, y, z: (np.log(y), z / y[:, None]),
    )
    bundle = quadratic.coefficients.with_delta(max(quadratic.coefficients.delta - 0.5, 0.0))
    return quadratic.derived(f"lnq[{quadratic.name}]", Family.LNQ, g, bundle, Domain.POSITIVE, record)


def verify_two_driver(spec: DriverSpec, window=None, samples=None, seed=None):
    """
    Sampled checks of g2(t, y, g2_inv(t, y, v)) = v and |g2(t, y, z)| >= K y |z|.
    Returns (inverse residual, largest certified K); raises TransformError on failure.
    """
    _expect(spec, Family.TWO_DRIVER)
    window = window or CertificationWindow.from_settings(spec.coefficients.horizon)
    samples = samples or default_samples()
    seed = default_seed() if seed is None else seed
    (t, y, z), (_, _, v) = window.sample(samples, seed, replicas=2)

    residuals = np.empty(samples)
    ratios = np.full(samples, np.inf)
    for k in range(samples):
        yk = y[k:k + 1]
        vk = v[k:k + 1] * yk[:, None]
        back = spec.vol(t[k], yk, spec.vol_inv(t[k], yk, vk))
        residuals[k] = np.max(np.abs(back - vk)) / max(1.0, float(np.max(np.abs(vk))))
        zk = z[k:k + 1]
        zn = float(np.sqrt(sqnorm(zk))[0])
        if zn > 0:
            ratios[k] = float(np.sqrt(sqnorm(spec.vol(t[k], yk, zk)))[0]) / (yk[0] * zn)

    worst = int(np.argmax(residuals))
    if residuals[worst] > INVERSE_TOLERANCE:
        witness = {"t": float(t[worst]), "y": float(y[worst]), "v": (v[worst] * y[worst]).tolist()}
        raise TransformError(
            f"g2 inverse of {spec.name} fails at {witness}: residual {residuals[worst]:.3e}",
            witness=witness,
            residual=float(residuals[worst]),
        )

    certified = float(np.min(ratios))
    K = certified if spec.K is None else float(spec.K)
    if not K > 0 or K > certified * (1 + 1e-12):
        low = int(np.argmin(ratios))
        witness = {"t": float(t[low]), "y": float(y[low]), "z": z[low].tolist()}
        raise TransformError(
            f"lower bound |g2| >= K y |z| with K={K:g} fails for {spec.name} at {witness} "
            f"(largest certified K = {certified:.6g})",
            witness=witness,
            residual=K - certified,
        )
    return float(np.max(residuals)), certified


def twodriver_reduce(spec: DriverSpec, window=None, samples=None, seed=None):
    """LN-Q driver g(t, y, v) = g1(t, y, g2_inv(t, y, v)) after verification"""
    residual, certified = verify_two_driver(spec, window, samples, seed)
    K = certified if spec.K is None else float(spec.K)
    g1, g2, g2_inv = spec.fn, spec.g2, spec.g2_inv

    def g(t, y, v):
        return g1(t, y, g2_inv(t, y, v))

    record = TransformRecord(
        Family.TWO_DRIVER, Family.LNQ,
        "g(t,y,v) = g1(t, y, g2^-1(t, y, v))",
        "Y unchanged, V = g2(t, Y, Z)",
        lambda t, y, z: (y, np.asarray(g2(t, y, z), dtype=float)),
        lambda t, y, v: (y, np.asarray(g2_inv(t, y, v), dtype=float)),
    )
    bundle = spec.coefficients.scaled_for_two_driver(K)
    logger.info("reduced two-driver %s: inverse residual %.3e, K=%g (certified %.6g)", spec.name, residual, K, certified)
    params = {**spec.params, "inverse_residual": residual, "certified_K": certified}
    return spec.derived(f"reduced[{spec.name}]", Family.LNQ, g, bundle, Domain.POSITIVE, record, K=K, params=params)


def round_trip_error(forward, backward, driver, window=None, samples=None, seed=None):
    """
    Max deviation of backward(forward(driver)) from driver on window samples,
    relative to max(1, |value|). Positive-domain drivers are sampled on the
    window itself, real-domain drivers on its log image.
    """
    window = window or CertificationWindow.from_settings(driver.coefficients.horizon)
    if driver.domain_y is Domain.REAL:
        window = window.log_image()
    samples = samples or default_samples()
    t, y, z = window.sample(samples, default_seed() if seed is None else seed)
    trip = backward(forward(driver))
    worst = 0.0
    for k in range(samples):
        yk, zk = y[k:k + 1], z[k:k + 1]
        expected = driver(t[k], yk, zk)
        got = trip(t[k], yk, zk)
        worst = max(worst, float(np.max(np.abs(got - expected) / np.maximum(1.0, np.abs(expected)))))
    logger.debug("round trip %s -> %s on %s: %.3e", forward.__name__, backward.__name__, driver.name, worst)
    return worst


def gbsde_to_twodriver(ftilde: DriverSpec):
    """Two-driver form g1(t,y,z) = y f~(t,y,z), g2(t,y,z) = y z with K = 1"""
    _expect(ftilde, Family.GEOMETRIC)
    fn = ftilde.fn

    def g1(t, y, z):
        return y * fn(t, y, z)

    record = TransformRecord(
        Family.GEOMETRIC, Family.TWO_DRIVER,
        "g1(t,y,z) = y f~(t,y,z), g2(t,y,z) = y z",
        "Y unchanged, Z unchanged",
        lambda t, y, z: (y, z),
        lambda t, y, z: (y, z),
    )
    return ftilde.derived(
        f"two_driver[{ftilde.name}]", Family.TWO_DRIVER, g1, None, Domain.POSITIVE, record,
        K=1.0,
        g2=lambda t, y, z: y[:, None] * z,
        g2_inv=lambda t, y, v: v / y[:, None],
    )
