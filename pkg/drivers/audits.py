"""
Sampling audits of driver assumptions on an explicit certification window.

Audits never raise on a mathematical failure; they return an AssumptionAudit
whose witness is the worst sampled point. Margins below -EQUALITY_TOLERANCE
times the local scale count as violations.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.driver import Domain, Family, norm, sqnorm
from core.sampling import CertificationWindow, default_samples, default_seed, lambda_values
from core.transforms import gbsde_to_lnq, lnq_to_quadratic

logger = logging.getLogger(__name__)

ASSUMPTIONS = (
    "H1", "H1'", "H1''", "A", "A'", "C", "C'", "GA", "G1", "G2", "G3-moments",
    "QG", "GG", "MON_Y", "SUBLIN",
)
EQUALITY_TOLERANCE = 1e-12

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass
class AssumptionAudit:
    assumption: str
    verdict: str
    margin: float
    witness: Optional[dict]
    window: dict
    samples: int
    driver: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == PASS

    def to_dict(self):
        return {
            "assumption": self.assumption,
            "driver": self.driver,
            "verdict": self.verdict,
            "margin": self.margin,
            "witness": self.witness,
            "window": self.window,
            "samples": self.samples,
            "details": self.details,
        }

    def row(self):
        witness = "" if self.witness is None else ", ".join(
            f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.witness.items()
        )
        return {"assumption": self.assumption, "verdict": self.verdict, "margin": self.margin, "witness": witness}


def _setup(spec, window, samples, seed):
    window = window or CertificationWindow.from_settings(spec.coefficients.horizon)
    if spec.domain_y is Domain.REAL and window.y_scale == "log":
        window = window.log_image()
    return window, samples or default_samples(), default_seed() if seed is None else seed


def _verdict(assumption, spec, window, count, margins, scales, witness_of, details=None):
    """Common verdict logic: worst scaled margin decides, witness is the argmin"""
    margins = np.asarray(margins, dtype=float)
    scaled = margins / np.maximum(1.0, np.asarray(scales, dtype=float))
    worst = int(np.argmin(scaled))
    margin = float(margins[worst])
    failed = scaled[worst] < -EQUALITY_TOLERANCE
    witness = dict(witness_of(worst), margin=margin)
    audit = AssumptionAudit(
        assumption=assumption,
        verdict=FAIL if failed else PASS,
        margin=margin,
        witness=witness,
        window=window.describe(),
        samples=count,
        driver=spec.name,
        details=details or {},
    )
    logger.info("audit %s on %s: %s (worst margin %.4g)", assumption, spec.name, audit.verdict, margin)
    return audit


def majorant(assumption, bundle, t, y, z):
    alpha, beta, gamma = bundle.at(t)
    delta = bundle.delta
    zn2, zn = sqnorm(z), norm(z)
    log_y = None if assumption == "QG" else np.abs(np.log(y))
    if assumption == "H1":
        return alpha * y + beta * y * log_y + delta * zn2 / y
    if assumption == "H1'":
        return alpha * y + beta * y * log_y + gamma * zn + delta * zn2 / y
    if assumption in ("H1''", "A"):
        eta = np.zeros(z.shape[1]) if bundle.eta is None else np.broadcast_to(np.asarray(bundle.eta(t), dtype=float), (z.shape[1],))
        return alpha * y + beta * y * log_y + z @ eta + delta * zn2 / y
    if assumption == "A'":
        return alpha * y + beta * y * log_y + delta * y * zn2
    if assumption == "G1":
        return y * (alpha + beta * log_y + gamma * zn + delta * zn2)
    if assumption == "QG":
        return alpha + beta * np.abs(y) + gamma * zn + delta * zn2
    if assumption == "GG":
        return alpha + beta * log_y + gamma * zn + delta * zn2
    raise ValueError(f"no growth majorant for assumption {assumption}")


def _default_growth(spec):
    if spec.family is Family.ORDINARY:
        return "QG"
    if spec.family is Family.GEOMETRIC:
        return "GG"
    if spec.family is Family.TWO_DRIVER:
        return "G1"
    if spec.coefficients.eta is not None:
        return "H1''"
    return "H1'" if spec.coefficients.at(0.0)[2] > 0 else "H1"


def validate_growth(g, window=None, samples=None, seed=None, assumption=None, points=None):
    """
    Checks 0 <= g(t, y, z) <= h(t, y, z) for the growth majorant h of the
    assumption (two-sided |g| <= h for QG). Two-driver specs are checked
    against G1 for g1 and carry the largest certified K of the G2 bound.
    """
    window, samples, seed = _setup(g, window, samples, seed)
    assumption = assumption or _default_growth(g)
    t, y, z = points if points is not None else window.sample(samples, seed)
    count = len(t)
    margins, scales = np.empty(count), np.empty(count)
    for k in range(count):
        yk, zk = y[k:k + 1], z[k:k + 1]
        value = float(g(t[k], yk, zk)[0])
        bound = float(majorant(assumption, g.coefficients, t[k], yk, zk)[0])
        if assumption == "QG":
            margins[k] = bound - abs(value)
        elif "nonnegativity" in g.exemptions:
            margins[k] = bound - value
        else:
            margins[k] = min(bound - value, value)
        scales[k] = max(abs(value), abs(bound))

    details = {"bundle": g.coefficients.describe()}
    if g.family is Family.TWO_DRIVER:
        lower = audit_g2_lower_bound(g, window, samples, seed)
        details["certified_K"] = lower.details["certified_K"]
        details["G2"] = lower.verdict
    return _verdict(
        assumption, g, window, count, margins, scales,
        lambda k: {"t": float(t[k]), "y": float(y[k]), "z": z[k].tolist()},
        details,
    )


def growth_propagation(g, window=None, samples=None, seed=None):
    """
    Source audit of an LN-Q driver and the QG audit of its quadratic image on
    the pushed-forward points (ln y, z / y).
    """
    window, samples, seed = _setup(g, window, samples, seed)
    t, y, z = window.sample(samples, seed)
    source = validate_growth(g, window, samples, seed, points=(t, y, z))
    image = lnq_to_quadratic(g)
    pushed = validate_growth(image, window.log_image(), samples, seed, assumption="QG", points=(t, np.log(y), z / y[:, None]))
    return source, pushed


def _pairs(window, samples, seed):
    (t, y1, z1), (_, y2, z2) = window.sample(samples, seed, replicas=2)
    return t, y1, z1, y2, z2


def check_convexity(g, mode="joint", window=None, samples=None, seed=None, lambdas=None):
    """
    Midpoint-type convexity on sampled pairs over the lambda set.
    joint: arithmetic means in (y, z); GA: geometric mean in y, arithmetic in z;
    perspective: the additive decomposition is verified and y * y_part(y) and
    z_part(z) are tested separately.
    """
    window, samples, seed = _setup(g, window, samples, seed)
    lambdas = lambda_values(seed) if lambdas is None else np.asarray(lambdas, dtype=float)
    if mode == "perspective":
        return _check_perspective(g, window, samples, seed, lambdas)
    if mode not in ("joint", "GA"):
        raise ValueError(f"unknown convexity mode '{mode}'")

    t, y1, z1, y2, z2 = _pairs(window, samples, seed)
    L = lambdas
    margins, scales, where = np.empty(samples), np.empty(samples), np.empty(samples, dtype=int)
    for k in range(samples):
        ymix = L * y1[k] + (1 - L) * y2[k] if mode == "joint" else y1[k] ** L * y2[k] ** (1 - L)
        zmix = L[:, None] * z1[k] + (1 - L)[:, None] * z2[k]
        g1 = float(g(t[k], y1[k:k + 1], z1[k:k + 1])[0])
        g2 = float(g(t[k], y2[k:k + 1], z2[k:k + 1])[0])
        rhs = L * g1 + (1 - L) * g2
        lhs = g(t[k], ymix, zmix)
        gap = rhs - lhs
        where[k] = int(np.argmin(gap))
        margins[k] = gap[where[k]]
        scales[k] = max(abs(g1), abs(g2), abs(lhs[where[k]]))

    assumption = "GA" if mode == "GA" else "C"
    return _verdict(
        assumption, g, window, samples, margins, scales,
        lambda k: {
            "t": float(t[k]), "y1": float(y1[k]), "z1": z1[k].tolist(),
            "y2": float(y2[k]), "z2": z2[k].tolist(), "lambda": float(L[where[k]]),
        },
        {"mode": mode, "lambdas": int(L.size)},
    )


def _check_perspective(g, window, samples, seed, lambdas):
    window_info = window.describe()
    if g.parts is None:
        return AssumptionAudit("C'", INCONCLUSIVE, float("nan"), None, window_info, samples, g.name,
                               {"reason": "driver carries no y/z decomposition"})
    t, y1, z1, y2, z2 = _pairs(window, samples, seed)
    L = lambdas
    margins, scales = np.empty(samples), np.empty(samples)
    kinds = []
    for k in range(samples):
        yk, zk = y1[k:k + 1], z1[k:k + 1]
        whole = float(g(t[k], yk, zk)[0])
        split = float(g.parts.y_part(t[k], yk)[0] + g.parts.z_part(t[k], zk)[0])
        decomposition = -abs(whole - split)

        def yterm(y):
            return y * g.parts.y_part(t[k], y)

        ymix = L * y1[k] + (1 - L) * y2[k]
        a1, a2 = float(yterm(y1[k:k + 1])[0]), float(yterm(y2[k:k + 1])[0])
        y_gap = L * a1 + (1 - L) * a2 - yterm(ymix)

        zmix = L[:, None] * z1[k] + (1 - L)[:, None] * z2[k]
        b1, b2 = float(g.parts.z_part(t[k], z1[k:k + 1])[0]), float(g.parts.z_part(t[k], z2[k:k + 1])[0])
        z_gap = L * b1 + (1 - L) * b2 - g.parts.z_part(t[k], zmix)

        candidates = {"decomposition": decomposition, "y_term": float(y_gap.min()), "z_term": float(z_gap.min())}
        kind = min(candidates, key=candidates.get)
        kinds.append(kind)
        margins[k] = candidates[kind]
        scales[k] = max(abs(whole), abs(a1), abs(a2), abs(b1), abs(b2))

    return _verdict(
        "C'", g, window, samples, margins, scales,
        lambda k: {"t": float(t[k]), "y1": float(y1[k]), "y2": float(y2[k]), "z1": z1[k].tolist(), "term": kinds[k]},
        {"mode": "perspective"},
    )


def check_monotonicity(g, window=None, samples=None, seed=None):
    """MON_Y: g(t, y_lo, z) <= g(t, y_hi, z) on sampled y pairs sharing (t, z)"""
    window, samples, seed = _setup(g, window, samples, seed)
    t, y1, z, y2, _ = _pairs(window, samples, seed)
    lo, hi = np.minimum(y1, y2), np.maximum(y1, y2)
    margins, scales = np.empty(samples), np.empty(samples)
    for k in range(samples):
        a = float(g(t[k], lo[k:k + 1], z[k:k + 1])[0])
        b = float(g(t[k], hi[k:k + 1], z[k:k + 1])[0])
        margins[k], scales[k] = b - a, max(abs(a), abs(b))
    return _verdict(
        "MON_Y", g, window, samples, margins, scales,
        lambda k: {"t": float(t[k]), "y_lo": float(lo[k]), "y_hi": float(hi[k]), "z": z[k].tolist()},
    )


def check_sublinear(g, C=None, window=None, samples=None, seed=None):
    """
    SUBLIN for the ambiguity part a(t, z): 0 <= a <= C|z|, convex in z and
    positively homogeneous a(t, s z) = s a(t, z).
    """
    window, samples, seed = _setup(g, window, samples, seed)
    if g.parts is None or g.parts.ambiguity is None:
        return AssumptionAudit("SUBLIN", INCONCLUSIVE, float("nan"), None, window.describe(), samples, g.name,
                               {"reason": "driver carries no ambiguity term"})
    C = g.parts.ambiguity_constant if C is None else float(C)
    a = g.parts.ambiguity
    t, _, z1, _, z2 = _pairs(window, samples, seed)
    factors = np.random.default_rng(seed).uniform(0.0, 3.0, samples)
    L = lambda_values(seed)
    margins, scales, kinds = np.empty(samples), np.empty(samples), []
    for k in range(samples):
        z1k, z2k = z1[k:k + 1], z2[k:k + 1]
        a1, a2 = float(a(t[k], z1k)[0]), float(a(t[k], z2k)[0])
        zmix = L[:, None] * z1[k] + (1 - L)[:, None] * z2[k]
        candidates = {
            "nonnegative": a1,
            "bound": C * float(norm(z1k)[0]) - a1,
            "convex": float((L * a1 + (1 - L) * a2 - a(t[k], zmix)).min()),
            "homogeneous": -abs(float(a(t[k], factors[k] * z1k)[0]) - factors[k] * a1),
        }
        kind = min(candidates, key=candidates.get)
        kinds.append(kind)
        margins[k], scales[k] = candidates[kind], max(abs(a1), abs(a2), C * float(norm(z1k)[0]))
    return _verdict(
        "SUBLIN", g, window, samples, margins, scales,
        lambda k: {"t": float(t[k]), "z": z1[k].tolist(), "term": kinds[k]},
        {"C": C},
    )


def audit_g2_lower_bound(spec, window=None, samples=None, seed=None):
    """G2: |g2(t, y, z)| >= K y |z|; reports the largest K certified on the window"""
    window, samples, seed = _setup(spec, window, samples, seed)
    t, y, z = window.sample(samples, seed)
    ratios = np.full(samples, np.inf)
    for k in range(samples):
        zn = float(norm(z[k:k + 1])[0])
        if zn > 0:
            ratios[k] = float(norm(spec.vol(t[k], y[k:k + 1], z[k:k + 1]))[0]) / (y[k] * zn)
    certified = float(ratios.min())
    K = certified if spec.K is None else float(spec.K)
    margins = (ratios - K) * y * norm(z)
    return _verdict(
        "G2", spec, window, samples, margins, np.ones(samples),
        lambda k: {"t": float(t[k]), "y": float(y[k]), "z": z[k].tolist()},
        {"K": K, "certified_K": certified},
    )


def audit_assumption(spec, tag, window=None, samples=None, seed=None):
    """One sampling audit by assumption id; None when the id has no sampling check"""
    if tag in ("H1", "H1'", "H1''", "A", "A'"):
        lnq = gbsde_to_lnq(spec) if spec.family is Family.GEOMETRIC else spec
        return validate_growth(lnq, window, samples, seed, assumption=tag)
    if tag in ("GG", "QG", "G1"):
        return validate_growth(spec, window, samples, seed, assumption=tag)
    if tag in ("C", "C'", "GA"):
        mode = {"C": "joint", "C'": "perspective", "GA": "GA"}[tag]
        return check_convexity(spec, mode, window, samples, seed)
    if tag == "MON_Y":
        return check_monotonicity(spec, window, samples, seed)
    if tag == "SUBLIN":
        return check_sublinear(spec, None, window, samples, seed)
    if tag == "G2":
        return audit_g2_lower_bound(spec, window, samples, seed)
    logger.warning("no sampling audit for assumption %s of %s", tag, spec.name)
    return None


def audit_documented(spec, window=None, samples=None, seed=None):
    """Replay every assumption the driver is documented to satisfy"""
    audits = [audit_assumption(spec, tag, window, samples, seed) for tag in sorted(spec.tags)]
    return [a for a in audits if a is not None]
