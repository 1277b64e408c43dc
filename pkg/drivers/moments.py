import logging

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from drivers.audits import FAIL, INCONCLUSIVE, PASS, AssumptionAudit

logger = logging.getLogger(__name__)

QUADRATURE_LADDER = (40, 80, 160)
QUADRATURE_NODES = QUADRATURE_LADDER[-1]
SETTLE_RTOL = 1e-3
GROWTH_FACTOR = 2.0
SPREAD_LIMIT = 10.0

_SEVERITY = {PASS: 0, INCONCLUSIVE: 1, FAIL: 2}


def required_order(p, delta, B):
    """p (2 delta + 1)(e^B + 1)"""
    return float(p) * (2.0 * float(delta) + 1.0) * (np.exp(float(B)) + 1.0)


def gaussian_moment(X, order, horizon, nodes=QUADRATURE_NODES):
    """E[|X(W_T)|^order] for a 1-D payoff by Gauss-Hermite quadrature of N(0, T)"""
    points, weights = hermegauss(int(nodes))
    values = np.abs(X(np.sqrt(horizon) * points)) ** order
    return float(weights @ values / np.sqrt(2.0 * np.pi))


def hill_tail_index(samples, fraction=None):
    """Hill estimator on the top sqrt(M) order statistics of |x|; inf for light or flat tails"""
    x = np.sort(np.abs(np.asarray(samples, dtype=float)))[::-1]
    k = max(int(np.sqrt(x.size)) if fraction is None else int(fraction * x.size), 2)
    if x[k] <= 0:
        return float("inf")
    logs = np.log(x[:k] / x[k])
    mean = float(logs.mean())
    return float("inf") if mean <= 0 else 1.0 / mean


def moment_audit_samples(samples, order, batches=10, label="samples"):
    """
    Empirical moment E|x|^order with a standard error. Heavy tails show up as
    a Hill tail index below the order and as batch means spreading over an
    order of magnitude: both give fail, either one inconclusive.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    values = np.abs(x) ** order
    M = values.size
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(M)) if M > 1 else float("inf")
    batch_means = np.array([b.mean() for b in np.array_split(values, batches)])
    spread = float(batch_means.max() / batch_means.min()) if batch_means.min() > 0 else float("inf")
    if mean > 2 * se:
        span = (mean + 2 * se) / (mean - 2 * se)
    else:
        span = float("inf") if se > 0 else 1.0
    tail = hill_tail_index(x)

    heavy = tail < order
    unstable = spread > SPREAD_LIMIT or span > SPREAD_LIMIT or not np.isfinite(mean)
    verdict = FAIL if heavy and unstable else INCONCLUSIVE if heavy or unstable else PASS
    margin = tail - order if np.isfinite(tail) else float("inf")
    audit = AssumptionAudit(
        assumption="G3-moments",
        verdict=verdict,
        margin=margin,
        witness={"order": float(order), "tail_index": tail, "margin": margin} if verdict != PASS else None,
        window={"source": label},
        samples=M,
        details={
            "order": float(order),
            "moment": mean,
            "standard_error": se,
            "batch_spread": spread,
            "tail_index": tail,
        },
    )
    logger.info("moment audit of %s at order %.4g: %s (tail index %.3g, spread %.3g)", label, order, verdict, tail, spread)
    return audit


def quadrature_ladder(X, order, horizon, ladder=QUADRATURE_LADDER):
    """
    Quadrature estimates on increasing node counts and the verdict they support:
    pass once the last two agree to SETTLE_RTOL, fail when the last refinement
    grows the estimate by more than GROWTH_FACTOR or overflows, else inconclusive.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        estimates = [gaussian_moment(X, order, horizon, nodes) for nodes in ladder]
    coarse, fine = estimates[-2], estimates[-1]
    if not (np.isfinite(coarse) and np.isfinite(fine)):
        return estimates, float("inf"), FAIL
    change = abs(fine - coarse) / max(abs(fine), np.finfo(float).tiny)
    if change <= SETTLE_RTOL:
        return estimates, change, PASS
    if fine > GROWTH_FACTOR * coarse:
        return estimates, change, FAIL
    return estimates, change, INCONCLUSIVE


def worst_verdict(verdicts):
    return max(verdicts, key=_SEVERITY.__getitem__)


def moment_report(X, bundle, p, delta=None, ensemble=None):
    """
    Checks E[X^q] < inf for q = p (2 delta + 1)(e^B + 1). A 1-D payoff is
    integrated against the law of W_T on a ladder of node counts; an ensemble
    estimate, when given, is a second opinion and the worse verdict stands.
    Without quadrature the ensemble decides.
    """
    delta = bundle.delta if delta is None else float(delta)
    q = required_order(p, delta, bundle.B)
    horizon = bundle.horizon if ensemble is None else ensemble.grid.horizon
    one_dimensional = ensemble is None or ensemble.dimension == 1

    cross_check = None
    if ensemble is not None:
        cross_check = moment_audit_samples(X(ensemble.terminal), q, label=f"{X.label} on {ensemble.count} paths")

    if not one_dimensional:
        if cross_check is None:
            raise ValueError("multi-dimensional payoffs need an ensemble")
        cross_check.details["required_order"] = q
        return cross_check

    estimates, change, quadrature = quadrature_ladder(X, q, horizon)
    moment = estimates[-1]
    verdicts = [quadrature] if cross_check is None else [quadrature, cross_check.verdict]
    verdict = worst_verdict(verdicts)
    details = {
        "required_order": q,
        "p": float(p),
        "delta": delta,
        "B": bundle.B,
        "quadrature_moment": moment,
        "quadrature_ladder": dict(zip(map(str, QUADRATURE_LADDER), estimates)),
        "quadrature_change": change,
        "quadrature_verdict": quadrature,
    }
    if cross_check is not None:
        details["ensemble"] = cross_check.details | {"verdict": cross_check.verdict}
    logger.info("moment report for %s: order %.4g, E[X^q] = %.6g (%s, change %.3g)", X.label, q, moment, verdict, change)
    if verdict == PASS:
        margin, witness = moment, None
    else:
        margin = float("-inf") if quadrature == FAIL else SETTLE_RTOL - change
        witness = {"order": q, "margin": margin, "quadrature": quadrature}
        if cross_check is not None:
            witness["ensemble"] = cross_check.verdict
    return AssumptionAudit(
        assumption="G3-moments",
        verdict=verdict,
        margin=margin,
        witness=witness,
        window={"source": f"N(0, {horizon:g}) quadrature, {QUADRATURE_LADDER[-1]} nodes"},
        samples=QUADRATURE_LADDER[-1],
        driver="",
        details=details,
    )
