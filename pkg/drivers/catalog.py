"""
Named drivers, all in geometric form f~(t, y, z), plus an inline term grammar
for custom drivers of any family.

Each entry documents the assumption ids it satisfies (tags) and any audit it
is exempt from; audits.audit_documented replays exactly those.
"""
import logging
import re

import numpy as np

from core.driver import CoefficientBundle, DriverParts, DriverSpec, Domain, Family, norm, sqnorm
from core.errors import CatalogError, ConfigError
from core.expressions import compile_time_function, to_number

logger = logging.getLogger(__name__)

LN2 = np.log(2.0)


def _zeros(y):
    return np.zeros_like(y)


def zero(horizon=1.0):
    return DriverSpec(
        name="zero",
        family=Family.GEOMETRIC,
        fn=lambda t, y, z: _zeros(y),
        coefficients=CoefficientBundle.constant(horizon=horizon),
        domain_y=Domain.POSITIVE,
        tags=frozenset({"H1", "GG", "C", "C'", "GA", "MON_Y"}),
        parts=DriverParts(lambda t, y: _zeros(y), lambda t, z: np.zeros(z.shape[0])),
        params={"catalog": "zero"},
    )


def geom_cond_exp(horizon=1.0):
    """-|z|^2/2: the geometric conditional expectation exp(E[ln X | F_t])"""
    return DriverSpec(
        name="geom_cond_exp",
        family=Family.GEOMETRIC,
        fn=lambda t, y, z: -0.5 * sqnorm(z),
        coefficients=CoefficientBundle.constant(delta=0.5, horizon=horizon),
        domain_y=Domain.POSITIVE,
        tags=frozenset({"MON_Y"}),
        exemptions=frozenset({"nonnegativity"}),
        parts=DriverParts(lambda t, y: _zeros(y), lambda t, z: -0.5 * sqnorm(z)),
        params={"catalog": "geom_cond_exp"},
    )


def gamma_norm(gamma=2.0, horizon=1.0):
    gamma = float(gamma)
    if not gamma > 1:
        raise CatalogError(f"gamma_norm needs gamma > 1, got {gamma}")
    c = 0.5 * (gamma - 1.0)
    return DriverSpec(
        name=f"gamma_norm({gamma:g})",
        family=Family.GEOMETRIC,
        fn=lambda t, y, z: c * sqnorm(z),
        coefficients=CoefficientBundle.constant(delta=c, horizon=horizon),
        domain_y=Domain.POSITIVE,
        tags=frozenset({"H1", "GG", "C", "C'", "GA", "MON_Y"}),
        parts=DriverParts(lambda t, y: _zeros(y), lambda t, z: c * sqnorm(z)),
        params={"catalog": "gamma_norm", "gamma": gamma},
    )


def robust_gamma_norm(gamma=2.0, C=0.5, horizon=1.0):
    gamma, C = float(gamma), float(C)
    if not gamma > 1 or C < 0:
        raise CatalogError(f"robust_gamma_norm needs gamma > 1 and C >= 0, got ({gamma}, {C})")
    c = 0.5 * (gamma - 1.0)
    return DriverSpec(
        name=f"robust_gamma_norm({gamma:g},{C:g})",
        family=Family.GEOMETRIC,
        fn=lambda t, y, z: C * norm(z) + c * sqnorm(z),
        coefficients=CoefficientBundle.constant(gamma=C, delta=c, horizon=horizon),
        domain_y=Domain.POSITIVE,
        tags=frozenset({"H1'", "GG", "C", "C'", "GA", "MON_Y", "SUBLIN"}),
        parts=DriverParts(
            lambda t, y: _zeros(y),
            lambda t, z: C * norm(z) + c * sqnorm(z),
            ambiguity=lambda t, z: C * norm(z),
            ambiguity_constant=C,
        ),
        params={"catalog": "robust_gamma_norm", "gamma": gamma, "C": C},
    )


def log_star(beta=1.0, horizon=1.0):
    """beta ln(1 + y): star-shaped, time-consistent and multiplicatively convex"""
    beta = float(beta)
    if beta < 0:
        raise CatalogError(f"log_star needs beta >= 0, got {beta}")
    return DriverSpec(
        name=f"log_star({beta:g})",
        family=Family.GEOMETRIC,
        fn=lambda t, y, z: beta * np.log1p(y),
        # ln(1 + y) <= ln 2 + |ln y|
        coefficients=CoefficientBundle.constant(alpha=beta * LN2, beta=beta, horizon=horizon),
        domain_y=Domain.POSITIVE,
        tags=frozenset({"H1", "GG", "GA", "MON_Y"}),
        parts=DriverParts(lambda t, y: beta * np.log1p(y), lambda t, z: np.zeros(z.shape[0])),
        params={"catalog": "log_star", "beta": beta},
    )


# name -> (y-part?, needs y > 0, evaluator(y, z))
TERMS = {
    "const": (True, False, lambda y, z: np.ones_like(y)),
    "linear_y": (True, False, lambda y, z: y),
    "square_y": (True, False, lambda y, z: y ** 2),
    "log_y": (True, True, lambda y, z: np.log(y)),
    "abs_log_y": (True, True, lambda y, z: np.abs(np.log(y))),
    "log1p_y": (True, True, lambda y, z: np.log1p(y)),
    "abs_z": (False, False, lambda y, z: norm(z)),
    "quadratic_z": (False, False, lambda y, z: sqnorm(z)),
    "quadratic_z_over_y": (None, True, lambda y, z: sqnorm(z) / y),
}


def custom(node, horizon=1.0, key="driver"):
    """
    Inline driver: {"family": ..., "terms": [{"kind": ..., "coef": ...}], "coefficients": {...}}.
    Coefficients are time functions in the expression grammar; omitted ones are zero.
    """
    if not isinstance(node, dict):
        raise ConfigError("custom driver must be a mapping", key=key)
    try:
        family = Family(node.get("family", "geometric"))
    except ValueError:
        raise ConfigError(f"unknown family '{node.get('family')}'", key=f"{key}.family")
    if family is Family.TWO_DRIVER:
        raise ConfigError("two-driver specs are built from a geometric driver", key=f"{key}.family")
    terms = node.get("terms")
    if not isinstance(terms, list) or not terms:
        raise ConfigError("custom driver needs a non-empty list of 'terms'", key=f"{key}.terms")

    compiled, positive, separable = [], family is not Family.ORDINARY, True
    for i, term in enumerate(terms):
        kind = term.get("kind") if isinstance(term, dict) else None
        if kind not in TERMS:
            raise ConfigError(f"unknown term '{kind}' (expected one of {', '.join(TERMS)})", key=f"{key}.terms[{i}]")
        coef = to_number(term.get("coef", 1.0), f"{key}.terms[{i}].coef")
        in_y, needs_positive, evaluate = TERMS[kind]
        positive = positive or needs_positive
        separable = separable and in_y is not None
        compiled.append((coef, in_y, evaluate))

    def fn(t, y, z):
        return np.sum([c * e(y, z) for c, _, e in compiled], axis=0)

    def y_part(t, y):
        z = np.zeros((y.shape[0], 1))
        return np.sum([c * e(y, z) for c, in_y, e in compiled if in_y] or [np.zeros_like(y)], axis=0)

    def z_part(t, z):
        y = np.ones(z.shape[0])
        return np.sum([c * e(y, z) for c, in_y, e in compiled if in_y is False] or [np.zeros(z.shape[0])], axis=0)

    coefficients = node.get("coefficients", {})
    bundle = CoefficientBundle(
        alpha=compile_time_function(coefficients.get("alpha", 0.0), f"{key}.coefficients.alpha"),
        beta=compile_time_function(coefficients.get("beta", 0.0), f"{key}.coefficients.beta"),
        gamma=compile_time_function(coefficients.get("gamma", 0.0), f"{key}.coefficients.gamma"),
        delta=to_number(coefficients.get("delta", 0.0), f"{key}.coefficients.delta"),
        horizon=horizon,
    )
    tags = node.get("assumptions", [])
    return DriverSpec(
        name=node.get("name", "custom"),
        family=family,
        fn=fn,
        coefficients=bundle,
        domain_y=Domain.POSITIVE if positive else Domain.REAL,
        tags=frozenset(tags),
        exemptions=frozenset(node.get("exemptions", [])),
        parts=DriverParts(y_part, z_part) if separable else None,
        params={"catalog": "custom", "terms": [dict(t) for t in terms]},
    )


CATALOG = {
    "zero": (zero, ()),
    "geom_cond_exp": (geom_cond_exp, ()),
    "gamma_norm": (gamma_norm, ("gamma",)),
    "robust_gamma_norm": (robust_gamma_norm, ("gamma", "C")),
    "log_star": (log_star, ("beta",)),
    "custom": (custom, ("node",)),
}

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def catalog_get(name, horizon=1.0, **params):
    """
    Look up a driver by name. Parameters come as keywords or inline,
    e.g. "gamma_norm(2)" or "robust_gamma_norm(2, 0.5)".
    """
    match = _CALL.match(name)
    if not match or match.group(1) not in CATALOG:
        raise CatalogError(f"unknown driver '{name}' (known: {', '.join(CATALOG)})")
    base, inline = match.group(1), match.group(2)
    factory, names = CATALOG[base]
    if inline:
        values = [to_number(v, f"{base}.args") for v in inline.split(",")]
        if len(values) > len(names):
            raise CatalogError(f"{base} takes at most {len(names)} parameters, got {len(values)}")
        params = {**dict(zip(names, values)), **params}
    unknown = set(params) - set(names)
    if unknown:
        raise CatalogError(f"{base} does not take parameters {sorted(unknown)}")
    spec = factory(horizon=horizon, **params)
    logger.debug("catalog_get %s -> %s", name, spec.name)
    return spec


def list_catalog():
    rows = []
    for name, (factory, params) in CATALOG.items():
        if name == "custom":
            rows.append({"name": name, "family": "any", "parameters": "node", "assumptions": "declared", "exemptions": ""})
            continue
        spec = factory()
        rows.append({
            "name": name,
            "family": spec.family.value,
            "parameters": ",".join(params),
            "assumptions": ",".join(sorted(spec.tags)),
            "exemptions": ",".join(sorted(spec.exemptions)),
        })
    return rows
