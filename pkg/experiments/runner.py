"""
Runs one ExperimentConfig and collects plot-ready tables, solved fields and
metadata. Nothing is written here; experiments.output does the disk work.
"""
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from bounds.bihari import bihari_bound, log_star_rate
from bounds.certificates import comparison_certificate, default_slack
from bounds.diagnostics import quadratic_variation_moment, z_energy_advisory
from core.driver import Family
from core.errors import ConfigError
from core.expressions import to_int, to_number
from core.grid import Lattice, sample_ensemble
from core.settings import section
from core.transforms import gbsde_to_lnq, gbsde_to_ordinary, gbsde_to_twodriver, lnq_to_gbsde, twodriver_reduce
from drivers.audits import FAIL, audit_assumption, audit_documented
from drivers.moments import gaussian_moment, moment_report
from riskmeasure.axioms import CLAMP_LEVELS, InstanceSet, audit_axiom, lebesgue_check
from riskmeasure.evaluation import evaluate_monetary, return_from_monetary
from solver.geometric import closed_form_value, solve_gbsde, solve_lnq, solve_ordinary, solve_twodriver
from solver.robust import robust_oracle

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Tables are lists of row dicts keyed by file stem; fields are exported node by node"""
    config: object
    tables: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def failed(self):
        return bool(self.failures)


def solve_any(support, X, driver, cfg):
    if driver.family is Family.GEOMETRIC:
        return solve_gbsde(support, X, driver, cfg)
    if driver.family is Family.LNQ:
        return solve_lnq(support, X, driver, cfg)
    if driver.family is Family.TWO_DRIVER:
        return solve_twodriver(support, X, driver, cfg).yz
    return solve_ordinary(support, X, driver, cfg)


def geometric_form(driver):
    if driver.family is Family.TWO_DRIVER:
        return lnq_to_gbsde(twodriver_reduce(driver))
    if driver.family is Family.LNQ:
        return lnq_to_gbsde(driver)
    if driver.family is not Family.GEOMETRIC:
        raise ConfigError(f"this experiment needs a geometric driver, got {driver.family.value}", key="driver")
    return driver


def reference_value(config, driver, X, lattice=None):
    node = config.options["reference"]
    kind = node["kind"]
    if kind == "value":
        return to_number(node.get("value"), "reference.value")
    if kind == "closed_form":
        coef = to_number(node.get("coef", 1.0), "reference.coef")
        scale = to_number(node.get("scale", 1.0), "reference.scale")
        return float(closed_form_value(driver, coef, scale, config.horizon))
    if kind == "gaussian_moment":
        order = to_number(node.get("order", driver.params.get("gamma", 1.0)), "reference.order")
        return gaussian_moment(X, order, config.horizon) ** (1.0 / order)
    gamma = to_number(node.get("gamma", driver.params.get("gamma", 2.0)), "reference.gamma")
    C = to_number(node.get("C", driver.params.get("C", 0.0)), "reference.C")
    grid_size = int(to_number(node.get("drift_grid_size", 21), "reference.drift_grid_size"))
    lattice = lattice if isinstance(lattice, Lattice) else config.support(method="lattice")
    return robust_oracle(lattice, X, gamma, C, grid_size).y0


def _run_solve(config, result):
    driver, X = config.driver(), config.terminal()
    support = config.support()
    solved = solve_any(support, X, driver, config.solver)
    result.fields["field"] = solved
    result.metadata["field"] = solved.summary()
    result.metadata["lineage"] = solved.metadata.get("lineage", list(driver.lineage))
    rows = []

    if "compare" in config.options:
        node = config.options["compare"]
        high_driver = config.driver(node.get("driver", config.driver_node), "compare.driver")
        high_X = config.terminal(node["terminal"], "compare.terminal") if "terminal" in node else X
        high = solve_any(support, high_X, high_driver, config.solver)
        report = comparison_certificate(solved, high, default_slack(config.solver, support.grid.steps))
        rows.append({"certificate": "comparison", "upper": high_driver.name, **report.row()})
        result.metadata.setdefault("certificates", []).append(report.to_dict())

    if "bound" in config.options:
        if not isinstance(support, Lattice):
            raise ConfigError("the Bihari bound certificate needs a lattice", key="bound")
        node = config.options["bound"]
        if "rate" in node:
            rate = to_number(node["rate"], "bound.rate")
        elif driver.params.get("catalog") == "log_star":
            rate = log_star_rate(driver.params["beta"])
        else:
            raise ConfigError("bound needs a 'rate' for drivers other than log_star", key="bound.rate")
        bound = bihari_bound(X, rate, support)
        report = comparison_certificate(solved, bound, default_slack(config.solver, support.grid.steps), "bihari_bound")
        rows.append({"certificate": "bihari_bound", "upper": f"psi bound (rate {rate:.6g})", **report.row()})
        result.metadata.setdefault("certificates", []).append(report.to_dict())

    if rows:
        result.tables["certificates"] = rows
        result.failures.extend(f"certificate {r['property']}" for r in rows if r["verdict"] == FAIL)

    if "diagnostics" in config.options and solved.z is not None:
        diagnostics = {"z_energy": z_energy_advisory(solved, seed=config.seed)}
        if solved.positive:
            p = to_number(config.options["diagnostics"].get("p", 1.0), "diagnostics.p")
            diagnostics["quadratic_variation"] = quadratic_variation_moment(solved, p, seed=config.seed)
        result.metadata["diagnostics"] = diagnostics


def _run_audit_driver(config, result):
    driver = config.driver()
    window, samples = config.window(), config.samples()
    requested = config.options.get("assumptions", "documented")
    if requested == "documented":
        audits = audit_documented(driver, window, samples, config.seed)
    else:
        audits = [audit_assumption(driver, tag, window, samples, config.seed) for tag in requested]
        audits = [a for a in audits if a is not None]
    if "moments" in config.options:
        node = config.options["moments"]
        p = to_number(node.get("p", 1.0), "moments.p")
        ensemble = None
        if "paths" in node or config.method == "lsmc" or config.dimension > 1:
            paths = to_int(node.get("paths", config.paths), "moments.paths")
            ensemble = sample_ensemble(config.grid(), config.dimension, paths, config.seed)
        audits.append(moment_report(config.terminal(), driver.coefficients, p, ensemble=ensemble))
    for audit in audits:
        audit.driver = driver.name
    result.tables["audits"] = [{"driver": driver.name, **a.row()} for a in audits]
    result.metadata["audits"] = [a.to_dict() for a in audits]
    result.metadata["window"] = window.describe()
    result.failures.extend(f"assumption {a.assumption}" for a in audits if a.verdict == FAIL)


def _run_audit_axioms(config, result):
    driver = config.driver()
    node = {"seed": config.seed, **config.options.get("instances", {})}
    instances = InstanceSet.from_config(node, config.horizon, config.steps[-1])
    reports = [audit_axiom(driver, axiom, instances, config.solver) for axiom in config.options["axioms"]]
    result.tables["axioms"] = [{"driver": driver.name, **r.row()} for r in reports]
    result.metadata["axioms"] = [r.to_dict() for r in reports]
    result.failures.extend(f"axiom {r.axiom}" for r in reports if not r.passed)


def _run_convergence(config, result):
    driver, X = config.driver(), config.terminal()
    reference = reference_value(config, driver, X)
    rows = []
    for steps in config.steps:
        solved = solve_any(config.support(steps), X, driver, config.solver)
        error = abs(solved.y0 - reference)
        order = float("nan")
        if rows and rows[-1]["abs_error"] > 0 and error > 0:
            order = float(np.log(error / rows[-1]["abs_error"]) / np.log(steps / rows[-1]["steps"]))
        rows.append({"steps": steps, "y0": solved.y0, "abs_error": error, "observed_order": order})
        logger.info("N=%d: y0=%.12g, error %.3e", steps, solved.y0, error)
    result.tables["convergence"] = rows
    result.metadata["reference"] = reference


def _route(name, config, driver, X, lattice):
    cfg = config.solver
    geometric = geometric_form(driver)
    if name == "gbsde":
        return solve_gbsde(lattice, X, geometric, cfg)
    if name == "lnq":
        return solve_lnq(lattice, X, gbsde_to_lnq(geometric), cfg)
    if name == "two_driver":
        spec = driver if driver.family is Family.TWO_DRIVER else gbsde_to_twodriver(geometric)
        return solve_twodriver(lattice, X, spec, cfg).yz
    if name == "monetary":
        rho = evaluate_monetary(lattice, X.log(floor=cfg.positivity_floor), gbsde_to_ordinary(geometric), cfg)
        return return_from_monetary(rho, X).field
    if name == "lsmc":
        ensemble = config.support(lattice.steps, method="lsmc")
        return solve_gbsde(ensemble, X, geometric, replace(cfg, method="lsmc"))
    if name == "robust_oracle":
        params = geometric.params
        return robust_oracle(lattice, X, params.get("gamma", 2.0), params.get("C", 0.0))
    raise ConfigError(f"unknown route '{name}'", key="routes")


def _oracle_allowance(config):
    defaults = section("experiments")
    node = config.options["reference"]
    tolerance = float(defaults.get("oracle_tolerance", 5e-3))
    if "tolerance" in node:
        tolerance = to_number(node["tolerance"], "reference.tolerance")
    return tolerance, float(defaults.get("oracle_standard_errors", 3.0))


def _run_oracle_compare(config, result):
    driver, X = config.driver(), config.terminal()
    lattice = config.support(method="lattice")
    reference = reference_value(config, geometric_form(driver), X, lattice)
    tolerance, standard_errors = _oracle_allowance(config)
    rows = []
    for name in config.options["routes"]:
        if name == "closed_form":
            node = config.options["reference"]
            y0 = float(closed_form_value(geometric_form(driver), to_number(node.get("coef", 1.0), "reference.coef"),
                                         to_number(node.get("scale", 1.0), "reference.scale"), config.horizon))
            se = 0.0
        else:
            solved = _route(name, config, driver, X, lattice)
            y0, se = solved.y0, float(solved.metadata.get("standard_error", 0.0))
        rel_error = abs(y0 - reference) / abs(reference)
        allowed = tolerance + standard_errors * se / abs(reference)
        rows.append({
            "route": name,
            "y0": y0,
            "reference": reference,
            "rel_error": rel_error,
            "standard_error": se,
            "allowed": allowed,
            "agrees": bool(rel_error <= allowed),
        })
        if rel_error > allowed:
            logger.warning("route %s: y0=%.10g is %.3e off the reference %.10g (allowed %.3e)",
                           name, y0, rel_error, reference, allowed)
            result.failures.append(f"oracle {name}")
    result.tables["oracle_compare"] = rows
    result.metadata["reference"] = reference
    result.metadata["oracle_tolerance"] = tolerance


def _run_lebesgue(config, result):
    driver, X = config.driver(), config.terminal()
    levels = config.options.get("levels", CLAMP_LEVELS)
    levels = [to_number(v, f"levels[{i}]") for i, v in enumerate(levels)]
    target = config.options.get("target")
    target = None if target is None else to_number(target, "target")
    report = lebesgue_check(driver, X, levels, config.solver, config.support(method="lattice"), target)
    result.tables["lebesgue"] = [{"level": r["level"], "y0": r["y0"], "abs_error": r["abs_error"]} for r in report.details]
    result.metadata["lebesgue"] = report.to_dict()
    if not report.passed:
        result.failures.append("lebesgue")


_RUNNERS = {
    "solve": _run_solve,
    "audit-driver": _run_audit_driver,
    "audit-axioms": _run_audit_axioms,
    "convergence": _run_convergence,
    "oracle-compare": _run_oracle_compare,
    "lebesgue": _run_lebesgue,
}


def run_experiment(config):
    """Solver errors propagate; audit failures are recorded in result.failures"""
    result = RunResult(config)
    start = time.perf_counter()
    _RUNNERS[config.kind](config, result)
    result.metadata["wall_time_seconds"] = time.perf_counter() - start
    logger.info("experiment %s (%s) finished in %.2fs with %d failure(s)", config.name, config.kind,
                result.metadata["wall_time_seconds"], len(result.failures))
    return result
