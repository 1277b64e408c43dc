"""
Axiom harness for return risk measures on the lattice.

Each axiom is an inequality or identity between solved fields, compared
nodewise at every level. A gap is a violation only beyond the slack
slack_factor * tolerance * max(1, |value|) + mc_standard_errors * SE.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from core.driver import Family
from core.errors import ConfigError
from core.expressions import to_number
from core.grid import TimeGrid, build_lattice
from core.sampling import lambda_values
from core.settings import section
from core.terminal import TerminalCondition
from core.transforms import gbsde_to_ordinary, lnq_to_gbsde, twodriver_reduce
from riskmeasure.evaluation import evaluate_monetary, evaluate_return
from solver.config import SolverConfig
from solver.lattice import backward_induction

logger = logging.getLogger(__name__)

AXIOMS = (
    "monotone", "pos_hom", "star_shaped", "mult_convex", "normalized", "time_consistent",
    "lebesgue", "cash_additive", "cash_superadditive", "mult_pos_hom",
)
OPTIONAL_AXIOMS = ("mult_pos_hom",)
CLAMP_LEVELS = (2, 4, 8, 16, 32)


@dataclass
class AxiomReport:
    axiom: str
    verdict: str
    max_violation: float
    slack: float
    instances: int
    driver: str
    details: list = field(default_factory=list)

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return {
            "axiom": self.axiom,
            "driver": self.driver,
            "verdict": self.verdict,
            "max_violation": self.max_violation,
            "slack": self.slack,
            "instances": self.instances,
            "details": self.details,
        }

    def row(self):
        return {
            "axiom": self.axiom,
            "verdict": self.verdict,
            "max_violation": self.max_violation,
            "slack": self.slack,
            "instances": self.instances,
        }


def _exp_payoff(label, terms, positivity="strict"):
    node = {
        "expression": {"kind": "sum", "terms": [{"kind": "exp_wT", "coef": c, "scale": a} for c, a in terms]},
        "positivity": positivity,
        "label": label,
    }
    return TerminalCondition.from_config(node)


@dataclass(frozen=True, eq=False)
class InstanceSet:
    payoffs: tuple
    pairs: tuple
    scalings: tuple = (0.5, 2.0)
    etas: tuple = (0.5, 1.0)
    lambdas: tuple = (0.25, 0.5, 0.75)
    shifts: tuple = (0.5,)
    state_scalings: tuple = (0.5,)
    clamp_levels: tuple = CLAMP_LEVELS
    horizon: float = 1.0
    steps: int = 40

    @property
    def size(self):
        return len(self.payoffs)

    @classmethod
    def from_config(cls, node, horizon=1.0, steps=40, key="instances"):
        """{"seed": s, "count": n} plus optional explicit lists overriding the random draws"""
        node = node or {}
        base = random_instances(int(to_number(node.get("seed", 0), f"{key}.seed")),
                                int(to_number(node.get("count", 10), f"{key}.count")), horizon, steps)
        overrides = {}
        if "payoffs" in node:
            payoffs = tuple(TerminalCondition.from_config(p, f"{key}.payoffs[{i}]") for i, p in enumerate(node["payoffs"]))
            if not payoffs:
                raise ConfigError("payoff list is empty", key=f"{key}.payoffs")
            overrides["payoffs"] = payoffs
        for name in ("scalings", "etas", "lambdas", "shifts", "state_scalings", "clamp_levels"):
            if name in node:
                overrides[name] = tuple(to_number(v, f"{key}.{name}[{i}]") for i, v in enumerate(node[name]))
        if any(not 0 < e <= 1 for e in overrides.get("etas", ())):
            raise ConfigError("star-shapedness scalings must lie in (0, 1]", key=f"{key}.etas")
        return replace(base, **overrides) if overrides else base


def random_instances(seed, count=10, horizon=1.0, steps=40):
    """
    Lognormal-type payoffs c1 e^{a1 W} + c2 e^{a2 W}, ordered pairs
    X <= X + v e^{b W} and seeded scalars for every axiom.
    """
    rng = np.random.default_rng(int(seed))
    payoffs, pairs = [], []
    for i in range(int(count)):
        c1, a1 = rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)
        c2, a2 = rng.uniform(0.0, 1.0), rng.uniform(-1.0, 1.0)
        v, b = rng.uniform(0.0, 1.0), rng.uniform(-1.0, 1.0)
        X = _exp_payoff(f"X{i}", [(c1, a1), (c2, a2)])
        payoffs.append(X)
        pairs.append((X, _exp_payoff(f"X{i}'", [(c1, a1), (c2, a2), (v, b)])))
    return InstanceSet(
        payoffs=tuple(payoffs),
        pairs=tuple(pairs),
        scalings=tuple(rng.uniform(0.25, 4.0, count)),
        etas=tuple(rng.uniform(0.05, 1.0, count)) + (1.0,),
        lambdas=tuple(lambda_values(seed, extra=0)),
        shifts=tuple(rng.uniform(0.0, 1.0, count)),
        state_scalings=tuple(rng.uniform(-1.0, 1.0, 3)),
        horizon=float(horizon),
        steps=int(steps),
    )


class _Harness:
    def __init__(self, ftilde, cfg, lattice):
        axioms = section("axioms")
        # two-driver specs are reduced and verified once, then solved in geometric form
        self.ftilde = lnq_to_gbsde(twodriver_reduce(ftilde)) if ftilde.family is Family.TWO_DRIVER else ftilde
        self.cfg = cfg
        self.lattice = lattice
        self.factor = float(axioms.get("slack_factor", 10.0))
        self.ses = float(axioms.get("mc_standard_errors", 3.0))

    def solve(self, payoffs):
        """Independent return evaluations, in input order"""
        def run(X):
            return evaluate_return(self.lattice, X, self.ftilde, self.cfg).field
        if self.cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                return list(pool.map(run, payoffs))
        return [run(X) for X in payoffs]

    def monetary(self, payoffs):
        f = gbsde_to_ordinary(self.ftilde)
        return [evaluate_monetary(self.lattice, X, f, self.cfg).field for X in payoffs]

    def compare(self, label, lhs, rhs, equality, se=0.0):
        lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
        gap = np.abs(lhs - rhs) if equality else lhs - rhs
        slack = self.factor * self.cfg.tolerance * np.maximum(1.0, np.abs(rhs)) + self.ses * se
        return {
            "instance": label,
            "max_gap": float(gap.max()),
            "excess": float((gap - slack).max()),
            "slack": float(slack.max()),
        }


def _nodes(field):
    return np.concatenate(field.y)


def _se(*fields):
    return max(f.metadata.get("standard_error", 0.0) for f in fields)


def _monotone(h, inst):
    rows = []
    fields = h.solve([X for pair in inst.pairs for X in pair])
    for k, (X, Xp) in enumerate(inst.pairs):
        low, high = fields[2 * k], fields[2 * k + 1]
        rows.append(h.compare(f"{X.label}<={Xp.label}", _nodes(low), _nodes(high), False, _se(low, high)))
    return rows


def _pos_hom(h, inst):
    rows = []
    base = h.solve(inst.payoffs)
    for X, fx in zip(inst.payoffs, base):
        scaled = h.solve([X.scaled(xi) for xi in inst.scalings])
        for xi, fs in zip(inst.scalings, scaled):
            rows.append(h.compare(f"{X.label}*{xi:.4g}", _nodes(fs), xi * _nodes(fx), True, _se(fs, fx)))
        rows.extend(_state_scalings(h, inst, X, fx))
    return rows


def _state_scalings(h, inst, X, fx):
    """xi_t = clip(exp(c W_t), 1/2, 2) at the middle level, via one solve per node of that level"""
    rows = []
    level = max(h.lattice.steps // 2, 1)
    w = h.lattice.states(level)
    for c in inst.state_scalings:
        xi = np.clip(np.exp(c * w), 0.5, 2.0)
        fields = h.solve([X.scaled(v) for v in xi])
        lhs, rhs = [], []
        for j, (v, fs) in enumerate(zip(xi, fields)):
            for i in range(level, h.lattice.steps + 1):
                span = slice(j, j + i - level + 1)
                lhs.append(fs.y[i][span])
                rhs.append(v * fx.y[i][span])
        rows.append(h.compare(f"{X.label}*xi_t(c={c:.3g})", np.concatenate(lhs), np.concatenate(rhs), True))
    return rows


def _star_shaped(h, inst):
    rows = []
    base = h.solve(inst.payoffs)
    for X, fx in zip(inst.payoffs, base):
        scaled = h.solve([X.scaled(eta) for eta in inst.etas])
        for eta, fs in zip(inst.etas, scaled):
            rows.append(h.compare(f"{X.label}*{eta:.4g}", _nodes(fs), eta * _nodes(fx), False, _se(fs, fx)))
    return rows


def _mult_convex(h, inst):
    rows = []
    payoffs = inst.payoffs
    base = h.solve(payoffs)
    for k in range(len(payoffs)):
        X, Y = payoffs[k], payoffs[(k + 1) % len(payoffs)]
        fx, fy = base[k], base[(k + 1) % len(payoffs)]
        mixed = h.solve([X.geometric_mix(Y, lam) for lam in inst.lambdas])
        for lam, fm in zip(inst.lambdas, mixed):
            rhs = _nodes(fx) ** lam * _nodes(fy) ** (1 - lam)
            rows.append(h.compare(f"{X.label}^{lam:.3g}{Y.label}^{1 - lam:.3g}", _nodes(fm), rhs, False, _se(fm, fx, fy)))
    return rows


def _normalized(h, inst):
    (field,) = h.solve([TerminalCondition.constant(1.0)])
    return [h.compare("1", _nodes(field), np.ones_like(_nodes(field)), True, _se(field))]


def _time_consistent(h, inst):
    """rho~_s(X) = rho~_s(rho~_t(X)) by re-solving on [0, t] from the level-t values"""
    rows = []
    N = h.lattice.steps
    levels = sorted({max(N // 4, 1), max(N // 2, 1), max(3 * N // 4, 1)})
    f = gbsde_to_ordinary(h.ftilde)
    for X, fx in zip(inst.payoffs, h.solve(inst.payoffs)):
        for level in levels:
            sub = backward_induction(h.lattice.truncate(level), np.log(fx.y[level]), f, h.cfg)
            lhs = np.concatenate([np.exp(v) for v in sub.y])
            rhs = np.concatenate(fx.y[: level + 1])
            rows.append(h.compare(f"{X.label}@{level}", lhs, rhs, True))
    return rows


def _cash(h, inst, equality):
    rows = []
    logs = [X.log() for X in inst.payoffs]
    base = h.monetary(logs)
    for Y, fy in zip(logs, base):
        shifted = h.monetary([Y.shifted(c) for c in inst.shifts])
        for c, fs in zip(inst.shifts, shifted):
            if equality:
                rows.append(h.compare(f"{Y.label}+{c:.4g}", _nodes(fs), _nodes(fy) + c, True))
            else:
                rows.append(h.compare(f"{Y.label}+{c:.4g}", _nodes(fy) + c, _nodes(fs), False))
    return rows


def _mult_pos_hom(h, inst):
    rows = []
    for X, fx in zip(inst.payoffs, h.solve(inst.payoffs)):
        powered = h.solve([X.power(eta) for eta in inst.etas])
        for eta, fp in zip(inst.etas, powered):
            rows.append(h.compare(f"{X.label}^{eta:.4g}", _nodes(fp), _nodes(fx) ** eta, True))
    return rows


_CHECKS = {
    "monotone": _monotone,
    "pos_hom": _pos_hom,
    "star_shaped": _star_shaped,
    "mult_convex": _mult_convex,
    "normalized": _normalized,
    "time_consistent": _time_consistent,
    "cash_additive": lambda h, inst: _cash(h, inst, True),
    "cash_superadditive": lambda h, inst: _cash(h, inst, False),
    "mult_pos_hom": _mult_pos_hom,
}


def audit_axiom(ftilde, axiom, instances, cfg, support=None):
    """Evaluate one axiom over the instance set; never raises on a violation"""
    if axiom not in AXIOMS:
        raise ConfigError(f"unknown axiom '{axiom}' (expected one of {', '.join(AXIOMS)})", key="axioms")
    lattice = support or build_lattice(TimeGrid.uniform(instances.horizon, instances.steps))
    if axiom == "lebesgue":
        reports = [lebesgue_check(ftilde, X, instances.clamp_levels, cfg, lattice) for X in instances.payoffs]
        rows = [dict(r.details[-1], instance=X.label, excess=r.max_violation) for X, r in zip(instances.payoffs, reports)]
        verdict = "pass" if all(r.passed for r in reports) else "fail"
        return AxiomReport(axiom, verdict, max(r.max_violation for r in reports), reports[0].slack,
                           len(rows), ftilde.name, rows)

    harness = _Harness(ftilde, cfg, lattice)
    rows = _CHECKS[axiom](harness, instances)
    worst = max(rows, key=lambda r: r["excess"])
    report = AxiomReport(
        axiom=axiom,
        verdict="pass" if worst["excess"] <= 0 else "fail",
        max_violation=max(r["max_gap"] for r in rows),
        slack=max(r["slack"] for r in rows),
        instances=len(rows),
        driver=ftilde.name,
        details=rows,
    )
    logger.info("axiom %s for %s over %d instances: %s (max gap %.3e)", axiom, ftilde.name, len(rows),
                report.verdict, report.max_violation)
    return report


def lebesgue_check(ftilde, X, clamp_levels=CLAMP_LEVELS, cfg=None, support=None, target=None):
    """
    Solves with X^n = n ^ X v 1/n for each level and reports the errors
    |rho~_0(X^n) - rho~_0(X)|. Passes when the errors do not increase
    (within slack) and, if given, the last error is below target.
    """
    cfg = cfg or SolverConfig.from_settings()
    lattice = support or build_lattice(TimeGrid.uniform(1.0, 100))
    harness = _Harness(ftilde, cfg, lattice)
    levels = [float(n) for n in clamp_levels]
    fields = harness.solve([X] + [X.clamped(1.0 / n, n) for n in levels])
    reference = fields[0].y0
    rows = []
    for n, fn in zip(levels, fields[1:]):
        rows.append({"level": n, "y0": fn.y0, "abs_error": abs(fn.y0 - reference)})
    errors = np.array([r["abs_error"] for r in rows])
    slack = harness.factor * cfg.tolerance * max(1.0, abs(reference))
    increases = np.diff(errors)
    max_increase = float(increases.max()) if increases.size else float("-inf")
    monotone = max_increase <= slack
    reached = target is None or errors[-1] < target
    verdict = "pass" if monotone and reached else "fail"
    logger.info("lebesgue check %s on %s: errors %s -> %s", ftilde.name, X.label,
                np.array2string(errors, precision=3), verdict)
    return AxiomReport("lebesgue", verdict, max_increase, slack, len(rows), ftilde.name, rows)
