"""
Experiment configs: JSON (or YAML) files naming one experiment kind, a driver,
a payoff, a discretization and a solver config. Validation errors point at
the offending line of the source file.
"""
import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from core.errors import CatalogError, ConfigError
from core.expressions import to_int, to_number
from core.grid import TimeGrid, build_lattice, sample_ensemble
from core.sampling import CertificationWindow
from core.terminal import TerminalCondition
from core.transforms import gbsde_to_twodriver
from drivers.catalog import catalog_get, custom
from solver.config import METHODS, SolverConfig

logger = logging.getLogger(__name__)

KINDS = ("solve", "audit-driver", "audit-axioms", "convergence", "oracle-compare", "lebesgue")
ROUTES = ("gbsde", "lnq", "two_driver", "monetary", "lsmc", "robust_oracle", "closed_form")
REFERENCES = ("closed_form", "value", "gaussian_moment", "robust_oracle")

SCHEMA = {
    "name": "string, used for the output directory (default: config file stem)",
    "kind": f"one of {', '.join(KINDS)}",
    "driver": (
        'catalog name with inline parameters ("gamma_norm(2)"), '
        '{"catalog": name, "params": {...}}, {"custom": {"family", "terms", "coefficients", "assumptions"}} '
        'or {"two_driver": <driver>} for the two-driver form of a geometric driver'
    ),
    "terminal": (
        'payoff expression {"kind": const|exp_wT|power_wT|affine|clamp|sum, ...} or '
        '{"expression": ..., "positivity": strict|bounded_below|unrestricted|{"lower_bound": x}, "label": ...}'
    ),
    "grid": '{"horizon": T, "steps": N or [N1, N2, ...] (convergence)}',
    "solver": '{"method": lattice|lsmc, "tolerance", "max_iterations", "basis_degree", "positivity_floor", '
              '"damping", "initial_shift", "workers", "paths", "dimension"}',
    "seed": "integer or decimal string; seeds ensembles, certification samples and instance draws",
    "strict": "bool; audit failures turn into a nonzero exit status",
    "output": "directory under the output root (default: name)",
    "window": '{"y_range": [lo, hi], "z_bound": b, "samples": n} (audit-driver)',
    "assumptions": '"documented" or a list of assumption ids (audit-driver)',
    "moments": '{"p": p, "paths": M} moment report of the terminal payoff; paths adds an ensemble cross-check (audit-driver)',
    "axioms": "list of axiom names (audit-axioms)",
    "instances": '{"seed", "count", "payoffs", "scalings", "etas", "lambdas", "shifts", "state_scalings"} (audit-axioms)',
    "reference": f'{{"kind": {"|".join(REFERENCES)}, "tolerance": rel, ...}} (convergence, oracle-compare)',
    "routes": f"list among {', '.join(ROUTES)} (oracle-compare)",
    "levels": "clamp levels (lebesgue)",
    "target": "largest accepted final clamp error (lebesgue)",
    "compare": '{"driver": <driver>, "terminal": <payoff>} upper side of a comparison certificate (solve)',
    "bound": '{"rate": beta} Bihari bound certificate on the solved field (solve)',
    "diagnostics": '{"p": p} Z integrability advisories (solve)',
}

_TOKEN = re.compile(r"([^.\[\]]+)|\[(\d+)\]")


def config_digest(raw):
    return hashlib.sha256(raw).hexdigest()


def _line_index(text):
    """Root node of the YAML composition of the text, or None if it does not compose"""
    try:
        return yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return None


def _locate(root, key):
    """1-based line of the deepest node along a dotted key path"""
    if root is None or not key:
        return None
    node, line = root, root.start_mark.line + 1
    for name, index in _TOKEN.findall(key):
        if isinstance(node, yaml.MappingNode) and name:
            match = next(((k, v) for k, v in node.value if k.value == name), None)
            if match is None:
                break
            line = match[0].start_mark.line + 1
            node = match[1]
        elif isinstance(node, yaml.SequenceNode) and index and int(index) < len(node.value):
            node = node.value[int(index)]
            line = node.start_mark.line + 1
        else:
            break
    return line


def build_driver(node, horizon=1.0, key="driver"):
    """Driver reference -> DriverSpec"""
    try:
        if isinstance(node, str):
            return catalog_get(node, horizon=horizon)
        if not isinstance(node, dict):
            raise ConfigError("driver must be a catalog name or a mapping", key=key)
        if "two_driver" in node:
            return gbsde_to_twodriver(build_driver(node["two_driver"], horizon, f"{key}.two_driver"))
        if "custom" in node:
            return custom(node["custom"], horizon=horizon, key=f"{key}.custom")
        if "catalog" in node:
            params = node.get("params", {})
            if not isinstance(params, dict):
                raise ConfigError("params must be a mapping", key=f"{key}.params")
            values = {k: to_number(v, f"{key}.params.{k}") for k, v in params.items()}
            return catalog_get(node["catalog"], horizon=horizon, **values)
    except CatalogError as e:
        raise ConfigError(str(e), key=key)
    raise ConfigError("driver mapping needs one of 'catalog', 'custom' or 'two_driver'", key=key)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    name: str
    kind: str
    driver_node: object
    terminal_node: object
    horizon: float
    steps: tuple
    solver: SolverConfig
    paths: int
    dimension: int
    seed: int
    strict: bool
    output: str
    options: dict = field(default_factory=dict)
    source: str = "<memory>"
    digest: str = ""

    @property
    def method(self):
        return self.solver.method

    def driver(self, node=None, key="driver"):
        return build_driver(self.driver_node if node is None else node, self.horizon, key)

    def terminal(self, node=None, key="terminal"):
        node = self.terminal_node if node is None else node
        if node is None:
            raise ConfigError(f"experiment kind '{self.kind}' needs a terminal condition", key=key)
        return TerminalCondition.from_config(node, key)

    def grid(self, steps=None):
        return TimeGrid.uniform(self.horizon, self.steps[-1] if steps is None else steps)

    def support(self, steps=None, method=None):
        grid = self.grid(steps)
        if (method or self.method) == "lsmc":
            return sample_ensemble(grid, self.dimension, self.paths, self.seed)
        return build_lattice(grid)

    def window(self):
        node = self.options.get("window", {})
        overrides = {}
        if "y_range" in node:
            overrides["y_range"] = tuple(to_number(v, "window.y_range") for v in node["y_range"])
        if "z_bound" in node:
            overrides["z_bound"] = to_number(node["z_bound"], "window.z_bound")
        return CertificationWindow.from_settings(self.horizon, self.dimension, **overrides)

    def samples(self):
        node = self.options.get("window", {})
        return to_int(node["samples"], "window.samples") if "samples" in node else None

    def describe(self):
        return {
            "name": self.name,
            "kind": self.kind,
            "driver": self.driver_node,
            "terminal": self.terminal_node,
            "horizon": self.horizon,
            "steps": list(self.steps),
            "paths": self.paths,
            "dimension": self.dimension,
            "seed": self.seed,
            "strict": self.strict,
            "solver": self.solver.describe(),
            "options": self.options,
            "source": self.source,
            "config_sha256": self.digest,
        }


def _solver(node, seed):
    if not isinstance(node, dict):
        raise ConfigError("solver must be a mapping", key="solver")
    overrides = {"seed": seed}
    for name in ("tolerance", "positivity_floor", "damping", "initial_shift"):
        if name in node:
            overrides[name] = to_number(node[name], f"solver.{name}")
    for name in ("max_iterations", "basis_degree", "workers"):
        if name in node:
            overrides[name] = to_int(node[name], f"solver.{name}")
    method = node.get("method", "lattice")
    if method not in METHODS:
        raise ConfigError(f"unknown method '{method}' (expected one of {', '.join(METHODS)})", key="solver.method")
    overrides["method"] = method
    return SolverConfig.from_settings(**overrides)


def _validate_options(kind, options):
    if kind == "audit-axioms" and not options.get("axioms"):
        raise ConfigError("audit-axioms needs a non-empty 'axioms' list", key="axioms")
    if kind == "oracle-compare":
        routes = options.get("routes", [])
        if not routes:
            raise ConfigError("oracle-compare needs a non-empty 'routes' list", key="routes")
        for i, route in enumerate(routes):
            if route not in ROUTES:
                raise ConfigError(f"unknown route '{route}' (expected one of {', '.join(ROUTES)})", key=f"routes[{i}]")
    reference = options.get("reference")
    if reference is not None:
        if not isinstance(reference, dict) or reference.get("kind") not in REFERENCES:
            raise ConfigError(f"reference needs a 'kind' among {', '.join(REFERENCES)}", key="reference.kind")
    elif kind in ("convergence", "oracle-compare"):
        raise ConfigError(f"{kind} needs a 'reference'", key="reference")


def parse_config(data, source="<memory>", digest=""):
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at top level")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r} (expected one of {', '.join(KINDS)})", key="kind")
    if "driver" not in data:
        raise ConfigError("missing 'driver'", key="driver")

    grid = data.get("grid", {})
    horizon = to_number(grid.get("horizon", 1.0), "grid.horizon")
    if not horizon > 0:
        raise ConfigError(f"horizon must be positive, got {horizon}", key="grid.horizon")
    raw_steps = grid.get("steps", 100)
    raw_steps = raw_steps if isinstance(raw_steps, list) else [raw_steps]
    steps = tuple(to_int(v, f"grid.steps[{i}]") for i, v in enumerate(raw_steps))
    if not steps or any(n < 1 for n in steps):
        raise ConfigError("steps must be positive integers", key="grid.steps")
    if kind == "convergence" and len(steps) < 2:
        raise ConfigError("convergence needs at least two step counts", key="grid.steps")

    seed = to_int(data.get("seed", 0), "seed")
    solver_node = data.get("solver", {})
    cfg = _solver(solver_node, seed)
    paths = to_int(solver_node.get("paths", 10000), "solver.paths")
    dimension = to_int(solver_node.get("dimension", 1), "solver.dimension")
    if paths < 2 or dimension < 1:
        raise ConfigError("need paths >= 2 and dimension >= 1", key="solver")

    name = str(data.get("name") or Path(source).stem)
    known = {"name", "kind", "driver", "terminal", "grid", "solver", "seed", "strict", "output"}
    options = {k: v for k, v in data.items() if k not in known}
    unknown = set(options) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)}", key=sorted(unknown)[0])
    _validate_options(kind, options)

    config = ExperimentConfig(
        name=name,
        kind=kind,
        driver_node=data["driver"],
        terminal_node=data.get("terminal"),
        horizon=horizon,
        steps=steps,
        solver=cfg,
        paths=paths,
        dimension=dimension,
        seed=seed,
        strict=bool(data.get("strict", False)),
        output=str(data.get("output", name)),
        options=options,
        source=source,
        digest=digest,
    )
    # build once so driver and payoff errors surface at load time
    config.driver()
    if config.terminal_node is not None:
        config.terminal()
    return config


def load_config(path):
    """Read and validate an experiment file; errors carry path and line"""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", path=str(path))
    text = raw.decode("utf-8")
    try:
        if path.suffix in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, path=str(path), line=e.lineno)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark is not None else None
        raise ConfigError(str(e.problem), path=str(path), line=line)

    try:
        config = parse_config(data, source=str(path), digest=config_digest(raw))
    except ConfigError as e:
        line = _locate(_line_index(text), e.key)
        raise ConfigError(e.message, path=str(path), line=line, key=e.key) from e
    logger.info("loaded %s experiment '%s' from %s (sha256 %s)", config.kind, config.name, path, config.digest[:12])
    return config


def locate_error(error, path):
    """Anchor a ConfigError raised while running a loaded config to its line in the file"""
    if error.path is not None:
        return error
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        return ConfigError(error.message, path=str(path), key=error.key)
    return ConfigError(error.message, path=str(path), line=_locate(_line_index(text), error.key), key=error.key)
