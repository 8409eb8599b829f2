"""Configuration-driven experiment runner.

Usage::

    polymkv run CONFIG [--threads K]
    polymkv paths CONFIG --count N [--out FILE]
    polymkv quantizer --size L --out FILE

Configs are flat ``key = value`` files with one ``[experiment]`` section and
an explicit ``schema = 1``. Problem parameters are overridden with
``param.<name>`` keys and grid settings with ``grid.<name>`` keys. Exit
codes: 0 success, 2 configuration error, 3 solver error.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "run",
    "emit_paths",
    "main",
]

SCHEMA = 1
PROBLEMS = ("liquidation", "selection", "systemic", "toy-lq")
METHODS = ("opt", "bench", "rlmc", "cr", "q-pc", "q-semilinear")
ITERATIONS = ("value", "performance")
SEARCHES = ("default", "golden", "parabolic", "closed-form", "exhaustive")
CSV_COLUMNS = ("sweep_value", "method", "estimate", "std_error", "runtime_s")
OUTPUT_DIR_ENV = "POLYMKV_OUTPUT_DIR"

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the key."""


# --------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a problem, a method, and an optional sweep over one
    problem parameter."""

    problem: str
    method: str
    iteration: str = "value"
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    sweep_param: str = ""
    sweep_values: tuple = ()
    eval_paths: int = 100_000
    quantizer_size: int = 50
    train_samples: int = 2000
    basis: str = "default"
    search: str = "default"
    search_tol: float = 1e-6
    rounds: int = 1
    cr_runs: int = 1
    perf_paths: int = 200
    seed: int = 0
    timing: bool = False
    output: str = "results.csv"

    def __post_init__(self):
        _check_choice("problem", self.problem, PROBLEMS)
        _check_choice("method", self.method, METHODS)
        _check_choice("iteration", self.iteration, ITERATIONS)
        _check_choice("search", self.search, SEARCHES)
        for key in ("eval_paths", "quantizer_size", "train_samples", "rounds", "cr_runs", "perf_paths"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1")
        if not 1 <= self.quantizer_size <= 512:
            raise ConfigError("quantizer_size must lie in 1..512")
        if self.eval_paths < 2:
            raise ConfigError("eval_paths must be >= 2")
        if not self.search_tol > 0:
            raise ConfigError("search_tol must be positive")
        if bool(self.sweep_param) != bool(self.sweep_values):
            raise ConfigError("sweep_param and sweep_values must be given together")
        for v in self.sweep_values:
            if not _finite(v):
                raise ConfigError(f"sweep_values contains a non-finite value {v!r}")
        fields = _param_fields(self.problem)
        for key in list(self.params) + ([self.sweep_param] if self.sweep_param else []):
            if key not in fields:
                raise ConfigError(f"param.{key}: unknown parameter for problem {self.problem!r}")
        for key in self.grid:
            if key not in GRID_KEYS[self.problem]:
                raise ConfigError(f"grid.{key}: unknown grid setting for problem {self.problem!r}")
        _check_basis(self.basis)

    def to_text(self) -> str:
        """Canonical config file text; ``load_config`` inverts it exactly."""
        lines = ["[experiment]", f"schema = {SCHEMA}"]
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in ("params", "grid"):
                for k in sorted(v):
                    lines.append(f"{'param' if f.name == 'params' else 'grid'}.{k} = {_fmt(v[k])}")
            elif f.name == "sweep_values":
                if v:
                    lines.append(f"sweep_values = {', '.join(_fmt(x) for x in v)}")
            elif f.name == "sweep_param":
                if v:
                    lines.append(f"sweep_param = {v}")
            else:
                lines.append(f"{f.name} = {_fmt(v)}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Hash of everything that determines the numbers (not the output
        location)."""
        text = dataclasses.replace(self, output="").to_text()
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def points(self) -> list:
        """Sweep values, or a single ``None`` for an unswept run."""
        return list(self.sweep_values) if self.sweep_values else [None]


def _finite(v) -> bool:
    try:
        return abs(float(v)) < float("inf")
    except (TypeError, ValueError):
        return False


def _check_choice(key, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{key}: unknown value {value!r}; expected one of {', '.join(allowed)}")


def _check_basis(desc):
    if desc == "default":
        return
    kind, _, deg = desc.partition(":")
    if kind != "monomial" or not deg.isdigit() or not 1 <= int(deg) <= 8:
        raise ConfigError(f"basis: unknown descriptor {desc!r}; use 'default' or 'monomial:<1..8>'")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


_INT_KEYS = {"eval_paths", "quantizer_size", "train_samples", "rounds", "cr_runs", "perf_paths", "seed"}
_FLOAT_KEYS = {"search_tol"}
_BOOL_KEYS = {"timing"}
_STR_KEYS = {"problem", "method", "iteration", "basis", "search", "output", "sweep_param"}


def _parse_number(key, text, kind):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind.__name__}") from None


def _parse_bool(key, text):
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{key}: cannot parse {text!r} as a boolean")


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    extra = [s for s in parser.sections() if s != "experiment"]
    if extra:
        raise ConfigError(f"unknown section [{extra[0]}]")
    raw = dict(parser["experiment"])
    schema = raw.pop("schema", None)
    if schema is None:
        raise ConfigError("schema: missing; this runner reads schema = 1")
    if schema.strip() != str(SCHEMA):
        raise ConfigError(f"schema: unsupported version {schema!r}; this runner reads schema = 1")
    for key in ("problem", "method"):
        if key not in raw:
            raise ConfigError(f"{key}: missing")
    problem = raw["problem"].strip()
    _check_choice("problem", problem, PROBLEMS)
    kwargs, params, grid = {}, {}, {}
    for key, value in raw.items():
        value = value.strip()
        if key.startswith("param."):
            params[key[6:]] = _parse_param(problem, key[6:], value)
        elif key.startswith("grid."):
            grid[key[5:]] = _parse_number(key, value, float)
        elif key == "sweep_values":
            kwargs[key] = tuple(_parse_number(key, v.strip(), float) for v in value.split(",") if v.strip())
        elif key in _INT_KEYS:
            kwargs[key] = _parse_number(key, value, int)
        elif key in _FLOAT_KEYS:
            kwargs[key] = _parse_number(key, value, float)
        elif key in _BOOL_KEYS:
            kwargs[key] = _parse_bool(key, value)
        elif key in _STR_KEYS:
            kwargs[key] = value
        else:
            raise ConfigError(f"{key}: unknown configuration key")
    return ExperimentConfig(params=params, grid=grid, **kwargs)


def load_config(path) -> ExperimentConfig:
    """Read a config file, or the provenance header of a result CSV."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    prefix = "# config: "
    embedded = [line[len(prefix):] for line in text.splitlines() if line.startswith(prefix)]
    return parse_config("\n".join(embedded) + "\n" if embedded else text)


# --------------------------------------------------------------------------
# Problem registry


def _registry():
    from . import problems as pb

    return {
        "liquidation": (pb.LiquidationParams, pb.liquidation_problem),
        "selection": (pb.SelectionParams, pb.selection_problem),
        "systemic": (pb.SystemicParams, pb.systemic_problem),
        "toy-lq": (pb.ToyLQParams, pb.toy_lq_problem),
    }


def _param_fields(problem) -> dict:
    cls = _registry()[problem][0]
    return {f.name: f.default for f in dataclasses.fields(cls)}


def _parse_param(problem, name, text):
    fields = _param_fields(problem)
    if name not in fields:
        raise ConfigError(f"param.{name}: unknown parameter for problem {problem!r}")
    default = fields[name]
    key = f"param.{name}"
    if isinstance(default, bool):
        return _parse_bool(key, text)
    if isinstance(default, int):
        return _parse_number(key, text, int)
    if isinstance(default, tuple):
        return tuple(_parse_number(key, v.strip(), float) for v in text.split(",") if v.strip())
    return _parse_number(key, text, float)


GRID_KEYS = {
    "liquidation": {"w_power": 0.5, "y_size": 400},
    "selection": {"w_size": 30, "x_size": 200, "x_scale": 0.8},
    "systemic": {"x_size": 20, "y_size": 60, "y_max": 1.0},
    "toy-lq": {"radius": 2.0},
}


def _params(cfg: ExperimentConfig, sweep_value):
    cls = _registry()[cfg.problem][0]
    kw = dict(cfg.params)
    if sweep_value is not None:
        default = _param_fields(cfg.problem)[cfg.sweep_param]
        kw[cfg.sweep_param] = int(sweep_value) if isinstance(default, int) and not isinstance(default, bool) else sweep_value
    try:
        return cls(**kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"param: {exc}") from None


def _start(params):
    import numpy as np

    return np.atleast_1d(np.asarray(params.z0, dtype=float))


def _grid_setting(cfg, key):
    return cfg.grid.get(key, GRID_KEYS[cfg.problem][key])


# --------------------------------------------------------------------------
# Methods


@dataclass
class _Solved:
    policy: object
    meta: dict


def _search_spec(cfg, problem):
    from .ctrlsearch import Method, SearchSpec, default_search

    if cfg.search == "default":
        spec = default_search(problem.control_space)
        return dataclasses.replace(spec, tol=cfg.search_tol) if spec.method is not Method.EXHAUSTIVE else spec
    method = {"golden": Method.GOLDEN, "parabolic": Method.PARABOLIC,
              "closed-form": Method.CLOSED_FORM, "exhaustive": Method.EXHAUSTIVE}[cfg.search]
    return SearchSpec(method, tol=cfg.search_tol)


def _regression_problem(cfg, params):
    """Bayesian problems regress in the filtered form (unweighted values)."""
    build = _registry()[cfg.problem][1]
    if cfg.problem in ("liquidation", "selection"):
        return build(params, "filtered")
    return build(params)


def _q_setup(cfg, params):
    """Problem, per-step grids, interpolated coordinates and policy
    interpolation for the quantization solver."""
    import numpy as np

    from .quant import BrownianScaled, Centered, Fixed, LayerGrid, build_layer_grids, lloyd_gaussian

    build = _registry()[cfg.problem][1]
    problem = build(params)
    base = lloyd_gaussian(cfg.quantizer_size)
    tg, z0 = params.grid, _start(params)
    if cfg.problem == "liquidation":
        w = build_layer_grids(tg, base, [BrownianScaled(power=_grid_setting(cfg, "w_power")), Fixed([0.0])], z0)
        qy = lloyd_gaussian(int(_grid_setting(cfg, "y_size")))
        y = build_layer_grids(tg, qy, [Fixed([0.0]), BrownianScaled(center=params.y0, drift=-params.y0 / params.horizon,
                                                                    power=1.0)], z0)
        grids = [w[0]] + [LayerGrid((a.coords[0], b.coords[1])) for a, b in zip(w[1:], y[1:])]
        return problem, grids, base, (1,), (1,)
    if cfg.problem == "selection":
        qw = lloyd_gaussian(int(_grid_setting(cfg, "w_size")))
        qx = lloyd_gaussian(int(_grid_setting(cfg, "x_size")))
        s2 = params.sigma**2
        radii = [np.sqrt(t + params.gamma0**2 * t * t / s2) for t in tg.nodes]
        w = build_layer_grids(tg, qw, [Centered([0.0] * len(radii), radii), Fixed([0.0])], z0)
        x = build_layer_grids(tg, qx, [Fixed([0.0]), BrownianScaled(center=params.x0,
                                                                    scale=_grid_setting(cfg, "x_scale"))], z0)
        grids = [w[0]] + [LayerGrid((a.coords[0], b.coords[1])) for a, b in zip(w[1:], x[1:])]
        return problem, grids, base, (0, 1), None
    if cfg.problem == "systemic":
        qx = lloyd_gaussian(int(_grid_setting(cfg, "x_size")))
        scale = max(params.sigma * abs(params.rho) * abs(params.x0), 1e-3)
        x = build_layer_grids(tg, qx, [BrownianScaled(center=params.x0, scale=scale), Fixed([0.0])], z0)
        ys = np.linspace(1e-3, _grid_setting(cfg, "y_max"), int(_grid_setting(cfg, "y_size")))
        grids = [x[0]] + [LayerGrid((a.coords[0], ys)) for a in x[1:]]
        return problem, grids, base, (1,), None
    radius = _grid_setting(cfg, "radius")
    grids = build_layer_grids(tg, base, [Centered([params.z0] * (tg.steps + 1),
                                                  [0.0] + [radius] * tg.steps)], z0)
    return problem, grids, base, (0,), (0,)


def _design(cfg, params):
    import numpy as np

    from .regmc import HalfNormal, Normal, ProductDesign, Uniform

    if cfg.problem == "liquidation":
        s2, g2 = params.sigma**2, params.gamma0**2
        return ProductDesign((
            Normal(lambda t: params.b0 / params.sigma * t, lambda t: 1.5 * np.sqrt(t + g2 * t * t / s2) + 1e-3),
            Uniform(lambda t: params.y0 - t / params.horizon - 0.5, lambda t: params.y0 - t / params.horizon + 0.5),
        ))
    if cfg.problem == "selection":
        s2, g2 = params.sigma**2, params.gamma0**2
        return ProductDesign((
            Normal(lambda t: params.b0 / params.sigma * t, lambda t: 1.5 * np.sqrt(t + g2 * t * t / s2) + 1e-3),
            Normal(lambda t: params.x0, lambda t: 2.0 * np.sqrt(t) + 1e-3),
        ))
    if cfg.problem == "systemic":
        sx = params.sigma * abs(params.rho) * abs(params.x0)
        return ProductDesign((
            Normal(lambda t: params.x0, lambda t: 2.0 * sx * np.sqrt(t) + 1e-3),
            HalfNormal(lambda t: 0.2),
        ))
    return ProductDesign((Normal(lambda t: params.z0, lambda t: 1.5),))


def _basis(cfg, params, control):
    from .problems import liquidation_basis
    from .regmc import control_monomial_basis, monomial_basis

    dim = _start(params).size
    if cfg.basis == "default" and cfg.problem == "liquidation":
        return liquidation_basis(params, control=control)
    degree = 2 if cfg.basis == "default" else int(cfg.basis.split(":")[1])
    return control_monomial_basis(dim, degree) if control else monomial_basis(dim, degree)


def _control_sampler(problem):
    space = problem.control_space
    if hasattr(space, "values"):
        import numpy as np

        vals = np.asarray(space.values)
        return lambda n, t, gen, M: vals[gen.integers(0, vals.size, M)]
    lo, hi = float(space.lo), float(space.hi)
    return lambda n, t, gen, M: gen.uniform(lo, hi, M)


def _performance(cfg, problem, states, rng):
    from .core import performance_iteration_backward

    N = problem.steps
    eps = rng.generator(99).standard_normal((cfg.perf_paths, N))
    res = performance_iteration_backward(problem, states, eps, search=_search_spec(cfg, problem))
    return res.policy


def _solve(cfg, params, rng) -> _Solved:
    """Build the feedback policy for one sweep point."""
    from . import problems as pb
    from .core import ConstantPolicy
    from .quant import q_backward
    from .regmc import cr_backward, iterate_explore_exploit, rl_backward

    m, name = cfg.method, cfg.problem
    if m == "opt":
        if name == "liquidation":
            return _Solved(pb.liquidation_opt_policy(params), {})
        if name == "selection":
            return _Solved(pb.selection_opt_policy(params), {"closed_form": pb.selection_closed_form_value(params)})
        if name == "toy-lq":
            P, _ = pb.toy_lq_riccati(params)
            return _Solved(_RiccatiPolicy(P, params), {"riccati_value": pb.toy_lq_value(params)})
        raise ConfigError(f"method: 'opt' has no closed form for problem {name!r}")
    if m == "bench":
        if name == "liquidation":
            return _Solved(pb.liquidation_bench_policy(params),
                           {"semi_analytic": pb.liquidation_bench_value(params)})
        if name == "toy-lq":
            return _Solved(ConstantPolicy(0.0), {})
        raise ConfigError(f"method: 'bench' is not defined for problem {name!r}")
    z0 = _start(params)
    if m in ("q-pc", "q-semilinear"):
        problem, grids, base, interp, pinterp = _q_setup(cfg, params)
        if cfg.iteration == "performance":
            return _Solved(_performance(cfg, problem, [g.points for g in grids], rng), {})
        mode = "pc" if m == "q-pc" else "semilinear"
        res = q_backward(problem, grids, base, _search_spec(cfg, problem), mode=mode, interp=interp,
                         policy_interp=pinterp if mode == "semilinear" else None)
        return _Solved(res.policy, {
            "v0": float(res.values[0][0]),
            "boundary_rate": float(res.diagnostics["boundary_rate"].mean()),
            "distortion": float(base.distortion),
        })
    problem = _regression_problem(cfg, params)
    search = _search_spec(cfg, problem)
    if cfg.iteration == "performance":
        design = _design(cfg, params)
        states = [z0[None, :]] + [design.sample(n, problem.t(n), rng.generator(n), cfg.train_samples)
                                  for n in range(1, problem.steps + 1)]
        return _Solved(_performance(cfg, problem, states, rng), {})
    if m == "rlmc":
        basis = _basis(cfg, params, control=False)
        if cfg.rounds > 1:
            res = iterate_explore_exploit("rl", problem, basis, _design(cfg, params), cfg.train_samples, rng, z0,
                                          cfg.rounds, search)
        else:
            res = rl_backward(problem, basis, _design(cfg, params), cfg.train_samples, rng, z0, search)
        return _Solved(res.policy, {"v0": float(res.values[0][0]), "basis_size": basis.size})
    basis = _basis(cfg, params, control=True)
    sampler = _control_sampler(problem)
    best, best_val, sign = None, None, problem.sense.sign
    from .core import evaluate_policy

    for k in range(cfg.cr_runs):
        sub = rng.child(k)
        if cfg.rounds > 1:
            res = iterate_explore_exploit("cr", problem, basis, sampler, cfg.train_samples, sub, z0,
                                          cfg.rounds, search)
        else:
            res = cr_backward(problem, basis, sampler, cfg.train_samples, sub, z0, search)
        if cfg.cr_runs == 1:
            best = res
            break
        # selection among runs uses its own pilot noise, never the reported one
        pilot = evaluate_policy(problem, res.policy, z0, min(cfg.eval_paths, 20_000), sub.child(10_000))
        if best is None or sign * pilot.mean > sign * best_val:
            best, best_val = res, pilot.mean
    return _Solved(best.policy, {"basis_size": basis.size, "cr_runs": cfg.cr_runs})


class _RiccatiPolicy:
    def __init__(self, P, params):
        self.P, self.dt = P, params.grid.dt
        self.space = params.control_space

    def act(self, n, z):
        import numpy as np

        p = self.P[n + 1]
        a = -2.0 * p * np.atleast_2d(z)[:, 0] / (1.0 + 2.0 * p * self.dt)
        return self.space.clip(a)


# --------------------------------------------------------------------------
# Runs


@dataclass
class RunReport:
    """Per sweep value results plus provenance."""

    config_hash: str
    seed: int
    version: str
    rows: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def _version() -> str:
    from . import __version__

    return __version__


def _provenance(cfg) -> list:
    lines = [f"config_hash={cfg.digest()}", f"seed={cfg.seed}", f"code_version={_version()}"]
    lines += ["config: " + line for line in cfg.to_text().splitlines()]
    return lines


def _output_path(cfg, override=None) -> Path:
    path = Path(override or cfg.output)
    root = os.environ.get(OUTPUT_DIR_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def _eval_problem(cfg, params):
    return _registry()[cfg.problem][1](params)


def _fmt_value(x) -> str:
    return repr(float(x))


def run(cfg: ExperimentConfig, out=None) -> RunReport:
    """Solve and forward-evaluate every sweep point; writes the CSV and a
    JSON run report next to it. Returns the report."""
    from .core import RngStream, evaluate_policy

    report = RunReport(cfg.digest(), cfg.seed, _version())
    buf = io.StringIO()
    for line in _provenance(cfg):
        buf.write(f"# {line}\n")
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for i, v in enumerate(cfg.points()):
        params = _params(cfg, v)
        base = RngStream(cfg.seed, i)
        t0 = time.perf_counter()
        solved = _solve(cfg, params, base.child(0))
        est = evaluate_policy(_eval_problem(cfg, params), solved.policy, _start(params), cfg.eval_paths, base.child(1))
        wall = time.perf_counter() - t0
        sweep = "" if v is None else _fmt_value(v)
        runtime = f"{wall:.3f}" if cfg.timing else "NA"
        buf.write(f"{sweep},{cfg.method},{_fmt_value(est.mean)},{_fmt_value(est.std_error)},{runtime}\n")
        report.rows.append({
            "sweep_value": v, "estimate": est.mean, "std_error": est.std_error,
            "n_paths": est.n_paths, "n_invalid": est.n_invalid, "wall_time_s": wall, **solved.meta,
        })
    path = _output_path(cfg, out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    path.with_suffix(path.suffix + ".json").write_text(report.to_json())
    return report


def emit_paths(cfg: ExperimentConfig, count: int, out=None) -> Path:
    """Long-format CSV of sample trajectories (physical measure where the
    problem has one) under the configured method's policy."""
    from .core import RngStream, simulate_paths

    if count < 0:
        raise ConfigError("count must be >= 0")
    coords = {"liquidation": ("w", "y"), "selection": ("w", "x"), "systemic": ("xbar", "y"), "toy-lq": ("z",)}
    names = coords[cfg.problem]
    buf = io.StringIO()
    for line in _provenance(cfg):
        buf.write(f"# {line}\n")
    buf.write(",".join(("sweep_value", "path", "step", "t") + names + ("control",)) + "\n")
    for i, v in enumerate(cfg.points()):
        if count == 0:
            break
        params = _params(cfg, v)
        base = RngStream(cfg.seed, i)
        solved = _solve(cfg, params, base.child(0))
        problem = _eval_problem(cfg, params)
        paths = simulate_paths(problem, solved.policy, _start(params), count, base.child(2), keep_paths=True)
        sweep = "" if v is None else _fmt_value(v)
        N = problem.steps
        for m in range(count):
            for n in range(N + 1):
                state = ",".join(_fmt_value(x) for x in paths.states[m, n])
                ctrl = _fmt_value(paths.controls[m, n]) if n < N else ""
                buf.write(f"{sweep},{m},{n},{_fmt_value(problem.t(n))},{state},{ctrl}\n")
    path = _output_path(cfg, out or Path(cfg.output).with_suffix(".paths.csv"))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path


# --------------------------------------------------------------------------
# Entry point


def _set_threads(k):
    if k is None:
        return
    if k < 1:
        raise ConfigError("--threads must be >= 1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(k)


def _parser():
    p = argparse.ArgumentParser(prog="polymkv", description="Polynomial MKV control experiments")
    p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="override the CSV output path")
    ps = sub.add_parser("paths", help="emit sample trajectories")
    ps.add_argument("config")
    ps.add_argument("--count", type=int, required=True)
    ps.add_argument("--out", default=None)
    q = sub.add_parser("quantizer", help="export an optimal Gaussian quantizer")
    q.add_argument("--size", type=int, required=True)
    q.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        _set_threads(args.threads)
        from .core import SimulationError, SolverError

        if args.command == "quantizer":
            from .quant import lloyd_gaussian

            if not 1 <= args.size <= 512:
                raise ConfigError("--size must lie in 1..512")
            lloyd_gaussian(args.size).to_csv(args.out)
            print(f"wrote {args.out}")
            return EXIT_OK
        cfg = load_config(args.config)
        if args.command == "run":
            report = run(cfg, args.out)
            for row in report.rows:
                sv = "" if row["sweep_value"] is None else f"{cfg.sweep_param}={row['sweep_value']} "
                print(f"{sv}{cfg.method}: {row['estimate']:.6f} +/- {row['std_error']:.6f}")
            print(f"wrote {_output_path(cfg, args.out)}")
        else:
            print(f"wrote {emit_paths(cfg, args.count, args.out)}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, SimulationError, RuntimeError, FloatingPointError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
