"""Staged driver: synth -> fit -> compile -> solve -> pareto -> report.

Every stage reads the JSON artifacts of the previous ones from the output
directory and writes its own, so stages can be rerun one at a time. Wall-clock
measurements live under a top-level ``timing`` key (and run locations under
``runtime``) so that the rest of each artifact is reproducible byte for byte.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import __version__
from .geometry import airfoil_from_design, decode_design, naca4_coordinates
from .hwadapt import CapacityError, HardwareProfile, adapt, merge_copies, spin_budget
from .multiobj import (DEFAULT_LIFT_DRAG_WEIGHTS, MAXIMIZE, MINIMIZE, WeightScheme, aggregate_coefficients,
                       block_compose, block_slices, extract_pareto, minmax_rescale)
from .pbool import compile_hubo
from .quadratize import PenaltyPolicy, QuboProblem, rosenberg_reduce
from .solvers import (IsingDynamicsConfig, SaSchedule, SolveRecord, TrajectoryPoint, solve_bruteforce,
                      solve_gd, solve_isingdyn, solve_sa)
from .surrogate import DesignSpace, PolynomialSurrogate, SampleSet, fit_rsm
from .synth import OBJECTIVES, ORACLES, STANDARD_GRID, NacaQuartic, synthesize

ARTIFACT_VERSION = 1
BACKENDS = ("bruteforce", "sa", "gd", "isingdyn")

SAMPLES_FILE = "samples.csv"
FIT_FILE = "fit.json"
COMPILE_FILE = "compile.json"
QUBO_FILE = "qubo.json"
SOLVE_FILE = "solve.json"
PARETO_FILE = "pareto.json"
REPORT_FILE = "report.json"
PLOT_DIR = "plots"

ENV_OUT = "QUBOFOIL_OUT"
ENV_SEED = "QUBOFOIL_SEED"


class ConfigError(ValueError):
    pass


class ArtifactError(ValueError):
    pass


# Keys that locate or parallelize a run without changing its results.
RUNTIME_KEYS = ("out", "workers")


@dataclass
class RunConfig:
    # data
    oracle: str = "naca-quartic"
    skew: float = 0.75
    noise: float = 0.0
    grid: dict = field(default_factory=lambda: {k: list(v) for k, v in STANDARD_GRID.items()})
    fixed: dict = field(default_factory=dict)
    samples: str | None = None
    # model
    bounds: dict | None = None
    objectives: list = field(default_factory=lambda: ["LD"])
    senses: list = field(default_factory=lambda: [MAXIMIZE])
    order: int = 2
    diagnostic_orders: list = field(default_factory=lambda: [2, 4])
    bits: Any = 8
    eta: float = 1.25
    # hardware
    r_max: int = 127
    epsilon: float | None = None
    max_spins: int = 1000
    max_copies: int = 256
    solve_adapted: bool = False
    # solver
    backend: str = "sa"
    seed: int = 0
    replicas: int = 5
    t_init: float = 5000.0
    t_min: float = 0.001
    rate: float = 0.9
    sweeps: int = 50
    isingdyn_steps: int = 1000
    gd_starts: int = 8
    # multi-objective
    weights: list = field(default_factory=lambda: list(DEFAULT_LIFT_DRAG_WEIGHTS))
    normalize: str = "none"  # or "minmax": rescale each objective to [0, 1] over the samples
    # reporting
    airfoil_stride: int = 10
    airfoil_points: int = 100
    chord: float = 1.0
    # runtime
    out: str = "qubofoil-out"
    workers: int | None = None

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls, data: Mapping) -> "RunConfig":
        unknown = sorted(set(data) - set(cls.keys()))
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}; valid keys: {cls.keys()}")
        cfg = cls(**dict(data))
        cfg.validate()
        return cfg

    def to_dict(self, runtime: bool = True) -> dict:
        d = dataclasses.asdict(self)
        if not runtime:
            for k in RUNTIME_KEYS:
                d.pop(k)
        return d

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        def is_int(v):
            return isinstance(v, int) and not isinstance(v, bool)

        def is_num(v):
            return isinstance(v, (int, float)) and not isinstance(v, bool)

        need(self.oracle in ORACLES, f"unknown oracle {self.oracle!r}; available: {sorted(ORACLES)}")
        need(is_num(self.skew) and 0 <= self.skew <= 1, "skew must be a number in [0, 1]")
        need(is_num(self.noise) and self.noise >= 0, "noise must be a nonnegative number")
        need(isinstance(self.grid, dict) and self.grid, "grid must map variable names to [lower, upper, step]")
        for name, g in self.grid.items():
            need(isinstance(g, (list, tuple)) and len(g) == 3 and all(is_num(v) for v in g)
                 and g[2] > 0 and g[1] >= g[0], f"grid entry {name!r} must be [lower, upper, step] with step > 0")
        need(isinstance(self.fixed, dict) and all(is_num(v) for v in self.fixed.values()),
             "fixed must map names to numbers")
        need(self.samples is None or isinstance(self.samples, str), "samples must be a path or null")
        if self.bounds is not None:
            need(isinstance(self.bounds, dict) and self.bounds, "bounds must map variable names to [lower, upper]")
            for name, b in self.bounds.items():
                need(isinstance(b, (list, tuple)) and len(b) == 2 and all(is_num(v) for v in b) and b[1] > b[0],
                     f"bounds entry {name!r} must be [lower, upper] with upper > lower")
        need(isinstance(self.objectives, list) and self.objectives
             and all(isinstance(o, str) for o in self.objectives), "objectives must be a non-empty list of names")
        need(len(set(self.objectives)) == len(self.objectives), "objective names must be unique")
        need(isinstance(self.senses, list) and len(self.senses) == len(self.objectives),
             "senses must list one entry per objective")
        need(all(s in (MINIMIZE, MAXIMIZE) for s in self.senses), "senses must be 'minimize' or 'maximize'")
        need(self.order in (2, 4) and is_int(self.order), "order must be 2 or 4")
        need(isinstance(self.diagnostic_orders, list) and all(o in (2, 4) and is_int(o) for o in self.diagnostic_orders),
             "diagnostic_orders may only contain 2 and 4")
        if isinstance(self.bits, dict):
            need(all(is_int(b) and b > 0 for b in self.bits.values()), "bit widths must be positive integers")
        else:
            need(is_int(self.bits) and self.bits > 0, "bits must be a positive integer or a per-variable map")
        need(is_num(self.eta) and self.eta > 1, "eta must exceed 1")
        need(is_int(self.r_max) and self.r_max >= 1, "r_max must be a positive integer")
        need(self.epsilon is None or (is_num(self.epsilon) and self.epsilon > 0), "epsilon must be positive")
        need(is_int(self.max_spins) and self.max_spins >= 1, "max_spins must be a positive integer")
        need(is_int(self.max_copies) and self.max_copies >= 1, "max_copies must be a positive integer")
        need(isinstance(self.solve_adapted, bool), "solve_adapted must be true or false")
        need(self.backend in BACKENDS, f"backend must be one of {list(BACKENDS)}")
        need(is_int(self.seed) and self.seed >= 0, "seed must be a nonnegative integer")
        need(is_int(self.replicas) and self.replicas >= 1, "replicas must be a positive integer")
        need(is_num(self.t_init) and is_num(self.t_min) and self.t_init > self.t_min > 0,
             "temperatures must satisfy t_init > t_min > 0")
        need(is_num(self.rate) and 0 < self.rate < 1, "rate must lie in (0, 1)")
        need(is_int(self.sweeps) and self.sweeps >= 1, "sweeps must be a positive integer")
        need(is_int(self.isingdyn_steps) and self.isingdyn_steps >= 1, "isingdyn_steps must be positive")
        need(is_int(self.gd_starts) and self.gd_starts >= 1, "gd_starts must be positive")
        need(isinstance(self.weights, list) and self.weights and all(is_num(w) and w >= 0 for w in self.weights),
             "weights must be a non-empty list of nonnegative numbers")
        need(self.normalize in ("none", "minmax"), "normalize must be 'none' or 'minmax'")
        need(is_int(self.airfoil_stride) and self.airfoil_stride >= 1, "airfoil_stride must be positive")
        need(is_int(self.airfoil_points) and self.airfoil_points >= 10, "airfoil_points must be at least 10")
        need(is_num(self.chord) and self.chord > 0, "chord must be positive")
        need(isinstance(self.out, str) and self.out, "out must be a directory path")
        need(self.workers is None or (is_int(self.workers) and self.workers >= 1), "workers must be positive")
        self.check_references()

    def variable_names(self) -> list[str]:
        if self.samples is not None:
            return list(_csv_header(self.samples)[0])
        return list(self.grid)

    def check_references(self) -> None:
        """Objective and variable names must resolve before any work starts."""
        if self.samples is not None:
            names, objectives = _csv_header(self.samples)
        else:
            names, objectives = list(self.grid), list(OBJECTIVES)
            unknown = set(names) - {"A", "B", "T"}
            if unknown:
                raise ConfigError(f"oracle {self.oracle!r} has no variables {sorted(unknown)}")
        missing = [o for o in self.objectives if o not in objectives]
        if missing:
            raise ConfigError(f"objectives {missing} not available; choose from {objectives}")
        if self.bounds is not None and set(self.bounds) != set(names):
            raise ConfigError(f"bounds cover {sorted(self.bounds)} but the samples vary {names}")
        if isinstance(self.bits, dict) and set(self.bits) != set(names):
            raise ConfigError(f"bits cover {sorted(self.bits)} but the samples vary {names}")

    def space(self, samples: SampleSet | None = None) -> DesignSpace:
        names = self.variable_names()
        if self.bounds is not None:
            bounds = {n: tuple(self.bounds[n]) for n in names}
        elif self.samples is None:
            bounds = {}
            for n in names:
                lo, hi, step = self.grid[n]
                bounds[n] = (float(lo), float(lo + step * np.floor((hi - lo) / step + 1e-9)))
        else:
            if samples is None:
                samples = SampleSet.from_csv(self.samples)
            bounds = {n: (float(samples.x[:, k].min()), float(samples.x[:, k].max()))
                      for k, n in enumerate(names)}
            flat = [n for n, (lo, hi) in bounds.items() if not hi > lo]
            if flat:
                raise ConfigError(f"samples do not vary {flat}; give explicit bounds")
        return DesignSpace.from_bounds(bounds, self.bits)

    def hardware(self) -> HardwareProfile:
        return HardwareProfile(self.r_max, self.epsilon, self.max_spins, self.max_copies)

    def schedule(self) -> SaSchedule:
        return SaSchedule(float(self.t_init), float(self.t_min), float(self.rate), int(self.sweeps))

    def airfoil_fixed(self) -> dict:
        base = dict(NacaQuartic().fixed) if self.samples is None else {}
        base.update(self.fixed)
        return base


def _csv_header(path) -> tuple[list[str], list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh))
    except (OSError, StopIteration) as exc:
        raise ConfigError(f"cannot read sample header from {path}: {exc}") from exc
    xs = [h[2:] for h in header if h.startswith("x:")]
    ys = [h[2:] for h in header if h.startswith("y:")]
    if not xs or not ys or len(xs) + len(ys) != len(header):
        raise ConfigError(f"{path} is not a sample file (columns must be x:<name> then y:<objective>)")
    return xs, ys


def load_config(path: str | None = None, overrides: Mapping | None = None,
                environ: Mapping[str, str] | None = None) -> RunConfig:
    """Defaults < config file < environment (out, seed only) < explicit overrides."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        base = Path(path).parent
        if isinstance(data.get("samples"), str) and not os.path.isabs(data["samples"]):
            data["samples"] = str(base / data["samples"])
    environ = os.environ if environ is None else environ
    if environ.get(ENV_OUT):
        data["out"] = environ[ENV_OUT]
    if environ.get(ENV_SEED):
        try:
            data["seed"] = int(environ[ENV_SEED])
        except ValueError as exc:
            raise ConfigError(f"{ENV_SEED} must be an integer") from exc
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.from_mapping(data)


# ---------------------------------------------------------------- artifacts

def _dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_artifact(out: Path, name: str, kind: str, body: dict, timing: dict | None = None) -> Path:
    doc = {"format": f"qubofoil.{kind}", "version": ARTIFACT_VERSION, "tool_version": __version__}
    doc.update(body)
    doc["timing"] = timing or {}
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(_dumps(doc), encoding="utf-8")
    return path


def read_artifact(out: Path, name: str, kind: str) -> dict:
    path = out / name
    if not path.exists():
        raise ArtifactError(f"{path} is missing; run the stage that produces it first")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("format") != f"qubofoil.{kind}":
        raise ArtifactError(f"{path} is not a {kind} artifact (format={doc.get('format')!r})")
    if doc.get("version") != ARTIFACT_VERSION:
        raise ArtifactError(f"{path} has artifact version {doc.get('version')}; "
                            f"this tool reads version {ARTIFACT_VERSION}")
    return doc


def stable_digest(path) -> str:
    """SHA-256 of an artifact with its ``timing`` and ``runtime`` sections removed."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    doc.pop("timing", None)
    doc.pop("runtime", None)
    return hashlib.sha256(_dumps(doc).encode()).hexdigest()


def _record_body(rec: SolveRecord) -> tuple[dict, dict]:
    timing = {"elapsed": rec.elapsed, "trajectory_time": [p.time for p in rec.trajectory]}
    return rec.to_dict(timing=False), timing


def _record_from(body: dict, timing: Mapping) -> SolveRecord:
    rec = SolveRecord.from_dict(body)
    times = timing.get("trajectory_time") or [0.0] * len(rec.trajectory)
    rec.trajectory = [TrajectoryPoint(p.step, float(t), p.energy) for p, t in zip(rec.trajectory, times)]
    rec.elapsed = float(timing.get("elapsed", 0.0))
    return rec


# ---------------------------------------------------------------- stages

def cmd_synth(cfg: RunConfig) -> Path:
    if cfg.samples is not None:
        raise ConfigError("synth writes oracle samples; remove 'samples' from the config to use it")
    samples = synthesize(cfg.oracle, {k: tuple(v) for k, v in cfg.grid.items()}, cfg.skew, cfg.noise,
                         cfg.seed, cfg.fixed or None, cfg.objectives)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    samples.to_csv(out / SAMPLES_FILE)
    return out / SAMPLES_FILE


def load_samples(cfg: RunConfig) -> SampleSet:
    path = Path(cfg.samples) if cfg.samples is not None else Path(cfg.out) / SAMPLES_FILE
    if not path.exists():
        raise ArtifactError(f"{path} is missing; run 'synth' or set 'samples'")
    return SampleSet.from_csv(path)


def cmd_fit(cfg: RunConfig) -> Path:
    samples = load_samples(cfg)
    space = cfg.space(samples)
    if list(samples.variable_names) != space.names:
        raise ArtifactError(f"sample variables {list(samples.variable_names)} differ from config {space.names}")
    samples.check_bounds(space)
    models, diagnostics = {}, {}
    for obj in cfg.objectives:
        models[obj] = fit_rsm(samples, obj, cfg.order).to_dict()
        diag = {}
        for order in sorted(set(cfg.diagnostic_orders) | {cfg.order}):
            try:
                diag[str(order)] = fit_rsm(samples, obj, order).r_squared
            except ValueError as exc:
                diag[str(order)] = {"error": str(exc)}
        diagnostics[obj] = diag
    body = {"space": space.to_dict(), "objectives": list(cfg.objectives), "senses": list(cfg.senses),
            "order": cfg.order, "samples": len(samples), "models": models, "diagnostics": diagnostics}
    return write_artifact(Path(cfg.out), FIT_FILE, "fit", body)


def load_fit(cfg: RunConfig) -> tuple[DesignSpace, dict[str, PolynomialSurrogate], dict]:
    doc = read_artifact(Path(cfg.out), FIT_FILE, "fit")
    models = {k: PolynomialSurrogate.from_dict(v) for k, v in doc["models"].items()}
    missing = [o for o in cfg.objectives if o not in models]
    if missing:
        raise ArtifactError(f"fit artifact lacks objectives {missing}; rerun 'fit'")
    return DesignSpace.from_dict(doc["space"]), models, doc


def _check_capacity(q: QuboProblem, max_spins: int, what: str) -> None:
    if q.n > max_spins:
        budget = spin_budget(q.registry)
        parts = {k: v for k, v in budget.items() if k != "total"}
        largest = max(parts, key=parts.get)
        raise CapacityError(f"{what} needs {q.n} spins, capacity is {max_spins}; "
                            f"largest contributor is {largest} ({parts[largest]} spins; budget {budget})")


def _compile(model: PolynomialSurrogate, space: DesignSpace, sense: str, eta: float) -> QuboProblem:
    p, reg = compile_hubo(model, space, sense)
    return rosenberg_reduce(p, PenaltyPolicy(eta), reg)


def _adapt(q: QuboProblem, cfg: RunConfig, what: str):
    # capacity is checked here so the error can name the largest contributor
    hw = dataclasses.replace(cfg.hardware(), max_spins=1 << 30)
    qa, report, eps = adapt(q, hw)
    _check_capacity(qa, cfg.max_spins, what)
    return qa, report, eps


def cmd_compile(cfg: RunConfig) -> Path:
    space, models, _ = load_fit(cfg)
    obj, sense = cfg.objectives[0], cfg.senses[0]
    q = _compile(models[obj], space, sense, cfg.eta)
    _check_capacity(q, cfg.max_spins, "logical QUBO")
    qa, report, eps = _adapt(q, cfg, "hardware-adapted QUBO")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / QUBO_FILE).write_text(json.dumps(q.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
    body = {"objective": obj, "sense": sense, "eta": cfg.eta, "qubo": q.to_dict(),
            "budget": spin_budget(q.registry),
            "hardware": {"qubo": qa.to_dict(), "epsilon": eps, "split": report.to_dict(),
                         "r_max": cfg.r_max}}
    return write_artifact(out, COMPILE_FILE, "compile", body)


def run_backend(q: QuboProblem, cfg: RunConfig, backend: str | None = None) -> SolveRecord:
    backend = backend or cfg.backend
    if backend == "bruteforce":
        return solve_bruteforce(q)
    if backend == "sa":
        return solve_sa(q, cfg.schedule(), cfg.replicas, cfg.seed, cfg.workers)
    if backend == "isingdyn":
        return solve_isingdyn(q, cfg.isingdyn_steps, cfg.seed, cfg.replicas, IsingDynamicsConfig(), cfg.workers)
    raise ConfigError(f"backend {backend!r} does not solve QUBOs")


def _sign(sense: str) -> float:
    return -1.0 if sense == MAXIMIZE else 1.0


def cmd_solve(cfg: RunConfig) -> Path:
    space, models, _ = load_fit(cfg)
    out = Path(cfg.out)
    obj, sense = cfg.objectives[0], cfg.senses[0]
    model = models[obj]
    if cfg.backend == "gd":
        start = time.perf_counter()
        res = solve_gd(model, space, cfg.gd_starts, cfg.seed, sense)
        design = dict(zip(space.names, (float(v) for v in res.x_snapped)))
        body = {"backend": "gd", "objective": obj, "sense": sense, "gd": res.to_dict(),
                "design": design, "value": float(model(res.x_snapped)), "record": None}
        return write_artifact(out, SOLVE_FILE, "solve", body, {"elapsed": time.perf_counter() - start})

    doc = read_artifact(out, COMPILE_FILE, "compile")
    if doc["objective"] != obj or doc["sense"] != sense:
        raise ArtifactError("compile artifact was built for a different objective; rerun 'compile'")
    q = QuboProblem.from_dict(doc["hardware"]["qubo"] if cfg.solve_adapted else doc["qubo"])
    rec = run_backend(q, cfg)
    design = decode_design(rec.assignment, q.registry, space)
    x = np.array([design[n] for n in space.names])
    body, timing = _record_body(rec)
    return write_artifact(out, SOLVE_FILE, "solve",
                          {"backend": cfg.backend, "objective": obj, "sense": sense,
                           "solved": "hardware" if cfg.solve_adapted else "logical",
                           "design": design, "value": float(model(x)), "record": body}, timing)


def best_per_block(rec: SolveRecord, blocks: list[QuboProblem], composite: QuboProblem):
    """Combine, block by block, the lowest-energy replica restricted to that block.

    The blocks share no couplings, so each block's energy depends only on its
    own spins and the combination is at least as good as every replica.
    """
    slices = block_slices(composite)
    candidates = rec.replica_assignments or [rec.assignment]
    combined = np.array(rec.assignment, dtype=np.int8)
    picks = []
    for p, (sl, q) in enumerate(zip(slices, blocks)):
        energies = [float(q.energy(np.asarray(a)[sl])) for a in candidates]
        r = int(np.argmin(energies))
        combined[sl] = np.asarray(candidates[r])[sl]
        picks.append({"block": p, "replica": r, "energy": energies[r]})
    return combined, picks


def cmd_pareto(cfg: RunConfig) -> Path:
    space, models, _ = load_fit(cfg)
    if len(cfg.objectives) != 2:
        raise ConfigError("pareto sweeps lift/drag style weights and needs exactly two objectives")
    if cfg.backend == "gd":
        raise ConfigError("pareto solves one composite QUBO; choose bruteforce, sa or isingdyn")
    mods = [models[o] for o in cfg.objectives]
    scaled, ranges = mods, None
    if cfg.normalize == "minmax":
        samples = load_samples(cfg)
        cols = [samples.y[:, list(samples.objective_names).index(o)] for o in cfg.objectives]
        ranges = [[float(c.min()), float(c.max())] for c in cols]
        try:
            scaled = [minmax_rescale(m, lo, hi) for m, (lo, hi) in zip(mods, ranges)]
        except ValueError as exc:
            raise ConfigError(f"cannot normalize objectives: {exc}") from exc
    scheme = WeightScheme.lift_drag(cfg.weights)
    blocks = [_compile(aggregate_coefficients(scaled, w, cfg.senses), space, MINIMIZE, cfg.eta)
              for w in scheme]
    composite = block_compose(blocks, cfg.max_spins)
    adapted, split, eps = _adapt(composite, cfg, "hardware-adapted composite")
    target = adapted if cfg.solve_adapted else composite
    rec = run_backend(target, cfg)
    if cfg.solve_adapted:
        merged, _ = merge_copies(rec.assignment, target.registry)
        rec.replica_assignments = [merge_copies(a, target.registry)[0][:composite.n]
                                   for a in rec.replica_assignments]
        rec.assignment = merged[:composite.n]
    combined, picks = best_per_block(rec, blocks, composite)
    designs = [decode_design(combined, composite.registry, space, block=p) for p in range(len(blocks))]
    for pick, d, w, vec in zip(picks, designs, cfg.weights, scheme):
        pick.update({"parameter": float(w), "weight": list(vec), "design": d})
    points = [[d[n] for n in space.names] for d in designs]
    front = extract_pareto(points, mods, cfg.senses, list(scheme), cfg.objectives, space.names,
                           cfg.weights)
    body, timing = _record_body(rec)
    return write_artifact(Path(cfg.out), PARETO_FILE, "pareto", {
        "objectives": list(cfg.objectives), "senses": list(cfg.senses), "backend": cfg.backend,
        "weights": [float(w) for w in cfg.weights], "normalize": cfg.normalize, "ranges": ranges,
        "blocks": picks,
        "composite_energy": float(composite.energy(combined)),
        "composite_budget": spin_budget(composite.registry),
        "hardware": {"epsilon": eps, "split": split.to_dict()},
        "record": body, "pareto": front.to_dict()}, timing)


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_airfoil(path: Path, design: Mapping, cfg: RunConfig) -> bool:
    try:
        params = airfoil_from_design(design, cfg.airfoil_fixed(), cfg.chord)
    except (KeyError, ValueError):
        return False
    naca4_coordinates(params, cfg.airfoil_points).write_selig(path)
    return True


def cmd_report(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    space, models, fit = load_fit(cfg)
    plots = out / PLOT_DIR
    (plots / "airfoils").mkdir(parents=True, exist_ok=True)
    report: dict = {"config": cfg.to_dict(runtime=False), "diagnostics": fit["diagnostics"],
                    "objectives": list(cfg.objectives), "senses": list(cfg.senses)}
    timing: dict = {}

    if (out / COMPILE_FILE).exists():
        comp = read_artifact(out, COMPILE_FILE, "compile")
        report["spin_budget"] = {"logical_qubo": comp["budget"], "hardware": comp["hardware"]["split"]}

    if (out / SOLVE_FILE).exists():
        sol = read_artifact(out, SOLVE_FILE, "solve")
        model = models[sol["objective"]]
        x = np.array([sol["design"][n] for n in space.names])
        value = float(model(x))
        if abs(value - sol["value"]) > 1e-9 * max(1.0, abs(value)):
            raise ArtifactError(f"decoded optimum re-evaluates to {value}, solve artifact says {sol['value']}")
        report["optimum"] = {"objective": sol["objective"], "sense": sol["sense"], "backend": sol["backend"],
                             "design": sol["design"], "value": value}
        report["solver_records"] = [sol["record"]] if sol["record"] is not None else []
        if sol["backend"] == "gd":
            report["optimum"]["gd"] = sol["gd"]
        timing["solve"] = sol["timing"]
        if sol["record"] is not None:
            rec = _record_from(sol["record"], sol["timing"])
            lines = ["# step time_s best_energy"]
            lines += [f"{p.step} {_fmt(p.time)} {_fmt(p.energy)}" for p in rec.trajectory]
            (plots / "trajectory.dat").write_text("\n".join(lines) + "\n", encoding="utf-8")
        _write_airfoil(plots / "airfoils" / "optimum.dat", sol["design"], cfg)

    if (out / PARETO_FILE).exists():
        par = read_artifact(out, PARETO_FILE, "pareto")
        mods = [models[o] for o in par["objectives"]]
        for b in par["blocks"]:
            x = np.array([b["design"][n] for n in space.names])
            b["values"] = [float(m(x)) for m in mods]
        report["pareto"] = {"blocks": par["blocks"], "front": par["pareto"],
                            "composite_energy": par["composite_energy"],
                            "composite_budget": par["composite_budget"], "hardware": par["hardware"]}
        report.setdefault("solver_records", []).append(par["record"])
        timing["pareto"] = par["timing"]
        names = par["objectives"]
        lines = [f"# {names[0]} {names[1]} dominated"]
        for pt in par["pareto"]["points"]:
            lines.append(f"{_fmt(pt['objectives'][0])} {_fmt(pt['objectives'][1])} {int(pt['dominated'])}")
        (plots / "pareto.dat").write_text("\n".join(lines) + "\n", encoding="utf-8")
        for var in space.names:
            rows = [f"# w {var}"] + [f"{_fmt(b['parameter'])} {_fmt(b['design'][var])}" for b in par["blocks"]]
            (plots / f"{var}_vs_w.dat").write_text("\n".join(rows) + "\n", encoding="utf-8")
        for b in par["blocks"]:
            _write_airfoil(plots / "airfoils" / f"pareto_w{b['parameter']:g}.dat", b["design"], cfg)

    samples = load_samples(cfg)
    for k in range(0, len(samples), cfg.airfoil_stride):
        design = dict(zip(samples.variable_names, (float(v) for v in samples.x[k])))
        if not _write_airfoil(plots / "airfoils" / f"sample_{k:04d}.dat", design, cfg):
            break

    doc = {"format": "qubofoil.report", "version": ARTIFACT_VERSION, "tool_version": __version__}
    doc.update(report)
    doc["timing"] = timing
    doc["runtime"] = {"out": str(out), "workers": cfg.workers}
    path = out / REPORT_FILE
    path.write_text(_dumps(doc), encoding="utf-8")
    return path


def cmd_all(cfg: RunConfig) -> Path:
    if cfg.samples is None:
        cmd_synth(cfg)
    cmd_fit(cfg)
    cmd_compile(cfg)
    cmd_solve(cfg)
    if len(cfg.objectives) == 2 and cfg.backend != "gd":
        cmd_pareto(cfg)
    else:
        (Path(cfg.out) / PARETO_FILE).unlink(missing_ok=True)
    return cmd_report(cfg)


STAGES = {"synth": cmd_synth, "fit": cmd_fit, "compile": cmd_compile, "solve": cmd_solve,
          "pareto": cmd_pareto, "report": cmd_report, "all": cmd_all}
