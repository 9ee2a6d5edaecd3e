"""Weighted-sum scalarization, block-diagonal scenario packing and Pareto fronts."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .hwadapt import CapacityError
from .pbool import RegistryEntry, VariableRegistry
from .quadratize import PenaltyRecord, QuboProblem
from .surrogate import PolynomialSurrogate, eval_rsm

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

# Lift/drag preference values swept by default; w=0 is pure lift.
DEFAULT_LIFT_DRAG_WEIGHTS = (0.0, 5.0, 20.0, 50.0, 80.0, 100.0, 200.0, 500.0, 2000.0)


def _sign(sense: str) -> float:
    if sense == MINIMIZE:
        return 1.0
    if sense == MAXIMIZE:
        return -1.0
    raise ValueError(f"unknown objective sense {sense!r}")


def check_weights(w: Sequence[float]) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weight vector must be a non-empty 1-D sequence")
    if np.any(w < 0):
        raise ValueError(f"weights must be nonnegative, got {w.tolist()}")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w


@dataclass(frozen=True)
class WeightScheme:
    """P normalized weight vectors over M objectives.

    ``parameters`` optionally records the scalar each vector came from, e.g.
    the lift/drag preference ``w`` of :func:`lift_drag_weights`.
    """

    vectors: tuple[tuple[float, ...], ...]
    parameters: tuple[float, ...] | None = None

    def __post_init__(self):
        vecs = tuple(tuple(float(v) for v in check_weights(w)) for w in self.vectors)
        if len({len(v) for v in vecs}) > 1:
            raise ValueError("all weight vectors must have the same length")
        object.__setattr__(self, "vectors", vecs)
        if self.parameters is not None:
            if len(self.parameters) != len(vecs):
                raise ValueError("one parameter per weight vector is required")
            object.__setattr__(self, "parameters", tuple(float(p) for p in self.parameters))

    @classmethod
    def lift_drag(cls, ws: Sequence[float] = DEFAULT_LIFT_DRAG_WEIGHTS) -> "WeightScheme":
        return cls(tuple(lift_drag_weights(w) for w in ws), tuple(ws))

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)


def lift_drag_weights(w: float) -> tuple[float, float]:
    """``(1/(1+w), w/(1+w))`` for (maximize lift, minimize drag)."""
    if not w >= 0:
        raise ValueError(f"lift/drag weight must be nonnegative, got {w}")
    return (1.0 / (1.0 + w), w / (1.0 + w))


def minmax_rescale(model: PolynomialSurrogate, lo: float, hi: float) -> PolynomialSurrogate:
    """Affine copy of ``model`` evaluating to ``(y - lo) / (hi - lo)``."""
    if not hi > lo:
        raise ValueError(f"min-max range is empty: lo={lo}, hi={hi}")
    span = hi - lo
    coeffs = {k: v / span for k, v in model.coefficients.items()}
    coeffs[()] = coeffs.get((), 0.0) - lo / span
    return PolynomialSurrogate(model.order, model.n, coeffs, model.r_squared, model.residual_norm / span,
                               model.variable_names)


def aggregate_coefficients(models: Sequence[PolynomialSurrogate], w: Sequence[float],
                           senses: Sequence[str] | None = None) -> PolynomialSurrogate:
    """Coefficient-level scalarization ``beta_w = sum_i w_i s_i beta_i``.

    With ``senses`` given, maximized objectives enter with ``s_i = -1`` so the
    result is to be minimized; without it every ``s_i = 1``.
    """
    w = check_weights(w)
    if len(models) != len(w):
        raise ValueError(f"{len(models)} models for {len(w)} weights")
    first = models[0]
    for m in models[1:]:
        if m.order != first.order or m.n != first.n:
            raise ValueError("all models must share order and variable count")
    signs = [1.0] * len(models) if senses is None else [_sign(s) for s in senses]
    keys = sorted(set().union(*(m.coefficients for m in models)), key=lambda k: (len(k), k))
    coeffs = {k: sum(wi * si * m.coefficients.get(k, 0.0) for wi, si, m in zip(w, signs, models))
              for k in keys}
    return PolynomialSurrogate(first.order, first.n, coeffs, variable_names=first.variable_names)


def _same_layout(a: QuboProblem, b: QuboProblem) -> bool:
    if a.n != b.n:
        return False
    if (a.registry is None) != (b.registry is None):
        return False
    if a.registry is not None and a.registry.entries != b.registry.entries:
        return False
    return [(p.aux, p.parents) for p in a.penalties] == [(p.aux, p.parents) for p in b.penalties]


def aggregate_qubo(qubos: Sequence[QuboProblem], w: Sequence[float]) -> QuboProblem:
    """Matrix-level scalarization ``Q(w) = sum_i w_i Q_i``.

    Inputs must already carry their objective senses (see
    :func:`~qubofoil.pbool.compile_hubo`). Penalty weights combine to
    ``sum_i w_i lam_i``, the upper bound on the penalty the aggregate needs.
    """
    w = check_weights(w)
    if len(qubos) != len(w):
        raise ValueError(f"{len(qubos)} QUBOs for {len(w)} weights")
    ref = qubos[0]
    for q in qubos[1:]:
        if not _same_layout(ref, q):
            raise ValueError("QUBOs must share size, registry and auxiliary layout")
    coeffs: dict = {}
    for wi, q in zip(w, qubos):
        for k, v in q.items():
            coeffs[k] = coeffs.get(k, 0.0) + wi * v
    offset = sum(wi * q.offset for wi, q in zip(w, qubos))
    penalties = tuple(
        PenaltyRecord(p.aux, p.parents, float(sum(wi * q.penalties[r].lam for wi, q in zip(w, qubos))))
        for r, p in enumerate(ref.penalties))
    return QuboProblem(ref.n, coeffs, offset, ref.registry, penalties)


def block_compose(qubos: Sequence[QuboProblem], max_spins: int | None = None) -> QuboProblem:
    """Block-diagonal packing of independent problems into one.

    Spin indices of block ``p`` are shifted by the sizes of blocks ``0..p-1``
    and every registry entry is tagged with its block.
    """
    if not qubos:
        raise ValueError("need at least one block")
    if len(qubos) == 1:
        return qubos[0]
    total = sum(q.n for q in qubos)
    if max_spins is not None and total > max_spins:
        largest = max(range(len(qubos)), key=lambda p: qubos[p].n)
        raise CapacityError(f"{len(qubos)} blocks need {total} spins, capacity is {max_spins} "
                            f"(largest block {largest} has {qubos[largest].n})")
    coeffs: dict = {}
    entries = []
    penalties = []
    shift = 0
    for p, q in enumerate(qubos):
        for (i, j), v in q.items():
            coeffs[(i + shift, j + shift)] = v
        reg = q.registry if q.registry is not None else VariableRegistry(
            tuple(RegistryEntry(i, "logical") for i in range(q.n)))
        entries.extend(reg.shifted(shift, p))
        penalties.extend(PenaltyRecord(r.aux + shift, (r.parents[0] + shift, r.parents[1] + shift), r.lam)
                         for r in q.penalties)
        shift += q.n
    return QuboProblem(total, coeffs, sum(q.offset for q in qubos), VariableRegistry(tuple(entries)),
                       tuple(penalties))


def block_slices(q: QuboProblem) -> list[np.ndarray]:
    """Spin indices of each block of a composed problem."""
    blocks: dict[int, list[int]] = {}
    for e in q.registry:
        blocks.setdefault(e.block if e.block is not None else 0, []).append(e.spin)
    return [np.array(blocks[b]) for b in sorted(blocks)]


@dataclass(frozen=True)
class ParetoPoint:
    weight: tuple[float, ...]
    x: tuple[float, ...]
    objectives: tuple[float, ...]
    dominated: bool
    parameter: float | None = None

    def to_dict(self) -> dict:
        out = {"weight": list(self.weight), "x": list(self.x),
               "objectives": list(self.objectives), "dominated": self.dominated}
        if self.parameter is not None:
            out["parameter"] = self.parameter
        return out


@dataclass(frozen=True)
class ParetoSet:
    points: tuple[ParetoPoint, ...]
    objective_names: tuple[str, ...]
    senses: tuple[str, ...]
    variable_names: tuple[str, ...] = ()

    def front(self) -> list[ParetoPoint]:
        return [p for p in self.points if not p.dominated]

    def to_dict(self) -> dict:
        return {"objective_names": list(self.objective_names), "senses": list(self.senses),
                "variable_names": list(self.variable_names),
                "points": [p.to_dict() for p in self.points]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def plot_data(self, a: int = 0, b: int = 1) -> str:
        """Two-column text for objectives ``a`` and ``b``; dominated rows commented out."""
        lines = [f"# {self.objective_names[a]} {self.objective_names[b]}"]
        for p in self.points:
            prefix = "#d " if p.dominated else ""
            lines.append(f"{prefix}{p.objectives[a]!r} {p.objectives[b]!r}")
        return "\n".join(lines) + "\n"


def dominates(a: Sequence[float], b: Sequence[float], senses: Sequence[str]) -> bool:
    """True when ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    better = False
    for va, vb, s in zip(a, b, senses):
        da, db = _sign(s) * va, _sign(s) * vb
        if da > db:
            return False
        if da < db:
            better = True
    return better


def nondominated_mask(values: np.ndarray, senses: Sequence[str]) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    keep = np.ones(len(values), dtype=bool)
    for i in range(len(values)):
        for j in range(len(values)):
            if i != j and dominates(values[j], values[i], senses):
                keep[i] = False
                break
    return keep


def normalize_objectives(values: np.ndarray) -> np.ndarray:
    """Min-max scale each objective column to [0, 1] (constant columns map to 0)."""
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(axis=0), values.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (values - lo) / span


def extract_pareto(points: Sequence[Sequence[float]],
                   objectives: Sequence[PolynomialSurrogate] | Callable,
                   senses: Sequence[str], weights: Sequence[Sequence[float]] | None = None,
                   objective_names: Sequence[str] | None = None,
                   variable_names: Sequence[str] = (),
                   parameters: Sequence[float] | None = None) -> ParetoSet:
    """Evaluate every objective at the decoded points and flag dominated ones.

    ``objectives`` is either a list of surrogates or a callable mapping a
    design point to the vector of objective values. Points with identical
    designs are merged (the first weight is kept). The result is ordered by
    the first objective.
    """
    points = [tuple(float(v) for v in x) for x in points]
    weights = [tuple(w) for w in weights] if weights is not None else [()] * len(points)
    params = list(parameters) if parameters is not None else [None] * len(points)
    if callable(objectives) and not isinstance(objectives, (list, tuple)):
        evaluate = lambda x: tuple(float(v) for v in objectives(np.asarray(x)))
        m = len(senses)
    else:
        evaluate = lambda x: tuple(float(eval_rsm(mod, np.asarray(x))) for mod in objectives)
        m = len(objectives)
    if len(senses) != m:
        raise ValueError(f"{len(senses)} senses for {m} objectives")

    seen = {}
    for x, w, prm in zip(points, weights, params):
        if x not in seen:
            seen[x] = (w, prm)
    xs = list(seen)
    vals = np.array([evaluate(x) for x in xs]) if xs else np.zeros((0, m))
    keep = nondominated_mask(vals, senses)
    order = sorted(range(len(xs)), key=lambda i: (vals[i, 0], xs[i]))
    out = tuple(ParetoPoint(seen[xs[i]][0], xs[i], tuple(vals[i]), bool(not keep[i]), seen[xs[i]][1])
                for i in order)
    names = tuple(objective_names) if objective_names else tuple(f"f{i}" for i in range(m))
    return ParetoSet(out, names, tuple(senses), tuple(variable_names))
