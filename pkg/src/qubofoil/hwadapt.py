"""Finite-precision adaptation of QUBO coefficients.

``quantize`` scales a real QUBO to integers; ``pas_split`` then spreads
every coefficient that exceeds the hardware range over redundant copies of
the spins involved, tied together by consistency penalties
``mu * (qa + qb - 2*qa*qb)`` between every pair of copies.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .pbool import DESIGN_BIT, ROSENBERG_AUX, SPLIT_COPY, RegistryEntry, VariableRegistry
from .quadratize import PenaltyRecord, QuboProblem


class InfeasibleSplitError(ValueError):
    def __init__(self, message, coefficient=None, spins=None):
        super().__init__(message)
        self.coefficient = coefficient
        self.spins = spins


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class HardwareProfile:
    """Coefficient range, quantization step and spin capacity of a device.

    ``epsilon=None`` selects 1e-3 of the largest absolute coefficient of the
    problem being quantized.
    """

    r_max: int = 127
    epsilon: float | None = None
    max_spins: int = 1000
    max_copies: int = 256

    def __post_init__(self):
        if int(self.r_max) != self.r_max or self.r_max < 1:
            raise ValueError(f"r_max must be a positive integer, got {self.r_max}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_spins < 1:
            raise ValueError("max_spins must be positive")

    def resolve_epsilon(self, q: QuboProblem) -> float:
        if self.epsilon is not None:
            return float(self.epsilon)
        biggest = q.max_abs()
        if biggest == 0:
            raise ValueError("cannot choose a default epsilon for an all-zero QUBO")
        return 1e-3 * biggest


def quantize(q: QuboProblem, hw: HardwareProfile = HardwareProfile()) -> tuple[QuboProblem, float]:
    """Round ``Q / eps`` to integers; ``eps`` maps energies back (``E ~ eps * E_int``)."""
    eps = hw.resolve_epsilon(q)
    out: dict = {}
    dropped = []
    for key, v in q.items():
        r = int(round(v / eps))
        if r == 0:
            dropped.append((key, v))
        else:
            out[key] = r
    if not out:
        raise ValueError(f"every coefficient rounds to zero at epsilon={eps:g}; choose a smaller epsilon")
    if dropped:
        listing = ", ".join(f"{k}={v:.3g}" for k, v in dropped[:20])
        more = f" (+{len(dropped) - 20} more)" if len(dropped) > 20 else ""
        warnings.warn(f"{len(dropped)} coefficients rounded to zero at epsilon={eps:g}: {listing}{more}",
                      stacklevel=2)
    penalties = tuple(PenaltyRecord(p.aux, p.parents, p.lam / eps) for p in q.penalties)
    return QuboProblem(q.n, out, q.offset / eps, q.registry, penalties), eps


def even_split(c: int, parts: int) -> list[int]:
    """Integers summing exactly to ``c``; the remainder goes to the first parts."""
    base, rem = divmod(int(c), parts)
    return [base + 1 if k < rem else base for k in range(parts)]


@dataclass(frozen=True)
class SpinSplit:
    spin: int
    copies: int
    weights: tuple[int, ...]
    mu: int

    def to_dict(self) -> dict:
        return {"spin": self.spin, "copies": self.copies, "weights": list(self.weights), "mu": self.mu}


@dataclass(frozen=True)
class SplitReport:
    splits: tuple[SpinSplit, ...]
    logical: int
    qubo_aux: int
    physical_aux: int
    r_max: int

    @property
    def total(self) -> int:
        return self.logical + self.qubo_aux + self.physical_aux

    def to_dict(self) -> dict:
        return {"splits": [s.to_dict() for s in self.splits if s.copies > 1],
                "budget": spin_budget(self), "r_max": self.r_max}


def spin_budget(report_or_registry) -> dict[str, int]:
    """Spin counts by category: logical, QUBO auxiliary and physical auxiliary."""
    if isinstance(report_or_registry, SplitReport):
        r = report_or_registry
        return {"logical": r.logical, "qubo_aux": r.qubo_aux,
                "physical_aux": r.physical_aux, "total": r.total}
    reg: VariableRegistry = report_or_registry
    qubo_aux = reg.count(ROSENBERG_AUX)
    physical = reg.count(SPLIT_COPY)
    logical = len(reg) - qubo_aux - physical
    return {"logical": logical, "qubo_aux": qubo_aux, "physical_aux": physical, "total": len(reg)}


def _grid_parts(c: int, rows: int, cols: int) -> np.ndarray:
    """Split ``c`` over a rows x cols grid of copy pairs, remainder row-major."""
    return np.array(even_split(c, rows * cols), dtype=np.int64).reshape(rows, cols)


class _Planner:
    def __init__(self, q: QuboProblem, r_max: int, max_copies: int):
        self.n = q.n
        self.r = r_max
        self.max_copies = max_copies
        self.linear = np.zeros(q.n, dtype=np.int64)
        self.pairs: dict[tuple[int, int], int] = {}
        self.neighbours: list[list[int]] = [[] for _ in range(q.n)]
        for (i, j), v in q.items():
            if int(v) != v:
                raise ValueError(f"pas_split needs integer coefficients; entry ({i}, {j}) = {v}")
            if i == j:
                self.linear[i] = int(v)
            else:
                self.pairs[(i, j)] = int(v)
                self.neighbours[i].append(j)
                self.neighbours[j].append(i)
        self.copies = np.ones(q.n, dtype=np.int64)

    def spread(self, i: int, n_i: int) -> int:
        """Bound on how much the local fields of spin i's copies can differ."""
        lin = even_split(self.linear[i], n_i)
        delta = max(lin) - min(lin)
        for j in self.neighbours[i]:
            c = self.pairs[(min(i, j), max(i, j))]
            if i < j:
                parts = _grid_parts(c, n_i, int(self.copies[j]))
            else:
                parts = _grid_parts(c, int(self.copies[j]), n_i).T
            delta += int(np.sum(parts.max(axis=0) - parts.min(axis=0)))
        return delta

    def mu_for(self, i: int, n_i: int) -> int | None:
        """Smallest consistency penalty that dominates and keeps every entry in range."""
        lin = even_split(self.linear[i], n_i)
        if n_i == 1:
            return 0 if abs(lin[0]) <= self.r else None
        mu_lo = self.spread(i, n_i) // n_i + 1
        mu = max(mu_lo, math.ceil((-self.r - min(lin)) / (n_i - 1)))
        if 2 * mu > self.r or max(lin) + (n_i - 1) * mu > self.r:
            return None
        return mu

    def plan(self) -> np.ndarray:
        changed = True
        while changed:
            changed = False
            for (i, j), c in self.pairs.items():
                while -(-abs(c) // int(self.copies[i] * self.copies[j])) > self.r:
                    k = i if self.copies[i] <= self.copies[j] else j
                    self._grow(k, (i, j), c)
                    changed = True
            for i in range(self.n):
                if self.mu_for(i, int(self.copies[i])) is None:
                    n_new = int(self.copies[i]) + 1
                    while n_new <= self.max_copies and self.mu_for(i, n_new) is None:
                        n_new += 1
                    if n_new > self.max_copies:
                        raise InfeasibleSplitError(
                            f"linear coefficient {int(self.linear[i])} on spin {i} cannot be split within "
                            f"r_max={self.r} using at most {self.max_copies} copies",
                            coefficient=int(self.linear[i]), spins=(i,))
                    self.copies[i] = n_new
                    changed = True
        return self.copies

    def _grow(self, k, spins, c):
        if self.copies[k] >= self.max_copies:
            raise InfeasibleSplitError(
                f"coupling {c} between spins {spins} cannot be split within r_max={self.r} "
                f"using at most {self.max_copies} copies", coefficient=c, spins=spins)
        self.copies[k] += 1


def pas_split(q: QuboProblem, hw: HardwareProfile = HardwareProfile()) -> tuple[QuboProblem, SplitReport]:
    """Precision-adaptive split of an integer QUBO.

    Every spin involved in an out-of-range coefficient is replaced by copies
    carrying evenly split integer weights. Copy ``0`` keeps the original
    spin index and extra copies are appended. At every global minimizer all
    copies agree, and on consistent assignments the energy equals the input
    energy. Every emitted coefficient lies in ``[-r_max, r_max]``.
    """
    r = int(hw.r_max)
    planner = _Planner(q, r, hw.max_copies)
    copies = planner.plan()

    spins_of: list[list[int]] = []
    nxt = q.n
    for i in range(q.n):
        ids = [i] + list(range(nxt, nxt + int(copies[i]) - 1))
        nxt += int(copies[i]) - 1
        spins_of.append(ids)

    coeffs: dict[tuple[int, int], int] = {}
    splits = []
    for i in range(q.n):
        n_i = int(copies[i])
        mu = planner.mu_for(i, n_i)
        weights = even_split(planner.linear[i], n_i)
        for a, s in enumerate(spins_of[i]):
            coeffs[(s, s)] = weights[a] + (n_i - 1) * mu
        for a, b in ((a, b) for a in range(n_i) for b in range(a + 1, n_i)):
            coeffs[(spins_of[i][a], spins_of[i][b])] = -2 * mu
        splits.append(SpinSplit(i, n_i, tuple(weights), mu))
    for (i, j), c in planner.pairs.items():
        parts = _grid_parts(c, int(copies[i]), int(copies[j]))
        for a, si in enumerate(spins_of[i]):
            for b, sj in enumerate(spins_of[j]):
                if parts[a, b]:
                    key = (min(si, sj), max(si, sj))
                    coeffs[key] = coeffs.get(key, 0) + int(parts[a, b])

    bad = {k: v for k, v in coeffs.items() if abs(v) > r}
    if bad:
        raise AssertionError(f"split produced out-of-range coefficients: {bad}")

    base = q.registry if q.registry is not None else VariableRegistry(
        tuple(RegistryEntry(i, "logical") for i in range(q.n)))
    extra = []
    for i in range(q.n):
        for a, s in enumerate(spins_of[i][1:], start=1):
            extra.append(RegistryEntry(s, SPLIT_COPY, parents=(i,), copy=a, block=base[i].block))
    registry = base.extend(extra)
    out = QuboProblem(nxt, coeffs, q.offset, registry, q.penalties)

    budget = spin_budget(registry)
    report = SplitReport(tuple(splits), budget["logical"], budget["qubo_aux"], budget["physical_aux"], r)
    return out, report


def adapt(q: QuboProblem, hw: HardwareProfile = HardwareProfile()) -> tuple[QuboProblem, SplitReport, float]:
    """Quantize then split; raises :class:`CapacityError` above ``hw.max_spins``."""
    qi, eps = quantize(q, hw)
    split, report = pas_split(qi, hw)
    if split.n > hw.max_spins:
        raise CapacityError(f"adapted problem needs {split.n} spins; hardware holds {hw.max_spins}")
    return split, report, eps


def merge_copies(assignment, registry: VariableRegistry) -> tuple[np.ndarray, int]:
    """Majority vote over split copies (ties keep the original spin's value).

    Returns a copy of the assignment in which every split spin holds the
    vote result, and the number of spins whose copies disagreed.
    """
    merged = np.array(assignment, dtype=np.int8)
    groups: dict[int, list[int]] = {}
    for e in registry:
        if e.role == SPLIT_COPY:
            groups.setdefault(e.parents[0], []).append(e.spin)
    disagreements = 0
    for parent, extra in groups.items():
        vals = [int(merged[parent])] + [int(merged[s]) for s in extra]
        ones = sum(vals)
        if 0 < ones < len(vals):
            disagreements += 1
            if 2 * ones != len(vals):
                merged[parent] = 1 if 2 * ones > len(vals) else 0
        merged[extra] = merged[parent]
    return merged, disagreements
