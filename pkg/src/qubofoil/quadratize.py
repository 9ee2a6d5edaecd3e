"""Rosenberg quadratization of HUBOs and the QUBO container.

Higher-order terms are reduced by substituting products of two original
variables with auxiliary spins, each guarded by the penalty
``lam * (qi*qj - 2*qi*y - 2*qj*y + 3*y)``, which is zero exactly when
``y == qi*qj`` and at least 1 otherwise.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .pbool import (ROSENBERG_AUX, PseudoBooleanPolynomial, RegistryEntry,
                    VariableRegistry)

FORMAT = "qubofoil.qubo"
FORMAT_VERSION = 1

Pair = tuple[int, int]


class UnsupportedDegreeError(ValueError):
    pass


@dataclass(frozen=True)
class PenaltyRecord:
    aux: int
    parents: Pair
    lam: float

    def to_dict(self) -> dict:
        return {"aux": self.aux, "parents": list(self.parents), "lambda": self.lam}


@dataclass(frozen=True)
class QuboProblem:
    """Upper-triangular QUBO ``E(q) = sum_{i<=j} Q_ij q_i q_j + offset``.

    Diagonal entries carry the linear terms. ``penalties`` lists the
    Rosenberg constraints that were added, so the pure-objective part of the
    matrix can be recovered with :meth:`objective_entries`.
    """

    n: int
    coefficients: Mapping[Pair, float]
    offset: float = 0.0
    registry: VariableRegistry | None = None
    penalties: tuple[PenaltyRecord, ...] = ()

    def __post_init__(self):
        clean: dict[Pair, float] = {}
        for (i, j), v in self.coefficients.items():
            i, j = int(i), int(j)
            if i > j:
                i, j = j, i
            if j >= self.n or i < 0:
                raise ValueError(f"entry ({i}, {j}) outside a {self.n}-spin problem")
            clean[(i, j)] = clean.get((i, j), 0) + v
        object.__setattr__(self, "coefficients", {k: v for k, v in sorted(clean.items()) if v != 0})
        object.__setattr__(self, "penalties", tuple(self.penalties))
        if self.registry is not None and len(self.registry) != self.n:
            raise ValueError(f"registry has {len(self.registry)} entries for {self.n} spins")

    def __len__(self):
        return self.n

    def items(self):
        return self.coefficients.items()

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coefficients.values()), default=0.0)

    def upper_matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for (i, j), v in self.coefficients.items():
            m[i, j] = v
        return m

    def energy(self, q):
        """Energy including the offset; accepts one assignment or rows of them."""
        q = np.asarray(q, dtype=float)
        if q.shape[-1] != self.n:
            raise ValueError(f"expected {self.n} binary values, got {q.shape[-1]}")
        single = q.ndim == 1
        qs = np.atleast_2d(q)
        m = self.upper_matrix()
        e = np.einsum("ri,ij,rj->r", qs, m, qs) + self.offset
        return float(e[0]) if single else e

    def penalty_entries(self) -> dict[Pair, float]:
        out: dict[Pair, float] = {}
        for rec in self.penalties:
            i, j = rec.parents
            for key, mult in (((i, j), 1.0), ((i, rec.aux), -2.0), ((j, rec.aux), -2.0),
                              ((rec.aux, rec.aux), 3.0)):
                key = (min(key), max(key))
                out[key] = out.get(key, 0.0) + mult * rec.lam
        return out

    def objective_entries(self) -> dict[Pair, float]:
        out = dict(self.coefficients)
        for k, v in self.penalty_entries().items():
            out[k] = out.get(k, 0.0) - v
        return out

    def to_dict(self) -> dict:
        def num(v):
            return int(v) if isinstance(v, (int, np.integer)) else float(v)
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "n": self.n,
            "offset": num(self.offset),
            "entries": [[i, j, num(v)] for (i, j), v in self.coefficients.items()],
            "registry": self.registry.to_list() if self.registry is not None else None,
            "penalties": [p.to_dict() for p in self.penalties],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "QuboProblem":
        if data.get("format") != FORMAT:
            raise ValueError(f"not a QUBO document (format={data.get('format')!r})")
        if data.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported QUBO document version {data.get('version')}")
        reg = data.get("registry")
        return cls(int(data["n"]), {(int(i), int(j)): v for i, j, v in data["entries"]},
                   data.get("offset", 0.0),
                   VariableRegistry.from_list(reg) if reg is not None else None,
                   tuple(PenaltyRecord(int(p["aux"]), tuple(p["parents"]), float(p["lambda"]))
                         for p in data.get("penalties", ())))

    @classmethod
    def from_json(cls, text: str) -> "QuboProblem":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PenaltyPolicy:
    eta: float = 1.25
    mode: str = "auto"
    lam: float | None = None

    def __post_init__(self):
        if self.mode not in ("auto", "fixed"):
            raise ValueError(f"penalty mode must be 'auto' or 'fixed', got {self.mode!r}")
        if self.mode == "auto" and not self.eta > 1:
            raise ValueError(f"safety margin eta must exceed 1, got {self.eta}")
        if self.mode == "fixed" and (self.lam is None or self.lam <= 0):
            raise ValueError("fixed penalty mode needs a positive lam")


def flip_bounds(p: PseudoBooleanPolynomial) -> np.ndarray:
    """Per-variable bound on the energy change of a single flip.

    For variable k this is the sum of ``|c|`` over every term containing k,
    which dominates ``|E(q) - E(q with k flipped)|`` for every ``q``.
    """
    bound = np.zeros(p.num_vars)
    for idx, c in p.items():
        for k in idx:
            bound[k] += abs(c)
    return bound


def select_lambda(p: PseudoBooleanPolynomial, policy: PenaltyPolicy = PenaltyPolicy()) -> float:
    if len(p) == 0:
        raise ValueError("cannot size a penalty for an empty polynomial")
    if policy.mode == "fixed":
        return float(policy.lam)
    bounds = flip_bounds(p)
    return float(policy.eta * bounds.max()) if bounds.size else 0.0


def plan_substitutions(supports: Iterable[Iterable[int]]) -> list[Pair]:
    """Greedy choice of variable pairs to replace by auxiliaries.

    Repeatedly picks the pair of original variables shared by the most
    still-cubic-or-higher terms (ties: lexicographically smallest pair) and
    substitutes it everywhere it is available. Terms of degree 4 end up as
    a product of two auxiliaries, degree 3 as an auxiliary times a variable.
    """
    work = []
    for idx in supports:
        idx = tuple(sorted(set(idx)))
        if len(idx) > 4:
            raise UnsupportedDegreeError(f"term {idx} has degree {len(idx)}; at most 4 is supported")
        if len(idx) > 2:
            work.append([set(idx), 0])
    seen = set()
    unique = []
    for t in work:
        key = tuple(sorted(t[0]))
        if key not in seen:
            seen.add(key)
            unique.append(t)
    work = unique

    plan: list[Pair] = []
    while True:
        active = [t for t in work if len(t[0]) + t[1] > 2]
        if not active:
            return plan
        counts: dict[Pair, int] = {}
        for orig, _ in active:
            for pair in itertools.combinations(sorted(orig), 2):
                counts[pair] = counts.get(pair, 0) + 1
        best = min(counts, key=lambda pr: (-counts[pr], pr))
        plan.append(best)
        for t in active:
            if best[0] in t[0] and best[1] in t[0]:
                t[0].difference_update(best)
                t[1] += 1


def _reduce_term(idx: tuple[int, ...], plan_index: Sequence[tuple[Pair, int]]) -> tuple[int, ...]:
    orig = set(idx)
    aux: list[int] = []
    for pair, spin in plan_index:
        if len(orig) + len(aux) <= 2:
            break
        if pair[0] in orig and pair[1] in orig:
            orig.difference_update(pair)
            aux.append(spin)
    if len(orig) + len(aux) > 2:
        raise ValueError(f"substitution plan does not reduce term {idx}")
    return tuple(sorted(orig)) + tuple(aux)


def rosenberg_reduce(p: PseudoBooleanPolynomial, policy: PenaltyPolicy = PenaltyPolicy(),
                     registry: VariableRegistry | None = None,
                     plan: Sequence[Pair] | None = None) -> QuboProblem:
    """Quadratize ``p`` (degree <= 4) into a :class:`QuboProblem`.

    One penalty weight, from :func:`select_lambda` on the unpenalized
    objective, is shared by every auxiliary. ``plan`` fixes the substituted
    pairs (see :func:`plan_substitutions`); pass a common plan when several
    objectives must end up with identical auxiliary layouts.
    """
    if p.degree > 4:
        raise UnsupportedDegreeError(f"polynomial degree {p.degree} exceeds the supported maximum of 4")
    if registry is None:
        registry = VariableRegistry(tuple(RegistryEntry(i, "logical") for i in range(p.num_vars)))
    if len(registry) != p.num_vars:
        raise ValueError(f"registry has {len(registry)} entries for {p.num_vars} variables")
    if plan is None:
        plan = plan_substitutions(k for k, _ in p.items())
    plan = [tuple(sorted(pr)) for pr in plan]

    n0 = p.num_vars
    plan_index = [(pr, n0 + a) for a, pr in enumerate(plan)]
    coeffs: dict[Pair, float] = {}
    offset = 0.0
    used: set[int] = set()
    for idx, c in p.items():
        red = _reduce_term(idx, plan_index) if len(idx) > 2 else idx
        used.update(s for s in red if s >= n0)
        if len(red) == 0:
            offset += c
        elif len(red) == 1:
            coeffs[(red[0], red[0])] = coeffs.get((red[0], red[0]), 0.0) + c
        else:
            key = (min(red), max(red))
            coeffs[key] = coeffs.get(key, 0.0) + c

    # Auxiliaries from a shared plan that this polynomial never touches are
    # still emitted so that every objective shares one spin layout.
    lam = select_lambda(p, policy) if plan else 0.0
    penalties = []
    entries = []
    for pr, spin in plan_index:
        i, j = pr
        for key, mult in (((i, j), 1.0), ((i, spin), -2.0), ((j, spin), -2.0), ((spin, spin), 3.0)):
            coeffs[key] = coeffs.get(key, 0.0) + mult * lam
        penalties.append(PenaltyRecord(spin, pr, lam))
        entries.append(RegistryEntry(spin, ROSENBERG_AUX, parents=pr))
    return QuboProblem(n0 + len(plan), coeffs, offset, registry.extend(entries), tuple(penalties))


def qubo_from_quadratic(p: PseudoBooleanPolynomial, registry: VariableRegistry | None = None) -> QuboProblem:
    if p.degree > 2:
        raise UnsupportedDegreeError("polynomial is not quadratic; use rosenberg_reduce")
    return rosenberg_reduce(p, PenaltyPolicy(), registry, plan=[])


@dataclass(frozen=True)
class IsingModel:
    """``H(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i + offset`` over s in {-1, 1}."""

    couplings: Mapping[Pair, float]
    fields: np.ndarray
    offset: float = 0.0

    @property
    def n(self) -> int:
        return len(self.fields)

    def coupling_matrix(self) -> np.ndarray:
        """Symmetric J with zero diagonal."""
        m = np.zeros((self.n, self.n))
        for (i, j), v in self.couplings.items():
            m[i, j] = m[j, i] = v
        return m

    def energy(self, s):
        s = np.asarray(s, dtype=float)
        single = s.ndim == 1
        ss = np.atleast_2d(s)
        jm = self.coupling_matrix()
        e = -0.5 * np.einsum("ri,ij,rj->r", ss, jm, ss) - ss @ self.fields + self.offset
        return float(e[0]) if single else e


def qubo_to_ising(q: QuboProblem) -> IsingModel:
    """Exact change of variables ``q = (s + 1) / 2``; energies agree including offsets."""
    h = np.zeros(q.n)
    couplings: dict[Pair, float] = {}
    offset = float(q.offset)
    for (i, j), v in q.items():
        if i == j:
            h[i] -= v / 2.0
            offset += v / 2.0
        else:
            couplings[(i, j)] = -v / 4.0
            h[i] -= v / 4.0
            h[j] -= v / 4.0
            offset += v / 4.0
    return IsingModel(couplings, h, offset)


def ising_to_qubo(model: IsingModel, registry: VariableRegistry | None = None) -> QuboProblem:
    """Inverse of :func:`qubo_to_ising` (``s = 2q - 1``)."""
    coeffs: dict[Pair, float] = {}
    offset = float(model.offset)
    for i, hi in enumerate(model.fields):
        coeffs[(i, i)] = coeffs.get((i, i), 0.0) - 2.0 * hi
        offset += hi
    for (i, j), jv in model.couplings.items():
        coeffs[(i, j)] = coeffs.get((i, j), 0.0) - 4.0 * jv
        coeffs[(i, i)] = coeffs.get((i, i), 0.0) + 2.0 * jv
        coeffs[(j, j)] = coeffs.get((j, j), 0.0) + 2.0 * jv
        offset -= jv
    return QuboProblem(model.n, coeffs, offset, registry)
