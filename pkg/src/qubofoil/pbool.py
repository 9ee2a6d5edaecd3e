"""Multilinear pseudo-Boolean polynomials and fixed-point design encoding.

A surrogate over a bit-encoded design space becomes a higher-order binary
polynomial (HUBO) by substituting the affine encoding of every variable
and reducing ``q**2 = q``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .surrogate import DesignSpace, PolynomialSurrogate

Term = tuple[int, ...]

PRUNE_TOL = 1e-15

DESIGN_BIT = "design-bit"
ROSENBERG_AUX = "rosenberg-aux"
SPLIT_COPY = "split-copy"


def _canonical(idx: Iterable[int]) -> Term:
    return tuple(sorted(set(int(i) for i in idx)))


class PseudoBooleanPolynomial:
    """Sparse multilinear polynomial over ``num_vars`` binary variables.

    Terms are keyed by sorted tuples of distinct indices; repeated indices
    in the input collapse (``q*q = q``) and like terms are merged.
    Coefficients below ``1e-15`` (relative to the largest one, floored at
    an absolute 1e-15) are dropped.
    """

    __slots__ = ("num_vars", "_terms")

    def __init__(self, num_vars: int, terms: Mapping[Iterable[int], float] | Iterable = ()):
        self.num_vars = int(num_vars)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Term, float] = {}
        for idx, c in items:
            key = _canonical(idx)
            if key and (key[0] < 0 or key[-1] >= self.num_vars):
                raise ValueError(f"term {key} outside [0, {self.num_vars})")
            acc[key] = acc.get(key, 0.0) + float(c)
        biggest = max((abs(v) for v in acc.values()), default=0.0)
        cut = PRUNE_TOL * max(1.0, biggest)
        self._terms = {k: v for k, v in acc.items() if abs(v) > cut}

    @property
    def terms(self) -> dict[Term, float]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        return (isinstance(other, PseudoBooleanPolynomial) and other.num_vars == self.num_vars
                and other._terms == self._terms)

    def __repr__(self):
        return f"PseudoBooleanPolynomial(num_vars={self.num_vars}, terms={self._terms!r})"

    @property
    def degree(self) -> int:
        return max((len(k) for k in self._terms), default=0)

    @property
    def constant(self) -> float:
        return self._terms.get((), 0.0)

    def scaled(self, c: float) -> "PseudoBooleanPolynomial":
        return PseudoBooleanPolynomial(self.num_vars, {k: c * v for k, v in self._terms.items()})

    def __add__(self, other: "PseudoBooleanPolynomial") -> "PseudoBooleanPolynomial":
        n = max(self.num_vars, other.num_vars)
        return PseudoBooleanPolynomial(n, list(self._terms.items()) + list(other._terms.items()))

    def __call__(self, q):
        return eval_pbp(self, q)

    def to_dict(self) -> dict:
        return {"num_vars": self.num_vars,
                "terms": [[list(k), v] for k, v in sorted(self._terms.items(),
                                                         key=lambda kv: (len(kv[0]), kv[0]))]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "PseudoBooleanPolynomial":
        return cls(int(data["num_vars"]), [(tuple(k), float(v)) for k, v in data["terms"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def multilinear_product(a: Mapping[Term, float], b: Mapping[Term, float]) -> dict[Term, float]:
    out: dict[Term, float] = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            key = _canonical(ka + kb)
            out[key] = out.get(key, 0.0) + va * vb
    return out


def eval_pbp(p: PseudoBooleanPolynomial, q):
    """Evaluate ``p`` at one binary vector or at each row of a 2-D array."""
    q = np.asarray(q)
    if q.shape[-1] != p.num_vars:
        raise ValueError(f"expected {p.num_vars} binary values, got {q.shape[-1]}")
    single = q.ndim == 1
    qs = np.atleast_2d(q).astype(bool)
    out = np.zeros(qs.shape[0])
    for idx, c in p.items():
        if idx:
            out += c * np.all(qs[:, list(idx)], axis=1)
        else:
            out += c
    return float(out[0]) if single else out


@dataclass(frozen=True)
class RegistryEntry:
    """Role of one spin.

    ``variable``/``bit`` are set for design bits (bit 1 is least
    significant), ``parents`` holds the substituted spin pair of a Rosenberg
    auxiliary or the original spin of a split copy, and ``block`` tags the
    scenario a spin belongs to after block composition.
    """

    spin: int
    role: str
    variable: str | None = None
    bit: int | None = None
    parents: tuple[int, ...] = ()
    copy: int | None = None
    block: int | None = None

    def to_dict(self) -> dict:
        out = {"spin": self.spin, "role": self.role}
        if self.variable is not None:
            out["variable"] = self.variable
            out["bit"] = self.bit
        if self.parents:
            out["parents"] = list(self.parents)
        if self.copy is not None:
            out["copy"] = self.copy
        if self.block is not None:
            out["block"] = self.block
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "RegistryEntry":
        return cls(int(d["spin"]), d["role"], d.get("variable"), d.get("bit"),
                   tuple(d.get("parents", ())), d.get("copy"), d.get("block"))


@dataclass(frozen=True)
class VariableRegistry:
    entries: tuple[RegistryEntry, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        for i, e in enumerate(entries):
            if e.spin != i:
                raise ValueError(f"registry spins must be contiguous from 0; entry {i} has spin {e.spin}")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i) -> RegistryEntry:
        return self.entries[i]

    def extend(self, new: Sequence[RegistryEntry]) -> "VariableRegistry":
        return VariableRegistry(self.entries + tuple(new))

    def count(self, role: str) -> int:
        return sum(1 for e in self.entries if e.role == role)

    def design_bits(self, block: int | None = None) -> dict[str, dict[int, int]]:
        """Map variable name -> {bit position: spin} (optionally for one block)."""
        out: dict[str, dict[int, int]] = {}
        for e in self.entries:
            if e.role == DESIGN_BIT and (block is None or e.block == block):
                out.setdefault(e.variable, {})[e.bit] = e.spin
        return out

    def blocks(self) -> list[int]:
        return sorted({e.block for e in self.entries if e.block is not None})

    def shifted(self, offset: int, block: int | None) -> list[RegistryEntry]:
        return [replace(e, spin=e.spin + offset, parents=tuple(p + offset for p in e.parents),
                        block=block if block is not None else e.block)
                for e in self.entries]

    def validate_against(self, space: DesignSpace, block: int | None = None) -> None:
        bits = self.design_bits(block)
        for v in space.variables:
            have = sorted(bits.get(v.name, {}))
            if have != list(range(1, v.bits + 1)):
                raise ValueError(f"registry holds bits {have} for {v.name!r}, expected 1..{v.bits}")

    def to_list(self) -> list[dict]:
        return [e.to_dict() for e in self.entries]

    @classmethod
    def from_list(cls, data: Sequence[Mapping]) -> "VariableRegistry":
        return cls(tuple(RegistryEntry.from_dict(d) for d in data))

    @classmethod
    def for_space(cls, space: DesignSpace) -> "VariableRegistry":
        entries = []
        for v in space.variables:
            for k in range(1, v.bits + 1):
                entries.append(RegistryEntry(len(entries), DESIGN_BIT, v.name, k))
        return cls(tuple(entries))


def encode_value(space: DesignSpace, var_index: int, bits) -> float:
    """Continuous value represented by a bit vector (LSB first)."""
    v = space[var_index]
    bits = np.asarray(bits, dtype=int)
    if bits.shape != (v.bits,):
        raise ValueError(f"variable {v.name!r} uses {v.bits} bits, got {bits.shape[0] if bits.ndim else 0}")
    level = int(np.dot(bits, 1 << np.arange(v.bits)))
    return v.lower + (v.upper - v.lower) / (2 ** v.bits - 1) * level


def value_to_bits(space: DesignSpace, var_index: int, value: float) -> np.ndarray:
    """Bit pattern of the grid level nearest to ``value``."""
    v = space[var_index]
    level = int(np.clip(np.rint((value - v.lower) / v.step), 0, 2 ** v.bits - 1))
    return (level >> np.arange(v.bits)) & 1


def decode_point(space: DesignSpace, registry: VariableRegistry, q, block: int | None = None) -> np.ndarray:
    """Design point read from the design-bit spins of ``q``."""
    q = np.asarray(q)
    bits = registry.design_bits(block)
    x = np.empty(len(space))
    for i, v in enumerate(space.variables):
        spins = bits[v.name]
        x[i] = encode_value(space, i, [q[spins[k]] for k in range(1, v.bits + 1)])
    return x


def compile_hubo(model: PolynomialSurrogate, space: DesignSpace,
                 sense: str = "minimize") -> tuple[PseudoBooleanPolynomial, VariableRegistry]:
    """Substitute the fixed-point encoding into ``model``.

    The result is multilinear with degree at most ``model.order``; for
    ``sense="maximize"`` every coefficient is negated so the polynomial is
    always minimized.
    """
    if model.n != len(space):
        raise ValueError(f"model has {model.n} variables, design space has {len(space)}")
    if sense not in ("minimize", "maximize"):
        raise ValueError(f"sense must be 'minimize' or 'maximize', got {sense!r}")
    registry = VariableRegistry.for_space(space)
    factors = []
    offset = 0
    for v in space.variables:
        f: dict[Term, float] = {(): v.lower}
        for k in range(v.bits):
            f[(offset + k,)] = v.step * 2.0 ** k
        factors.append(f)
        offset += v.bits

    sign = -1.0 if sense == "maximize" else 1.0
    acc: dict[Term, float] = {}
    powers: dict[tuple[int, int], dict[Term, float]] = {}
    for idx, c in model.coefficients.items():
        term: dict[Term, float] = {(): sign * c}
        for i in sorted(set(idx)):
            e = idx.count(i)
            if (i, e) not in powers:
                p: dict[Term, float] = {(): 1.0}
                for _ in range(e):
                    p = multilinear_product(p, factors[i])
                powers[(i, e)] = p
            term = multilinear_product(term, powers[(i, e)])
        for k, v in term.items():
            acc[k] = acc.get(k, 0.0) + v
    return PseudoBooleanPolynomial(len(registry), acc), registry
