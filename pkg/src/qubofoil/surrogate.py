"""Polynomial response surface models.

Second- and fourth-order least-squares surrogates over a bounded design
space, together with the sample containers they are trained on.
"""
from __future__ import annotations

import csv
import itertools
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

Monomial = tuple[int, ...]


@dataclass(frozen=True)
class DesignVariable:
    name: str
    lower: float
    upper: float
    bits: int = 8

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"variable {self.name!r}: lower bound must be < upper bound")
        if int(self.bits) != self.bits or self.bits < 1:
            raise ValueError(f"variable {self.name!r}: bit width must be a positive integer")

    @property
    def step(self) -> float:
        """Grid spacing of the fixed-point encoding."""
        return (self.upper - self.lower) / (2 ** self.bits - 1)

    def grid(self) -> np.ndarray:
        return self.lower + self.step * np.arange(2 ** self.bits)


@dataclass(frozen=True)
class DesignSpace:
    """Ordered collection of bounded, bit-encoded continuous variables."""

    variables: tuple[DesignVariable, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        if not names:
            raise ValueError("design space needs at least one variable")

    @classmethod
    def from_bounds(cls, bounds: Mapping[str, tuple[float, float]], bits: int | Mapping[str, int] = 8):
        variables = []
        for name, (lo, hi) in bounds.items():
            k = bits[name] if isinstance(bits, Mapping) else bits
            variables.append(DesignVariable(name, float(lo), float(hi), int(k)))
        return cls(tuple(variables))

    def with_bits(self, bits: int | Mapping[str, int]) -> "DesignSpace":
        return DesignSpace(tuple(
            DesignVariable(v.name, v.lower, v.upper,
                           int(bits[v.name] if isinstance(bits, Mapping) else bits))
            for v in self.variables))

    def __len__(self):
        return len(self.variables)

    def __getitem__(self, item) -> DesignVariable:
        if isinstance(item, str):
            return self.variables[self.index(item)]
        return self.variables[item]

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables])

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.upper for v in self.variables])

    @property
    def total_bits(self) -> int:
        return sum(v.bits for v in self.variables)

    def index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise KeyError(name)

    def contains(self, x, atol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def snap(self, x) -> np.ndarray:
        """Round a continuous point to the nearest encodable grid value."""
        x = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        steps = np.array([v.step for v in self.variables])
        levels = np.rint((x - self.lower) / steps)
        return self.lower + levels * steps

    def to_dict(self) -> dict:
        return {"variables": [
            {"name": v.name, "lower": v.lower, "upper": v.upper, "bits": v.bits}
            for v in self.variables]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "DesignSpace":
        return cls(tuple(DesignVariable(d["name"], float(d["lower"]), float(d["upper"]),
                                        int(d.get("bits", 8)))
                         for d in data["variables"]))


@dataclass(frozen=True)
class SampleSet:
    """Training data: design points ``x`` (rows) and objective values ``y``."""

    variable_names: tuple[str, ...]
    objective_names: tuple[str, ...]
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
        if x.shape[1] != len(self.variable_names):
            raise ValueError("x column count does not match variable names")
        if y.shape[1] != len(self.objective_names):
            raise ValueError("y column count does not match objective names")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))
        object.__setattr__(self, "objective_names", tuple(self.objective_names))

    def __len__(self):
        return self.x.shape[0]

    def objective_index(self, name: str) -> int:
        try:
            return self.objective_names.index(name)
        except ValueError:
            raise KeyError(f"unknown objective {name!r}; have {list(self.objective_names)}") from None

    def check_bounds(self, space: DesignSpace) -> int:
        """Warn about rows outside ``space``; returns how many there were."""
        if list(space.names) != list(self.variable_names):
            raise ValueError(f"sample variables {self.variable_names} do not match space {space.names}")
        outside = np.any((self.x < space.lower - 1e-12) | (self.x > space.upper + 1e-12), axis=1)
        count = int(outside.sum())
        if count:
            warnings.warn(f"{count} sample rows lie outside the design space bounds", stacklevel=2)
        return count

    def to_csv(self, path) -> None:
        header = [f"x:{n}" for n in self.variable_names] + [f"y:{n}" for n in self.objective_names]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for xr, yr in zip(self.x, self.y):
                writer.writerow([repr(float(v)) for v in xr] + [repr(float(v)) for v in yr])

    @classmethod
    def from_csv(cls, path) -> "SampleSet":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{path}: empty sample file")
        header = [h.strip() for h in rows[0]]
        xcols = [i for i, h in enumerate(header) if h.startswith("x:")]
        ycols = [i for i, h in enumerate(header) if h.startswith("y:")]
        if len(xcols) + len(ycols) != len(header) or not xcols or not ycols:
            raise ValueError(f"{path}: header must be x:<name>,...,y:<objective>,... columns")
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        if data.size == 0:
            data = np.zeros((0, len(header)))
        return cls(tuple(header[i][2:] for i in xcols), tuple(header[i][2:] for i in ycols),
                   data[:, xcols], data[:, ycols])


def monomial_basis(n: int, order: int) -> list[Monomial]:
    """All sorted multi-indices over ``n`` variables with length 0..order."""
    basis: list[Monomial] = []
    for d in range(order + 1):
        basis.extend(itertools.combinations_with_replacement(range(n), d))
    return basis


def design_matrix(x: np.ndarray, basis: Sequence[Monomial]) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.ones((x.shape[0], len(basis)))
    for col, idx in enumerate(basis):
        for i in idx:
            out[:, col] *= x[:, i]
    return out


def _poly_mul(a: Mapping[Monomial, float], b: Mapping[Monomial, float]) -> dict[Monomial, float]:
    out: dict[Monomial, float] = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            key = tuple(sorted(ka + kb))
            out[key] = out.get(key, 0.0) + va * vb
    return out


def _affine_substitute(coeffs: Mapping[Monomial, float], scale: np.ndarray,
                       shift: np.ndarray) -> dict[Monomial, float]:
    """Rewrite p(z) with z_i = scale_i * x_i + shift_i as a polynomial in x."""
    factors = [{(): float(shift[i]), (i,): float(scale[i])} for i in range(len(scale))]
    out: dict[Monomial, float] = {}
    for idx, c in coeffs.items():
        term: dict[Monomial, float] = {(): c}
        for i in idx:
            term = _poly_mul(term, factors[i])
        for k, v in term.items():
            out[k] = out.get(k, 0.0) + v
    return out


@dataclass(frozen=True)
class PolynomialSurrogate:
    """Multivariate polynomial of order <= 4 in canonical monomial form.

    ``coefficients`` maps a sorted tuple of variable indices (with
    repetition) to its coefficient; ``()`` is the intercept.
    """

    order: int
    n: int
    coefficients: Mapping[Monomial, float]
    r_squared: float = float("nan")
    residual_norm: float = float("nan")
    variable_names: tuple[str, ...] | None = None

    def __post_init__(self):
        clean: dict[Monomial, float] = {}
        for idx, c in self.coefficients.items():
            key = tuple(sorted(int(i) for i in idx))
            if len(key) > self.order:
                raise ValueError(f"monomial {key} exceeds order {self.order}")
            if key and (key[0] < 0 or key[-1] >= self.n):
                raise ValueError(f"monomial {key} references a variable outside [0, {self.n})")
            clean[key] = clean.get(key, 0.0) + float(c)
        object.__setattr__(self, "coefficients", clean)
        if self.variable_names is not None:
            object.__setattr__(self, "variable_names", tuple(self.variable_names))

    def __call__(self, x):
        return eval_rsm(self, x)

    def basis(self) -> list[Monomial]:
        return monomial_basis(self.n, self.order)

    def coefficient_vector(self, basis: Sequence[Monomial] | None = None) -> np.ndarray:
        basis = self.basis() if basis is None else basis
        return np.array([self.coefficients.get(m, 0.0) for m in basis])

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "n": self.n,
            "variable_names": list(self.variable_names) if self.variable_names else None,
            "coefficients": [[list(k), v] for k, v in sorted(self.coefficients.items(),
                                                            key=lambda kv: (len(kv[0]), kv[0]))],
            "r_squared": self.r_squared,
            "residual_norm": self.residual_norm,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PolynomialSurrogate":
        names = data.get("variable_names")
        return cls(int(data["order"]), int(data["n"]),
                   {tuple(k): float(v) for k, v in data["coefficients"]},
                   float(data.get("r_squared", float("nan"))),
                   float(data.get("residual_norm", float("nan"))),
                   tuple(names) if names else None)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


class RankDeficientError(ValueError):
    """The design matrix cannot identify every basis coefficient."""

    def __init__(self, terms: Iterable[Monomial], names: Sequence[str] | None = None):
        self.terms = list(terms)
        label = [_monomial_label(t, names) for t in self.terms]
        super().__init__(f"rank-deficient design matrix; unidentifiable basis terms: {label}")


def _monomial_label(idx: Monomial, names: Sequence[str] | None = None) -> str:
    if not idx:
        return "1"
    names = names or [f"x{i}" for i in range(max(idx) + 1)]
    return "*".join(names[i] for i in idx)


def r_squared(y: np.ndarray, yhat: np.ndarray) -> float:
    """Coefficient of determination; 1.0 for an exactly-fit constant target."""
    y = np.asarray(y, dtype=float)
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    scale = max(1.0, float(np.sum(y ** 2)))
    if ss_tot <= 1e-28 * scale:
        return 1.0 if ss_res <= 1e-20 * scale else 0.0
    return 1.0 - ss_res / ss_tot


def fit_rsm(samples: SampleSet, objective_index: int | str = 0, order: int = 2) -> PolynomialSurrogate:
    """Least-squares fit of a full polynomial basis of the given order.

    Inputs are mapped affinely to [-1, 1] per column before the solve and the
    coefficients are transformed back to the original variables afterwards.

    Raises
    ------
    ValueError
        If there are fewer samples than basis terms.
    RankDeficientError
        If the design matrix does not have full column rank; the error lists
        the basis terms that could not be identified.
    """
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order}")
    if isinstance(objective_index, str):
        objective_index = samples.objective_index(objective_index)
    x = samples.x
    y = samples.y[:, objective_index]
    m, n = x.shape
    basis = monomial_basis(n, order)
    if m < len(basis):
        raise ValueError(f"underdetermined fit: {m} samples for {len(basis)} basis terms "
                         f"(order {order}, {n} variables)")

    lo, hi = x.min(axis=0), x.max(axis=0)
    half = (hi - lo) / 2.0
    mid = (hi + lo) / 2.0
    half = np.where(half > 0, half, 1.0)
    z = (x - mid) / half
    a = design_matrix(z, basis)

    q, r, piv = scipy.linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(a.shape) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if rank < len(basis):
        raise RankDeficientError([basis[j] for j in piv[rank:]], samples.variable_names)
    beta_perm = scipy.linalg.solve_triangular(r, q.T @ y)
    beta_z = np.empty(len(basis))
    beta_z[piv] = beta_perm

    coeffs = _affine_substitute(dict(zip(basis, beta_z)), 1.0 / half, -mid / half)
    coeffs = {k: coeffs.get(k, 0.0) for k in basis}
    yhat = a @ beta_z
    return PolynomialSurrogate(order, n, coeffs, r_squared(y, yhat),
                               float(np.linalg.norm(y - yhat)), samples.variable_names)


def _check_dim(model: PolynomialSurrogate, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.n:
        raise ValueError(f"expected {model.n} coordinates, got {x.shape[-1]}")
    return x


def eval_rsm(model: PolynomialSurrogate, x):
    """Evaluate the surrogate at one point (returns float) or a batch of rows."""
    x = _check_dim(model, x)
    single = x.ndim == 1
    xs = np.atleast_2d(x)
    out = np.zeros(xs.shape[0])
    for idx, c in model.coefficients.items():
        term = np.full(xs.shape[0], c)
        for i in idx:
            term = term * xs[:, i]
        out += term
    return float(out[0]) if single else out


def grad_rsm(model: PolynomialSurrogate, x) -> np.ndarray:
    """Analytic gradient of the surrogate at a single point."""
    x = _check_dim(model, x)
    if x.ndim != 1:
        raise ValueError("grad_rsm takes a single point")
    g = np.zeros(model.n)
    for idx, c in model.coefficients.items():
        for pos, i in enumerate(idx):
            rest = idx[:pos] + idx[pos + 1:]
            g[i] += c * np.prod(x[list(rest)]) if rest else c
    return g
