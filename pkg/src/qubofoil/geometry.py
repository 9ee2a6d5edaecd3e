"""NACA 4-digit airfoil geometry and decoding of solver output to designs."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .hwadapt import merge_copies
from .pbool import SPLIT_COPY, VariableRegistry, decode_point
from .surrogate import DesignSpace

# Bounds of the NACA 4-digit design space used in the case studies (percent of chord;
# camber location in tenths of chord).
STANDARD_BOUNDS = {"A": (0.0, 6.0), "B": (2.0, 5.0), "T": (6.0, 20.0)}

_THICKNESS = (0.2969, -0.1260, -0.3516, 0.2843)
_TE_CLOSED = -0.1036
_TE_OPEN = -0.1015


@dataclass(frozen=True)
class AirfoilParams:
    """Maximum camber ``A`` (% chord), its location ``B`` (tenths of chord),
    maximum thickness ``T`` (% chord) and chord length."""

    A: float
    B: float
    T: float
    chord: float = 1.0

    def __post_init__(self):
        if self.T < 0 or self.A < 0:
            raise ValueError(f"camber and thickness must be nonnegative (A={self.A}, T={self.T})")
        if self.chord <= 0:
            raise ValueError("chord must be positive")
        if self.A > 0 and not 0 < self.B < 10:
            raise ValueError(f"camber location B={self.B} must lie strictly inside the chord")
        outside = [k for k, (lo, hi) in STANDARD_BOUNDS.items() if not lo <= getattr(self, k) <= hi]
        if outside:
            warnings.warn(f"airfoil parameters {outside} lie outside the standard design space {STANDARD_BOUNDS}",
                          stacklevel=3)

    @property
    def name(self) -> str:
        return f"NACA {self.A:g}/{self.B:g}/{self.T:g}"


@dataclass(frozen=True)
class AirfoilCoordinates:
    """Upper and lower surfaces, each ordered leading edge -> trailing edge."""

    upper: np.ndarray
    lower: np.ndarray
    camber: np.ndarray
    closed_te: bool
    name: str = "airfoil"

    def selig(self) -> np.ndarray:
        """Points in coordinate-file order: upper TE -> LE -> lower TE."""
        return np.vstack([self.upper[::-1], self.lower[1:]])

    def to_selig(self) -> str:
        lines = [self.name]
        lines += [f"{x: .6f} {y: .6f}" for x, y in self.selig()]
        return "\n".join(lines) + "\n"

    def write_selig(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_selig())


def camber_line(x: np.ndarray, m: float, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Mean-line ordinate and slope for camber ``m`` at location ``p`` (chord fractions)."""
    yc = np.zeros_like(x)
    dyc = np.zeros_like(x)
    if m == 0:
        return yc, dyc
    fore = x < p
    yc[fore] = m / p ** 2 * (2 * p * x[fore] - x[fore] ** 2)
    dyc[fore] = 2 * m / p ** 2 * (p - x[fore])
    aft = ~fore
    yc[aft] = m / (1 - p) ** 2 * ((1 - 2 * p) + 2 * p * x[aft] - x[aft] ** 2)
    dyc[aft] = 2 * m / (1 - p) ** 2 * (p - x[aft])
    return yc, dyc


def half_thickness(x: np.ndarray, t: float, closed_te: bool = True) -> np.ndarray:
    a4 = _TE_CLOSED if closed_te else _TE_OPEN
    a0, a1, a2, a3 = _THICKNESS
    return 5 * t * (a0 * np.sqrt(x) + a1 * x + a2 * x ** 2 + a3 * x ** 3 + a4 * x ** 4)


def naca4_coordinates(p: AirfoilParams, points_per_surface: int = 100,
                      closed_te: bool = True) -> AirfoilCoordinates:
    """Standard NACA 4-digit construction on a cosine-spaced chord.

    Thickness is laid off perpendicular to the camber line, so on cambered
    sections the upper surface reaches slightly ahead of ``x = 0``.
    """
    if points_per_surface < 10:
        raise ValueError("points_per_surface must be at least 10")
    beta = np.linspace(0.0, np.pi, points_per_surface)
    x = 0.5 * (1.0 - np.cos(beta))
    m, loc, t = p.A / 100.0, p.B / 10.0, p.T / 100.0
    yc, dyc = camber_line(x, m, loc)
    yt = half_thickness(x, t, closed_te)
    theta = np.arctan(dyc)
    upper = np.column_stack([x - yt * np.sin(theta), yc + yt * np.cos(theta)]) * p.chord
    lower = np.column_stack([x + yt * np.sin(theta), yc - yt * np.cos(theta)]) * p.chord
    return AirfoilCoordinates(upper, lower, np.column_stack([x, yc]) * p.chord, closed_te, p.name)


def max_thickness(coords: AirfoilCoordinates, samples: int = 20001) -> float:
    """Largest vertical gap between the surfaces, by dense interpolation."""
    xs = np.linspace(max(coords.upper[:, 0].min(), coords.lower[:, 0].min(), 0.0),
                     min(coords.upper[:, 0].max(), coords.lower[:, 0].max()), samples)
    up = np.interp(xs, coords.upper[:, 0], coords.upper[:, 1])
    lo = np.interp(xs, coords.lower[:, 0], coords.lower[:, 1])
    return float(np.max(up - lo))


def decode_design(assignment, registry: VariableRegistry, space: DesignSpace, block: int | None = None,
                  max_disagreement: float = 0.5) -> dict[str, float]:
    """Read a named design point from a solver assignment.

    Auxiliary spins are ignored. Split copies are merged by majority vote;
    any disagreement warns, and more than ``max_disagreement`` of the split
    spins disagreeing raises ``ValueError``.
    """
    assignment = np.asarray(assignment)
    if assignment.shape != (len(registry),):
        raise ValueError(f"assignment has {assignment.size} spins, registry has {len(registry)}")
    registry.validate_against(space, block)
    groups = {e.parents[0] for e in registry if e.role == SPLIT_COPY}
    merged, bad = merge_copies(assignment, registry)
    if bad:
        msg = f"{bad} of {len(groups)} split spins have inconsistent copies"
        if bad > max_disagreement * len(groups):
            raise ValueError(msg)
        warnings.warn(msg + "; resolved by majority vote", stacklevel=2)
    x = decode_point(space, registry, merged, block)
    return dict(zip(space.names, (float(v) for v in x)))


def airfoil_from_design(design: Mapping[str, float], fixed: Mapping[str, float] | None = None,
                        chord: float = 1.0) -> AirfoilParams:
    """AirfoilParams from a decoded design, filling missing A/B/T from ``fixed``."""
    vals = dict(fixed or {})
    vals.update(design)
    missing = [k for k in ("A", "B", "T") if k not in vals]
    if missing:
        raise KeyError(f"design lacks airfoil parameters {missing}")
    return AirfoilParams(vals["A"], vals["B"], vals["T"], chord)
