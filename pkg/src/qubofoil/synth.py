"""Synthetic aerodynamic oracles standing in for XFOIL sweeps.

The ``naca-quartic`` family defines three independent quartic polynomials of
the NACA 4-digit parameters (A, B, T):

``LD``  lift-to-drag stand-in: increasing in A, a shallow optimum in B and a
        skewed single peak in T whose asymmetry is set by ``skew`` in [0, 1]
``CL``  lift coefficient, increasing and concave in T
``CD``  drag coefficient, increasing and convex in T for T >= 10

``LD`` is its own polynomial, not the ratio ``CL / CD``, so that a fourth-order
fit of noise-free data is exact.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .geometry import STANDARD_BOUNDS
from .surrogate import SampleSet

OBJECTIVES = ("LD", "CL", "CD")

# Integer sampling grid of the full NACA 4-digit case: 7 x 4 x 15 = 420 points.
STANDARD_GRID = {"A": (0.0, 6.0, 1.0), "B": (2.0, 5.0, 1.0), "T": (6.0, 20.0, 1.0)}


def skewed_peak(u: np.ndarray, skew: float) -> np.ndarray:
    """Unit-height quartic bump on [0, 1]; symmetric at skew=0, peak at u=1/4 at skew=1."""
    return (1.0 - skew) * 16.0 * u ** 2 * (1.0 - u) ** 2 + skew * (256.0 / 27.0) * u * (1.0 - u) ** 3


@dataclass(frozen=True)
class NacaQuartic:
    skew: float = 0.75
    fixed: Mapping[str, float] = field(default_factory=lambda: {"A": 6.0, "B": 4.0, "T": 12.0})

    def __post_init__(self):
        if not 0.0 <= self.skew <= 1.0:
            raise ValueError(f"skew must lie in [0, 1], got {self.skew}")

    def _unpack(self, names: Sequence[str], x: np.ndarray):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        cols = {}
        for key in ("A", "B", "T"):
            if key in names:
                cols[key] = x[:, list(names).index(key)]
            elif key in self.fixed:
                cols[key] = np.full(x.shape[0], float(self.fixed[key]))
            else:
                raise KeyError(f"oracle needs a value for {key}")
        unknown = set(names) - {"A", "B", "T"}
        if unknown:
            raise KeyError(f"oracle has no variables {sorted(unknown)}")
        return cols["A"], cols["B"], cols["T"]

    def evaluate(self, names: Sequence[str], x) -> np.ndarray:
        """Objective values (columns LD, CL, CD) at the rows of ``x``."""
        a, b, t = self._unpack(names, x)
        ua = (a - STANDARD_BOUNDS["A"][0]) / (STANDARD_BOUNDS["A"][1] - STANDARD_BOUNDS["A"][0])
        ub = (b - STANDARD_BOUNDS["B"][0]) / (STANDARD_BOUNDS["B"][1] - STANDARD_BOUNDS["B"][0])
        ut = (t - STANDARD_BOUNDS["T"][0]) / (STANDARD_BOUNDS["T"][1] - STANDARD_BOUNDS["T"][0])
        ld = (40.0 + 45.0 * ua - 10.0 * ua ** 2 + 8.0 * ub - 14.0 * (ub - 0.55) ** 2
              + 60.0 * skewed_peak(ut, self.skew) + 6.0 * ua * ut - 4.0 * ub * ut)
        d = t - 10.0
        cl = 0.45 + 0.09 * a + 0.02 * (b - 4.0) + 0.1 * d - 0.005 * d ** 2
        cd = (0.0065 + 0.0004 * a + 0.0002 * (b - 4.0) ** 2 + 1.0e-4 * d ** 2
              + self.skew * 2.0e-6 * d ** 3 + 1.0e-7 * d ** 4)
        return np.column_stack([ld, cl, cd])


ORACLES = {"naca-quartic": NacaQuartic}


def grid_points(grid: Mapping[str, Sequence[float]]) -> tuple[tuple[str, ...], np.ndarray]:
    """Full factorial grid from ``{name: (lower, upper, step)}``; last name varies fastest."""
    names = tuple(grid)
    axes = []
    for name in names:
        lo, hi, step = (float(v) for v in grid[name])
        if step <= 0 or hi < lo:
            raise ValueError(f"bad grid for {name}: {grid[name]}")
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1
        axes.append(lo + step * np.arange(count))
    pts = np.array(list(itertools.product(*axes)), dtype=float)
    return names, pts


def synthesize(oracle: str = "naca-quartic", grid: Mapping[str, Sequence[float]] = STANDARD_GRID,
               skew: float = 0.75, noise: float = 0.0, seed: int = 0,
               fixed: Mapping[str, float] | None = None,
               objectives: Sequence[str] = OBJECTIVES) -> SampleSet:
    """Sample an oracle on a grid.

    ``noise`` adds Gaussian noise with standard deviation ``noise`` times
    each objective's spread over the grid.
    """
    if oracle not in ORACLES:
        raise ValueError(f"unknown oracle {oracle!r}; available: {sorted(ORACLES)}")
    kwargs = {"skew": skew}
    if fixed is not None:
        kwargs["fixed"] = dict(fixed)
    model = ORACLES[oracle](**kwargs)
    names, x = grid_points(grid)
    y = model.evaluate(names, x)
    cols = [OBJECTIVES.index(o) for o in objectives]
    y = y[:, cols]
    if noise:
        rng = np.random.default_rng(seed)
        y = y + noise * y.std(axis=0) * rng.standard_normal(y.shape)
    return SampleSet(names, tuple(objectives), x, y)
