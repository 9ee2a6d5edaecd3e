"""QUBO minimizers and convergence metrics.

Backends
--------
``solve_bruteforce``  exhaustive enumeration (exact, N <= 26 by default)
``solve_sa``          Metropolis single-spin-flip simulated annealing
``solve_isingdyn``    mean-field amplitude dynamics; a software analogue of an
                      optical Ising machine, not a model of its physics
``solve_gd``          projected multi-start gradient descent on the continuous
                      surrogate (the classical local-search baseline)

Every record's ``energy`` is the exact QUBO energy (offset included) of its
``assignment``.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .quadratize import QuboProblem, qubo_to_ising
from .surrogate import DesignSpace, PolynomialSurrogate, eval_rsm, grad_rsm

BRUTEFORCE_CAP = 26


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrajectoryPoint:
    step: int
    time: float
    energy: float


@dataclass
class SolveRecord:
    """Outcome of one backend invocation.

    ``trajectory`` holds best-so-far energies against a deterministic step
    counter and the wall-clock time at which they were reached.
    """

    assignment: np.ndarray
    energy: float
    trajectory: list[TrajectoryPoint]
    backend: str
    seed: int | None = None
    replicas: int = 1
    replica_assignments: list[np.ndarray] = field(default_factory=list)
    replica_energies: list[float] = field(default_factory=list)
    replica_trajectories: list[list[TrajectoryPoint]] = field(default_factory=list)
    argmin: np.ndarray | None = None
    n_argmin: int | None = None
    elapsed: float = 0.0

    @property
    def initial_energy(self) -> float:
        return self.trajectory[0].energy

    def to_dict(self, timing: bool = True) -> dict:
        def traj(points):
            return [[p.step, p.time, p.energy] if timing else [p.step, p.energy] for p in points]
        out = {
            "backend": self.backend,
            "seed": self.seed,
            "replicas": self.replicas,
            "assignment": [int(v) for v in self.assignment],
            "energy": float(self.energy),
            "trajectory": traj(self.trajectory),
            "replica_energies": [float(e) for e in self.replica_energies],
            "replica_assignments": [[int(v) for v in a] for a in self.replica_assignments],
            "replica_trajectories": [traj(t) for t in self.replica_trajectories],
        }
        if self.argmin is not None:
            out["argmin"] = [int(z) for z in self.argmin]
            out["n_argmin"] = self.n_argmin
        if timing:
            out["elapsed"] = self.elapsed
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True)

    def trajectory_text(self) -> str:
        lines = ["# time_s best_energy"]
        lines += [f"{p.time!r} {p.energy!r}" for p in self.trajectory]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SolveRecord":
        def traj(points):
            return [TrajectoryPoint(int(p[0]), float(p[1]), float(p[2])) if len(p) == 3
                    else TrajectoryPoint(int(p[0]), 0.0, float(p[1])) for p in points]
        return cls(np.array(d["assignment"], dtype=np.int8), float(d["energy"]), traj(d["trajectory"]),
                   d["backend"], d.get("seed"), int(d.get("replicas", 1)),
                   [np.array(a, dtype=np.int8) for a in d.get("replica_assignments", [])],
                   list(d.get("replica_energies", [])),
                   [traj(t) for t in d.get("replica_trajectories", [])],
                   np.array(d["argmin"], dtype=np.int64) if "argmin" in d else None,
                   d.get("n_argmin"), float(d.get("elapsed", 0.0)))


def bits_of(z, n: int) -> np.ndarray:
    """Assignment vector for enumeration index ``z`` (spin i is bit i)."""
    return ((int(z) >> np.arange(n)) & 1).astype(np.int8)


def _all_assignments(n: int) -> np.ndarray:
    z = np.arange(2 ** n, dtype=np.int64)
    return ((z[:, None] >> np.arange(n)) & 1).astype(np.float64)


def solve_bruteforce(q: QuboProblem, cap: int = BRUTEFORCE_CAP, max_ties: int = 1 << 16) -> SolveRecord:
    """Exact minimum by enumerating all ``2**N`` assignments.

    The low spins are tabulated once and the high spins are swept in chunks,
    so each chunk costs one small matrix product. ``argmin`` lists every
    enumeration index tied with the minimum (relative tolerance 1e-12 of
    the coefficient scale), truncated to ``max_ties`` entries; ``n_argmin``
    is the full count.
    """
    n = q.n
    if n > cap:
        raise SolverError(f"{n} spins exceed the brute-force cap of {cap}; use the 'sa' or 'isingdyn' backend")
    start = time.perf_counter()
    u = q.upper_matrix()
    tol = 1e-12 * max(1.0, float(np.abs(u).sum()))
    if n == 0:
        return SolveRecord(np.zeros(0, dtype=np.int8), float(q.offset),
                           [TrajectoryPoint(0, 0.0, float(q.offset))], "bruteforce",
                           argmin=np.zeros(1, dtype=np.int64), n_argmin=1)
    lo = min(n, 13)
    hi = n - lo
    low = _all_assignments(lo)
    e_low = np.einsum("ri,ij,rj->r", low, u[:lo, :lo], low)
    cross = low @ u[:lo, lo:]
    chunk = max(1, (1 << 22) >> lo)

    best = math.inf
    ties: list[np.ndarray] = []
    count = 0
    for h0 in range(0, 2 ** hi, chunk):
        h1 = min(2 ** hi, h0 + chunk)
        zs = np.arange(h0, h1, dtype=np.int64)
        high = ((zs[:, None] >> np.arange(hi)) & 1).astype(np.float64)
        e_high = np.einsum("ri,ij,rj->r", high, u[lo:, lo:], high) if hi else np.zeros(1)
        total = e_low[:, None] + e_high[None, :] + cross @ high.T
        cmin = float(total.min())
        if cmin < best - tol:
            best = cmin
            ties, count = [], 0
        if cmin <= best + tol:
            li, hj = np.nonzero(total <= best + tol)
            count += li.size
            if sum(t.size for t in ties) < max_ties:
                ties.append((zs[hj] << lo) | li.astype(np.int64))
    argmin = np.sort(np.concatenate(ties))[:max_ties]
    best_q = bits_of(argmin[0], n)
    energy = q.energy(best_q)
    elapsed = time.perf_counter() - start
    return SolveRecord(best_q, energy, [TrajectoryPoint(0, elapsed, energy)], "bruteforce",
                       replica_assignments=[best_q], replica_energies=[energy],
                       argmin=argmin, n_argmin=int(count), elapsed=elapsed)


@dataclass(frozen=True)
class SaSchedule:
    """Geometric cooling; ``sweeps`` is iterations per level, each ``N`` flip attempts."""

    t_init: float = 5000.0
    t_min: float = 0.001
    rate: float = 0.9
    sweeps: int = 50

    def __post_init__(self):
        if not self.t_init > self.t_min > 0:
            raise ValueError("need t_init > t_min > 0")
        if not 0 < self.rate < 1:
            raise ValueError("cooling rate must lie in (0, 1)")
        if self.sweeps < 1:
            raise ValueError("sweeps per level must be positive")

    def temperatures(self) -> np.ndarray:
        levels = int(math.floor(math.log(self.t_min / self.t_init) / math.log(self.rate) + 1e-12)) + 1
        return self.t_init * self.rate ** np.arange(levels)


def _csr(q: QuboProblem):
    diag = np.zeros(q.n)
    rows: list[list[tuple[int, float]]] = [[] for _ in range(q.n)]
    for (i, j), v in q.items():
        if i == j:
            diag[i] = v
        else:
            rows[i].append((j, v))
            rows[j].append((i, v))
    indptr = np.zeros(q.n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.array([j for r in rows for j, _ in r], dtype=np.int64)
    weights = np.array([v for r in rows for _, v in r], dtype=np.float64)
    return diag, indptr, indices, weights


@numba.njit(cache=True, nogil=True)
def _local_fields(q, indptr, indices, weights):
    n = q.shape[0]
    f = np.zeros(n)
    for i in range(n):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            s += weights[k] * q[indices[k]]
        f[i] = s
    return f


def _components(n: int, indptr, indices):
    """Connected components of the coupling graph as (label per spin, member CSR)."""
    graph = csr_matrix((np.ones(len(indices)), indices, indptr), shape=(n, n))
    count, label = connected_components(graph, directed=False)
    order = np.argsort(label, kind="stable").astype(np.int64)
    start = np.zeros(count + 1, dtype=np.int64)
    start[1:] = np.cumsum(np.bincount(label, minlength=count))
    return label.astype(np.int64), start, order


@numba.njit(cache=True, nogil=True)
def _component_energies(q, diag, fld, label, count):
    e = np.zeros(count)
    for i in range(q.shape[0]):
        e[label[i]] += q[i] * (diag[i] + 0.5 * fld[i])
    return e


@numba.njit(cache=True, nogil=True)
def _sa_batch(q, fld, comp_e, best_q, best_e, diag, indptr, indices, weights, label, start, members,
              temp, spins, uniforms):
    # energy is additive over connected components, so the best state seen is kept per component
    improved = False
    for t in range(spins.shape[0]):
        i = spins[t]
        delta = (1.0 - 2.0 * q[i]) * (diag[i] + fld[i])
        if delta <= 0.0 or uniforms[t] < math.exp(-delta / temp):
            change = 1.0 - 2.0 * q[i]
            q[i] = 1.0 - q[i]
            c = label[i]
            comp_e[c] += delta
            for k in range(indptr[i], indptr[i + 1]):
                fld[indices[k]] += weights[k] * change
            if comp_e[c] < best_e[c]:
                best_e[c] = comp_e[c]
                for m in range(start[c], start[c + 1]):
                    best_q[members[m]] = q[members[m]]
                improved = True
    return improved


def _sa_replica(csr, comps, n, offset, schedule: SaSchedule, rng: np.random.Generator, batch: int):
    diag, indptr, indices, weights = csr
    label, start, members = comps
    count = len(start) - 1
    q = rng.integers(0, 2, n).astype(np.float64)
    fld = _local_fields(q, indptr, indices, weights)
    comp_e = _component_energies(q, diag, fld, label, count)
    best_q = q.copy()
    best_e = comp_e.copy()
    t0 = time.perf_counter()
    traj = [TrajectoryPoint(0, 0.0, float(best_e.sum()) + offset)]
    step = 0
    per_level = schedule.sweeps * n
    for temp in schedule.temperatures():
        spins = rng.integers(0, n, per_level)
        uniforms = rng.random(per_level)
        for b0 in range(0, per_level, batch):
            b1 = min(per_level, b0 + batch)
            improved = _sa_batch(q, fld, comp_e, best_q, best_e, diag, indptr, indices, weights,
                                 label, start, members, float(temp), spins[b0:b1], uniforms[b0:b1])
            step += b1 - b0
            if improved:
                traj.append(TrajectoryPoint(step, time.perf_counter() - t0, float(best_e.sum()) + offset))
        # resynchronize against drift of the incremental energies
        fld = _local_fields(q, indptr, indices, weights)
        comp_e = _component_energies(q, diag, fld, label, count)
    traj.append(TrajectoryPoint(step, time.perf_counter() - t0, traj[-1].energy))
    return best_q.astype(np.int8), traj


def _merge(trajs: Sequence[list[TrajectoryPoint]]) -> list[TrajectoryPoint]:
    events = sorted((p.step, r, p) for r, t in enumerate(trajs) for p in t)
    out: list[TrajectoryPoint] = []
    best = math.inf
    latest = 0.0
    for step, _, p in events:
        latest = max(latest, p.time)
        if p.energy < best or not out:
            best = min(best, p.energy)
            out.append(TrajectoryPoint(step, latest, best))
    last_step = max(t[-1].step for t in trajs)
    out.append(TrajectoryPoint(last_step, latest, best))
    return out


def _run_replicas(fn, seed: int, replicas: int, workers: int | None):
    children = np.random.SeedSequence(seed).spawn(replicas)
    rngs = [np.random.Generator(np.random.PCG64(c)) for c in children]
    workers = workers or min(replicas, os.cpu_count() or 1)
    if workers <= 1 or replicas == 1:
        return [fn(r) for r in rngs]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, rngs))


def _finish(q: QuboProblem, results, backend: str, seed: int, elapsed: float) -> SolveRecord:
    assignments = [a for a, _ in results]
    trajs = [t for _, t in results]
    energies = [q.energy(a) for a in assignments]
    k = int(np.argmin(energies))
    return SolveRecord(assignments[k], energies[k], _merge(trajs), backend, seed, len(results),
                       assignments, energies, trajs, elapsed=elapsed)


def solve_sa(q: QuboProblem, schedule: SaSchedule = SaSchedule(), replicas: int = 5, seed: int = 0,
             workers: int | None = None, batch: int = 64) -> SolveRecord:
    """Simulated annealing with Metropolis acceptance ``exp(-dE/T)``.

    Each replica starts from a uniformly random assignment and proposes
    uniformly random single-spin flips, ``schedule.sweeps * N`` per
    temperature level. The returned state is the best seen, kept separately
    for every connected component of the coupling graph (the blocks of a
    block-diagonal problem anneal independently). Replica streams are derived from ``seed`` alone, so
    the record does not depend on ``workers``.
    """
    if replicas < 1:
        raise ValueError("replicas must be positive")
    start = time.perf_counter()
    csr = _csr(q)
    comps = _components(q.n, csr[1], csr[2])
    offset = float(q.offset)
    results = _run_replicas(lambda rng: _sa_replica(csr, comps, q.n, offset, schedule, rng, batch),
                            seed, replicas, workers)
    return _finish(q, results, "sa", seed, time.perf_counter() - start)


@dataclass(frozen=True)
class IsingDynamicsConfig:
    """Parameters of the mean-field amplitude model.

    Amplitudes follow ``dx = [(p(t) - 1) x - x**3 + feedback * (J x + h)] dt + noise``
    with the gain ``p`` ramped linearly from ``gain_start`` to ``gain_end``
    and amplitudes clipped to ``[-saturation, saturation]``. Couplings are
    normalized by the largest absolute row sum before integration.
    """

    dt: float = 0.05
    gain_start: float = 0.0
    gain_end: float = 2.0
    feedback: float = 0.5
    noise: float = 0.05
    saturation: float = 1.5


def solve_isingdyn(q: QuboProblem, steps: int = 1000, seed: int = 0, replicas: int = 5,
                   config: IsingDynamicsConfig = IsingDynamicsConfig(),
                   workers: int | None = None) -> SolveRecord:
    """Minimize ``q`` with mean-field amplitude dynamics on its Ising form.

    The spin configuration ``sign(x)`` is read out every step and the best
    one seen is kept. Raises :class:`SolverError` if the amplitudes stop
    being finite.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    start = time.perf_counter()
    ising = qubo_to_ising(q)
    jm = ising.coupling_matrix()
    h = ising.fields.copy()
    scale = max(float(np.abs(jm).sum(axis=1).max(initial=0.0) + np.abs(h).max(initial=0.0)), 1e-300)
    jn, hn = jm / scale, h / scale
    n = q.n
    c = config

    def run(rng: np.random.Generator):
        x = 0.01 * rng.standard_normal(n)
        noise = rng.standard_normal((steps, n))
        t0 = time.perf_counter()
        best_s = np.where(x >= 0, 1.0, -1.0)
        best_e = ising.energy(best_s)
        traj = [TrajectoryPoint(0, 0.0, best_e)]
        for k in range(steps):
            gain = c.gain_start + (c.gain_end - c.gain_start) * k / max(steps - 1, 1)
            drift = (gain - 1.0) * x - x ** 3 + c.feedback * (jn @ x + hn)
            x = np.clip(x + c.dt * drift + c.noise * math.sqrt(c.dt) * noise[k], -c.saturation, c.saturation)
            if not np.all(np.isfinite(x)):
                raise SolverError(f"amplitudes diverged at step {k}")
            s = np.where(x >= 0, 1.0, -1.0)
            e = ising.energy(s)
            if e < best_e - 1e-12 * max(1.0, abs(best_e)):
                best_e, best_s = e, s
                traj.append(TrajectoryPoint(k + 1, time.perf_counter() - t0, e))
        traj.append(TrajectoryPoint(steps, time.perf_counter() - t0, traj[-1].energy))
        return ((best_s + 1) // 2).astype(np.int8), traj

    results = _run_replicas(run, seed, replicas, workers)
    return _finish(q, results, "isingdyn", seed, time.perf_counter() - start)


@dataclass(frozen=True)
class GdResult:
    x: np.ndarray
    value: float
    x_snapped: np.ndarray
    value_snapped: float
    starts: int

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "value": self.value, "x_snapped": self.x_snapped.tolist(),
                "value_snapped": self.value_snapped, "starts": self.starts}


def _projected_descent(f, grad, u, tol, max_iter):
    fu = f(u)
    alpha = 1.0
    for _ in range(max_iter):
        g = grad(u)
        while True:
            cand = np.clip(u - alpha * g, 0.0, 1.0)
            d = cand - u
            fc = f(cand)
            if fc <= fu + g @ d + (d @ d) / (2 * alpha) + 1e-15 * abs(fu) or alpha < 1e-20:
                break
            alpha *= 0.5
        moved = float(np.linalg.norm(d))
        u, fu = cand, fc
        alpha *= 2.0
        if moved < tol:
            break
    return u, fu


def solve_gd(model: PolynomialSurrogate, space: DesignSpace, starts: int = 8, seed: int = 0,
             sense: str = "maximize", tol: float = 1e-13, max_iter: int = 20000) -> GdResult:
    """Multi-start projected gradient descent on the continuous surrogate.

    Runs in coordinates normalized to the unit box with a backtracking step
    size. The best point is also snapped to the nearest encodable grid value
    so it can be compared with the binary solvers.
    """
    if model.n != len(space):
        raise ValueError("model and design space disagree on the number of variables")
    if sense not in ("minimize", "maximize"):
        raise ValueError(f"unknown sense {sense!r}")
    sign = -1.0 if sense == "maximize" else 1.0
    lo, span = space.lower, space.upper - space.lower

    def f(u):
        return sign * eval_rsm(model, lo + span * u)

    def grad(u):
        return sign * grad_rsm(model, lo + span * u) * span

    rng = np.random.default_rng(seed)
    best_u, best_f = None, math.inf
    for u0 in rng.random((max(starts, 1), model.n)):
        u, fu = _projected_descent(f, grad, u0, tol, max_iter)
        if fu < best_f:
            best_u, best_f = u, fu
    x = lo + span * best_u
    xs = space.snap(x)
    return GdResult(x, float(eval_rsm(model, x)), xs, float(eval_rsm(model, xs)), max(starts, 1))


@dataclass(frozen=True)
class GapPoint:
    step: int
    time: float
    gap: float


def gap_trajectory(record_or_points, h_min: float, h_init: float | None = None) -> list[GapPoint]:
    """Normalized gap ``(H(t) - H_min) / (H_init - H_min)`` along a trajectory.

    ``H_init`` defaults to the first trajectory energy.
    """
    points = record_or_points.trajectory if isinstance(record_or_points, SolveRecord) else record_or_points
    points = list(points)
    if h_init is None:
        h_init = points[0].energy
    denom = h_init - h_min
    if denom == 0:
        raise ValueError("initial energy equals the minimum; the normalized gap is undefined")
    return [GapPoint(p.step, p.time, (p.energy - h_min) / denom) for p in points]


def time_to_target(gaps: Sequence[GapPoint], threshold: float = 0.01, axis: str = "time"):
    """First time (or step, with ``axis='step'``) at which the gap is <= threshold; None if never."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    for g in gaps:
        if g.gap <= threshold:
            return g.time if axis == "time" else g.step
    return None


def mean_gap_curve(records: Sequence[SolveRecord], h_min: float, grid: np.ndarray,
                   axis: str = "step") -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation of per-replica gaps sampled on ``grid``.

    Each replica trajectory is treated as a step function of ``axis``.
    """
    curves = []
    for rec in records:
        for traj in rec.replica_trajectories or [rec.trajectory]:
            gaps = gap_trajectory(traj, h_min)
            xs = np.array([getattr(g, axis) for g in gaps], dtype=float)
            ys = np.array([g.gap for g in gaps])
            idx = np.searchsorted(xs, grid, side="right") - 1
            curves.append(ys[np.clip(idx, 0, len(ys) - 1)])
    curves = np.array(curves)
    return curves.mean(axis=0), curves.std(axis=0)


def solve(q: QuboProblem, backend: str = "sa", seed: int = 0, replicas: int = 5,
          schedule: SaSchedule = SaSchedule(), steps: int = 1000, workers: int | None = None) -> SolveRecord:
    """Dispatch to a QUBO backend by name ('bruteforce', 'sa', 'isingdyn')."""
    if backend == "bruteforce":
        return solve_bruteforce(q)
    if backend == "sa":
        return solve_sa(q, schedule, replicas, seed, workers)
    if backend == "isingdyn":
        return solve_isingdyn(q, steps, seed, replicas, workers=workers)
    raise ValueError(f"unknown QUBO backend {backend!r}")
