"""
Convergence of the annealing and amplitude-dynamics backends
============================================================

Both heuristics are run on random 16-spin instances whose exact minimum
is known by enumeration, and progress is measured as the normalized gap
between the best energy so far and that minimum.
"""
import numpy as np

from qubofoil.quadratize import QuboProblem
from qubofoil.solvers import (SaSchedule, gap_trajectory, mean_gap_curve, solve_bruteforce,
                              solve_isingdyn, solve_sa, time_to_target)

rng = np.random.default_rng(7)
n = 16
instances = [QuboProblem(n, {(i, j): float(rng.normal()) for i in range(n) for j in range(i, n)
                             if rng.random() < 0.4}) for _ in range(10)]

schedule = SaSchedule(t_init=50.0, sweeps=10)
for name, run in [("sa", lambda q, s: solve_sa(q, schedule, seed=s)),
                  ("isingdyn", lambda q, s: solve_isingdyn(q, steps=2000, seed=s))]:
    hits, ttt = 0, []
    for s, q in enumerate(instances):
        h_min = solve_bruteforce(q).energy
        rec = run(q, s)
        hits += abs(rec.energy - h_min) < 1e-9
        step = time_to_target(gap_trajectory(rec, h_min), 0.01, axis="step")
        if step is not None:
            ttt.append(step)
    print(f"{name:>8}: optimum found on {hits}/10, median steps to 1% gap {np.median(ttt):.0f}")

q = instances[0]
rec = solve_sa(q, schedule, seed=0)
grid = np.linspace(0, rec.trajectory[-1].step, 50)
mean, std = mean_gap_curve([rec], solve_bruteforce(q).energy, grid)
np.savetxt("sa_gap.dat", np.column_stack([grid, mean, std]), header="step mean_gap std_gap")
