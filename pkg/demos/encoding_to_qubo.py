"""
From a polynomial surrogate to a QUBO
=====================================

A quartic surrogate in one thickness variable is encoded with five bits,
expanded into a higher-order binary polynomial, quadratized and finally
mapped to Ising form.
"""
import numpy as np

from qubofoil.pbool import compile_hubo, eval_pbp
from qubofoil.quadratize import qubo_to_ising, rosenberg_reduce
from qubofoil.solvers import solve_bruteforce
from qubofoil.surrogate import DesignSpace, fit_rsm
from qubofoil.synth import synthesize

# sample the synthetic lift-to-drag oracle on integer thicknesses and fit a quartic
samples = synthesize(grid={"T": (6, 20, 1)}, fixed={"A": 6, "B": 4}, objectives=["LD"])
model = fit_rsm(samples, "LD", order=4)
print(f"fit R^2 = {model.r_squared:.6f}")

# five bits give 32 evenly spaced thickness levels, least significant bit first
space = DesignSpace.from_bounds({"T": (6.0, 20.0)}, 5)
hubo, registry = compile_hubo(model, space, sense="maximize")
print(f"HUBO: {hubo.num_vars} variables, degree {hubo.degree}, {len(hubo.terms)} terms")

# the binary polynomial reproduces the surrogate on every one of the 32 levels
levels = space.variables[0].grid()
bits = (np.arange(32)[:, None] >> np.arange(5)) & 1
gap = np.max(np.abs(-eval_pbp(hubo, bits) - model(levels[:, None])))
print(f"max |HUBO - surrogate| over the grid: {gap:.2e}")

# cubic and quartic terms are reduced with auxiliary spins and one shared penalty
qubo = rosenberg_reduce(hubo, registry=registry)
print(f"QUBO: {qubo.n} spins, lambda = {qubo.penalties[0].lam:.3f}")

best = solve_bruteforce(qubo)
t = levels[int(best.assignment[:5] @ (1 << np.arange(5)))]
print(f"exhaustive optimum T = {t:.4f}, L/D = {-best.energy:.4f}")

ising = qubo_to_ising(qubo)
print(f"Ising form: {ising.n} spins, offset {ising.offset:.4f}")
