"""
Fitting a QUBO onto limited-precision hardware
==============================================

Couplings on an Ising machine are small integers. The QUBO is first
scaled and rounded, and any coefficient that is still out of range is
spread across redundant copies of its spin.
"""
import warnings

from qubofoil.hwadapt import HardwareProfile, adapt, pas_split, spin_budget
from qubofoil.pbool import compile_hubo
from qubofoil.quadratize import QuboProblem, rosenberg_reduce
from qubofoil.surrogate import DesignSpace, fit_rsm
from qubofoil.synth import STANDARD_GRID, synthesize

# a single oversized linear term: 300 does not fit in [-127, 127]
split, report = pas_split(QuboProblem(1, {(0, 0): 300}), HardwareProfile(r_max=127))
s = report.splits[0]
print(f"300 -> {s.copies} copies with weights {s.weights}, copy penalty mu = {s.mu}")
print("split coefficients:", split.coefficients)

# the full three-variable problem with 8 bits per variable
samples = synthesize(grid=STANDARD_GRID, objectives=["LD"])
model = fit_rsm(samples, "LD", order=2)
space = DesignSpace.from_bounds({"A": (0, 6), "B": (2, 5), "T": (6, 20)}, 8)
hubo, reg = compile_hubo(model, space, sense="maximize")
qubo = rosenberg_reduce(hubo, registry=reg)

# tiny couplings that round to zero are listed in a warning; keep the output short
warnings.simplefilter("ignore", UserWarning)
for r_max in (127, 63, 31):
    hw = HardwareProfile(r_max=r_max)
    adapted, report, eps = adapt(qubo, hw)
    print(f"r_max={r_max:>3}: epsilon={eps:.4g}, budget {spin_budget(report)}")
