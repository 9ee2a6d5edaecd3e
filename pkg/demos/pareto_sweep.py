"""
Nine lift/drag trade-offs in one solve
======================================

Each weight turns lift and drag into one objective. The nine weighted
QUBOs share no spins, so they are packed block-diagonally and annealed
together; each block is then decoded on its own.
"""
import numpy as np

from qubofoil.geometry import decode_design
from qubofoil.multiobj import (MAXIMIZE, MINIMIZE, WeightScheme, aggregate_coefficients, block_compose,
                               extract_pareto)
from qubofoil.pbool import compile_hubo
from qubofoil.pipeline import best_per_block
from qubofoil.quadratize import rosenberg_reduce
from qubofoil.solvers import solve_sa
from qubofoil.surrogate import DesignSpace, fit_rsm
from qubofoil.synth import synthesize

samples = synthesize(grid={"T": (10, 15, 0.2)}, fixed={"A": 6, "B": 4}, objectives=["CL", "CD"])
models = [fit_rsm(samples, k, 4) for k in ("CL", "CD")]
space = DesignSpace.from_bounds({"T": (10.0, 15.0)}, 5)
senses = [MAXIMIZE, MINIMIZE]

scheme = WeightScheme.lift_drag()
blocks = []
for w in scheme:
    hubo, reg = compile_hubo(aggregate_coefficients(models, w, senses), space)
    blocks.append(rosenberg_reduce(hubo, registry=reg))
composite = block_compose(blocks)
print(f"composite: {composite.n} spins in {len(blocks)} blocks")

rec = solve_sa(composite, seed=0)
combined, _ = best_per_block(rec, blocks, composite)
designs = [decode_design(combined, composite.registry, space, block=p)["T"] for p in range(len(blocks))]
for w, t in zip(scheme.parameters, designs):
    print(f"w = {w:>6g}: T = {t:.3f}")

front = extract_pareto([[t] for t in designs], models, senses, list(scheme), ["CL", "CD"], ["T"],
                       scheme.parameters)
print(f"{len(front.front())} of {len(front.points)} distinct designs are nondominated")
with open("pareto.dat", "w") as fh:
    fh.write(front.plot_data())
