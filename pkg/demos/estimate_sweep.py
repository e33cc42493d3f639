"""Sweep |q| and watch the a-priori estimate ratios settle.

The four main inequalities should plateau; the strengthened one grows
like a power of |q| because it drops the parameter weight on one side.
"""
import numpy as np

from ellparab.estimates import estimate_sweep
from ellparab.grids import GridSpec
from ellparab.symbols import biharmonic_heat2, laplace_heat

grid = GridSpec.graded(N=32, X=40.0, panels=40, h0=1e-4)
qs = np.geomspace(1, 100, 9)

for spec in (laplace_heat(), biharmonic_heat2()):
    rep = estimate_sweep(spec, grid, qs)
    print(f"\n{spec.name}")
    for s in rep.summary():
        print(f"  {s['inequality']:22s} max {s['max_ratio']:8.4f}  plateau {s['plateau_factor']:7.3f}  "
              f"growth {s['growth']:7.2f}")
