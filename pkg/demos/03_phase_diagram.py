"""
A small phase diagram
=====================

Recovery succeeds when the relative error is at most 1e-2. Sweeping the
rank parameter R against the sampling rate p maps out where that happens.
The grid here is coarse so the script finishes in a few minutes; pass a
larger grid to ``sweep`` (or use ``tucomp sweep``) for the full picture.
Results are written to a CSV that a rerun resumes from.
"""

import os
import tempfile

from tucomp.experiments import monotonicity_violations, phase_grid, sweep

ranks, rates = [1, 4, 7, 10], [0.1, 0.3, 0.5]
out = os.path.join(tempfile.gettempdir(), "tucomp_phase_demo.csv")
records = sweep(ranks, rates, out, shape=(16, 16, 16, 16), trials=2)

grid = phase_grid(records)
print("      " + "".join(f"p={p:<5}" for p in rates))
for R in ranks:
    print(f"R={R:<3} " + "".join(f"{'  ok   ' if grid[(R, p)] else '  --   '}" for p in rates))
print("cells breaking monotonicity:", monotonicity_violations(records, rank_step=3))
print("records in", out)
