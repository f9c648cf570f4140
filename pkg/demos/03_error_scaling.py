"""Measured reconstruction error versus the analytic bounds and domain size.

Sweeps the pipeline over three domain sizes, compares per-trial errors with
the high-probability bounds, and fits the error-versus-d power law; the
fitted exponent should sit near -1/2.
"""

import numpy as np

from dpprofile import ReconstructionConfig, SynthSpec, fit_scaling, sweep

grid = []
for d in (1_000, 10_000, 100_000):
    spec = SynthSpec("zipf", d=d, n=32, seed=3, param=1.1)
    cfg = ReconstructionConfig(epsilon=1.0, eta=0.05, n=32, d=d)
    grid.append((spec, cfg))

reports = sweep(grid, trials=25, master_seed=7)

print(f"{'d':>8} {'norm':>5} {'mean err':>10} {'bound':>10} {'covered':>8}")
for d in (1_000, 10_000, 100_000):
    for p in ("l1", "l2", "linf"):
        rows = [r for r in reports if r.d == d and r.p == p]
        errs = np.array([r.err for r in rows])
        bound = rows[0].bound
        print(f"{d:>8} {p:>5} {errs.mean():>10.4f} {bound:>10.4f} "
              f"{np.mean(errs <= bound):>8.0%}")

for p in ("l1", "l2", "linf"):
    print(f"fitted log-log slope ({p}): {fit_scaling(reports, p):.3f}")
