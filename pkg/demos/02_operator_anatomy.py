"""A look inside the deconvolution operator.

Builds the circulant smearing operator for a small configuration, prints its
generator row and closed-form spectrum, and checks the fast product paths
against a dense matrix realization.
"""

import numpy as np

from dpprofile import ReconstructionConfig, apply, apply_inverse, build_operator, norm_bounds
from dpprofile.oracle import dense_operator

cfg = ReconstructionConfig(epsilon=1.0, eta=0.05, n=12, d=1000, B=3)
op = build_operator(cfg)

print(f"window m = {op.m}, kernel radius B = {op.B}, normalizer = {op.p_norm_const:.4f}")
print("generator row (first few entries):", np.round(op.generator[: op.B + 2], 4))
print("eigenvalue magnitudes:", np.round(np.abs(op.eigenvalues), 3))
print("zero-frequency eigenvalue:", op.eigenvalues[0])

dense = dense_operator(cfg)
rng = np.random.default_rng(1)
x = rng.normal(size=op.m)
print("fast apply vs dense:", np.max(np.abs(apply(op, x) - dense.entries @ x)))
print(
    "fast inverse vs dense solve:",
    np.max(np.abs(apply_inverse(op, x) - np.linalg.solve(dense.entries, x))),
)

bounds = norm_bounds(op)
inv = np.linalg.inv(dense.entries)
print(f"row-sum norm of the inverse: {np.abs(inv).sum(axis=1).max():.4f}"
      f" (analytic bound {bounds.bound_1_inf:.4f})")
print(f"spectral norm of the inverse: {np.linalg.norm(inv, 2):.4f}"
      f" (analytic bound {bounds.bound_2:.4f})")
