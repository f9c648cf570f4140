"""Profile reconstruction from a noisy sketch in near-linear time.

Two stages. Fast inversion solves the sum-constrained relaxation of the
deconvolution problem exactly: it inverts the circulant operator on the
empirical profile and then restores the unit-sum constraint by moving along
the single direction that is cheapest in the chosen norm.  Rounding then
projects the relaxed solution into the feasible polytope (entries in [0, 1]
on the count window, zero outside, total mass one) without amplifying the
l1/l2 error and at most doubling the linf error.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from . import circulant
from .circulant import CirculantOperator
from .mechanism import (
    EmpiricalProfile,
    PrivateSketch,
    ReconstructionConfig,
    empirical_profile,
    unfold,
)

__all__ = [
    "Profile",
    "RelaxedSolution",
    "direction_vector",
    "fast_inversion",
    "threshold_tau",
    "rounding",
    "cached_operator",
    "reconstruct_profile",
    "write_profile_csv",
]

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Profile:
    """A valid frequency-of-frequencies vector over counts 0..n."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or len(values) < 1:
            raise ValueError("profile must be a non-empty 1-d vector")
        if values.min() < -_SUM_TOL or values.max() > 1.0 + _SUM_TOL:
            raise ValueError("profile entries must lie in [0, 1]")
        if abs(float(values.sum()) - 1.0) > _SUM_TOL:
            raise ValueError("profile entries must sum to 1")
        values.flags.writeable = False

    @property
    def n(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class RelaxedSolution:
    """Optimum of the sum-constrained relaxation, indexed t = -B .. n+B.

    Entries may stray outside [0, 1]; only the unit sum over the count
    window 0..n is guaranteed.
    """

    values: np.ndarray
    n: int
    B: int
    objective_norm: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if len(values) != self.n + 2 * self.B + 1:
            raise ValueError("relaxed solution has wrong length for (n, B)")
        core_sum = float(values[self.B : self.B + self.n + 1].sum())
        if abs(core_sum - 1.0) > _SUM_TOL:
            raise ValueError(
                f"relaxed solution core sums to {core_sum}, must be 1"
            )
        values.flags.writeable = False

    def core(self) -> np.ndarray:
        """The slice covering counts 0..n."""
        return self.values[self.B : self.B + self.n + 1]


def direction_vector(c: np.ndarray, p: str) -> np.ndarray:
    """Unit-p-norm vector a maximizing <c, a>.

    l1: a signed standard basis vector at the largest |c_t| (lowest index on
    ties); l2: c normalized; linf: the coordinate-wise sign vector, with
    sign(0) taken as +1.  All three choices are exact maximizers.
    """
    c = np.asarray(c, dtype=np.float64)
    if not np.any(c):
        raise ValueError("cannot build a direction for an all-zero vector")
    if p == "l1":
        t = int(np.argmax(np.abs(c)))  # argmax returns the first maximizer
        a = np.zeros_like(c)
        a[t] = 1.0 if c[t] >= 0 else -1.0
        return a
    if p == "l2":
        return c / np.sqrt(np.sum(np.square(c)))
    if p == "linf":
        return np.where(c >= 0, 1.0, -1.0)
    raise ValueError(f"unknown norm selector {p!r}")


def _correction_direction(op: CirculantOperator, p: str) -> tuple[np.ndarray, float]:
    """The cached unit-sum correction for (operator, norm): (A^{-1} a, <1, A^{-1} a>).

    The window image c = 1^T A^{-1} and the optimal direction a depend only
    on the operator and the norm, never on the data, so they are computed
    once per operator and memoized on it.
    """
    with _CACHE_LOCK:
        cached = op.cache.get(("correction", p))
        if cached is not None:
            return cached
        ones = np.zeros(op.m)
        ones[op.B : op.B + op.n + 1] = 1.0
        c = circulant.left_apply_inverse(op, ones)
        a = direction_vector(c, p)
        correction = circulant.apply_inverse(op, a)
        denom = float(correction[op.B : op.B + op.n + 1].sum())
        if abs(denom) < 1e-300:
            raise ArithmeticError(
                "degenerate correction direction; operator spectrum is broken"
            )
        correction.flags.writeable = False
        op.cache[("correction", p)] = (correction, denom)
        return correction, denom


def fast_inversion(
    op: CirculantOperator, f_tilde, p: str = "l2"
) -> RelaxedSolution:
    """Optimal solution of the sum-constrained deconvolution relaxation.

    Computes u = A^{-1} f, then corrects the unit-sum violation along
    A^{-1} a, where a is the unit-norm direction whose image has the largest
    window sum.  The returned vector satisfies the sum constraint exactly and
    attains the minimum residual among all vectors that do.
    """
    if isinstance(f_tilde, EmpiricalProfile):
        f = f_tilde.values
    else:
        f = np.asarray(f_tilde, dtype=np.float64)
    if f.shape != (op.m,):
        raise ValueError(f"profile has shape {f.shape}, operator expects ({op.m},)")

    correction, denom = _correction_direction(op, p)
    u = circulant.apply_inverse(op, f)
    window_sum = float(u[op.B : op.B + op.n + 1].sum())
    r = u - ((window_sum - 1.0) / denom) * correction
    return RelaxedSolution(values=r, n=op.n, B=op.B, objective_norm=p)


def threshold_tau(r: np.ndarray, s: float) -> float:
    """Solve sum_t min(tau, r[t]) = s for tau >= 0 by a sort-based search.

    On the sorted values, the left side is piecewise linear in tau; the
    smallest sorted position whose plateau reaches s pins the linear piece,
    and tau follows in closed form.
    """
    r = np.asarray(r, dtype=np.float64)
    total = float(r.sum())
    if s < 0 or s > total + 1e-9:
        raise ValueError(f"target s={s} outside [0, sum r = {total}]")
    if s <= 0:
        return 0.0
    rs = np.sort(r)
    k = len(rs)
    prefix = np.concatenate(([0.0], np.cumsum(rs)[:-1]))
    reach = prefix + (k - np.arange(k)) * rs
    hits = np.flatnonzero(reach >= s)
    t_star = int(hits[0]) if len(hits) else k - 1
    tau = (s - float(prefix[t_star])) / (k - t_star)
    return max(tau, 0.0)


def rounding(r: RelaxedSolution, n: int) -> Profile:
    """Project a relaxed solution onto the feasible profile polytope.

    Phase 1 discards mass outside counts 0..n, phase 2 clips the window into
    [0, 1] while recording the surplus mass s the clipping created, and phase
    3 drains exactly s back out by lowering every entry by min(tau, entry)
    with tau chosen so the total lands on one.  The surplus is provably
    non-negative, so draining (never adding) suffices.
    """
    if n != r.n:
        raise ValueError(f"n={n} does not match the relaxed solution (n={r.n})")
    core = r.core()

    # surplus created by clipping into [0, 1]: the overflow above one enters
    # negatively, the mass below zero positively; their sum is never negative
    s_over = -float(np.maximum(core - 1.0, 0.0).sum())
    s_under = float(np.maximum(-core, 0.0).sum())
    core = np.clip(core, 0.0, 1.0)

    s = s_over + s_under
    if s < -_SUM_TOL:
        raise AssertionError(
            f"clipping surplus {s} is negative; the relaxed input violated "
            "the unit-sum constraint"
        )
    if s > 0:
        tau = threshold_tau(core, s)
        core -= np.minimum(tau, core)
    return Profile(values=core)


# Repeated reconstructions with the same (n, B, epsilon) reuse one operator;
# the eigenvalue setup is paid once per key.
_OPERATOR_CACHE: dict[tuple[int, int, float], CirculantOperator] = {}
_CACHE_LOCK = threading.Lock()


def cached_operator(cfg: ReconstructionConfig) -> CirculantOperator:
    key = (cfg.n, cfg.B, cfg.epsilon)
    with _CACHE_LOCK:
        op = _OPERATOR_CACHE.get(key)
        if op is None:
            op = circulant.build_operator(cfg)
            _OPERATOR_CACHE[key] = op
    return op


def reconstruct_profile(
    s: PrivateSketch,
    cfg: ReconstructionConfig,
    rng: np.random.Generator | None = None,
) -> Profile:
    """Full pipeline: (unfold if clipped) -> bin -> invert -> round.

    Deterministic given the sketch, except that clipped sketches consume
    randomness from rng for the boundary unfolding.
    """
    if s.clipped:
        if rng is None:
            raise ValueError("a clipped sketch needs an rng for unfolding")
        s = unfold(s, rng)
    f_tilde = empirical_profile(s, cfg)
    op = cached_operator(cfg)
    relaxed = fast_inversion(op, f_tilde, cfg.p_norm)
    return rounding(relaxed, cfg.n)


def write_profile_csv(path: str, profile: Profile) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,value\n")
        for t, v in enumerate(profile.values):
            fh.write(f"{t},{float(v)!r}\n")
