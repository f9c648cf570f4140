"""Evaluation harness: synthetic histograms, error measurement, and sweeps.

Runs the privatize-and-reconstruct pipeline over parameter grids, measures
the l1/l2/linf reconstruction errors against ground truth, evaluates the
analytic error bounds for comparison, and fits the error-versus-domain-size
scaling law from swept results.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import circulant
from ._util import NORMS, derive_seed, lp_norm
from .circulant import CirculantOperator
from .mechanism import (
    Histogram,
    ReconstructionConfig,
    empirical_profile,
    privatize,
)
from .reconstruct import Profile, cached_operator, fast_inversion, rounding

__all__ = [
    "ErrorReport",
    "SynthSpec",
    "synth_histogram",
    "true_profile",
    "pad_profile",
    "theoretical_bounds",
    "run_trial",
    "sweep",
    "rows_to_csv",
    "fit_scaling",
    "thread_budget",
]

EVAL_CSV_HEADER = "d,n,epsilon,eta,trial,p,err,bound,seconds"


@dataclass(frozen=True)
class ErrorReport:
    """One (trial, norm) outcome: measured error, analytic bound, wall time."""

    d: int
    n: int
    epsilon: float
    eta: float
    p: str
    trial: int
    err: float
    bound: float
    seconds: float


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic histogram.

    distribution is one of "point_mass" (every count equals `param`),
    "uniform_counts" (counts i.i.d. uniform on [0, n]), or "zipf" (counts
    decay as rank^-param, scaled into [0, n], then shuffled).
    """

    distribution: str
    d: int
    n: int
    seed: int
    param: float = 0.0

    def __post_init__(self):
        if self.distribution not in ("point_mass", "uniform_counts", "zipf"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.d < 1 or self.n < 1:
            raise ValueError("d and n must be >= 1")


def synth_histogram(spec: SynthSpec) -> Histogram:
    rng = np.random.default_rng(spec.seed)
    if spec.distribution == "point_mass":
        c = int(spec.param)
        if not 0 <= c <= spec.n:
            raise ValueError(f"point mass {c} outside [0, {spec.n}]")
        counts = np.full(spec.d, c, dtype=np.int64)
    elif spec.distribution == "uniform_counts":
        counts = rng.integers(0, spec.n + 1, size=spec.d)
    else:  # zipf
        alpha = float(spec.param)
        if alpha <= 0:
            raise ValueError("zipf exponent must be positive")
        ranks = np.arange(1, spec.d + 1, dtype=np.float64)
        counts = np.rint(spec.n * ranks**-alpha).astype(np.int64)
        rng.shuffle(counts)
    return Histogram(counts=counts, n=spec.n)


def true_profile(h: Histogram) -> Profile:
    """Exact frequency-of-frequencies of a histogram."""
    binned = np.bincount(h.counts, minlength=h.n + 1)
    return Profile(values=binned / h.d)


def pad_profile(profile: Profile, B: int) -> np.ndarray:
    """Embed a profile over 0..n into the window -B..n+B with zero padding."""
    return np.concatenate([np.zeros(B), profile.values, np.zeros(B)])


@dataclass(frozen=True)
class BoundTriple:
    b1: float
    b2: float
    binf: float

    def for_norm(self, p: str) -> float:
        return {"l1": self.b1, "l2": self.b2, "linf": self.binf}[p]


def theoretical_bounds(
    cfg: ReconstructionConfig, f: Profile, op: CirculantOperator
) -> BoundTriple:
    """High-probability error bounds for the pipeline on this instance.

    Each norm combines twice the analytic operator-norm bound of the inverse
    with the corresponding concentration bound on how far the observed noisy
    profile strays from its expectation (valid with probability >= 1 - eta).
    The expectation itself is computed exactly as the operator image of the
    padded true profile.
    """
    bounds = circulant.norm_bounds(op)
    d = cfg.d
    expected = np.clip(circulant.apply(op, pad_profile(f, cfg.B)), 0.0, None)
    log_eta = math.log(1.0 / cfg.eta)
    log_n_eta = math.log(cfg.n / cfg.eta)
    dev1 = float(np.sum(np.sqrt(expected))) / math.sqrt(d) + math.sqrt(
        2.0 * log_eta / d
    )
    dev2 = math.sqrt(1.0 / d) + math.sqrt(log_eta / d)
    devinf = math.sqrt(2.0 * log_n_eta / op.p_norm_const / d) + log_n_eta / (3.0 * d)
    return BoundTriple(
        b1=2.0 * bounds.bound_1_inf * dev1,
        b2=2.0 * bounds.bound_2 * dev2,
        binf=2.0 * bounds.bound_1_inf * devinf,
    )


def run_trial(
    spec: SynthSpec, cfg: ReconstructionConfig, seed: int, trial: int = 0
) -> list[ErrorReport]:
    """One pipeline run per norm on a fresh sketch; returns three reports.

    The same privatized sketch is reconstructed three times, once with each
    norm objective, and the error of each reconstruction is measured in its
    own norm against the true profile.
    """
    h = synth_histogram(spec)
    f = true_profile(h)
    op = cached_operator(cfg)
    bounds = theoretical_bounds(cfg, f, op)
    rng = np.random.default_rng(seed)
    sketch = privatize(h, cfg.epsilon, clip=False, rng=rng)
    f_tilde = empirical_profile(sketch, cfg)
    reports = []
    for p in NORMS:
        start = time.perf_counter()
        relaxed = fast_inversion(op, f_tilde, p)
        rounded = rounding(relaxed, cfg.n)
        elapsed = time.perf_counter() - start
        err = lp_norm(rounded.values - f.values, p)
        reports.append(
            ErrorReport(
                d=cfg.d,
                n=cfg.n,
                epsilon=cfg.epsilon,
                eta=cfg.eta,
                p=p,
                trial=trial,
                err=err,
                bound=bounds.for_norm(p),
                seconds=elapsed,
            )
        )
    return reports


def thread_budget() -> int:
    """Worker cap for embarrassingly parallel trials.

    Controlled by the DP_PROFILE_THREADS environment variable; defaults to
    the number of available cores.
    """
    raw = os.environ.get("DP_PROFILE_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"DP_PROFILE_THREADS must be an integer, got {raw!r}")
    if value < 1:
        raise ValueError(f"DP_PROFILE_THREADS must be positive, got {value}")
    return value


def sweep(
    grid: list[tuple[SynthSpec, ReconstructionConfig]],
    trials: int,
    master_seed: int,
) -> list[ErrorReport]:
    """Run every grid cell `trials` times with independently derived seeds.

    The per-trial seed is a stable 64-bit mix of (master_seed, cell index,
    trial index), so the report set is reproducible regardless of scheduling;
    rows come back in (cell, trial, norm) order.
    """
    if not grid:
        raise ValueError("sweep grid is empty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tasks = [
        (ci, ti, spec, cfg, derive_seed(master_seed, ci, ti))
        for ci, (spec, cfg) in enumerate(grid)
        for ti in range(trials)
    ]

    def _run(task):
        ci, ti, spec, cfg, seed = task
        return ci, ti, run_trial(spec, cfg, seed, trial=ti)

    workers = min(thread_budget(), len(tasks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            finished = list(pool.map(_run, tasks))
    else:
        finished = [_run(t) for t in tasks]
    finished.sort(key=lambda item: (item[0], item[1]))
    return [report for _, _, triple in finished for report in triple]


def rows_to_csv(reports: list[ErrorReport], slopes: dict[str, float] | None = None) -> str:
    """Render reports as CSV text.

    The seconds column is written as 0.0: output files must be byte-identical
    across reruns with the same seed, and wall-clock is not.  Measured times
    stay available on the in-memory reports.
    """
    lines = [EVAL_CSV_HEADER]
    for r in reports:
        lines.append(
            f"{r.d},{r.n},{float(r.epsilon)!r},{float(r.eta)!r},"
            f"{r.trial},{r.p},{float(r.err)!r},{float(r.bound)!r},0.0"
        )
    if slopes is not None:
        for p in NORMS:
            lines.append(f"# slope_{p}={float(slopes[p])!r}")
    return "\n".join(lines) + "\n"


def fit_scaling(reports: list[ErrorReport], p: str) -> float:
    """Least-squares slope of log(mean error) versus log(domain size).

    Requires at least three distinct domain sizes with at least twenty
    trials each; a slope near -1/2 indicates the expected error decay.
    """
    if p not in NORMS:
        raise ValueError(f"unknown norm selector {p!r}")
    by_d: dict[int, list[float]] = {}
    for r in reports:
        if r.p == p:
            by_d.setdefault(r.d, []).append(r.err)
    if len(by_d) < 3:
        raise ValueError(f"need >= 3 distinct d values, got {len(by_d)}")
    for d, errs in by_d.items():
        if len(errs) < 20:
            raise ValueError(f"need >= 20 trials per d, got {len(errs)} at d={d}")
    ds = np.array(sorted(by_d))
    means = np.array([np.mean(by_d[d]) for d in ds])
    slope, _ = np.polyfit(np.log(ds), np.log(means), 1)
    return float(slope)
