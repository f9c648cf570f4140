"""Tests for the synthetic-data and error-measurement harness."""

import math

import numpy as np
import pytest

from dpprofile import circulant
from dpprofile._util import derive_seed
from dpprofile.evaluation import (
    ErrorReport,
    SynthSpec,
    fit_scaling,
    pad_profile,
    rows_to_csv,
    run_trial,
    sweep,
    synth_histogram,
    theoretical_bounds,
    thread_budget,
    true_profile,
)
from dpprofile.mechanism import Histogram, PrivateSketch, ReconstructionConfig, empirical_profile
from dpprofile.reconstruct import cached_operator, fast_inversion, rounding
from dpprofile._util import lp_norm


# --- synthetic histograms -----------------------------------------------------

def test_point_mass_histogram():
    spec = SynthSpec("point_mass", d=4, n=5, seed=0, param=1)
    h = synth_histogram(spec)
    np.testing.assert_array_equal(h.counts, [1, 1, 1, 1])
    f = true_profile(h)
    np.testing.assert_array_equal(f.values, [0, 1, 0, 0, 0, 0])


def test_point_mass_rejects_large_count():
    with pytest.raises(ValueError):
        synth_histogram(SynthSpec("point_mass", d=4, n=5, seed=0, param=9))


def test_uniform_counts_concentration():
    d, n = 40000, 1
    spec = SynthSpec("uniform_counts", d=d, n=n, seed=3)
    f = true_profile(synth_histogram(spec))
    np.testing.assert_allclose(f.values, [0.5, 0.5], atol=4 / math.sqrt(d))


def test_zipf_counts_in_range_and_deterministic():
    spec = SynthSpec("zipf", d=500, n=10, seed=5, param=1.1)
    h1, h2 = synth_histogram(spec), synth_histogram(spec)
    np.testing.assert_array_equal(h1.counts, h2.counts)
    assert h1.counts.min() >= 0 and h1.counts.max() <= 10
    assert h1.counts.max() == 10  # rank 1 hits the cap


def test_unknown_distribution_rejected():
    with pytest.raises(ValueError):
        SynthSpec("beta", d=10, n=5, seed=0)


# --- true profile ----------------------------------------------------------------

def test_true_profile_counts():
    h = Histogram(counts=np.array([0, 2, 2, 5]), n=5)
    f = true_profile(h)
    np.testing.assert_array_equal(f.values, [0.25, 0, 0.5, 0, 0, 0.25])


def test_true_profile_permutation_invariant():
    rng = np.random.default_rng(7)
    counts = rng.integers(0, 6, size=200)
    f1 = true_profile(Histogram(counts=counts, n=5))
    f2 = true_profile(Histogram(counts=rng.permutation(counts), n=5))
    np.testing.assert_array_equal(f1.values, f2.values)


# --- analytic bounds ----------------------------------------------------------------

def make_reference():
    cfg = ReconstructionConfig(epsilon=1.0, eta=0.05, n=32, d=10**4)
    h = synth_histogram(SynthSpec("point_mass", d=10**4, n=32, seed=1, param=1))
    return cfg, true_profile(h), cached_operator(cfg)


def test_expected_profile_preserves_mass():
    cfg, f, op = make_reference()
    expected = circulant.apply(op, pad_profile(f, cfg.B))
    assert float(expected.sum()) == pytest.approx(1.0, abs=1e-9)


def test_l2_bound_composition():
    cfg, f, op = make_reference()
    bounds = theoretical_bounds(cfg, f, op)
    d = cfg.d
    dev = math.sqrt(1.0 / d) + math.sqrt(math.log(1.0 / cfg.eta) / d)
    want = 2.0 * circulant.norm_bounds(op).bound_2 * dev
    assert bounds.b2 == pytest.approx(want, rel=1e-12)


def test_bounds_decrease_with_domain_size():
    prev = None
    for d in (10**3, 10**4, 10**5):
        cfg = ReconstructionConfig(epsilon=1.0, eta=0.05, n=32, d=d, B=12)
        h = synth_histogram(SynthSpec("point_mass", d=d, n=32, seed=1, param=1))
        op = cached_operator(cfg)
        b = theoretical_bounds(cfg, true_profile(h), op)
        if prev is not None:
            assert b.b1 < prev.b1 and b.b2 < prev.b2 and b.binf < prev.binf
        prev = b


# --- trials ---------------------------------------------------------------------

def test_run_trial_noiseless():
    d = 2000
    spec = SynthSpec("point_mass", d=d, n=6, seed=2, param=1)
    cfg = ReconstructionConfig(epsilon=50.0, eta=0.05, n=6, d=d)
    reports = run_trial(spec, cfg, seed=11)
    assert [r.p for r in reports] == ["l1", "l2", "linf"]
    for r in reports:
        assert r.err <= 1e-6
        assert r.seconds >= 0.0
        assert r.bound >= 0.0


def test_error_invariant_under_joint_permutation():
    # permuting histogram and noise together leaves the noisy profile, and
    # hence every norm of the reconstruction error, unchanged
    d = 3000
    rng = np.random.default_rng(13)
    counts = rng.integers(0, 9, size=d)
    noise = rng.integers(-3, 4, size=d)
    perm = rng.permutation(d)
    cfg = ReconstructionConfig(epsilon=1.0, eta=0.1, n=8, d=d, B=5)
    op = cached_operator(cfg)
    errs = []
    for c, z in (
        (counts, noise),
        (counts[perm], noise[perm]),
    ):
        sketch = PrivateSketch(counts=c + z, epsilon=1.0, n=8, clipped=False)
        f = true_profile(Histogram(counts=c, n=8))
        prof = rounding(fast_inversion(op, empirical_profile(sketch, cfg), "l2"), 8)
        errs.append(lp_norm(prof.values - f.values, "l2"))
    assert errs[0] == pytest.approx(errs[1], abs=1e-12)


def test_norm_inequality_sanity():
    d = 10**4
    spec = SynthSpec("uniform_counts", d=d, n=16, seed=3)
    cfg = ReconstructionConfig(epsilon=1.0, eta=0.05, n=16, d=d, B=12)
    for trial in range(5):
        reports = {r.p: r for r in run_trial(spec, cfg, seed=derive_seed(4, trial))}
        m = cfg.m
        assert reports["l1"].err <= math.sqrt(m) * reports["l2"].err + 1e-12


# --- sweep ---------------------------------------------------------------------

def small_grid():
    d = 500
    spec = SynthSpec("point_mass", d=d, n=6, seed=1, param=2)
    cfg = ReconstructionConfig(epsilon=2.0, eta=0.2, n=6, d=d)
    return [(spec, cfg)]


def test_sweep_cardinality_and_order():
    reports = sweep(small_grid(), trials=3, master_seed=0)
    assert len(reports) == 9
    assert [r.trial for r in reports] == [0, 0, 0, 1, 1, 1, 2, 2, 2]
    assert [r.p for r in reports[:3]] == ["l1", "l2", "linf"]


def test_sweep_deterministic_csv():
    a = rows_to_csv(sweep(small_grid(), trials=3, master_seed=7))
    b = rows_to_csv(sweep(small_grid(), trials=3, master_seed=7))
    assert a == b
    assert a.splitlines()[0] == "d,n,epsilon,eta,trial,p,err,bound,seconds"


def test_sweep_distinct_seeds_distinct_errors():
    reports = sweep(small_grid(), trials=30, master_seed=1)
    l2_errs = [r.err for r in reports if r.p == "l2"]
    assert len(set(l2_errs)) > 25


def test_sweep_rejects_empty_grid():
    with pytest.raises(ValueError):
        sweep([], trials=2, master_seed=0)


def test_thread_budget_env(monkeypatch):
    monkeypatch.setenv("DP_PROFILE_THREADS", "3")
    assert thread_budget() == 3
    monkeypatch.setenv("DP_PROFILE_THREADS", "0")
    with pytest.raises(ValueError):
        thread_budget()
    monkeypatch.setenv("DP_PROFILE_THREADS", "many")
    with pytest.raises(ValueError):
        thread_budget()
    monkeypatch.delenv("DP_PROFILE_THREADS")
    assert thread_budget() >= 1


def test_sweep_threaded_matches_serial(monkeypatch):
    monkeypatch.setenv("DP_PROFILE_THREADS", "4")
    threaded = sweep(small_grid(), trials=8, master_seed=3)
    monkeypatch.setenv("DP_PROFILE_THREADS", "1")
    serial = sweep(small_grid(), trials=8, master_seed=3)
    assert [(r.trial, r.p, r.err) for r in threaded] == [
        (r.trial, r.p, r.err) for r in serial
    ]


# --- scaling fit ------------------------------------------------------------------

def synthetic_reports(err_of_d):
    reports = []
    for d in (10**3, 10**4, 10**5):
        for trial in range(20):
            for p in ("l1", "l2", "linf"):
                reports.append(
                    ErrorReport(
                        d=d, n=8, epsilon=1.0, eta=0.05, p=p, trial=trial,
                        err=err_of_d(d), bound=1.0, seconds=0.0,
                    )
                )
    return reports


def test_fit_scaling_exact_power_law():
    reports = synthetic_reports(lambda d: 3.0 / math.sqrt(d))
    assert fit_scaling(reports, "l2") == pytest.approx(-0.5, abs=1e-9)


def test_fit_scaling_scale_invariant():
    base = synthetic_reports(lambda d: 3.0 / math.sqrt(d))
    doubled = synthetic_reports(lambda d: 6.0 / math.sqrt(d))
    assert fit_scaling(base, "l1") == pytest.approx(fit_scaling(doubled, "l1"), abs=1e-9)


def test_fit_scaling_requires_enough_data():
    reports = synthetic_reports(lambda d: 1.0 / d)
    only_two = [r for r in reports if r.d != 10**5]
    with pytest.raises(ValueError, match="distinct d"):
        fit_scaling(only_two, "l2")
    thin = [r for r in reports if r.trial < 5]
    with pytest.raises(ValueError, match="trials"):
        fit_scaling(thin, "l2")


# --- seed derivation -----------------------------------------------------------------

def test_derive_seed_stable_and_distinct():
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    seen = {derive_seed(5, cell, trial) for cell in range(20) for trial in range(50)}
    assert len(seen) == 1000
    assert derive_seed(1, 0, 0) != derive_seed(2, 0, 0)
