"""Command-line front end for sketching, reconstructing, and evaluating.

Every command is deterministic under --seed: rerunning with identical flags
produces byte-identical output files.  Output is written to a temporary file
and renamed into place on success, so failures never leave partial files.
Diagnostics (parameters, timing) go to standard error.

Exit codes: 0 on success, 2 on user error (bad flags or inputs), 1 on
internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import evaluation, mechanism, reconstruct, twoparty
from .circulant import build_operator
from .mechanism import ReconstructionConfig

__all__ = ["main"]


def _write_atomic_via(path: str, writer) -> None:
    tmp = f"{path}.tmp"
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_atomic(path: str, text: str) -> None:
    def writer(tmp: str) -> None:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)

    _write_atomic_via(path, writer)


def cmd_sketch(args) -> None:
    h = mechanism.read_histogram(args.input, n=args.n)
    rng = np.random.default_rng(args.seed)
    sketch = mechanism.privatize(h, args.epsilon, clip=args.clip, rng=rng)
    _write_atomic_via(args.output, lambda p: mechanism.write_sketch(p, sketch))


def cmd_reconstruct(args) -> None:
    sketch = mechanism.read_sketch(args.input)
    cfg = ReconstructionConfig(
        epsilon=sketch.epsilon,
        eta=args.eta,
        n=sketch.n,
        d=sketch.d,
        p_norm=args.norm,
    )
    rng = np.random.default_rng(args.seed)
    start = time.perf_counter()
    profile = reconstruct.reconstruct_profile(sketch, cfg, rng=rng)
    elapsed = time.perf_counter() - start
    op = reconstruct.cached_operator(cfg)
    print(
        f"B={cfg.B} P_norm={op.p_norm_const!r} seconds={elapsed:.6f}",
        file=sys.stderr,
    )
    _write_atomic_via(args.output, lambda p: reconstruct.write_profile_csv(p, profile))


def cmd_update(args) -> None:
    sketch = mechanism.read_sketch(args.sketch)
    # Delta entries may be any integers; read them without the [0, n] check.
    deltas = []
    with open(args.delta, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                deltas.append(int(text))
            except ValueError:
                raise ValueError(
                    f"{args.delta}:{lineno}: expected an integer, got {text!r}"
                ) from None
    updated = mechanism.update(sketch, np.array(deltas, dtype=np.int64))
    _write_atomic_via(args.output, lambda p: mechanism.write_sketch(p, updated))


def _parse_dist(text: str, n: int, d: int, seed: int) -> evaluation.SynthSpec:
    name, _, param = text.partition(":")
    if name == "point_mass":
        if not param:
            raise ValueError("point_mass needs a count, e.g. point_mass:1")
        return evaluation.SynthSpec("point_mass", d=d, n=n, seed=seed, param=int(param))
    if name == "uniform":
        return evaluation.SynthSpec("uniform_counts", d=d, n=n, seed=seed)
    if name == "zipf":
        alpha = float(param) if param else 1.1
        return evaluation.SynthSpec("zipf", d=d, n=n, seed=seed, param=alpha)
    raise ValueError(f"unknown distribution {text!r}")


def cmd_eval(args) -> None:
    try:
        d_list = [int(tok) for tok in args.d_list.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"--d-list must be comma-separated integers, got {args.d_list!r}")
    if not d_list:
        raise ValueError("--d-list is empty")
    grid = []
    for cell, d in enumerate(d_list):
        spec = _parse_dist(args.dist, n=args.n, d=d, seed=evaluation.derive_seed(args.seed, cell, 1 << 32))
        cfg = ReconstructionConfig(epsilon=args.epsilon, eta=args.eta, n=args.n, d=d)
        grid.append((spec, cfg))
    reports = evaluation.sweep(grid, trials=args.trials, master_seed=args.seed)
    slopes = None
    if args.fit:
        slopes = {p: evaluation.fit_scaling(reports, p) for p in evaluation.NORMS}
        for p in evaluation.NORMS:
            print(f"slope_{p}={slopes[p]!r}", file=sys.stderr)
    _write_atomic(args.output, evaluation.rows_to_csv(reports, slopes))


def cmd_innerprod(args) -> None:
    results = twoparty.run_protocol(
        d=args.d, epsilon=args.epsilon, trials=args.trials, master_seed=args.seed
    )
    _write_atomic(args.output, twoparty.results_to_csv(args.d, results))


def _build_parser() -> argparse.ArgumentParser:
    seed_parent = argparse.ArgumentParser(add_help=False)
    seed_parent.add_argument(
        "--seed", type=int, default=0, help="64-bit seed; reruns are byte-identical"
    )

    parser = argparse.ArgumentParser(
        prog="dpprofile",
        description="Privatize histograms and reconstruct dataset profiles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sketch", parents=[seed_parent], help="privatize a histogram")
    p.add_argument("--input", required=True, help="histogram file, one count per line")
    p.add_argument("--output", required=True, help="sketch JSON path")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n", type=int, required=True, help="maximum count")
    p.add_argument("--clip", action="store_true", help="clip noisy counts into [0, n]")
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser(
        "reconstruct", parents=[seed_parent], help="estimate the profile of a sketch"
    )
    p.add_argument("--input", required=True, help="sketch JSON path")
    p.add_argument("--output", required=True, help="profile CSV path")
    p.add_argument("--eta", type=float, required=True, help="failure probability")
    p.add_argument("--norm", choices=["l1", "l2", "linf"], default="l2")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("update", parents=[seed_parent], help="shift an unclipped sketch")
    p.add_argument("--sketch", required=True)
    p.add_argument("--delta", required=True, help="integer deltas, one per line")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("eval", parents=[seed_parent], help="error sweep over domain sizes")
    p.add_argument("--dist", required=True, help="point_mass:C, uniform, or zipf:A")
    p.add_argument("--d-list", required=True, help="comma-separated domain sizes")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--fit", action="store_true", help="append scaling slopes")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "innerprod", parents=[seed_parent], help="two-party inner-product demo"
    )
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_innerprod)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
