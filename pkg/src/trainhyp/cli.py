"""Command-line front end.

Exit codes: 0 on success, 1 when a verify run finds violations (or, with
``--fail-on-divergence``, when classify returns not-hyperbolic), 2 on input
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import Outcome, classify, necessary_checks, quasi_increasing_c1
from .core import SequenceFamily, SpecError, TrainSpec, explicit, load_spec
from .gamma import DEFAULT_CAP, GammaKind, k_estimate, sup_over_h, write_profile
from . import transforms as tf
from .verify import CHECKS, FIT_CHECKS, GridSpec, fit_constants, run_check, write_fit_csv


@dataclass
class Report:
    command: list[str]
    spec_digest: str | None
    results: dict
    version: str = __version__
    wall_time: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "command": self.command,
                "spec_digest": self.spec_digest,
                "results": self.results,
                "version": self.version,
                "wall_time": self.wall_time,
            },
            sort_keys=True,
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        return cls(d["command"], d["spec_digest"], d["results"], d["version"], d["wall_time"])


class InputError(Exception):
    pass


def _read_spec(path: str) -> TrainSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read spec {path}: {exc.strerror or exc}") from None
    return load_spec(text)


def _family(text: str) -> SequenceFamily:
    """A family given inline as JSON or as ``@file.json``."""
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {text[1:]}: {exc.strerror or exc}") from None
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"bad family JSON: {exc}") from None
    if isinstance(payload, list):
        return explicit(payload)
    return SequenceFamily.from_dict(payload)


def _int_list(text: str) -> list[int]:
    try:
        values = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"bad integer list: {exc}") from None
    if not isinstance(values, list) or not all(isinstance(v, int) for v in values):
        raise InputError("expected a JSON list of integers")
    return values


def _estimate(args, train: TrainSpec, kind: GammaKind | None = None):
    return k_estimate(
        train,
        kind or GammaKind(args.kind),
        n_max=min(args.n_max, train.n_max) if args.n_max else None,
        grid=args.h_grid,
        h_floor=args.h_floor,
        cap=args.cap,
        refine=not args.no_refine,
        jobs=args.jobs,
    )


def _emit(args, report: Report) -> None:
    report.wall_time = time.perf_counter() - args.t0
    text = report.to_json() + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args, argv) -> int:
    train = _read_spec(args.spec)
    est = _estimate(args, train)
    _emit(args, Report(argv, train.digest(), {"k_estimate": est.to_dict()}))
    return 0


def cmd_classify(args, argv) -> int:
    train = _read_spec(args.spec)
    est = _estimate(args, train)
    verdict = classify(train, est)
    results = {"k_estimate": est.to_dict(), "verdict": verdict.to_dict()}
    if verdict.outcome is Outcome.HYPERBOLIC and not est.saturated:
        c1, _ = quasi_increasing_c1(train)
        results["necessary_checks"] = necessary_checks(train, est, c1).to_dict()
    _emit(args, Report(argv, train.digest(), results))
    if args.fail_on_divergence and verdict.outcome is Outcome.NOT_HYPERBOLIC:
        return 1
    return 0


def cmd_profile(args, argv) -> int:
    train = _read_spec(args.spec)
    if not 1 <= args.n <= train.n_max:
        raise InputError(f"--n must lie in 1..{train.n_max}")
    res = sup_over_h(train, GammaKind(args.kind), args.n, grid=args.h_grid, h_floor=args.h_floor, cap=args.cap,
                     refine=not args.no_refine)
    if args.out:
        write_profile(res.profile, args.out)
    else:
        write_profile(res.profile, sys.stdout)
    return 0


def cmd_transform(args, argv) -> int:
    op = args.op
    train = _read_spec(args.spec[0]) if op != "union" else None
    want_bound = not args.no_bound
    if op == "perturb":
        K = _estimate(args, train, GammaKind.FULL).value if want_bound else None
        rec = tf.perturb(train, _family(args.dl).values(train.n_max), _family(args.dr).values(train.n_max), K)
    elif op == "scale":
        K = _estimate(args, train, GammaKind.FULL).value if want_bound else None
        rec = tf.scale(train, args.lam, args.mu, K)
    elif op == "union":
        parts = [_read_spec(p) for p in args.spec]
        k0s = [_estimate(args, p, GammaKind.ZERO).value for p in parts] if want_bound else None
        inter = json.loads(Path(args.interleaving).read_text()) if args.interleaving else \
            tf.alternating([p.n_max for p in parts])
        rec = tf.union(parts, inter, k0s)
    elif op == "permute":
        if args.sigma:
            sigma = _int_list(args.sigma)
        else:
            sigma = tf.windowed_shuffle(train.n_max, args.N, np.random.default_rng(args.seed)).tolist()
        K0 = _estimate(args, train, GammaKind.ZERO).value if want_bound else None
        rec = tf.permute_bounded(train, sigma, args.N, K0)
    elif op == "embed":
        positions = _int_list(args.positions)
        filler = _family(args.filler)
        K0 = _estimate(args, train, GammaKind.ZERO).value if want_bound else None
        rec = tf.embed_subsequence(train, positions, filler.values(max(positions)), args.N, K0)
    elif op == "companion":
        run, c = tf.companion_nondecreasing(train)
        out = TrainSpec(explicit(run), train.r, train.n_max)
        rec = tf.TransformRecord(train.digest(), "companion", {"c": c}, out)
    else:  # pragma: no cover - argparse restricts choices
        raise InputError(f"unknown transform {op}")
    if args.out_spec:
        Path(args.out_spec).write_text(rec.output.to_json() + "\n")
    digest = train.digest() if train is not None else rec.input_id
    _emit(args, Report(argv, digest, {"transform": rec.to_dict()}))
    return 0


def cmd_verify(args, argv) -> int:
    region = json.loads(args.region) if args.region else None
    rep = run_check(args.check, samples=args.samples, seed=args.seed, region=region, jobs=args.jobs)
    _emit(args, Report(argv, None, {"inequality": rep.to_dict()}))
    return 0 if rep.ok else 1


def cmd_fit(args, argv) -> int:
    grid = GridSpec(args.points)
    reps = [fit_constants(args.check, l0, grid) for l0 in args.l0]
    if args.out:
        write_fit_csv(reps, args.out)
    else:
        write_fit_csv(reps, sys.stdout)
    if args.report:
        rep = Report(argv, None, {"fits": [r.to_dict() for r in reps]}, wall_time=time.perf_counter() - args.t0)
        Path(args.report).write_text(rep.to_json() + "\n")
    return 0 if all(r.ok for r in reps) else 1


def _gamma_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=[k.value for k in GammaKind], default="full")
    p.add_argument("--n-max", type=int, default=None, help="outer index bound (default: spec horizon)")
    p.add_argument("--h-grid", type=int, default=256, help="uniform h samples per index")
    p.add_argument("--h-floor", type=float, default=0.0, help="lower end l0 of the h range")
    p.add_argument("--cap", type=float, default=DEFAULT_CAP, help="saturation cap")
    p.add_argument("--jobs", type=int, default=1, help="worker threads; results do not depend on it")
    p.add_argument("--no-refine", action="store_true", help="skip kink probes and golden-section refinement")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trainhyp", description="Gromov hyperbolicity diagnostics for trains")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="estimate K_N")
    p.add_argument("--spec", required=True)
    _gamma_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("classify", help="hyperbolicity verdict")
    p.add_argument("--spec", required=True)
    _gamma_flags(p)
    p.add_argument("--fail-on-divergence", action="store_true", help="exit 1 on a not-hyperbolic verdict")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("profile", help="CSV of h -> min_m Gamma_nm(h)")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True)
    _gamma_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("transform", help="transform a train and propagate bounds")
    p.add_argument("op", choices=["perturb", "scale", "union", "permute", "embed", "companion"])
    p.add_argument("--spec", action="append", required=True, help="input spec (repeat for union)")
    p.add_argument("--dl", default='{"kind": "constant", "value": 0}')
    p.add_argument("--dr", default='{"kind": "constant", "value": 0}')
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--interleaving", help="JSON file: output positions per part")
    p.add_argument("--sigma", help="JSON list, the permutation sigma(1..n)")
    p.add_argument("--N", type=int, default=1, help="displacement or gap bound")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--positions", default="[]", help="JSON list of increasing positions")
    p.add_argument("--filler", default='{"kind": "constant", "value": 1}')
    p.add_argument("--no-bound", action="store_true", help="skip the K evaluation behind the predicted bound")
    p.add_argument("--out-spec")
    _gamma_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("verify", help="fuzz an inequality")
    p.add_argument("--check", required=True, choices=CHECKS)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--region", help='JSON object, e.g. {"l": [0, 10]}')
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fit-constants", help="grid fit of comparison constants")
    p.add_argument("--check", required=True, choices=FIT_CHECKS)
    p.add_argument("--l0", type=float, action="append", default=None)
    p.add_argument("--points", type=int, default=GridSpec().points)
    p.add_argument("--out", help="CSV path")
    p.add_argument("--report", help="JSON report path")
    p.set_defaults(func=cmd_fit)
    return ap


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "l0", False) is None:
        args.l0 = [0.1, 1.0]
    args.t0 = time.perf_counter()
    try:
        return args.func(args, list(argv))
    except (InputError, SpecError, ValueError, IndexError, OSError, json.JSONDecodeError) as exc:
        print(f"trainhyp: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
