"""Command-line entry point: ``hypertpca <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from hypertpca.colorcoding import detection_plan, f_tilde, phi_tilde, recovery_plan
from hypertpca.counting import exact_detection_stat, exact_recovery_score, family_shape
from hypertpca.errors import CapacityError, ConfigError, HyperTPCAError, ParameterError
from hypertpca.families import build_family, read_manifest, write_manifest
from hypertpca.harness import ExperimentConfig, run, verify
from hypertpca.inference import DetectionConfig, detect, recover
from hypertpca.tensor_model import (
    ModelParams,
    load_tensor,
    sample_planted,
    save_spike,
    save_tensor,
    save_tensor_text,
)

EXIT_CAPACITY = 2
EXIT_CONFIG = 3


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, default=str))


def _pair(text: str) -> tuple:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two vertex indices as i,j") from None
    return i, j


def cmd_sample(args) -> int:
    T, x = sample_planted(ModelParams(args.n, args.p, args.lam), args.seed)
    (save_tensor_text if args.text else save_tensor)(T, args.out)
    if args.spike_out:
        save_spike(x, args.spike_out)
    _emit({"n": T.n, "p": T.p, "entries": len(T), "out": args.out})
    return 0


def cmd_families(args) -> int:
    fam = build_family(args.m, args.p, args.ell, args.kind, include_symmetric=args.include_symmetric)
    write_manifest(fam, args.out)
    summary = {
        "kind": fam.kind,
        "blocks": len(fam.blocks.classes),
        "beta_u": str(fam.blocks.beta_u),
        "beta_diamond": str(fam.blocks.beta_diamond),
    }
    if args.kind != "block":
        summary.update(classes=len(fam.classes), beta=str(fam.beta))
    _emit(summary)
    return 0


def cmd_stat(args) -> int:
    T = load_tensor(args.tensor)
    classes = read_manifest(args.family).classes
    m, p, ell, _ = family_shape(classes)
    start = time.perf_counter()
    t = r = None
    if args.which.startswith("phi") and args.pair is None:
        raise ParameterError("--pair i,j is required for recovery scores")
    if args.which == "detect-exact":
        stat = exact_detection_stat(T, classes)
    elif args.which == "detect-cc":
        plan = detection_plan(m, p, ell, args.seed, args.t_override)
        stat, t, r = f_tilde(T, classes, plan), plan.t, plan.r
    elif args.which == "phi-exact":
        beta_j = sum(c.beta for c in classes)
        stat = exact_recovery_score(T, classes, beta_j, args.lam, *args.pair)
    else:
        plan = recovery_plan(m, p, ell, args.seed, args.t_override)
        stat, t, r = phi_tilde(T, classes, plan, args.lam, *args.pair), plan.t, plan.r
    _emit({"statistic": stat, "t": t, "r": r, "wall_ms": (time.perf_counter() - start) * 1e3})
    return 0


def cmd_detect(args) -> int:
    T = load_tensor(args.tensor)
    cfg = DetectionConfig(read_manifest(args.family).classes, args.lam, args.C, args.mode, args.seed, args.t_override)
    _emit(detect(T, cfg))
    return 0


def cmd_recover(args) -> int:
    T = load_tensor(args.tensor)
    fam = read_manifest(args.family)
    res = recover(T, fam.classes, args.lam, args.anchor, args.mode, args.seed, args.t_override)
    if args.out:
        save_spike(res.estimate, args.out)
    _emit({"anchor": res.anchor, "estimate": res.estimate.entries.tolist(), "scores": np.asarray(res.scores).tolist()})
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    summary = run(cfg, args.out)
    summary.pop("records")
    _emit(summary)
    return 0


def cmd_verify(args) -> int:
    report = verify(n=args.n, seeds=args.seeds)
    _emit(report)
    return 0 if all(r["passed"] for r in report) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypertpca", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw a null or planted tensor")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--lambda", dest="lam", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--spike-out")
    s.add_argument("--text", action="store_true", help="write the text format instead of SPT1")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("families", help="enumerate a block, necklace or chain family")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--ell", type=int, default=1)
    s.add_argument("--kind", choices=("block", "necklace", "chain"), required=True)
    s.add_argument("--include-symmetric", action="store_true",
                   help="chains: keep sequences equal to their own reversal")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_families)

    s = sub.add_parser("stat", help="evaluate one statistic")
    s.add_argument("which", choices=("detect-exact", "detect-cc", "phi-exact", "phi-cc"))
    s.add_argument("--tensor", required=True)
    s.add_argument("--family", required=True)
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--t-override", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--pair", type=_pair)
    s.set_defaults(func=cmd_stat)

    s = sub.add_parser("detect", help="thresholded detection test")
    s.add_argument("--tensor", required=True)
    s.add_argument("--family", required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--C", type=float, default=0.5)
    s.add_argument("--mode", choices=("exact", "cc"), default="exact")
    s.add_argument("--t-override", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("recover", help="sign-rounding recovery from one anchor row")
    s.add_argument("--tensor", required=True)
    s.add_argument("--family", required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--anchor", type=int, default=0)
    s.add_argument("--mode", choices=("exact", "cc"), default="exact")
    s.add_argument("--t-override", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("verify", help="oracle-equivalence and family ground-truth checks")
    s.add_argument("--n", type=int, default=10)
    s.add_argument("--seeds", type=int, default=5)
    s.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as e:
        print(f"capacity error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConfigError, ParameterError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (HyperTPCAError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
