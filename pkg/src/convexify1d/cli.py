"""Command line entry point: ``convexify1d {synth,table1,nstudy,exp}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .errors import ConvexifyError
from .pipeline import PipelineConfig


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def cmd_synth(args) -> int:
    cfg = _config(args)
    res = pipeline.run_synthetic(cfg, args.c_true, args.x_loc, trace_rows=args.trace)
    pipeline.write_result(args.out, res)
    s = res.summary()
    print(f"c_hat_comp={s['c_hat_comp']:.4f} eps_comp={s['eps_comp']:.2f}% "
          f"x_est={s['x_est']} iterations={s['iterations']} ({s['termination']})")
    return 0


def cmd_table1(args) -> int:
    cfg = _config(args)
    results = pipeline.run_table1(cfg, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipeline.write_table1(out / "table1.csv", results)
    pipeline.write_json(out / "summary.json", {
        "results": [r.summary() for r in results],
        "config": cfg.to_dict(),
    })
    print((out / "table1.csv").read_text(), end="")
    eps = [r.eps_comp for r in results if r.eps_comp is not None]
    if eps:
        print(f"max eps={max(eps):.2f}% mean eps={np.mean(eps):.2f}%")
    return 0 if all(r.error is None for r in results) else 1


def cmd_nstudy(args) -> int:
    cfg = _config(args)
    errs = pipeline.n_study(cfg, args.c_true, args.x_loc, tuple(range(1, args.n_max + 1)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["N,eps"] + [f"{n},{e:.17g}" for n, e in errs.items()]
    (out / "nstudy.csv").write_text("\n".join(lines) + "\n")
    for n, e in errs.items():
        print(f"N={n} eps={e:.4f}")
    return 0


def cmd_exp(args) -> int:
    cfg = _config(args).replace(mode="experimental")
    est, res = pipeline.run_experimental(args.data, args.cbg_lo, args.cbg_hi, args.mode, cfg,
                                         trace_rows=args.trace)
    pipeline.write_result(args.out, res)
    lo, hi = est.interval
    pipeline.write_json(Path(args.out) / "contrast.json", {
        "c_contrast": est.c_contrast, "c_bg_lo": est.c_bg_lo, "c_bg_hi": est.c_bg_hi,
        "c_est_lo": lo, "c_est_hi": hi, "mode": args.mode,
    })
    print(f"contrast={est.c_contrast:.2f} c_est in [{lo:.2f}, {hi:.2f}]")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="convexify1d",
                                description="1-D Helmholtz coefficient reconstruction")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with PipelineConfig fields")
    common.add_argument("--seed", type=int, help="noise seed (overrides config)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--trace", action="store_true", help="write per-iteration trace.csv")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="reconstruct one simulated target")
    s.add_argument("--c-true", type=float, required=True)
    s.add_argument("--x-loc", type=float, required=True)
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("table1", parents=[common], help="batch over the 16 simulated targets")
    t.add_argument("--workers", type=int, default=None)
    t.set_defaults(func=cmd_table1)

    n = sub.add_parser("nstudy", parents=[common], help="error of the truncated expansion vs N")
    n.add_argument("--c-true", type=float, default=5.0)
    n.add_argument("--x-loc", type=float, default=0.4)
    n.add_argument("--n-max", type=int, default=4)
    n.set_defaults(func=cmd_nstudy)

    e = sub.add_parser("exp", parents=[common], help="contrast from a measured k,re,im file")
    e.add_argument("--data", required=True)
    e.add_argument("--cbg-lo", type=float, required=True)
    e.add_argument("--cbg-hi", type=float, required=True)
    e.add_argument("--mode", choices=("max", "min"), default="max")
    e.set_defaults(func=cmd_exp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConvexifyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
