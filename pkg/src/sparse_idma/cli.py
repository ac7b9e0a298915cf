"""Command-line front end.

Subcommands: simulate (one operating point), sweep (grid -> minimum Eb/N0),
threshold (density evolution), optimize (ensemble search), report (merge
result CSVs).  Exit code 0 on success, 2 on an infeasible sweep.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

from . import presets
from .density_evolution import de_threshold
from .optimizer import EnsembleOptimizer
from .protograph import validate_protograph
from .sim import (REPORT_HEADER, SimConfig, emit_report, estimate_pupe,
                  find_min_ebn0, powers_for_ebn0)


def _load_config(args):
    if args.config:
        cfg = SimConfig.load(args.config)
    else:
        cfg = SimConfig(K_a=args.ka if args.ka is not None else 100)
    updates = {}
    if args.ka is not None:
        updates["K_a"] = args.ka
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.channel is not None:
        updates["channel"] = args.channel
    if args.preset is not None:
        updates["preset"] = args.preset
    if updates:
        from dataclasses import asdict

        d = asdict(cfg)
        d.update(updates)
        if "K_a" in updates:
            d["K_b"] = None  # re-derive from the new K_a
            if args.config is None:
                d["rate"] = None
                d["nu"] = None
        cfg = SimConfig(**d)
    return cfg


def _add_common(p):
    p.add_argument("--config", help="JSON SimConfig file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--trials", type=int)
    p.add_argument("--ka", type=int, help="number of active users")
    p.add_argument("--channel", choices=["awgn", "rayleigh"])
    p.add_argument("--preset", choices=["sparse", "idma75"])


def cmd_simulate(args):
    cfg = _load_config(args)
    if args.ebn0_db is not None:
        ratio = args.split_ratio
        P1, P2 = powers_for_ebn0(cfg.layout, args.ebn0_db, ratio)
        cfg = cfg.with_powers(P1, P2)
    est = estimate_pupe(cfg)
    print(f"K_a={cfg.K_a} rate={cfg.rate} channel={cfg.channel} "
          f"P1={cfg.P1:.5g} P2={cfg.P2:.5g}")
    print(f"Pe={est.pe:.5f} 95% CI [{est.ci_low:.5f}, {est.ci_high:.5f}] "
          f"({est.trials} trials, {est.total_misses}/{est.total_users} misses)")
    return 0


def cmd_sweep(args):
    cfg = _load_config(args)
    res = find_min_ebn0(cfg, args.lo_db, args.hi_db, verbose=True)
    if not res.feasible:
        print(f"infeasible: best Pe={res.best_pe:.4f} > epsilon={cfg.epsilon}")
        return 2
    print(f"required Eb/N0 = {res.ebn0_db:.2f} dB "
          f"(P1={res.P1:.5g}, P2={res.P2:.5g}, split={res.split_ratio:g}, "
          f"Pe={res.pe:.4f})")
    if args.output:
        rows = [{
            "K_a": cfg.K_a, "rate": cfg.rate, "nu": cfg.nu,
            "channel": cfg.channel, "ebn0_db": res.ebn0_db, "pe": res.pe,
            "ci_low": "", "ci_high": "", "trials": cfg.trials,
            "wall_time_s": sum(p.wall_time_s for p in res.points),
        }]
        emit_report(rows, args.output)
    return 0


def cmd_threshold(args):
    cfg = _load_config(args)
    code = presets.code_for_rate(cfg.rate)
    thr = de_threshold(code.proto, cfg.repetition, cfg.layout, code.N,
                       cfg.K_a, split_ratio=args.split_ratio)
    if math.isinf(thr):
        print("threshold: +inf (no convergence inside the bracket)")
    else:
        print(f"DE threshold: {thr:.3f} dB "
              f"(K_a={cfg.K_a}, rate={cfg.rate}, nu={cfg.nu})")
    return 0


def cmd_optimize(args):
    cfg = _load_config(args)
    rate = cfg.rate
    nc, nv = (int(x) for x in args.shape.split("x"))
    opt = EnsembleOptimizer(
        (nc, nv), rate, cfg.K_a, cfg.layout, N=args.code_length,
        seed=cfg.master_seed, pop_size=args.population,
        optimize_nu=not args.fixed_nu,
        fixed_nu=cfg.repetition if args.fixed_nu else None)
    cand = opt.run(args.budget, checkpoint_path=args.checkpoint)
    print("best base matrix:")
    for row in cand.base_matrix:
        print("  " + " ".join(str(int(x)) for x in row))
    print(f"nu = {cand.nu.nu}")
    print(f"threshold = {cand.fitness:.3f} dB "
          f"({opt.evaluations} evaluations)")
    return 0


def cmd_report(args):
    rows = []
    for path in args.inputs:
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.DictReader(fh)
            rows.extend(r)
    rows.sort(key=lambda r: (float(r["K_a"]), float(r["ebn0_db"] or "inf")))
    results = [{k: row.get(k, "") for k in REPORT_HEADER} for row in rows]
    emit_report(results, args.output, plot_path=args.plot_data)
    print(f"wrote {len(results)} rows to {args.output}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sparse-idma",
        description="Sparse IDMA unsourced random access simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="estimate PUPE at one operating point")
    _add_common(p)
    p.add_argument("--ebn0-db", type=float)
    p.add_argument("--split-ratio", type=float, default=2.0)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="grid search for the minimum Eb/N0")
    _add_common(p)
    p.add_argument("--lo-db", type=float, default=0.0)
    p.add_argument("--hi-db", type=float, default=8.0)
    p.add_argument("--output", help="CSV output path")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("threshold", help="density-evolution threshold")
    _add_common(p)
    p.add_argument("--split-ratio", type=float, default=2.0)
    p.set_defaults(fn=cmd_threshold)

    p = sub.add_parser("optimize", help="differential-evolution code search")
    _add_common(p)
    p.add_argument("--shape", default="7x8", help="checks x vars, e.g. 7x8")
    p.add_argument("--code-length", type=int, default=680)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--population", type=int, default=24)
    p.add_argument("--fixed-nu", action="store_true")
    p.add_argument("--checkpoint")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("report", help="merge result CSVs")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--output", required=True)
    p.add_argument("--plot-data")
    p.set_defaults(fn=cmd_report)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
