"""Command line entry point: ``polyres <subcommand> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .dynamics import BlowUpError
from .harness import experiments as ex
from .harness.config import ConfigError, ExperimentConfig, load_config, load_json
from .harness.io import emit_csv, read_csv
from .harness.plots import KINDS, emit_plot


def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--seed-offset", type=int, default=0, help="added to every seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyres", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("open-loop", help="RMSE sweep of tau-ahead prediction")
    _add_common(p)

    p = sub.add_parser("closed-loop", help="MCE / KLD / valid-time ensemble")
    _add_common(p)
    p.add_argument("--examples", action="store_true",
                   help="also plot time series, phase and PDF figures for the first seed")

    p = sub.add_parser("lyapunov", help="maximal Lyapunov exponent of the target system")
    _add_common(p)

    p = sub.add_parser("csis-check", help="echo-state (common-signal synchronization) check")
    _add_common(p)

    p = sub.add_parser("plot", help="re-plot a results CSV")
    _add_common(p)
    p.add_argument("--csv", help="results CSV (overrides config key 'csv')")
    p.add_argument("--kind", choices=[k for k in KINDS if k in ("rmse_vs_n", "metric_scatter")])
    return parser


def _experiment_config(args, mode) -> tuple[ExperimentConfig, str]:
    if args.config:
        cfg = load_config(args.config)
        stem = Path(args.config).stem
    else:
        cfg = ExperimentConfig.for_mode(mode)
        stem = mode
    if cfg.mode != mode:
        raise ConfigError(f"{args.config}: mode is {cfg.mode!r}, expected {mode!r}")
    if args.seed_offset:
        cfg = cfg.with_seed_offset(args.seed_offset)
    return cfg, stem


def _print_summary(rows, metrics):
    for metric in metrics:
        for (n, d), s in ex.summarize(rows, metric).items():
            extra = f"  (dropped {s['dropped']} diverged)" if s["dropped"] else ""
            print(f"  {metric:<10} n={n:<3} degree={d}  median={s['median']:.4g}  "
                  f"iqr={s['iqr']:.4g}  count={s['count']}{extra}")


def cmd_open_loop(args) -> int:
    cfg, stem = _experiment_config(args, "open_loop")
    out = Path(args.out)
    t0 = time.perf_counter()
    rows = ex.run_open_loop(cfg)
    csv_path = emit_csv(rows, out / f"{stem}.csv")
    emit_plot(rows, "rmse_vs_n", out / f"{stem}.svg")
    print(f"open-loop: {len(rows)} rows in {time.perf_counter() - t0:.1f}s -> {csv_path}")
    _print_summary(rows, ["rmse"])
    return 0


def cmd_closed_loop(args) -> int:
    cfg, stem = _experiment_config(args, "closed_loop")
    out = Path(args.out)
    t0 = time.perf_counter()
    rows = ex.run_closed_loop(cfg)
    csv_path = emit_csv(rows, out / f"{stem}.csv")
    emit_plot(rows, "metric_scatter", out / f"{stem}.svg")
    n_div = sum(r.diverged for r in rows)
    print(f"closed-loop: {len(rows)} rows ({n_div} diverged) in "
          f"{time.perf_counter() - t0:.1f}s -> {csv_path}")
    _print_summary(rows, ["mce", "kld", "valid_time"])
    if args.examples:
        for d, item in ex.closed_loop_example(cfg, cfg.seeds[0]).items():
            base = out / f"{stem}_seed{cfg.seeds[0]}_d{d}"
            emit_plot((item["target"], item["prediction"]), "timeseries", f"{base}_timeseries.svg")
            if item["orbit"] is not None:
                emit_plot((item["orbit"], item["errors"]), "phase_xz", f"{base}_phase.svg")
            emit_plot((item["p"], item["q"]), "pdf_overlay", f"{base}_pdf.svg")
        print(f"  example figures written to {out}")
    return 0


def cmd_lyapunov(args) -> int:
    cfg = load_json(args.config) if args.config else {}
    t0 = time.perf_counter()
    lam = ex.lyapunov(cfg)
    system = cfg.get("system", "lorenz")
    print(f"maximal Lyapunov exponent ({system}): {lam:.4f}  "
          f"[{time.perf_counter() - t0:.1f}s]")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem if args.config else "lyapunov"
    (out / f"{stem}.json").write_text(json.dumps({"system": system, "lambda_max": lam}) + "\n")
    return 0


def cmd_csis(args) -> int:
    cfg = load_json(args.config) if args.config else {}
    if args.seed_offset:
        cfg["seeds"] = [int(s) + args.seed_offset for s in cfg.get("seeds", range(5))]
    results = ex.csis_check(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem if args.config else "csis"
    cols = ["tau", "spectral_radius", "sigma_b", "seed", "first_below", "final_distance", "passed"]
    lines = [",".join(cols)]
    for r in results:
        lines.append(",".join("" if r[c] is None else str(r[c]) for c in cols))
        status = "ok  " if r["passed"] else "FAIL"
        print(f"  {status} radius={r['spectral_radius']} sigma_b={r['sigma_b']} "
              f"seed={r['seed']} first_below={r['first_below']}")
    (out / f"{stem}.csv").write_text("\n".join(lines) + "\n")
    failed = sum(not r["passed"] for r in results)
    print(f"csis-check: {len(results) - failed}/{len(results)} converged")
    return 1 if failed else 0


def cmd_plot(args) -> int:
    cfg = load_json(args.config) if args.config else {}
    csv_path = args.csv or cfg.get("csv")
    if not csv_path:
        raise ConfigError("plot needs --csv or a config with a 'csv' key")
    rows = read_csv(csv_path)
    kind = args.kind or cfg.get("kind") or (
        "rmse_vs_n" if rows[0].mode == "open_loop" else "metric_scatter")
    path = emit_plot(rows, kind, Path(args.out) / f"{Path(csv_path).stem}_{kind}.svg")
    print(f"plot: wrote {path}")
    return 0


COMMANDS = {
    "open-loop": cmd_open_loop,
    "closed-loop": cmd_closed_loop,
    "lyapunov": cmd_lyapunov,
    "csis-check": cmd_csis,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"polyres {args.command}: config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, BlowUpError) as exc:
        print(f"polyres {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
