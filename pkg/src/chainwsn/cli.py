"""Command line entry point: run, sweep, summarize, validate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .chain import Approach
from .engine import Scheme, StopAt
from .geometry import ConfigError
from .harness import (
    Cell,
    cell_config,
    format_table,
    load_config,
    load_summaries,
    parse_config,
    run_cell,
    run_experiment,
    summarize,
    _atomic_write,
    _dumps,
)

log = logging.getLogger("chainwsn")

FLAG_NAMES = ["fusion", "setup_energy", "literal_fig4", "strict_range", "sleep_mode"]


def _load(path):
    return load_config(path) if path else parse_config({})


def _apply_flags(base, args):
    over = {f: getattr(args, f) for f in FLAG_NAMES if getattr(args, f) is not None}
    return replace(base, **over) if over else base


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config file (defaults if omitted)")
    p.add_argument("--out", help="output directory (overrides experiment.output_dir)")
    p.add_argument("--stop-at", choices=[s.value for s in StopAt])
    p.add_argument("--max-rounds", type=int)
    for f in FLAG_NAMES:
        opt = f.replace("_", "-")
        p.add_argument(f"--{opt}", dest=f, action="store_true", default=None)
        p.add_argument(f"--no-{opt}", dest=f, action="store_false")


def cmd_run(args) -> int:
    spec, base = _load(args.config)
    base = _apply_flags(base, args)
    scheme = Scheme(args.scheme)
    if not scheme.proposed and args.approach is not None:
        raise ConfigError(f"--approach: {scheme.value} takes no approach")
    approach = Approach(args.approach or "one-hop") if scheme.proposed else None
    n_s = args.n_s if args.n_s is not None else spec.n_s[0]
    n_t = args.n_t if args.n_t is not None else spec.n_t[0]
    seed = args.seed if args.seed is not None else spec.seeds[0]
    cell = Cell(scheme, approach, n_s if approach else None, n_t if approach else None, seed)
    cell_config(base, cell)  # validate geometry before simulating
    out = Path(args.out or spec.output_dir)
    stop = StopAt(args.stop_at) if args.stop_at else spec.stop_at
    entry = run_cell(base, cell, out, stop, args.max_rounds or spec.max_rounds)
    summary = json.loads((out / entry["summary"]).read_text(encoding="utf-8"))
    _atomic_write(out / "manifest.json", _dumps({"cells": [entry]}))
    print(f"{cell.name}: FND={summary['fnd_round']} max_path={summary['measured_max_path']} "
          f"(analytic {summary['analytic_max_path']:g}) -> {out / entry['csv']}")
    return 0


def cmd_sweep(args) -> int:
    spec, base = _load(args.config)
    base = _apply_flags(base, args)
    over = {}
    if args.stop_at:
        over["stop_at"] = StopAt(args.stop_at)
    if args.max_rounds:
        over["max_rounds"] = args.max_rounds
    if args.parallel:
        over["parallel"] = args.parallel
    spec = replace(spec, **over)
    path = run_experiment(spec, base, args.out)
    table = summarize(load_summaries(path.parent))
    print(format_table(table))
    print(f"manifest: {path}")
    return 0


def cmd_summarize(args) -> int:
    out = Path(args.out_dir)
    table = summarize(load_summaries(out))
    _atomic_write(out / "summary.json", _dumps(table))
    print(format_table(table))
    return 1 if table["missing"] else 0


def cmd_validate(args) -> int:
    spec, base = load_config(args.config)
    from .harness import enumerate_cells
    cells = enumerate_cells(spec)
    for c in cells:
        cell_config(base, c)
    print(f"{args.config}: ok, {len(cells)} cells")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chainwsn", description="Chain-based WSN lifetime and delay simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="simulate a single cell")
    _add_common(p)
    p.add_argument("--scheme", required=True, choices=[s.value for s in Scheme])
    p.add_argument("--approach", choices=[a.value for a in Approach])
    p.add_argument("--n-s", type=int)
    p.add_argument("--n-t", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="simulate every cell of a config grid")
    _add_common(p)
    p.add_argument("--parallel", type=int, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("summarize", help="comparison table for a finished sweep")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
