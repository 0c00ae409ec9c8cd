"""Experiment configuration, sweep execution and deterministic outputs.

Config files are YAML with three optional sections (``experiment``,
``network``, ``flags``); an empty file gives the reference scenario.  See
README for the full schema.  Every cell of a sweep writes one per-round CSV
and one summary JSON, and the sweep writes a manifest listing every cell.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import statistics
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Optional

import yaml

from .baselines import BaselineConfig
from .chain import Approach
from .delay import analytic_baseline_max_path, analytic_max_path, cost_summary
from .engine import DEFAULT_MAX_ROUNDS, Scheme, SimResult, StopAt, simulate
from .geometry import ConfigError, PartitionSpec
from .network import RNG_ALGORITHM, NetworkConfig
from .radio import NANO, PICO, RadioParams

CSV_COLUMNS = [
    "round", "alive_rfds", "alive_ffds", "energy_spent_j",
    "min_rfd_residual_j", "min_ffd_residual_j", "max_path_hops", "deaths",
]


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


# key -> (type, default, check, expected-range text)
NETWORK_SCHEMA: dict[str, tuple] = {
    "N": (int, 100, _nonneg, "integer >= 0"),
    "R": (float, 50.0, _pos, "> 0 m"),
    "r": (float, 25.0, _pos, "> 0 m, R/r integral"),
    "theta_deg": (float, 180.0, lambda v: 0 < v <= 180, "0 < theta_deg <= 180, 360/theta_deg integral"),
    "rfd_battery_j": (float, 10.0, _pos, "> 0 J"),
    "ffd_battery_j": (float, 100.0, _pos, "> 0 J"),
    "rfd_threshold_j": (float, 0.05, _nonneg, ">= 0 J"),
    "ffd_threshold_j": (float, 0.5, _nonneg, ">= 0 J"),
    "report_bits": (int, 2000, _nonneg, "integer >= 0"),
    "token_bits": (int, 64, _nonneg, "integer >= 0"),
    "ctl_bits": (int, 64, _nonneg, "integer >= 0"),
    "e_elec_nj": (float, 50.0, _pos, "> 0 nJ/bit"),
    "eps_fs_pj": (float, 10.0, _pos, "> 0 pJ/bit/m^2"),
    "eps_mp_pj": (float, 0.0013, _pos, "> 0 pJ/bit/m^4"),
    "sensing_range_m": (float, 10.0, _pos, "> 0 m"),
    "tx_range_m": (float, 20.0, _pos, "> 0 m"),
    "idle_cost_j": (float, 0.0, _nonneg, ">= 0 J per round"),
}

FLAGS_SCHEMA: dict[str, tuple] = {
    name: (bool, default, None, "true or false")
    for name, default in [("fusion", False), ("setup_energy", True), ("literal_fig4", False),
                          ("strict_range", False), ("sleep_mode", False)]
}

EXPERIMENT_SCHEMA: dict[str, tuple] = {
    "schemes": (list, ["chain1"], None, f"non-empty list of {[s.value for s in Scheme]}"),
    "approaches": (list, ["one-hop"], None, "non-empty list of one-hop, multi-hop"),
    "n_s": (list, None, None, "non-empty list of integers >= 2"),
    "n_t": (list, None, None, "non-empty list of integers >= 1"),
    "seeds": (list, [1], None, "non-empty list of integers in [0, 2^64)"),
    "stop_at": (str, "fnd", lambda v: v in ("fnd", "hnd", "lnd"), "fnd, hnd or lnd"),
    "max_rounds": (int, DEFAULT_MAX_ROUNDS, _pos, "integer > 0"),
    "output_dir": (str, "out", None, "path"),
    "parallel": (int, 1, _pos, "integer >= 1"),
}


def _coerce(path: str, value: Any, typ, check, expect: str):
    if typ is bool:
        ok = isinstance(value, bool)
    elif typ is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif typ is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = isinstance(value, typ)
    if not ok or (check is not None and not check(value)):
        raise ConfigError(f"{path}: got {value!r}, expected {expect}")
    return value


def _section(raw: Any, name: str, schema: dict) -> dict:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}: unknown key (allowed: {', '.join(sorted(schema))})")
    out = {}
    for key, (typ, default, check, expect) in schema.items():
        out[key] = _coerce(f"{name}.{key}", raw[key], typ, check, expect) if key in raw else default
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    schemes: tuple[Scheme, ...]
    approaches: tuple[Approach, ...]
    n_s: tuple[int, ...]
    n_t: tuple[int, ...]
    seeds: tuple[int, ...]
    output_dir: str = "out"
    stop_at: StopAt = StopAt.FND
    max_rounds: int = DEFAULT_MAX_ROUNDS
    parallel: int = 1
    flags: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Cell:
    scheme: Scheme
    approach: Optional[Approach]
    n_s: Optional[int]
    n_t: Optional[int]
    seed: int

    @property
    def name(self) -> str:
        if self.approach is None:
            return f"{self.scheme.value}_s{self.seed}"
        return f"{self.scheme.value}_{self.approach.value}_ns{self.n_s}_nt{self.n_t}_s{self.seed}"


def _int_list(path: str, values: list, lo: int, hi: int = 2**64) -> tuple[int, ...]:
    if not values:
        raise ConfigError(f"{path}: expected a non-empty list")
    out = []
    for k, v in enumerate(values):
        out.append(_coerce(f"{path}[{k}]", v, int, lambda x: lo <= x < hi, f"integer in [{lo}, {hi})"))
    return tuple(out)


def parse_config(raw: Optional[dict]) -> tuple[ExperimentSpec, NetworkConfig]:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a mapping")
    unknown = sorted(set(raw) - {"experiment", "network", "flags"})
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown section (allowed: experiment, network, flags)")
    net = _section(raw.get("network"), "network", NETWORK_SCHEMA)
    flags = _section(raw.get("flags"), "flags", FLAGS_SCHEMA)
    exp = _section(raw.get("experiment"), "experiment", EXPERIMENT_SCHEMA)

    if net["r"] > net["R"]:
        raise ConfigError(f"network.r: got {net['r']}, expected 0 < r <= R ({net['R']})")
    ratio = net["R"] / net["r"]
    if abs(ratio - round(ratio)) > 1e-9 * ratio:
        raise ConfigError(f"network.r: R/r = {ratio:g} is not an integer")
    sectors = 360.0 / net["theta_deg"]
    if abs(sectors - round(sectors)) > 1e-9 * sectors:
        raise ConfigError(f"network.theta_deg: 360/theta = {sectors:g} is not an integer")

    try:
        schemes = tuple(Scheme(s) for s in exp["schemes"])
    except ValueError as e:
        raise ConfigError(f"experiment.schemes: {e}") from None
    if not schemes:
        raise ConfigError("experiment.schemes: expected a non-empty list")
    try:
        approaches = tuple(Approach(a) for a in exp["approaches"])
    except ValueError as e:
        raise ConfigError(f"experiment.approaches: {e}") from None
    if not approaches:
        raise ConfigError("experiment.approaches: expected a non-empty list")
    explicit_approach = "approaches" in (raw.get("experiment") or {})
    if explicit_approach and not any(s.proposed for s in schemes):
        raise ConfigError("experiment.approaches: baseline schemes take no approach")

    n_s = _int_list("experiment.n_s", exp["n_s"], 2) if exp["n_s"] is not None else (int(round(sectors)),)
    n_t = _int_list("experiment.n_t", exp["n_t"], 1) if exp["n_t"] is not None else (int(round(ratio)),)
    seeds = _int_list("experiment.seeds", exp["seeds"], 0)

    base = NetworkConfig(
        N=net["N"],
        partition=PartitionSpec(net["R"], net["r"], math.radians(net["theta_deg"])),
        rfd_battery=net["rfd_battery_j"], ffd_battery=net["ffd_battery_j"],
        rfd_threshold=net["rfd_threshold_j"], ffd_threshold=net["ffd_threshold_j"],
        report_bits=net["report_bits"], token_bits=net["token_bits"], ctl_bits=net["ctl_bits"],
        radio=RadioParams(net["e_elec_nj"] * NANO, net["eps_fs_pj"] * PICO, net["eps_mp_pj"] * PICO),
        seed=seeds[0],
        sensing_range_m=net["sensing_range_m"], tx_range_m=net["tx_range_m"],
        idle_cost_j=net["idle_cost_j"],
        **flags,
    )
    spec = ExperimentSpec(
        schemes=schemes, approaches=approaches, n_s=n_s, n_t=n_t, seeds=seeds,
        output_dir=exp["output_dir"], stop_at=StopAt(exp["stop_at"]),
        max_rounds=exp["max_rounds"], parallel=exp["parallel"], flags=flags,
    )
    return spec, base


def load_config(path) -> tuple[ExperimentSpec, NetworkConfig]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML ({e})") from None
    return parse_config(raw)


def enumerate_cells(spec: ExperimentSpec) -> list[Cell]:
    """Deterministic cell order: scheme, approach, n_t, n_s, seed."""
    cells = []
    for scheme in spec.schemes:
        if scheme.proposed:
            for a in spec.approaches:
                for nt in spec.n_t:
                    for ns in spec.n_s:
                        cells.extend(Cell(scheme, a, ns, nt, s) for s in spec.seeds)
        else:
            cells.extend(Cell(scheme, None, None, None, s) for s in spec.seeds)
    return cells


def cell_config(base: NetworkConfig, cell: Cell) -> NetworkConfig:
    if cell.approach is None:
        return replace(base, seed=cell.seed)
    part = PartitionSpec.from_counts(base.partition.R, cell.n_t, cell.n_s)
    return replace(base, seed=cell.seed, partition=part)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def rounds_csv(result: SimResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in result.rounds:
        w.writerow([
            s.round, s.alive_rfds, s.alive_ffds, _fmt(s.energy_spent_this_round),
            _fmt(s.min_rfd_residual), _fmt(s.min_ffd_residual), s.measured_max_path_hops,
            " ".join(str(i) for i in s.deaths_this_round),
        ])
    return buf.getvalue()


def analytic_for(cell: Cell, cfg: NetworkConfig) -> float:
    if cell.approach is None:
        return analytic_baseline_max_path(cell.scheme.model, BaselineConfig.defaults(cell.scheme.model, cfg.N))
    return analytic_max_path(cell.scheme.variant, cell.approach, cfg.partition, cfg.N)


def summary_dict(cell: Cell, cfg: NetworkConfig, result: SimResult, csv_name: str) -> dict:
    fd = result.first_dead_node
    return {
        "cell": cell.name,
        "scheme": cell.scheme.value,
        "approach": cell.approach.value if cell.approach else None,
        "n_s": cell.n_s,
        "n_t": cell.n_t,
        "seed": cell.seed,
        "rng": RNG_ALGORITHM,
        "config": result.config,
        "rounds_run": result.rounds_run,
        "fnd_round": result.fnd_round,
        "hnd_round": result.hnd_round,
        "lnd_round": result.lnd_round,
        "fnd_censored": result.fnd_censored,
        "first_dead_node": None if fd is None else {
            "id": fd.id, "kind": fd.kind,
            "region": None if fd.region is None else {"sector": fd.region.sector, "track": fd.region.track},
            "chain_no": fd.chain_no, "chain_index": fd.chain_index,
        },
        "measured_max_path": result.max_path,
        "analytic_max_path": analytic_for(cell, cfg),
        "dropped_reports": result.dropped_reports,
        "cost": cost_summary(cfg if cell.approach else BaselineConfig.defaults(cell.scheme.model, cfg.N)),
        "notes": result.notes,
        "rounds_csv": csv_name,
    }


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def run_cell(base: NetworkConfig, cell: Cell, out_dir, stop_at=StopAt.FND,
             max_rounds: int = DEFAULT_MAX_ROUNDS) -> dict:
    """Simulate one cell and write its CSV and summary JSON; returns the manifest entry."""
    cfg = cell_config(base, cell)
    result = simulate(cfg, cell.scheme, cell.approach, max_rounds=max_rounds, stop_at=stop_at)
    out = Path(out_dir) / "cells"
    csv_text = rounds_csv(result)
    csv_name = f"{cell.name}.csv"
    summary = summary_dict(cell, cfg, result, csv_name)
    js = _dumps(summary)
    _atomic_write(out / csv_name, csv_text)
    _atomic_write(out / f"{cell.name}.json", js)
    return {
        "cell": cell.name,
        "scheme": summary["scheme"],
        "approach": summary["approach"],
        "n_s": cell.n_s,
        "n_t": cell.n_t,
        "seed": cell.seed,
        "config": summary["config"],
        "csv": f"cells/{csv_name}",
        "csv_sha256": _sha256(csv_text),
        "summary": f"cells/{cell.name}.json",
        "summary_sha256": _sha256(js),
    }


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(spec: ExperimentSpec, base: NetworkConfig, out_dir=None) -> Path:
    """Run every cell of ``spec`` and write ``manifest.json``; returns its path.

    On failure the files written by this call are removed and the error
    propagates.
    """
    out = Path(out_dir or spec.output_dir)
    cells = enumerate_cells(spec)
    jobs = [(base, c, out, spec.stop_at, spec.max_rounds) for c in cells]
    try:
        if spec.parallel > 1 and len(cells) > 1:
            with ProcessPoolExecutor(max_workers=spec.parallel) as ex:
                entries = list(ex.map(_run_cell_args, jobs))
        else:
            entries = [_run_cell_args(j) for j in jobs]
    except BaseException:
        for c in cells:
            for suffix in (".csv", ".json"):
                p = out / "cells" / f"{c.name}{suffix}"
                if p.exists():
                    p.unlink()
        raise
    manifest = {
        "rng": RNG_ALGORITHM,
        "stop_at": spec.stop_at.value,
        "max_rounds": spec.max_rounds,
        "csv_columns": CSV_COLUMNS,
        "cells": entries,
    }
    path = out / "manifest.json"
    _atomic_write(path, _dumps(manifest))
    return path


LIFETIME_CLAIM = "chain2 > chiron > chain1 > max(pegasis, epegasis)"
DELAY_CLAIM = "chain2 < chain1 < chiron < epegasis < pegasis"


def _row_key(s: dict) -> tuple:
    return (s["scheme"], s["approach"] or "", s["n_s"] or 0, s["n_t"] or 0)


def summarize(summaries: Iterable[dict]) -> dict:
    """Median FND and max-path per (scheme, approach, n_s, n_t) plus claim verdicts.

    Verdicts are produced only when all five schemes are present at the
    reference geometry (n_s = n_t = 2).
    """
    groups: dict[tuple, list[dict]] = {}
    for s in summaries:
        groups.setdefault(_row_key(s), []).append(s)
    rows = []
    missing = []
    for key in sorted(groups):
        ss = groups[key]
        fnds = [s["fnd_round"] for s in ss if s["fnd_round"] is not None]
        missing += [s["cell"] for s in ss if s["fnd_round"] is None]
        rows.append({
            "scheme": key[0], "approach": key[1] or None,
            "n_s": key[2] or None, "n_t": key[3] or None,
            "cells": len(ss),
            "median_fnd": statistics.median(fnds) if fnds else None,
            "analytic_max_path": ss[0]["analytic_max_path"],
            "median_measured_max_path": statistics.median(s["measured_max_path"] for s in ss
                                                          if s["measured_max_path"] is not None)
            if any(s["measured_max_path"] is not None for s in ss) else None,
        })
    verdicts = []
    ref = [r for r in rows if r["approach"] is None or (r["n_s"] == 2 and r["n_t"] == 2)]
    present = {r["scheme"] for r in ref}
    if len(rows) > 1 and present >= {s.value for s in Scheme}:
        life = {}
        for r in ref:
            if r["median_fnd"] is not None:
                life.setdefault(r["scheme"], []).append(r["median_fnd"])
        life = {k: statistics.median(v) for k, v in life.items()}
        if len(life) == 5:
            ok = life["chain2"] > life["chiron"] > life["chain1"] > max(life["pegasis"], life["epegasis"])
            verdicts.append({"claim": f"lifetime: {LIFETIME_CLAIM}", "pass": ok, "values": life})
        for appr in sorted({r["approach"] for r in ref if r["approach"]}):
            d = {r["scheme"]: r["analytic_max_path"] for r in ref if r["approach"] in (None, appr)}
            ok = d["chain2"] < d["chain1"] < d["chiron"] < d["epegasis"] < d["pegasis"]
            verdicts.append({"claim": f"delay ({appr}): {DELAY_CLAIM}", "pass": ok, "values": d})
    return {"rows": rows, "verdicts": verdicts, "missing": sorted(missing)}


def load_summaries(out_dir) -> list[dict]:
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    found = []
    for entry in manifest["cells"]:
        p = out / entry["summary"]
        if p.exists():
            found.append(json.loads(p.read_text(encoding="utf-8")))
    return found


def format_table(table: dict) -> str:
    lines = [f"{'scheme':<9} {'approach':<10} {'n_s':>3} {'n_t':>3} {'cells':>5} "
             f"{'median FND':>10} {'analytic':>9} {'measured':>9}"]
    for r in table["rows"]:
        lines.append(
            f"{r['scheme']:<9} {r['approach'] or '-':<10} {_fmt(r['n_s']) or '-':>3} {_fmt(r['n_t']) or '-':>3} "
            f"{r['cells']:>5} {_fmt(r['median_fnd']) or '-':>10} {r['analytic_max_path']:>9.4g} "
            f"{_fmt(r['median_measured_max_path']) or '-':>9}")
    for v in table["verdicts"]:
        lines.append(f"{'PASS' if v['pass'] else 'FAIL'}  {v['claim']}")
    if table["missing"]:
        lines.append(f"missing FND (censored or absent): {', '.join(table['missing'])}")
    return "\n".join(lines)
