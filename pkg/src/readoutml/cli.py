"""Command-line front end: simulate, evaluate, diagnose, sweep, report.

Every run writes machine-readable outputs (JSON bundle plus CSV) and the
fully resolved config next to them, so any artifact can be reproduced from
the files it sits beside.  All physical config keys carry unit suffixes.

Exit codes: 0 success, 2 usage or config error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from io import StringIO
from pathlib import Path

import numpy as np

from . import __version__, io as io_mod, metrics, pipeline, sim
from .errors import (ConvergenceError, DataFormatError, DegenerateKernelError,
                     EmptyPoolError, FitFailedError, IntegrationDivergedError,
                     InvalidSpecError, SingularCovarianceError,
                     StratificationError, UndefinedFidelityError)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

BUNDLE_FORMAT = "readoutml-results"

_DATA_ERRORS = (DataFormatError, EmptyPoolError, StratificationError, OSError)
_NUMERICAL_ERRORS = (IntegrationDivergedError, SingularCovarianceError,
                     ConvergenceError, DegenerateKernelError, FitFailedError,
                     UndefinedFidelityError)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Config handling

SIMULATE_DEFAULTS = {
    "shots": 51200,
    "total_time_us": 2.6,
    "n_bins": 163,
    "kappa_over_2pi_khz": 1210.0,
    "chi_over_2pi_mhz": -1.4,
    "detuning_hz": 0.0,
    "target_separation": 55.56,
    "drive_amplitude": None,
    "t1_us": 29.0,
    "heating_time_us": 288.0,
    "prep_error": 0.005,
    "noise_bandwidth_mhz": 1.9,
    "gain": 100.0,
    "added_noise_quanta": 0.5,
}

EVALUATE_DEFAULTS = {
    "dataset": None,
    "methods": list(pipeline.METHOD_NAMES),
    "pca": None,
    "repeats": 1,
    "shuffle_split": False,
    "svm_cv": False,
    "k": 3,
}

DIAGNOSE_DEFAULTS = {
    "dataset": None,
    "methods": list(pipeline.METHOD_NAMES),
    "pca": None,
    "k": 3,
    "replace": False,
    "repeats": 1,
}

SWEEP_DEFAULTS = {
    "dataset": None,
    "method": "ldad",
    "pca": None,
    "times_us": None,
    "k": 3,
}

REPORT_DEFAULTS = {
    "inputs": [],
}

_SECTION_DEFAULTS = {
    "simulate": SIMULATE_DEFAULTS,
    "evaluate": EVALUATE_DEFAULTS,
    "diagnose": DIAGNOSE_DEFAULTS,
    "sweep": SWEEP_DEFAULTS,
    "report": REPORT_DEFAULTS,
}

_GLOBAL_KEYS = {"command", "seed", "output_dir"} | set(_SECTION_DEFAULTS)


def load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON at line {exc.lineno} "
                         f"column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: config root must be a JSON object")
    for key in cfg:
        if key not in _GLOBAL_KEYS:
            raise UsageError(f"{path}: unknown config key {key!r}")
    for section, defaults in _SECTION_DEFAULTS.items():
        sub = cfg.get(section)
        if sub is None:
            continue
        if not isinstance(sub, dict):
            raise UsageError(f"{path}: section {section!r} must be an object")
        for key in sub:
            if key not in defaults:
                raise UsageError(
                    f"{path}: unknown key {key!r} in section {section!r}")
    return cfg


def resolve_section(command: str, file_cfg: dict, overrides: dict) -> dict:
    """defaults <- config file <- explicit command-line flags."""
    section = dict(_SECTION_DEFAULTS[command])
    section.update(file_cfg.get(command, {}))
    section.update({k: v for k, v in overrides.items() if v is not None})
    return section


def parse_methods(raw) -> list[str]:
    if isinstance(raw, str):
        raw = [m.strip() for m in raw.split(",") if m.strip()]
    methods = list(raw)
    if not methods:
        raise UsageError("empty method list")
    bad = [m for m in methods if m not in pipeline.METHOD_NAMES]
    if bad:
        raise UsageError(
            f"unknown method {bad[0]!r}; valid methods: "
            + ", ".join(pipeline.METHOD_NAMES))
    return methods


def parse_pca(raw) -> bool | None:
    if raw is None or isinstance(raw, bool):
        return raw
    lowered = str(raw).lower()
    if lowered in ("auto", "default", "none"):
        return None
    if lowered in ("on", "true", "1", "yes"):
        return True
    if lowered in ("off", "false", "0", "no"):
        return False
    raise UsageError(f"--pca expects on/off/auto, got {raw!r}")


# ---------------------------------------------------------------------------
# Output plumbing

def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_bundle(out_dir: Path, command: str, seed: int, config_sha: str,
                 sections: dict) -> Path:
    bundle = {
        "bundle_format": BUNDLE_FORMAT,
        "format_version": io_mod.FORMAT_VERSION,
        "command": command,
        "code_version": __version__,
        "seed": seed,
        "config_sha256": config_sha,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
    }
    bundle.update(_jsonable(sections))
    path = out_dir / "results.json"
    io_mod.write_json(path, bundle)
    return path


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    io_mod.write_text(path, buf.getvalue())


def write_resolved_config(out_dir: Path, command: str, seed: int,
                          section: dict) -> str:
    # no output location inside: the hash tracks scientific content only
    resolved = {
        "command": command,
        "seed": seed,
        command: _jsonable(section),
    }
    path = out_dir / "resolved_config.json"
    io_mod.write_json(path, resolved)
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# simulate

def _num(cfg: dict, key: str, nullable: bool = False) -> float | None:
    v = cfg[key]
    if v is None and nullable:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise UsageError(f"config key {key!r} must be a number, got {v!r}")
    return float(v)


def build_dataset_spec(cfg: dict) -> sim.DatasetSpec:
    grid = sim.TimeGrid(_num(cfg, "total_time_us") * 1e-6, int(cfg["n_bins"]))
    kappa = 2 * math.pi * _num(cfg, "kappa_over_2pi_khz") * 1e3
    chi = 2 * math.pi * _num(cfg, "chi_over_2pi_mhz") * 1e6
    detuning = 2 * math.pi * _num(cfg, "detuning_hz")
    amplifier = sim.AmplifierModel(gain=_num(cfg, "gain"),
                                   added_noise=_num(cfg, "added_noise_quanta"))
    bw = _num(cfg, "noise_bandwidth_mhz", nullable=True)
    noise = sim.NoiseModel(bandwidth=None if bw is None else bw * 1e6)
    t1_us = _num(cfg, "t1_us", nullable=True)
    heating_us = _num(cfg, "heating_time_us", nullable=True)
    rates = sim.DecoherenceRates(
        t1_time=math.inf if t1_us is None else t1_us * 1e-6,
        heating_time=math.inf if heating_us is None else heating_us * 1e-6,
        prep_error_ground=_num(cfg, "prep_error"),
        prep_error_excited=_num(cfg, "prep_error"))
    amp_cfg = cfg["drive_amplitude"]
    if amp_cfg is None:
        amplitude = sim.calibrate_drive_amplitude(
            kappa, chi, detuning, sim.DEFAULT_DRIVE_PHASE, grid, amplifier,
            noise, _num(cfg, "target_separation"))
    else:
        amplitude = complex(amp_cfg[0], amp_cfg[1])
    cavity = sim.CavityParams.constant_drive(kappa, chi, amplitude, detuning)
    return sim.DatasetSpec(n_shots=int(cfg["shots"]), grid=grid,
                           cavity=cavity, rates=rates, amplifier=amplifier,
                           noise=noise)


def _jump_fractions(dataset: sim.Dataset) -> dict:
    decay = heating = 0
    for label, record in zip(dataset.labels, dataset.jump_records):
        for _, src, dst in record:
            if src == 1 and dst == 0:
                decay += 1
            elif src == 0 and dst == 1:
                heating += 1
    n0 = int(np.sum(dataset.labels == 0))
    n1 = int(np.sum(dataset.labels == 1))
    prep = int(np.sum(dataset.initial_states != dataset.labels))
    return {
        "n_shots": dataset.n_shots,
        "n_ground": n0,
        "n_excited": n1,
        "decay_jumps": decay,
        "decay_fraction_of_excited": decay / n1 if n1 else 0.0,
        "heating_jumps": heating,
        "heating_fraction_of_ground": heating / n0 if n0 else 0.0,
        "prep_errors": prep,
        "prep_error_fraction": prep / dataset.n_shots,
    }


def cmd_simulate(out_dir: Path, seed: int, cfg: dict) -> int:
    spec = build_dataset_spec(cfg)
    dataset = sim.generate_dataset(spec, seed)
    io_mod.save_dataset(dataset, out_dir / "dataset.json")
    summary = _jump_fractions(dataset)
    sha = write_resolved_config(out_dir, "simulate", seed, cfg)
    write_bundle(out_dir, "simulate", seed, sha,
                 {"dataset": str(out_dir / "dataset.json"),
                  "summary": summary})
    print(f"wrote {out_dir / 'dataset.json'}")
    print(f"shots: {summary['n_shots']} "
          f"({summary['n_ground']} ground, {summary['n_excited']} excited)")
    print(f"decay jumps: {summary['decay_jumps']} "
          f"({100 * summary['decay_fraction_of_excited']:.2f}% of excited)")
    print(f"heating jumps: {summary['heating_jumps']} "
          f"({100 * summary['heating_fraction_of_ground']:.2f}% of ground)")
    print(f"prep errors: {summary['prep_errors']} "
          f"({100 * summary['prep_error_fraction']:.2f}%)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate / diagnose rows

_TABLE_HEADER = ["method", "pca", "f_a", "se_f_a", "p01", "p10",
                 "n0", "n1", "errors_01", "errors_10", "error"]
_REPEAT_HEADER = ["method", "pca", "mean_f_a", "var_f_a", "n_repeats",
                  "n_errors"]


def _outcome_rows(outcomes) -> tuple[list[dict], list[list]]:
    json_rows, csv_rows = [], []
    for o in outcomes:
        base = {"method": o.method, "pca": o.pca, "error": o.error,
                "details": o.details}
        if o.report is not None:
            base.update(o.report.as_dict())
            r = o.report
            csv_rows.append([o.method, o.pca, r.f_a, r.se_f_a, r.p01, r.p10,
                             r.n0, r.n1, r.errors_01, r.errors_10, None])
        else:
            csv_rows.append([o.method, o.pca] + [None] * 8 + [o.error])
        json_rows.append(base)
    return json_rows, csv_rows


def _summary_rows(summaries) -> tuple[list[dict], list[list]]:
    json_rows, csv_rows = [], []
    for s in summaries:
        json_rows.append({"method": s.method, "pca": s.pca,
                          "mean_f_a": s.mean_f_a, "var_f_a": s.var_f_a,
                          "n_repeats": s.n_repeats, "n_errors": s.n_errors})
        csv_rows.append([s.method, s.pca, s.mean_f_a, s.var_f_a,
                         s.n_repeats, s.n_errors])
    return json_rows, csv_rows


def _print_table(outcomes) -> None:
    for o in outcomes:
        cell = f"F_a={o.report.f_a:.4f}" if o.report is not None else o.error
        print(f"{o.method:<16} pca={str(o.pca):<5} {cell}")


def cmd_evaluate(out_dir: Path, seed: int, cfg: dict) -> int:
    dataset = io_mod.load_dataset(cfg["dataset"])
    methods = parse_methods(cfg["methods"])
    pca = parse_pca(cfg["pca"])
    sha = write_resolved_config(out_dir, "evaluate", seed, cfg)
    if cfg["repeats"] > 1:
        summaries = pipeline.repeat_evaluations(
            dataset, methods=methods, repeats=int(cfg["repeats"]), pca=pca,
            seed=seed, k=int(cfg["k"]), cv=cfg["svm_cv"])
        json_rows, csv_rows = _summary_rows(summaries)
        write_csv(out_dir / "results.csv", _REPEAT_HEADER, csv_rows)
        write_bundle(out_dir, "evaluate", seed, sha,
                     {"dataset": cfg["dataset"], "repeats": cfg["repeats"],
                      "table": json_rows})
        for s in summaries:
            print(f"{s.method:<16} pca={str(s.pca):<5} "
                  f"mean F_a={s.mean_f_a:.4f} var={s.var_f_a:.3e}")
        return EXIT_OK
    outcomes = pipeline.evaluate_dataset(
        dataset, methods=methods, pca=pca, seed=seed,
        shuffle=cfg["shuffle_split"], k=int(cfg["k"]), cv=cfg["svm_cv"])
    json_rows, csv_rows = _outcome_rows(outcomes)
    write_csv(out_dir / "results.csv", _TABLE_HEADER, csv_rows)
    write_bundle(out_dir, "evaluate", seed, sha,
                 {"dataset": cfg["dataset"], "table": json_rows})
    _print_table(outcomes)
    return EXIT_OK


def cmd_diagnose(out_dir: Path, seed: int, cfg: dict) -> int:
    dataset = io_mod.load_dataset(cfg["dataset"])
    methods = parse_methods(cfg["methods"])
    pca = parse_pca(cfg["pca"])
    sha = write_resolved_config(out_dir, "diagnose", seed, cfg)
    result = pipeline.diagnose_dataset(
        dataset, k=int(cfg["k"]), replace=cfg["replace"], methods=methods,
        seed=seed, repeats=int(cfg["repeats"]), pca=pca)
    flags = result.flags
    n_excited = int(result.clustering.assignments.size)
    cluster_section = {
        "k": result.clustering.k,
        "source_class": result.clustering.source_class,
        "sizes": result.clustering.sizes(),
        "objective": result.clustering.objective,
        "n_iter": result.clustering.n_iter,
        "late_endpoints": flags.late_endpoints,
        "t1_candidate": flags.t1_candidate,
        "heating_candidate": flags.heating_candidate,
        "t1_cluster_id": result.t1_cluster_id,
        "flagged_shots": int(result.flagged_indices.size),
        "flagged_fraction_of_excited":
            result.flagged_indices.size / n_excited if n_excited else 0.0,
    }
    cluster_rows = [
        [c, int(flags.sizes[c]), flags.late_endpoints[c].real,
         flags.late_endpoints[c].imag, bool(flags.t1_candidate[c]),
         bool(flags.heating_candidate[c])]
        for c in range(result.clustering.k)
    ]
    write_csv(out_dir / "clusters.csv",
              ["cluster", "size", "late_re", "late_im", "t1_candidate",
               "heating_candidate"], cluster_rows)
    sections = {"dataset": cfg["dataset"], "clustering": cluster_section}
    if result.replacement_summaries is not None:
        json_rows, csv_rows = _summary_rows(result.replacement_summaries)
        write_csv(out_dir / "replaced_results.csv", _REPEAT_HEADER, csv_rows)
        sections["replaced_table"] = json_rows
        sections["replace_repeats"] = cfg["repeats"]
    elif result.outcomes is not None:
        json_rows, csv_rows = _outcome_rows(result.outcomes)
        write_csv(out_dir / "replaced_results.csv", _TABLE_HEADER, csv_rows)
        sections["replaced_table"] = json_rows
    write_bundle(out_dir, "diagnose", seed, sha, sections)
    sizes = result.clustering.sizes().tolist()
    print(f"k={result.clustering.k} cluster sizes: {sizes}")
    if result.t1_cluster_id is None:
        print("no decay-flagged cluster")
    else:
        frac = cluster_section["flagged_fraction_of_excited"]
        print(f"decay-flagged cluster {result.t1_cluster_id}: "
              f"{result.flagged_indices.size} shots "
              f"({100 * frac:.2f}% of excited)")
    if result.outcomes is not None:
        _print_table(result.outcomes)
    if result.replacement_summaries is not None:
        for s in result.replacement_summaries:
            print(f"{s.method:<16} pca={str(s.pca):<5} "
                  f"mean F_a={s.mean_f_a:.4f} var={s.var_f_a:.3e}")
    return EXIT_OK


def cmd_sweep(out_dir: Path, seed: int, cfg: dict) -> int:
    dataset = io_mod.load_dataset(cfg["dataset"])
    methods = parse_methods(cfg["method"])
    if len(methods) != 1:
        raise UsageError("sweep takes exactly one method")
    method = methods[0]
    times_us = cfg["times_us"]
    if not times_us:
        raise UsageError("sweep needs a non-empty times_us grid")
    pca = parse_pca(cfg["pca"])
    cfg = dict(cfg, method=method)
    sha = write_resolved_config(out_dir, "sweep", seed, cfg)
    recipe = pipeline.method_recipe(method, pca=pca, seed=seed,
                                    k=int(cfg["k"]))
    points = metrics.time_sweep(dataset, recipe,
                                [t * 1e-6 for t in times_us])
    json_rows, csv_rows = [], []
    for p in points:
        row = {"requested_time_us": p.requested_time * 1e6,
               "actual_time_us": p.actual_time * 1e6,
               "n_bins": p.n_bins}
        row.update(p.report.as_dict())
        json_rows.append(row)
        csv_rows.append([p.requested_time * 1e6, p.actual_time * 1e6,
                         p.n_bins, p.report.f_a, p.report.se_f_a,
                         p.report.p01, p.report.p10])
    write_csv(out_dir / "sweep.csv",
              ["requested_time_us", "actual_time_us", "n_bins", "f_a",
               "se_f_a", "p01", "p10"], csv_rows)
    write_bundle(out_dir, "sweep", seed, sha,
                 {"dataset": cfg["dataset"], "method": method,
                  "sweep": json_rows})
    for p in points:
        print(f"t={p.actual_time * 1e6:.3f}us  n_bins={p.n_bins:<4} "
              f"F_a={p.report.f_a:.4f}")
    return EXIT_OK


def cmd_report(out_dir: Path, seed: int, cfg: dict) -> int:
    inputs = cfg["inputs"]
    if isinstance(inputs, str):
        inputs = [inputs]
    if not inputs:
        raise UsageError("report needs at least one results.json input")
    header = ["source", "command", "method", "pca", "f_a", "se_f_a",
              "mean_f_a", "var_f_a", "time_us", "error"]
    rows, merged = [], []
    for src in inputs:
        bundle = io_mod.read_json(src)
        if bundle.get("bundle_format") != BUNDLE_FORMAT:
            raise DataFormatError(f"{src}: not a results bundle")
        command = bundle.get("command", "?")
        for entry in bundle.get("table", []):
            rows.append([src, command, entry.get("method"), entry.get("pca"),
                         entry.get("f_a"), entry.get("se_f_a"),
                         entry.get("mean_f_a"), entry.get("var_f_a"),
                         None, entry.get("error")])
        for entry in bundle.get("replaced_table", []):
            rows.append([src, command + ":replaced", entry.get("method"),
                         entry.get("pca"), entry.get("f_a"),
                         entry.get("se_f_a"), entry.get("mean_f_a"),
                         entry.get("var_f_a"), None, entry.get("error")])
        for entry in bundle.get("sweep", []):
            rows.append([src, command, bundle.get("method"), None,
                         entry.get("f_a"), entry.get("se_f_a"), None, None,
                         entry.get("actual_time_us"), None])
        merged.append({"source": src,
                       "command": command,
                       "seed": bundle.get("seed"),
                       "config_sha256": bundle.get("config_sha256")})
    cfg = dict(cfg, inputs=list(inputs))
    sha = write_resolved_config(out_dir, "report", seed, cfg)
    write_csv(out_dir / "report.csv", header, rows)
    write_bundle(out_dir, "report", seed, sha,
                 {"sources": merged,
                  "rows": [dict(zip(header, r)) for r in rows]})
    print(f"merged {len(rows)} rows from {len(inputs)} bundle(s)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing and dispatch

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="readoutml",
        description="Simulate dispersive-readout datasets and evaluate "
                    "trajectory classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=".", help="output directory")

    p_sim = sub.add_parser("simulate", help="generate a labeled dataset")
    common(p_sim)
    p_sim.add_argument("--shots", type=int, default=None)

    for name, needs_k in (("evaluate", True), ("diagnose", True),
                          ("sweep", True)):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("dataset", nargs="?", default=None,
                       help="dataset sidecar path (or set in config)")
        p.add_argument("--methods", default=None,
                       help="comma-separated method list")
        p.add_argument("--pca", nargs="?", const="on", default=None,
                       help="on/off/auto (bare flag means on)")
        if needs_k:
            p.add_argument("--k", type=int, default=None)
        p.add_argument("--repeats", type=int, default=None)
        if name == "evaluate":
            p.add_argument("--shuffle-split", action="store_true",
                           default=None, dest="shuffle_split")
        if name == "diagnose":
            p.add_argument("--replace", action="store_true", default=None)
        if name == "sweep":
            p.add_argument("--times", default=None,
                           help="comma-separated truncation times in us")

    p_rep = sub.add_parser("report", help="merge results bundles")
    common(p_rep)
    p_rep.add_argument("inputs", nargs="*", help="results.json paths")
    return parser


def _overrides_for(command: str, args: argparse.Namespace) -> dict:
    if command == "simulate":
        return {"shots": args.shots}
    if command == "report":
        return {"inputs": args.inputs or None}
    over = {
        "dataset": args.dataset,
        "methods": args.methods,
        "pca": args.pca,
        "k": args.k,
        "repeats": args.repeats,
    }
    if command == "evaluate":
        over["shuffle_split"] = args.shuffle_split
    if command == "diagnose":
        over["replace"] = args.replace
    if command == "sweep":
        over.pop("methods")
        over["method"] = args.methods
        if args.times is not None:
            try:
                over["times_us"] = [float(t) for t in args.times.split(",")
                                    if t.strip()]
            except ValueError as exc:
                raise UsageError(f"bad --times value: {exc}") from exc
    return over


_COMMANDS = {
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "diagnose": cmd_diagnose,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    file_cfg = load_config_file(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else file_cfg.get("seed", 0)
    if not isinstance(seed, int):
        raise UsageError(f"seed must be an integer, got {seed!r}")
    out_dir = Path(args.out if args.out != "." or "output_dir" not in file_cfg
                   else file_cfg["output_dir"])
    section = resolve_section(args.command, file_cfg,
                              _overrides_for(args.command, args))
    if args.command in ("evaluate", "diagnose", "sweep") \
            and not section.get("dataset"):
        raise UsageError(
            f"{args.command} needs a dataset path (positional or config)")
    out_dir.mkdir(parents=True, exist_ok=True)
    return _COMMANDS[args.command](out_dir, seed, section)


def main(argv=None) -> int:
    try:
        code = run(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except InvalidSpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        code = EXIT_DATA
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        code = EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())
