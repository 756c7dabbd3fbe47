"""Command-line front end.

Subcommands:

* ``simulate`` -- run the polarimeter scan and write a counts CSV
* ``analyze``  -- fit a counts CSV and write a phase report JSON
* ``compare``  -- check a report against a reference table
* ``full``     -- simulate, analyze and (if configured) compare in one go

Output files are deterministic: the same config and seed always produce
byte-identical CSV and JSON.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .analysis import bootstrap_phase_sigma, run_pipeline
from .beamline import ConfigError
from .config import ExperimentConfig
from .counting import CountingPlan, ScanRecord, expectation_scan, simulate_scan

__all__ = ["main"]

CSV_HEADER = "index,eta_rad,position_mm,counts_off,counts_on,live_time_s"


def _red(text: str) -> str:
    if os.environ.get("POLARIPHASE_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\x1b[31m{text}\x1b[0m"


def _green(text: str) -> str:
    if os.environ.get("POLARIPHASE_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\x1b[32m{text}\x1b[0m"


def _fnum(x: float) -> float:
    """Round to 12 significant digits so serialized output is stable."""
    return float(f"{x:.12g}")


def _json_num(x: float):
    if math.isnan(x):
        return None
    return _fnum(x)


def _format_counts(value: float, expectation: bool) -> str:
    if not expectation:
        return str(int(round(value)))
    text = f"{value:.12g}"
    if "." not in text and "e" not in text and "n" not in text:
        text += ".0"  # keep a decimal marker so the mode survives a round trip
    return text


def write_scan_csv(path: Path, records: list[ScanRecord], expectation: bool) -> None:
    lines = [CSV_HEADER]
    for rec in records:
        lines.append(",".join([
            str(rec.index),
            f"{rec.eta_rad:.12g}",
            f"{rec.position_mm:.12g}",
            _format_counts(rec.counts_off, expectation),
            _format_counts(rec.counts_on, expectation),
            f"{rec.live_time_s:.12g}",
        ]))
    path.write_text("\n".join(lines) + "\n")


def read_scan_csv(path: Path) -> tuple[list[ScanRecord], bool]:
    """Load a counts CSV.

    Returns the records and whether the file holds noise-free expectation
    values (written with a decimal marker) rather than integer counts.
    """
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read scan {path}: {exc}") from exc
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ConfigError(f"{path}: expected header {CSV_HEADER!r}")
    records = []
    expectation = False
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ConfigError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
        for token in (parts[3], parts[4]):
            if any(c in token for c in ".eE"):
                expectation = True
        try:
            records.append(ScanRecord(
                index=int(parts[0]),
                eta_rad=float(parts[1]),
                position_mm=float(parts[2]),
                counts_off=float(parts[3]),
                counts_on=float(parts[4]),
                live_time_s=float(parts[5]),
            ))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    if not records:
        raise ConfigError(f"{path}: no data rows")
    return records, expectation


def _result_json(res) -> dict:
    out = {
        "r": _json_num(res.r),
        "phase_rad": _json_num(res.phi),
        "phase_sigma_rad": _json_num(res.sigma_phi_total),
        "phase_sigma_stat_rad": _json_num(res.sigma_phi),
        "phase_sigma_sys_rad": _json_num(res.sigma_phi_sys),
        "phase_theory_rad": _json_num(res.phi_theory),
        "fit_chi2_reduced": _json_num(res.chi2_reduced),
        "method": res.method,
        "flags": list(res.flags),
    }
    return out


def write_report_json(path: Path, results, exp: ExperimentConfig,
                      expectation: bool, bootstrap_sigmas=None) -> None:
    rows = [_result_json(r) for r in results]
    if bootstrap_sigmas is not None:
        for row, sig in zip(rows, bootstrap_sigmas):
            row["phase_sigma_bootstrap_rad"] = _json_num(sig)
    doc = {
        "r0": _fnum(exp.r0),
        "fit_mode": exp.fit_mode,
        "contamination_eps": _fnum(exp.contamination_eps),
        "expectation": expectation,
        "results": rows,
    }
    path.write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")


def _load_config(args) -> ExperimentConfig:
    return ExperimentConfig.from_file(args.config)


def _apply_overrides(exp: ExperimentConfig, args) -> dict:
    """Beamline overrides taken from command-line flags."""
    overrides = {}
    if getattr(args, "eps", None) is not None:
        overrides["contamination_eps"] = args.eps
    return overrides


def _simulate(exp: ExperimentConfig, args) -> tuple[list[ScanRecord], bool]:
    cfg = exp.beamline_config(**_apply_overrides(exp, args))
    plan_overrides = {}
    if getattr(args, "seed", None) is not None:
        plan_overrides["seed"] = args.seed
    plan = exp.counting_plan(cfg, **plan_overrides)
    expectation = bool(getattr(args, "expectation", False))
    run = expectation_scan if expectation else simulate_scan
    return run(cfg, plan), expectation


def _out_path(args, exp: ExperimentConfig, key: str, fallback: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    name = getattr(exp, key) or fallback
    return Path(name)


def cmd_simulate(args) -> int:
    exp = _load_config(args)
    records, expectation = _simulate(exp, args)
    out = _out_path(args, exp, "scan_csv", "scan.csv")
    write_scan_csv(out, records, expectation)
    print(f"wrote {len(records)} scan points to {out}")
    return 0


def _analyze_records(exp: ExperimentConfig, args, records, expectation: bool,
                     out: Path) -> int:
    cfg = exp.beamline_config(**_apply_overrides(exp, args))
    plan = exp.counting_plan(cfg)
    r_targets = exp.r_targets
    if getattr(args, "r_targets", None):
        r_targets = tuple(float(s) for s in args.r_targets.split(","))
    fit_mode = getattr(args, "fit_mode", None) or exp.fit_mode
    results = run_pipeline(records, records, plan, cfg, r_targets,
                           fit_mode=fit_mode, expectation=expectation)
    n_boot = getattr(args, "bootstrap", None)
    if n_boot is None:
        n_boot = exp.bootstrap
    bootstrap_sigmas = None
    if n_boot and not expectation:
        bootstrap_sigmas = [
            bootstrap_phase_sigma(records, records, plan, cfg, res.r,
                                  n_replicas=n_boot, seed=exp.seed,
                                  fit_mode=fit_mode)
            for res in results
        ]
    write_report_json(out, results, exp, expectation, bootstrap_sigmas)
    for res in results:
        phi = "nan" if math.isnan(res.phi) else f"{res.phi:+.4f}"
        sig = "nan" if math.isnan(res.sigma_phi_total) else f"{res.sigma_phi_total:.4f}"
        note = f" [{', '.join(res.flags)}]" if res.flags else ""
        print(f"r={res.r:.3f}  phase={phi} +/- {sig} rad  "
              f"theory={res.phi_theory:+.4f}{note}")
    print(f"wrote report to {out}")
    return 0


def cmd_analyze(args) -> int:
    exp = _load_config(args)
    records, expectation = read_scan_csv(exp.resolve_input(args.scan))
    out = _out_path(args, exp, "report_json", "report.json")
    return _analyze_records(exp, args, records, expectation, out)


def _load_results_table(path: Path) -> list[dict]:
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load {path}: {exc}") from exc
    rows = doc.get("results") if isinstance(doc, dict) else doc
    if not isinstance(rows, list):
        raise ConfigError(f"{path}: expected a 'results' list")
    return rows


def compare_tables(report_rows, reference_rows, tol: float):
    """Match rows on r and compare phase magnitudes.  Yields result tuples."""
    by_r = {round(row["r"], 6): row for row in report_rows}
    for ref in reference_rows:
        key = round(ref["r"], 6)
        got = by_r.get(key)
        if got is None or got["phase_rad"] is None:
            yield ref["r"], None, ref["phase_rad"], False
            continue
        measured = abs(got["phase_rad"])
        ok = abs(measured - abs(ref["phase_rad"])) <= tol
        yield ref["r"], measured, ref["phase_rad"], ok


def cmd_compare(args) -> int:
    tol = args.tol
    exp = None
    if args.config:
        exp = ExperimentConfig.from_file(args.config)
        if tol is None:
            tol = exp.compare_tolerance_rad
    if tol is None:
        tol = 0.02
    resolve = exp.resolve_input if exp else Path
    report_rows = _load_results_table(resolve(args.report))
    reference_rows = _load_results_table(resolve(args.reference))
    n_fail = 0
    for r, measured, expected, ok in compare_tables(report_rows, reference_rows, tol):
        shown = "missing" if measured is None else f"{measured:.4f}"
        verdict = _green("ok") if ok else _red("FAIL")
        print(f"r={r:.3f}  measured={shown}  reference={abs(expected):.4f}  "
              f"tol={tol:.4f}  {verdict}")
        n_fail += 0 if ok else 1
    if n_fail:
        print(_red(f"{n_fail} row(s) outside tolerance"))
        return 1
    print(_green("all rows within tolerance"))
    return 0


def cmd_full(args) -> int:
    exp = _load_config(args)
    records, expectation = _simulate(exp, args)
    scan_path = Path(exp.scan_csv or "scan.csv")
    write_scan_csv(scan_path, records, expectation)
    print(f"wrote {len(records)} scan points to {scan_path}")
    report_path = Path(exp.report_json or "report.json")
    rc = _analyze_records(exp, args, records, expectation, report_path)
    if rc != 0 or not exp.reference_json:
        return rc
    compare_args = argparse.Namespace(
        report=str(report_path), reference=exp.reference_json,
        tol=exp.compare_tolerance_rad, config=args.config)
    return cmd_compare(compare_args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polariphase",
        description="Neutron polarimetry scan simulation and phase extraction.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a scan and write a counts CSV")
    sim.add_argument("--config", required=True, help="experiment config file")
    sim.add_argument("--out", help="output CSV path (default from config)")
    sim.add_argument("--expectation", action="store_true",
                     help="write noise-free expectation values instead of counts")
    sim.add_argument("--seed", type=int, help="override the RNG seed")
    sim.add_argument("--eps", type=float, help="override the contamination fraction")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="fit a counts CSV and write a phase report")
    ana.add_argument("scan", help="counts CSV produced by 'simulate'")
    ana.add_argument("--config", required=True, help="experiment config file")
    ana.add_argument("--out", help="output JSON path (default from config)")
    ana.add_argument("--eps", type=float, help="override the contamination fraction")
    ana.add_argument("--r-targets", dest="r_targets",
                     help="comma-separated purity targets")
    ana.add_argument("--fit-mode", dest="fit_mode",
                     choices=("agnostic", "corrected"),
                     help="harmonic fit strategy")
    ana.add_argument("--bootstrap", type=int,
                     help="also report a bootstrap phase sigma from N replicas")
    ana.set_defaults(func=cmd_analyze)

    cmp_ = sub.add_parser("compare", help="compare a report against a reference table")
    cmp_.add_argument("report", help="report JSON from 'analyze'")
    cmp_.add_argument("reference", help="reference JSON table")
    cmp_.add_argument("--tol", type=float, help="phase tolerance in rad")
    cmp_.add_argument("--config", help="config file supplying paths/tolerance")
    cmp_.set_defaults(func=cmd_compare)

    full = sub.add_parser("full", help="simulate, analyze and compare in one run")
    full.add_argument("--config", required=True, help="experiment config file")
    full.add_argument("--expectation", action="store_true",
                      help="noise-free expectation values instead of counts")
    full.add_argument("--seed", type=int, help="override the RNG seed")
    full.add_argument("--eps", type=float, help="override the contamination fraction")
    full.add_argument("--r-targets", dest="r_targets",
                      help="comma-separated purity targets")
    full.add_argument("--fit-mode", dest="fit_mode",
                      choices=("agnostic", "corrected"),
                      help="harmonic fit strategy")
    full.add_argument("--bootstrap", type=int,
                      help="also report a bootstrap phase sigma from N replicas")
    full.set_defaults(func=cmd_full)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(_red(f"error: {exc}"), file=sys.stderr)
        return 2
    except ValueError as exc:
        print(_red(f"error: {exc}"), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
