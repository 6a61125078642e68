"""Command-line entry point: ``tlab {estimate,altproj,verify,suite,battery}``.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from tlab import __version__
from tlab.altproj import STALLED, fit_linear_rate, run_alternating_projections
from tlab.errors import NoDecay, ScenarioFormatError, TlabError
from tlab.estimators import CSV_HEADER, estimate_all
from tlab.geometry import RadiusSchedule
from tlab.jsonio import csv_text, write_atomic, write_json
from tlab.scenario import PairScenario, load_scenario, write_battery
from tlab.verify import (
    VerificationReport,
    check_convex_equivalence,
    lemma_property_suite,
    verify_scenario,
    zero_threshold,
)

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3


class InputError(Exception):
    """Bad command-line input; maps to exit status 2."""


def _parse_vector(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise InputError(f"cannot parse vector {text!r}") from exc
    if not vals:
        raise InputError("empty vector")
    return vals


def _schedule(args) -> RadiusSchedule:
    try:
        return RadiusSchedule(args.rho0, args.gamma, args.steps)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _load(args) -> PairScenario:
    if args.scenario is None:
        raise InputError("--scenario is required")
    try:
        sc = load_scenario(args.scenario)
    except ScenarioFormatError as exc:
        raise InputError(str(exc)) from exc
    return sc if args.seed is None else sc.with_seed(args.seed)


def _workers() -> int:
    raw = os.environ.get("TLAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError as exc:
            raise InputError(f"TLAB_THREADS must be an integer, got {raw!r}") from exc
    return os.cpu_count() or 1


def _write_metadata(out: Path, args, command: str) -> None:
    # wall-clock data lives here so the result files stay byte-identical
    write_json(out / "metadata.json", {
        "command": command,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "argv": sys.argv[1:],
    })


def _estimate_payload(sc: PairScenario, est) -> dict:
    return {"scenario": sc.label, "seed": est.seed, "final_eta": est.final_eta,
            "constants": {k: v.to_dict() for k, v in est.estimates.items()}}


# -- commands ---------------------------------------------------------------------

def cmd_estimate(args) -> int:
    sc = _load(args)
    schedule = _schedule(args)
    est = estimate_all(sc, schedule, args.samples)
    out = Path(args.out)
    write_atomic(out / "constants.csv", csv_text(CSV_HEADER, est.rows()))
    write_json(out / "report.json", _estimate_payload(sc, est))
    _write_metadata(out, args, "estimate")
    for name, e in est.estimates.items():
        print(f"{name:<8} {e.value:.6f} {e.flag}".rstrip())
    return EXIT_OK


def cmd_altproj(args) -> int:
    sc = _load(args)
    x0 = _parse_vector(args.x0) if args.x0 else None
    if x0 is None and sc.x0 is None:
        raise InputError("scenario has no x0; pass --x0")
    if x0 is not None and len(x0) != sc.dim:
        raise InputError(f"--x0 has {len(x0)} components, scenario dimension is {sc.dim}")
    tr = run_alternating_projections(sc, x0, args.max_cycles, args.tol)
    out = Path(args.out)
    write_atomic(out / "trace.csv", tr.csv())
    term = tr.termination()
    rate = None
    try:
        rate = fit_linear_rate(tr)
        term["rate"] = rate.to_dict()
    except NoDecay as exc:
        term["rate"] = None
        term["rate_note"] = str(exc)
        if args.rate and tr.reason == STALLED:
            write_json(out / "termination.json", term)
            print(f"error: no rate for a stalled trace: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
    write_json(out / "termination.json", term)
    _write_metadata(out, args, "altproj")
    print(f"termination {tr.reason} after {tr.cycles} cycles")
    if tr.stall is not None:
        print(f"stationary pair p={tr.stall.p.tolist()} q={tr.stall.q.tolist()} gap={tr.stall.gap:.12g}")
    if rate is not None:
        print(f"rate per cycle {rate.rate_c:.6f} (per half-step {rate.half_step_rate:.6f}, "
              f"R^2 {rate.quality:.4f})")
    return EXIT_OK


def _verify_one(task):
    sc, schedule, n = task
    return verify_scenario(sc, schedule, n)


def cmd_verify(args) -> int:
    sc = _load(args)
    schedule = _schedule(args)
    res = verify_scenario(sc, schedule, args.samples)
    out = Path(args.out)
    write_atomic(out / "constants.csv", csv_text(CSV_HEADER, res.estimates.rows()))
    write_json(out / "report.json", {"report": res.report.to_dict(),
                                     "estimates": _estimate_payload(sc, res.estimates)})
    _write_metadata(out, args, "verify")
    print(res.report.table())
    return EXIT_OK if res.report.overall else EXIT_VERIFY


def _battery_files(path: Path) -> list[Path]:
    if not path.is_dir():
        raise InputError(f"battery directory {path} does not exist")
    files = sorted(path.glob("*.json"))
    if not files:
        raise InputError(f"battery directory {path} contains no scenario files")
    return files


def cmd_suite(args) -> int:
    src = args.battery or args.scenario
    if src is None:
        raise InputError("--battery (or --scenario DIR) is required")
    files = _battery_files(Path(src))
    scenarios = []
    for f in files:
        try:
            sc = load_scenario(f)
        except ScenarioFormatError as exc:
            raise InputError(str(exc)) from exc
        scenarios.append(sc if args.seed is None else sc.with_seed(args.seed))
    schedule = _schedule(args)
    tasks = [(sc, schedule, args.samples) for sc in scenarios]
    workers = min(_workers(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_verify_one, tasks))
    else:
        results = [_verify_one(t) for t in tasks]

    reports: list[VerificationReport] = [r.report for r in results]
    convex = [r for r in results if r.pair.is_convex]
    if convex:
        reports.append(check_convex_equivalence([r.pair for r in convex], zero_threshold(schedule),
                                                {r.pair.label: r.estimates for r in convex},
                                                schedule, args.samples))
    reports.append(lemma_property_suite(0 if args.seed is None else args.seed))
    overall = all(r.overall for r in reports)

    out = Path(args.out)
    rows = []
    for f, r in zip(files, results):
        rows.extend([f.stem, *row] for row in r.estimates.rows())
        if r.trace is not None:
            write_atomic(out / "traces" / f"{f.stem}.csv", r.trace.csv())
    write_atomic(out / "constants.csv", csv_text(["scenario", *CSV_HEADER], rows))
    write_json(out / "report.json", {
        "overall": overall,
        "reports": [r.to_dict() for r in reports],
        "termination": {f.stem: (r.trace.termination() if r.trace is not None else None)
                        for f, r in zip(files, results)},
    })
    _write_metadata(out, args, "suite")
    for r in reports:
        print(r.table())
    failed = [f"{r.label}:{c.check_id}" for r in reports for c in r.failed()]
    print(f"aggregate: {'PASS' if overall else 'FAIL'} ({len(reports)} reports)")
    for name in failed:
        print(f"failed check {name}", file=sys.stderr)
    return EXIT_OK if overall else EXIT_VERIFY


def cmd_battery(args) -> int:
    for p in write_battery(args.out):
        print(p)
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tlab", description="Transversality constants of set pairs.")
    parser.add_argument("--version", action="version", version=f"tlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, samples=True, schedule=True):
        p.add_argument("--scenario", help="scenario JSON file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        if schedule:
            p.add_argument("--rho0", type=float, default=0.1, help="largest radius")
            p.add_argument("--gamma", type=float, default=0.5, help="radius shrink factor")
            p.add_argument("--steps", type=int, default=6, help="number of radii")
        if samples:
            p.add_argument("--samples", type=int, default=300, help="candidates per radius")

    common(sub.add_parser("estimate", help="estimate every constant of a scenario"))
    p = sub.add_parser("altproj", help="run alternating projections")
    common(p, samples=False, schedule=False)
    p.add_argument("--x0", help='start point, e.g. "1,0"')
    p.add_argument("--max-cycles", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--rate", action="store_true", help="fail (exit 3) when no rate can be fitted")
    common(sub.add_parser("verify", help="estimate and check one scenario"))
    p = sub.add_parser("suite", help="verify a battery directory of scenarios")
    common(p)
    p.add_argument("--battery", help="directory of scenario JSON files")
    p = sub.add_parser("battery", help="write the shipped battery to --out")
    p.add_argument("--out", default="battery")
    return parser


COMMANDS = {"estimate": cmd_estimate, "altproj": cmd_altproj, "verify": cmd_verify,
            "suite": cmd_suite, "battery": cmd_battery}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "samples", 300) < 100:
            raise InputError("--samples must be >= 100")
        if getattr(args, "max_cycles", 1) < 1 or getattr(args, "tol", 1.0) <= 0:
            raise InputError("--max-cycles must be >= 1 and --tol positive")
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (TlabError, ValueError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
