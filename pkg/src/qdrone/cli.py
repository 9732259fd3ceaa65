"""Command-line entry point.

Exit codes: 0 success, 2 validation or infeasibility, 3 numerical
divergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .apt import AptDivergenceError, LockLostError, jitter_summary, preset, rms, simulate_apt
from .harness.config import ConfigError
from .harness.plans import load_plan, run_plan
from .harness.scenario import load_scenario
from .harness.session import report_from_dict, run_chsh_session
from .harness.sweeps import NonMonotoneError, load_sweep, run_linkbudget
from .network import PlanInfeasibleError
from .optics import FiberMode, pointing_penalty_db

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 2, 3


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_chsh(args) -> int:
    scenario = load_scenario(args.scenario).with_overrides(args.seed, args.trials)
    report = run_chsh_session(scenario, workers=args.workers)
    _emit(report.to_csv() if args.format == "csv" else report.to_json(), args.out)
    s = report.summary
    if s.get("ok_trials"):
        print(
            f"{scenario.name}: |S| = {s['mean_abs_S']:.3f} +/- {s['mean_sigma']:.3f} "
            f"({s['violation_sigmas']:.2f} sigma), {s['failed_trials']} failed trial(s)",
            file=sys.stderr,
        )
    return EXIT_OK


def _cmd_linkbudget(args) -> int:
    table = run_linkbudget(load_sweep(args.sweep))
    if args.format == "json":
        rows = list(csv.reader(io.StringIO(table)))
        table = json.dumps([dict(zip(rows[0], map(float, r))) for r in rows[1:]], indent=2) + "\n"
    _emit(table, args.out)
    return EXIT_OK


def _cmd_apt(args) -> int:
    config = preset(args.preset)
    trace = simulate_apt(config, args.distance, args.duration, args.dt, args.seed)
    if args.format == "csv":
        _emit(trace.to_csv(), args.out)
        return EXIT_OK
    summary = {
        "preset": args.preset,
        "seed": args.seed,
        "distance_m": args.distance,
        "duration_s": args.duration,
        "dt_s": args.dt,
        "coarse_rms_rad": rms(trace.coarse_error),
        "fine_rms_m": rms(trace.fine_error),
        "locked_fraction": trace.locked_fraction,
    }
    try:
        sigma = jitter_summary(trace)
        summary["jitter_per_axis_m"] = sigma
        summary["pointing_penalty_db"] = pointing_penalty_db(sigma, FiberMode())
    except LockLostError as exc:
        summary["lock_lost"] = str(exc)
    _emit(json.dumps(summary, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _cmd_plan(args) -> int:
    doc, lines = run_plan(load_plan(args.spec))
    if args.format == "csv":
        data = json.loads(doc)
        cols = ["from", "to", "distance_m", "horizon_m", "diffraction_db", "atmospheric_db",
                "pointing_db", "static_coupling_db", "total_db"]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for link in data["links"]:
            writer.writerow([link[c] for c in cols])
        doc = buf.getvalue()
    _emit(doc, args.out)
    print("\n".join(lines), file=sys.stderr)
    return EXIT_OK


def _cmd_report(args) -> int:
    text = Path(args.path).read_text()
    try:
        data = json.loads(text)
        report = report_from_dict(data)
    except (json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"{args.path}: not a chsh report ({exc})") from None
    s = report.summary
    prov = data["provenance"]
    print(f"scenario {report.scenario.name}  seed {prov['seed']}  trials {prov['trials']}  "
          f"config {prov['config_hash'][:12]}  version {prov['version']}")
    if s.get("ok_trials"):
        print(f"|S| = {s['mean_abs_S']:.4f} +/- {s['mean_sigma']:.4f} (spread {s['std_abs_S']:.4f}), "
              f"violation {s['violation_sigmas']:.2f} sigma, {s['failed_trials']} failed")
    if s != data["summary"]:
        print("summary does not match the per-trial rows", file=sys.stderr)
        return EXIT_INVALID
    if args.verify:
        rerun = run_chsh_session(report.scenario).to_json()
        if rerun != text:
            print("re-run from provenance differs from the stored report", file=sys.stderr)
            return EXIT_INVALID
        print("re-run from provenance reproduces the report byte for byte")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdrone", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chsh", help="Monte Carlo CHSH session for a scenario")
    p.add_argument("scenario", help="scenario file or built-in name")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_cmd_chsh)

    p = sub.add_parser("linkbudget", help="diffraction-loss sweep table")
    p.add_argument("sweep", help="sweep file or built-in name")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_linkbudget)

    p = sub.add_parser("apt", help="simulate a tracking preset")
    p.add_argument("preset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--distance", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=2e-4)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_apt)

    p = sub.add_parser("plan", help="relay-chain plan")
    p.add_argument("spec", help="plan file or built-in name")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("report", help="summarize (and optionally re-run) a chsh JSON report")
    p.add_argument("path")
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PlanInfeasibleError, NonMonotoneError, LockLostError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AptDivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
