"""``fqt`` command line: run, trace, sweep, validate.

Exit codes: 0 success, 1 invariant violation or failed validation,
2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path as FsPath
from typing import Any, Sequence

from . import config, validate
from .elements import ConfigError
from .harness import InvariantError, Report, run_experiment, sweep
from .noise import sample
from .protocol import STAGES, run_pipeline
from .state import StageError

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2


def dump_report(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def _write(text: str, dest: str | None) -> None:
    if dest is None:
        sys.stdout.write(text)
    else:
        FsPath(dest).write_text(text)


def _fmt(x: float | None) -> str:
    return "n/a" if x is None else f"{x:.12g}"


def cmd_run(args: argparse.Namespace) -> int:
    doc = config.load(args.config)
    spec = config.to_spec(doc)
    if spec.sweep is not None:
        raise ConfigError("run.sweep: config has a sweep section; use the 'sweep' subcommand")
    report = run_experiment(spec, jobs=args.jobs, config_echo=config.echo(doc))
    dest = args.output or doc.get("run", {}).get("output") or "report.json"
    _write(dump_report(report), dest)
    fid = report.mean_fidelity_kept[0] if report.mean_fidelity_kept else None
    print(
        f"success={_fmt(report.success_probability[0])} "
        f"fidelity={_fmt(fid)} oracle_dev={_fmt(report.oracle_max_deviation)} -> {dest}"
    )
    return EXIT_OK


def trace_rows(doc: dict[str, Any], stage: str) -> list[str]:
    spec = config.to_spec(doc)
    if spec.sweep is not None:
        raise ConfigError("run.sweep: trace needs a single, non-sweep config")
    if "trials" in doc.get("run", {}) and spec.trials != 1:
        raise ConfigError("run.trials: trace needs trials = 1")
    if len(spec.inputs) != 1:
        raise ConfigError("ensemble: trace needs a single input qubit")
    if not spec.noise.deterministic:
        raise ConfigError("noise.kind: trace needs a fixed noise family, not haar")
    q = spec.inputs[0][1]
    _, trace = run_pipeline(q, sample(spec.noise, 0), spec.decoder)
    st = dict(trace)[stage]
    rows = sorted((str(br), str(bs), amp) for (br, bs), amp in st)
    return [f"r={r}  s={s}  {a.real:+.12f} {a.imag:+.12f}i" for r, s, a in rows]


def cmd_trace(args: argparse.Namespace) -> int:
    rows = trace_rows(config.load(args.config), args.stage)
    _write("".join(r + "\n" for r in rows), args.output)
    return EXIT_OK


def sweep_csv(results: Sequence[tuple[float, Report]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parameter", "success_mean", "success_stderr", "fidelity_mean"])
    for v, rep in results:
        fid = rep.mean_fidelity_kept[0] if rep.mean_fidelity_kept else ""
        w.writerow([repr(float(v)), repr(rep.success_probability[0]), repr(rep.success_probability[1]),
                    fid if fid == "" else repr(fid)])
    return buf.getvalue()


def cmd_sweep(args: argparse.Namespace) -> int:
    doc = config.load(args.config)
    spec = config.to_spec(doc)
    if spec.sweep is None:
        raise ConfigError("run.sweep: missing; the sweep subcommand needs a sweep section")
    text = sweep_csv(sweep(spec, jobs=args.jobs))
    _write(text, args.output or doc.get("run", {}).get("output"))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    failed = 0
    for c in validate.run_all():
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.observed}", flush=True)
        failed += not c.passed
    if failed:
        print(f"{failed} invariant(s) failed", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _jobs(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fqt", description="Faithful qubit transmission simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment and write a JSON report")
    run.add_argument("config")
    run.add_argument("--output", help="report path (default: run.output or report.json)")
    run.add_argument("--jobs", type=_jobs, default=1, help="worker processes; does not change results")
    run.set_defaults(func=cmd_run)

    tr = sub.add_parser("trace", help="print the amplitude table at one stage")
    tr.add_argument("config")
    tr.add_argument("--stage", choices=STAGES, default="final")
    tr.add_argument("--output")
    tr.set_defaults(func=cmd_trace)

    sw = sub.add_parser("sweep", help="sweep eta or t and write CSV")
    sw.add_argument("config")
    sw.add_argument("--output", help="CSV path (default: run.output or stdout)")
    sw.add_argument("--jobs", type=_jobs, default=1)
    sw.set_defaults(func=cmd_sweep)

    va = sub.add_parser("validate", help="run the built-in invariant suite")
    va.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantError, StageError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
