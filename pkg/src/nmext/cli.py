"""Command-line front end: ``nmext plan | verify | run``.

Exit codes: 0 on success, 1 when a measurement exceeds its budget or a
trace fails to replay, 2 for usage, config and input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import InfeasiblePlan, NmextError
from .gf2core import BitString
from .pipelines import PipelineTrace, config_digest, is_two_source, output_bits, replay, trace
from .planner import PROFILES, PlannerConfig, coerce_override, plan, relation_table
from .suites import RUNNERS, SUITES, resolve_suites

EXIT_OK, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2
TRACE_SEPARATOR = "---"


class UsageError(Exception):
    """Bad flags, config or input; maps to exit code 2."""


# --- inputs -----------------------------------------------------------------


def parse_input_line(text: str, n: int, where: str) -> int:
    """One ``n``-bit input as hex (``ceil(n/4)`` digits, optional ``0x``) or bit text (``n`` chars, index order)."""
    s = text.strip()
    if s.startswith("0b"):
        s = s[2:]
        if len(s) != n or any(c not in "01" for c in s):
            raise UsageError(f"{where}: expected {n} binary digits for n={n}, got {s!r}")
        return BitString.from_str(s).value
    if len(s) == n and n > 1 and all(c in "01" for c in s):
        return BitString.from_str(s).value
    if s.lower().startswith("0x"):
        s = s[2:]
    width = -(-n // 4)
    for col, c in enumerate(s, 1):
        if c not in "0123456789abcdefABCDEF":
            raise UsageError(f"{where}: offset {col}: invalid hex digit {c!r}")
    if len(s) != width:
        raise UsageError(f"{where}: expected {width} hex digits for n={n}, got {len(s)}")
    v = int(s, 16)
    if v >> n:
        raise UsageError(f"{where}: value 0x{s} does not fit in n={n} bits")
    return v


def read_inputs(path: str, n: int, fmt: str) -> list[int]:
    """Inputs from a text file (one per line, ``#`` comments) or packed little-endian raw bytes."""
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{path}: no such file")
    if fmt == "raw":
        blob = p.read_bytes()
        width = -(-n // 8)
        if len(blob) % width:
            raise UsageError(f"{path}: offset {len(blob) - len(blob) % width}: trailing {len(blob) % width} "
                             f"byte(s); each input is {width} bytes for n={n}")
        out = []
        for off in range(0, len(blob), width):
            v = int.from_bytes(blob[off:off + width], "little")
            if v >> n:
                raise UsageError(f"{path}: offset {off}: value does not fit in n={n} bits")
            out.append(v)
        return out
    out = []
    for lineno, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(parse_input_line(line, n, f"{path}:{lineno}"))
    return out


def load_config(path: str) -> PlannerConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    try:
        return PlannerConfig.from_text(text)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def oracle_seed(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("NMEXT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"NMEXT_SEED must be an integer, got {env!r}") from None


# --- commands ---------------------------------------------------------------


def cmd_plan(args: argparse.Namespace) -> int:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, val = (s.strip() for s in item.split("=", 1))
        try:
            overrides[key] = coerce_override(key, val)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        cfg = plan(args.n, args.k, args.eps, args.profile, seed=args.seed, **overrides)
    except InfeasiblePlan as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"violated relation: {exc.relation}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    Path(args.out).write_text(cfg.to_text())
    print(relation_table(cfg))
    return EXIT_OK


def build_report(cfg: PlannerConfig, suites: list[str], seed: int, jobs: int, timings: bool) -> dict:
    """Run suites in order and collect every measurement; never stops at the first failure."""
    report: dict = {
        "tool": "nmext",
        "version": __version__,
        "config": cfg.to_text(),
        "config_digest": config_digest(cfg),
        "seed": seed,
        "suites": {},
    }
    violations = []
    for name in suites:
        t0 = time.perf_counter()
        ms = RUNNERS[name](cfg, seed, jobs)
        entry = {"measurements": [m.to_dict() for m in ms], "passed": all(m.passed for m in ms)}
        if timings:
            entry["wall_clock_s"] = round(time.perf_counter() - t0, 3)
        report["suites"][name] = entry
        for i, m in enumerate(ms):
            if not m.passed:
                violations.append(f"{name}[{i}] {m.quantity}: {m.value} > {m.budget}")
    report["violations"] = violations
    report["passed"] = not violations
    return report


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=str) + "\n"


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        suites = resolve_suites(args.suite or [])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.config:
        cfg = load_config(args.config)
    elif suites == ["lemmas"]:
        # the lemma checks do not read the config; record the default desk plan
        cfg = plan(12, 6, 0.25, "polylog2src")
    else:
        raise UsageError("--config is required unless only the lemmas suite runs")
    seed = oracle_seed(args.seed)
    report = build_report(cfg, suites, seed, max(1, args.jobs), args.timings)
    text = dump_report(report)
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    for name in suites:
        for m in report["suites"][name]["measurements"]:
            flag = "pass" if m["passed"] else "FAIL"
            print(f"{flag} {name:<10} {m['quantity']:<26} {m['value']:>12} <= {m['budget']}", file=sys.stderr)
    for v in report["violations"]:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_BUDGET


def _input_values(cfg: PlannerConfig, literal: str | None, path: str | None, fmt: str, label: str) -> list[int] | None:
    if literal is not None and path is not None:
        raise UsageError(f"give --{label} or --{label}-file, not both")
    if literal is not None:
        return [parse_input_line(literal, cfg.n, f"--{label}")]
    if path is not None:
        return read_inputs(path, cfg.n, fmt)
    return None


def split_traces(text: str) -> list[str]:
    chunks, cur = [], []
    for line in text.splitlines():
        if line.strip() == TRACE_SEPARATOR:
            chunks.append("\n".join(cur))
            cur = []
        else:
            cur.append(line)
    if any(s.strip() for s in cur):
        chunks.append("\n".join(cur))
    return [c for c in chunks if c.strip()]


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    width = output_bits(cfg)
    if args.replay:
        try:
            traces = [PipelineTrace.from_text(c) for c in split_traces(Path(args.replay).read_text())]
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"{args.replay}: cannot read trace ({exc})") from None
        failed = 0
        for i, tr in enumerate(traces):
            ok = replay(cfg, tr)
            failed += not ok
            print(str(BitString(tr.output, width)) if ok else f"trace {i}: replay mismatch")
        return EXIT_OK if not failed else EXIT_BUDGET
    xs = _input_values(cfg, args.x, args.x_file, args.format, "x")
    ys = _input_values(cfg, args.y, args.y_file, args.format, "y")
    if xs is None:
        raise UsageError("run needs --x, --x-file or --replay")
    if is_two_source(cfg):
        if ys is None:
            raise UsageError(f"profile {cfg.profile} needs a second input (--y or --y-file)")
        if len(ys) != len(xs):
            raise UsageError(f"{len(xs)} x inputs but {len(ys)} y inputs")
    elif ys is not None:
        raise UsageError(f"profile {cfg.profile} takes a single input")
    traces = [trace(cfg, x, None if ys is None else ys[i]) for i, x in enumerate(xs)]
    lines = [str(BitString(tr.output, width)) for tr in traces]
    out = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)
    if args.trace:
        Path(args.trace).write_text(f"{TRACE_SEPARATOR}\n".join(tr.to_text() for tr in traces))
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nmext", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"nmext {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="resolve a desk configuration and print its relation table")
    p.add_argument("--profile", required=True, choices=PROFILES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, default=0, help="construction seed recorded in the config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one parameter (repeatable)")
    p.add_argument("-o", "--out", default="nmext.cfg", help="config file to write (default: nmext.cfg)")
    p.set_defaults(func=cmd_plan)

    v = sub.add_parser("verify", help="run certification suites and write a JSON report")
    v.add_argument("--config", help="config file (optional for the lemmas suite alone)")
    v.add_argument("--suite", action="append", choices=SUITES + ("all",),
                   help="suite to run (repeatable); 'all' runs every suite")
    v.add_argument("--seed", type=int, default=None, help="oracle seed (default: $NMEXT_SEED or 0)")
    v.add_argument("--report", help="write the report here instead of stdout")
    v.add_argument("--jobs", type=int, default=1, help="worker threads for per-tamper measurements")
    v.add_argument("--timings", action="store_true", help="record wall-clock seconds per suite")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("run", help="evaluate the configured extractor on inputs")
    r.add_argument("--config", required=True)
    r.add_argument("--x", help="single input, hex or bit text")
    r.add_argument("--y", help="second-source input, hex or bit text")
    r.add_argument("--x-file")
    r.add_argument("--y-file")
    r.add_argument("--format", choices=("text", "raw"), default="text", help="input file format")
    r.add_argument("--out", help="write outputs here instead of stdout")
    r.add_argument("--trace", help="write one stage trace per input to this file")
    r.add_argument("--replay", help="recompute the traces in this file and compare")
    r.set_defaults(func=cmd_run)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NmextError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
