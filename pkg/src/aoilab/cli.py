"""``aoilab`` command line: generate instances, run policies, compare, sweep,
check and search.

Exit status: 0 on success, 1 when a check or sweep finds a violation, 2 for
usage, parse and input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from filelock import FileLock

from . import __version__
from .generators import (
    Example1,
    Example2,
    Example3,
    InvalidSpecParams,
    Perturb,
    RandomPoissonLike,
    RandomUniform,
    adversarial_search,
    generate,
)
from .harness import run_suite
from .metrics import average_aoi, decimal_str, per_update_metrics
from .model import (
    InstanceError,
    ParseError,
    format_instance,
    format_trace,
    instance_id,
    parse_instance,
    ratio,
    trace_to_csv,
)
from .oracle import DEFAULT_CAP, InstanceTooLarge, optimal, optimal_integral
from .policies import PolicyId, UnknownPolicy, policy_from_name, run_policy

ORACLE = "oracle"
RUNS_LOG = "runs.jsonl"
EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    policy: str
    report: dict
    trace_path: str
    timestamp: float
    tool_version: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _policy_name(name: str) -> str:
    return ORACLE if name == ORACLE else policy_from_name(name).value


def _load_instance(path: str | Path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return parse_instance(text)
    except ParseError as exc:
        where = f":{exc.line}:{exc.column}" if exc.line else ""
        raise UsageError(f"{path}{where}: {exc}") from exc


def _append_record(out: Path, record: RunRecord) -> None:
    log = out / RUNS_LOG
    with FileLock(str(log) + ".lock"):
        with log.open("a") as fh:
            fh.write(record.to_json() + "\n")


def _solve(instance, policy: str, cap: int):
    if policy == ORACLE:
        return optimal(instance, cap=cap).best_trace
    return run_policy(instance, policy)


def cmd_run(instance_path: str | Path, policy: str, out_dir: str | Path, cap: int = DEFAULT_CAP) -> RunRecord:
    """Simulate (or solve) one instance; write trace, report and metrics; log the run."""
    instance = _load_instance(instance_path)
    policy = _policy_name(policy)
    trace = _solve(instance, policy, cap)
    report = average_aoi(trace, instance)
    iid = instance_id(instance)
    out = Path(out_dir) / iid
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / f"{policy}.trace.json"
    trace_path.write_text(format_trace(trace))
    (out / f"{policy}.trace.csv").write_text(trace_to_csv(trace))
    (out / f"{policy}.metrics.csv").write_text(per_update_metrics(trace, instance).to_csv())
    body = {"instance_id": iid, "policy": policy, **report.to_dict()}
    (out / f"{policy}.report.json").write_text(json.dumps(body, indent=2) + "\n")
    record = RunRecord(iid, policy, report.to_dict(), str(trace_path), time.time(), __version__)
    _append_record(Path(out_dir), record)
    return record


COMPARE_COLUMNS = ("policy", "integral", "average", "average_decimal", "ratio", "completions")


def cmd_compare(instance_path: str | Path, policies: Sequence[str], cap: int = DEFAULT_CAP, method: str = "enumerate") -> list[dict]:
    """One row per policy. ``ratio`` is against the offline optimum, or ``None``
    when the instance is too large to solve with ``method``."""
    instance = _load_instance(instance_path)
    names = [_policy_name(p) for p in policies]
    try:
        best = optimal_integral(instance, cap=cap, method=method)
    except InstanceTooLarge:
        if ORACLE in names:
            raise
        best = None
    rows = []
    for name in names:
        trace = _solve(instance, name, cap)
        report = average_aoi(trace, instance)
        r = report.integral / best if best else None
        rows.append(
            {
                "policy": name,
                "integral": str(report.integral),
                "average": str(report.average),
                "average_decimal": decimal_str(report.average),
                "ratio": None if r is None else str(r),
                "completions": len(trace.completions),
            }
        )
    return rows


def _table(rows: list[dict], columns: Sequence[str]) -> str:
    cells = [list(columns)] + [["-" if row[c] is None else str(row[c]) for c in columns] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells) + "\n"


def _csv(rows: list[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: "" if row[c] is None else row[c] for c in columns})
    return buf.getvalue()


# -- generator flags ------------------------------------------------------------

FAMILIES = ("example1", "example2", "example3", "uniform", "poisson", "perturb")


def _spec_from_args(args, seed: int):
    fam = args.family
    if fam == "example1":
        return Example1()
    if fam == "example3":
        return Example3()
    if fam == "example2":
        return Example2(args.m, args.epsilon, args.horizon if args.horizon is not None else Fraction(2 * args.m))
    if fam == "uniform":
        return RandomUniform(args.n, args.g_max, args.s_max, seed, args.horizon, args.bits)
    if fam == "poisson":
        return RandomPoissonLike(args.n, args.rate, args.mean_size, seed, args.horizon, args.bits)
    if args.base is None:
        raise UsageError("perturb needs --base")
    return Perturb(_load_instance(args.base), args.magnitude, seed, args.bits)


def _add_generator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=FAMILIES, default="uniform")
    p.add_argument("--n", type=int, default=8, help="number of updates (random families)")
    p.add_argument("--g-max", type=ratio, default=Fraction(4))
    p.add_argument("--s-max", type=ratio, default=Fraction(1))
    p.add_argument("--rate", type=ratio, default=Fraction(1))
    p.add_argument("--mean-size", type=ratio, default=Fraction(1, 2))
    p.add_argument("--bits", type=int, default=16)
    p.add_argument("--horizon", type=ratio, default=None)
    p.add_argument("--m", type=int, default=2, help="burst size (example2)")
    p.add_argument("--epsilon", type=ratio, default=Fraction(1, 100))
    p.add_argument("--base", help="instance file to perturb")
    p.add_argument("--magnitude", type=ratio, default=Fraction(1, 16))


# -- sweep ------------------------------------------------------------------------


def _sweep_one(job):
    instance, policy, cap, method = job
    best = optimal_integral(instance, cap=cap, method=method)
    value = average_aoi(run_policy(instance, policy), instance).integral
    return {
        "instance_id": instance_id(instance),
        "n": len(instance),
        "policy_integral": str(value),
        "optimal_integral": str(best),
        "ratio": str(value / best),
    }


SWEEP_COLUMNS = ("instance_id", "n", "policy_integral", "optimal_integral", "ratio")


def cmd_sweep(args) -> tuple[list[dict], dict]:
    policy = policy_from_name(args.policy)
    instances = [generate(_spec_from_args(args, args.seed + k)) for k in range(args.count)]
    jobs = [(inst, policy, args.cap, args.method) for inst in instances]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_one, jobs, chunksize=16))
    else:
        rows = [_sweep_one(j) for j in jobs]
    ratios = [Fraction(r["ratio"]) for r in rows]
    top = max(range(len(rows)), key=lambda k: ratios[k])
    bound = policy.ratio_bound
    summary = {
        "policy": policy.value,
        "count": len(rows),
        "max_ratio": str(ratios[top]),
        "max_ratio_decimal": decimal_str(ratios[top]),
        "argmax": rows[top]["instance_id"],
        "bound": bound,
        "passed": bound is None or ratios[top] <= bound,
    }
    return rows, summary


# -- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoilab", description="Age-of-information scheduling lab.")
    parser.add_argument("--version", action="version", version=f"aoilab {__version__}")

    def global_flags(p, suppress: bool):
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--out", default=d("out"), help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=d(0))
        p.add_argument("--cap", type=int, default=d(DEFAULT_CAP), help="largest instance the enumerating oracle accepts")
        p.add_argument("--jobs", type=int, default=d(1), help="worker processes")

    global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="write canonical instance files")
    _add_generator_flags(p)
    p.add_argument("--count", type=int, default=1, help="instances to write, seeds seed..seed+count-1")
    p.add_argument("--name", help="file name (single instance only)")

    p = sub.add_parser("run", parents=[common], help="simulate one policy (or the oracle)")
    p.add_argument("instance")
    p.add_argument("--policy", default=PolicyId.SRPT_PLUS.value)

    p = sub.add_parser("compare", parents=[common], help="table of policies on one instance")
    p.add_argument("instance")
    p.add_argument("--policies", default="srpt-plus,srpt-l,oracle", help="comma-separated ids")
    p.add_argument("--method", choices=("enumerate", "pareto"), default="enumerate")

    p = sub.add_parser("sweep", parents=[common], help="ratio of a policy over generated instances")
    _add_generator_flags(p)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--policy", default=PolicyId.SRPT_PLUS.value)
    p.add_argument("--method", choices=("enumerate", "pareto"), default="enumerate")

    p = sub.add_parser("check", parents=[common], help="run a verification suite over a corpus")
    p.add_argument("--suite", choices=("lemma2", "lemma4", "lemma5", "decomposition", "cr"), required=True)
    p.add_argument("--corpus", required=True, help="directory of instance files")
    p.add_argument("--policy", default=PolicyId.SRPT_PLUS.value)

    p = sub.add_parser("search", parents=[common], help="hill-climb toward a bad instance for a policy")
    p.add_argument("--policy", default=PolicyId.SRPT.value)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--budget", type=int, default=1000)
    return parser


def _dispatch(args) -> int:
    out = Path(args.out)
    if args.command == "gen":
        if args.count < 1:
            raise UsageError("--count must be at least 1")
        if args.name and args.count > 1:
            raise UsageError("--name only applies to a single instance")
        out.mkdir(parents=True, exist_ok=True)
        for k in range(args.count):
            seed = args.seed + k
            inst = generate(_spec_from_args(args, seed))
            if args.name:
                name = args.name
            elif args.family.startswith("example"):
                name = f"{args.family}.json" if args.family != "example2" else f"example2-m{args.m}.json"
            else:
                name = f"{args.family}-n{args.n}-s{seed}.json"
            path = out / name
            path.write_text(format_instance(inst))
            print(path)
        return EXIT_OK

    if args.command == "run":
        record = cmd_run(args.instance, args.policy, out, args.cap)
        print(json.dumps({"instance_id": record.instance_id, "policy": record.policy, **record.report}, indent=2))
        return EXIT_OK

    if args.command == "compare":
        names = [p.strip() for p in args.policies.split(",") if p.strip()]
        if not names:
            raise UsageError("--policies is empty")
        rows = cmd_compare(args.instance, names, args.cap, args.method)
        sys.stdout.write(_table(rows, COMPARE_COLUMNS))
        return EXIT_OK

    if args.command == "sweep":
        if args.count < 1:
            raise UsageError("--count must be at least 1")
        rows, summary = cmd_sweep(args)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"sweep-{summary['policy']}-s{args.seed}"
        (out / f"{stem}.csv").write_text(_csv(rows, SWEEP_COLUMNS))
        (out / f"{stem}.json").write_text(json.dumps(summary, indent=2) + "\n")
        print(json.dumps(summary, indent=2))
        return EXIT_OK if summary["passed"] else EXIT_VIOLATION

    if args.command == "check":
        corpus = Path(args.corpus)
        files = sorted(corpus.glob("*.json"))
        if not files:
            raise UsageError(f"no instance files in {corpus}")
        instances = [_load_instance(f) for f in files]
        reports = run_suite(args.suite, instances, policy_from_name(args.policy), args.cap)
        failed = [r for r in reports if not r.passed]
        doc = {
            "suite": args.suite,
            "policy": policy_from_name(args.policy).value,
            "instances": len(reports),
            "failed": len(failed),
            "reports": [r.to_dict() for r in reports],
        }
        out.mkdir(parents=True, exist_ok=True)
        (out / f"check-{args.suite}.json").write_text(json.dumps(doc, indent=2) + "\n")
        print(f"{args.suite}: {len(reports) - len(failed)}/{len(reports)} passed")
        return EXIT_VIOLATION if failed else EXIT_OK

    if args.command == "search":
        policy = policy_from_name(args.policy)
        if args.n > args.cap:
            raise UsageError(f"--n {args.n} exceeds --cap {args.cap}")
        inst, r = adversarial_search(policy, args.n, args.budget, args.seed)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"search-{policy.value}-n{args.n}-s{args.seed}.json"
        path.write_text(format_instance(inst))
        print(json.dumps({"policy": policy.value, "ratio": str(r), "ratio_decimal": decimal_str(r), "instance": str(path)}, indent=2))
        return EXIT_OK

    raise UsageError(f"unknown command {args.command}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (UsageError, InstanceError, InvalidSpecParams, UnknownPolicy, InstanceTooLarge, ValueError) as exc:
        print(f"aoilab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
