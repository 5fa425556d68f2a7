"""Command-line front end: train, evaluate, and benchmark dispatching policies.

Commands
    pdr     run one dispatching rule on one instance
    random  run the uniform-random rule-picking agent
    train   learn a policy on one instance and write it to a file
    eval    evaluate a saved policy file on an instance
    bench   sweep a directory of instances with several methods

Exit codes: 0 success, 2 usage error, 3 I/O or parse error, 4 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import bo, dsl, pdr, search, sim
from .instance import BksTable, Instance, load_bks, load_instance_file

USAGE_ERROR = 2
IO_ERROR = 3
INTERNAL_ERROR = 4

PDR_METHODS = ("fifo", "spt", "mor", "mwr", "lor")


class UsageError(ValueError):
    pass


@dataclasses.dataclass
class RunReport:
    instance: str
    method: str
    makespan: float
    gap: float | None
    seed: int | None
    seconds: float
    episodes: int

    # wall-clock stays out of the CSV so identical invocations produce
    # byte-identical files; the table output still shows it
    CSV_HEADER = "instance,method,makespan,gap_percent,seed,episodes"

    def csv_row(self) -> str:
        gap = f"{100 * self.gap:.2f}" if self.gap is not None else ""
        seed = "" if self.seed is None else str(self.seed)
        return f"{self.instance},{self.method},{self.makespan:g},{gap},{seed},{self.episodes}"

    def table_row(self) -> str:
        gap = f"{100 * self.gap:.2f}%" if self.gap is not None else "-"
        seed = "-" if self.seed is None else str(self.seed)
        return (
            f"{self.instance:<12} {self.method:<8} {self.makespan:>10g} "
            f"{gap:>8} {seed:>4} {self.seconds:>8.3f}s {self.episodes:>8}"
        )

    @staticmethod
    def table_header() -> str:
        return (
            f"{'instance':<12} {'method':<8} {'makespan':>10} "
            f"{'gap':>8} {'seed':>4} {'time':>9} {'episodes':>8}"
        )


def _load_bks_table(path: str | None) -> BksTable | None:
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return load_bks(fh.read())


def _gap_for(table: BksTable | None, instance: Instance, makespan: float) -> float | None:
    if table is None or instance.name not in table:
        return None
    bks = table.lookup(instance.name)
    return (makespan - bks) / bks


def _apply_overrides(config: search.SearchConfig, pairs: list[str]) -> search.SearchConfig:
    """Apply --set key=value overrides onto the search/BO configuration."""
    bo_fields = {f.name for f in dataclasses.fields(bo.BoConfig)}
    search_keys = {
        "lambda": "lam",
        "mutation_rate": "mutation_rate",
        "max_depth": "max_depth",
        "max_tokens": "max_tokens",
    }
    for pair in pairs:
        if "=" not in pair:
            raise UsageError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        key = key.strip()
        if key.startswith("bo."):
            name = key[3:]
            if name not in bo_fields:
                raise UsageError(f"unknown config key {key!r}")
            target, attr = config.bo, name
        elif key.startswith("search."):
            name = key[7:]
            if name not in search_keys:
                raise UsageError(f"unknown config key {key!r}")
            target, attr = config, search_keys[name]
        else:
            raise UsageError(f"unknown config key {key!r} (use bo.* or search.*)")
        current = getattr(target, attr)
        try:
            value = int(float(raw)) if isinstance(current, int) else float(raw)
        except ValueError:
            raise UsageError(f"invalid value {raw!r} for {key}") from None
        setattr(target, attr, value)
    # re-validate after mutation
    config.bo.__post_init__()
    config.__post_init__()
    return config


def _write(path: str, content: str) -> None:
    Path(path).write_text(content, encoding="utf-8")


def _emit_report(report: RunReport, csv_path: str | None) -> None:
    print(RunReport.table_header())
    print(report.table_row())
    if csv_path:
        _write(csv_path, RunReport.CSV_HEADER + "\n" + report.csv_row() + "\n")


def cmd_pdr(args) -> int:
    instance = load_instance_file(args.instance, args.format)
    table = _load_bks_table(args.bks)
    rule = pdr.Heuristic.parse(args.rule)
    started = time.perf_counter()
    result = pdr.run_pdr(instance, rule)
    elapsed = time.perf_counter() - started
    report = RunReport(
        instance=instance.name,
        method=rule.value,
        makespan=result.makespan,
        gap=_gap_for(table, instance, result.makespan),
        seed=None,
        seconds=elapsed,
        episodes=1,
    )
    _emit_report(report, args.csv)
    if args.trace:
        _write(args.trace, sim.trace_csv(result))
    if args.dump_schedule:
        _write(args.dump_schedule, sim.schedule_csv(result, instance))
    return 0


def cmd_random(args) -> int:
    if args.episodes < 1:
        raise UsageError("--episodes must be >= 1")
    instance = load_instance_file(args.instance, args.format)
    table = _load_bks_table(args.bks)
    rng = random.Random(args.seed)
    started = time.perf_counter()
    total = 0
    for _ in range(args.episodes):
        total += sim.run_episode(instance, pdr.random_rule_policy(rng)).makespan
    elapsed = time.perf_counter() - started
    mean_makespan = total / args.episodes
    report = RunReport(
        instance=instance.name,
        method="random",
        makespan=mean_makespan,
        gap=_gap_for(table, instance, mean_makespan),
        seed=args.seed,
        seconds=elapsed,
        episodes=args.episodes,
    )
    _emit_report(report, args.csv)
    return 0


def _search_config(args) -> search.SearchConfig:
    config = search.SearchConfig(
        episode_budget=args.budget,
        seed=args.seed,
        workers=search.default_workers(),
    )
    return _apply_overrides(config, args.set or [])


def cmd_train(args) -> int:
    if args.budget < 0:
        raise UsageError("--budget must be >= 0")
    instance = load_instance_file(args.instance, args.format)
    table = _load_bks_table(args.bks)
    config = _search_config(args)
    started = time.perf_counter()
    program, state = search.train(instance, config)
    elapsed = time.perf_counter() - started
    makespan, gap = search.evaluate_policy(
        program, instance, table.lookup(instance.name) if table and instance.name in table else None
    )
    if args.out:
        _write(args.out, dsl.serialize(program))
    if args.log:
        _write(args.log, search.training_log_csv(state))
    print(dsl.pretty_print(program))
    print()
    report = RunReport(
        instance=instance.name,
        method="prorl",
        makespan=makespan,
        gap=gap,
        seed=args.seed,
        seconds=elapsed,
        episodes=state.episodes_used,
    )
    _emit_report(report, args.csv)
    return 0


def cmd_eval(args) -> int:
    instance = load_instance_file(args.instance, args.format)
    table = _load_bks_table(args.bks)
    with open(args.policy, "r", encoding="utf-8") as fh:
        program = dsl.deserialize(fh.read())
    started = time.perf_counter()
    result = sim.run_episode(instance, dsl.make_policy(program))
    elapsed = time.perf_counter() - started
    report = RunReport(
        instance=instance.name,
        method="prorl",
        makespan=result.makespan,
        gap=_gap_for(table, instance, result.makespan),
        seed=None,
        seconds=elapsed,
        episodes=1,
    )
    _emit_report(report, args.csv)
    if args.trace:
        _write(args.trace, sim.trace_csv(result))
    if args.dump_schedule:
        _write(args.dump_schedule, sim.schedule_csv(result, instance))
    return 0


def _bench_single(instance: Instance, method: str, seed: int, budget: int,
                  table: BksTable | None, set_pairs: list[str]) -> RunReport:
    started = time.perf_counter()
    if method in PDR_METHODS:
        rule = pdr.Heuristic.parse(method)
        makespan: float = pdr.run_pdr(instance, rule).makespan
        episodes, report_seed = 1, None
    elif method == "random":
        rng = random.Random(seed)
        makespan = float(sim.run_episode(instance, pdr.random_rule_policy(rng)).makespan)
        episodes, report_seed = 1, seed
    elif method == "prorl":
        config = search.SearchConfig(episode_budget=budget, seed=seed, workers=1)
        config = _apply_overrides(config, set_pairs)
        program, state = search.train(instance, config)
        makespan = float(search.evaluate_policy(program, instance)[0])
        episodes, report_seed = state.episodes_used, seed
    else:
        raise UsageError(f"unknown method {method!r}")
    return RunReport(
        instance=instance.name,
        method=method,
        makespan=makespan,
        gap=_gap_for(table, instance, makespan),
        seed=report_seed,
        seconds=time.perf_counter() - started,
        episodes=episodes,
    )


def cmd_bench(args) -> int:
    directory = Path(args.dir)
    paths = sorted(p for p in directory.glob("*") if p.is_file())
    if not paths:
        raise UsageError(f"no instance files in {args.dir!r}")
    methods = [m.strip().lower() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in PDR_METHODS + ("random", "prorl"):
            raise UsageError(f"unknown method {m!r}")
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [0]
    table = _load_bks_table(args.bks)

    instances = []
    failures: list[tuple[str, str, int]] = []
    for path in paths:
        try:
            instances.append(load_instance_file(str(path), args.format))
        except Exception as exc:  # reported, then skipped
            failures.append((path.name, str(exc), IO_ERROR))

    tasks = []
    for instance in instances:
        for method in methods:
            for seed in seeds if method in ("prorl", "random") else [seeds[0]]:
                tasks.append((instance, method, seed))

    def run(task):
        instance, method, seed = task
        try:
            return _bench_single(instance, method, seed, args.budget, table, args.set or [])
        except Exception as exc:
            failures.append((f"{instance.name}/{method}/s{seed}", str(exc), INTERNAL_ERROR))
            return None

    workers = search.default_workers()
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = [r for r in pool.map(run, tasks) if r is not None]
    else:
        reports = [r for r in map(run, tasks) if r is not None]

    print(RunReport.table_header())
    for report in reports:
        print(report.table_row())

    # per-instance mean gaps by method, plus mPDR when all five rules ran
    print()
    have_all_pdrs = all(m in methods for m in PDR_METHODS)
    columns = methods + (["mpdr"] if have_all_pdrs else [])
    print(f"{'instance':<12} " + " ".join(f"{c:>8}" for c in columns))
    for instance in instances:
        cells = []
        by_method: dict[str, list[float]] = {}
        for report in reports:
            if report.instance == instance.name and report.gap is not None:
                by_method.setdefault(report.method, []).append(report.gap)
        for method in methods:
            gaps = by_method.get(method)
            cells.append(f"{100 * sum(gaps) / len(gaps):>7.2f}%" if gaps else f"{'-':>8}")
        if have_all_pdrs:
            pdr_gaps = [sum(by_method[m]) / len(by_method[m]) for m in PDR_METHODS if m in by_method]
            cells.append(f"{100 * min(pdr_gaps):>7.2f}%" if pdr_gaps else f"{'-':>8}")
        print(f"{instance.name:<12} " + " ".join(cells))

    if args.csv:
        lines = [RunReport.CSV_HEADER]
        lines.extend(report.csv_row() for report in reports)
        _write(args.csv, "\n".join(lines) + "\n")

    if failures:
        for name, message, _ in failures:
            print(f"FAILED {name}: {message}", file=sys.stderr)
        return max(code for _, _, code in failures)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prorl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_instance=True):
        if with_instance:
            p.add_argument("--instance", required=True, help="instance file path")
        p.add_argument(
            "--format", choices=("standard", "taillard"), default="standard",
            help="instance file format",
        )
        p.add_argument("--bks", help="CSV file of best-known makespans")
        p.add_argument("--csv", help="write the report as CSV to this path")

    p = sub.add_parser("pdr", help="run one dispatching rule")
    add_common(p)
    p.add_argument("--rule", required=True, type=str.lower, choices=PDR_METHODS)
    p.add_argument("--trace", help="write the per-decision concept trace CSV")
    p.add_argument("--dump-schedule", help="write the schedule CSV")
    p.set_defaults(func=cmd_pdr)

    p = sub.add_parser("random", help="uniform-random rule-picking agent")
    add_common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=1)
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("train", help="learn a policy on an instance")
    add_common(p)
    p.add_argument("--budget", type=int, required=True, help="episode budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the learned policy to this path")
    p.add_argument("--log", help="write the per-generation training log CSV")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override bo.* or search.* configuration keys")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved policy file")
    add_common(p)
    p.add_argument("--policy", required=True, help="policy file path")
    p.add_argument("--trace", help="write the per-decision concept trace CSV")
    p.add_argument("--dump-schedule", help="write the schedule CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="sweep a directory of instances")
    p.add_argument("--dir", required=True, help="directory of instance files")
    p.add_argument(
        "--format", choices=("standard", "taillard"), default="standard",
        help="instance file format",
    )
    p.add_argument("--methods", default="fifo,spt,mor,mwr,lor",
                   help="comma-separated: fifo,spt,mor,mwr,lor,random,prorl")
    p.add_argument("--budget", type=int, default=1000, help="episode budget for prorl")
    p.add_argument("--seeds", default="0", help="comma-separated seeds for prorl/random")
    p.add_argument("--bks", help="CSV file of best-known makespans")
    p.add_argument("--csv", help="write all run rows as CSV to this path")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override bo.* or search.* configuration keys")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_ERROR
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
