"""Parsing of benchmark job-shop instances and best-known-solution tables.

Two on-disk formats are supported: the OR-Library "standard" format
(n m header, then one line per job of (machine, duration) pairs with
0-based machines) and Taillard's native format (n m header, an n x m
duration matrix, then an n x m machine matrix with 1-based machines).
The two are ambiguous to sniff apart for square instances, so callers
pick the parser explicitly. Lines starting with '#' are treated as
comments in every format.
"""

from __future__ import annotations

from dataclasses import dataclass


class ParseError(ValueError):
    """Malformed instance or BKS input; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Operation:
    """One processing step of a job: a machine index and an integer duration."""

    machine: int
    duration: int


@dataclass(frozen=True)
class Instance:
    """An immutable job-shop problem: jobs are ordered chains of operations."""

    name: str
    num_jobs: int
    num_machines: int
    jobs: tuple[tuple[Operation, ...], ...]

    def __post_init__(self):
        if self.num_jobs != len(self.jobs):
            raise ValueError(f"{self.name}: job count mismatch")
        for i, job in enumerate(self.jobs):
            seen = set()
            for op in job:
                if not 0 <= op.machine < self.num_machines:
                    raise ValueError(
                        f"{self.name}: job {i} uses machine {op.machine}, "
                        f"have {self.num_machines}"
                    )
                if op.duration < 1:
                    raise ValueError(f"{self.name}: job {i} has duration {op.duration}")
                if op.machine in seen:
                    raise ValueError(f"{self.name}: job {i} visits machine {op.machine} twice")
                seen.add(op.machine)

    @property
    def total_operations(self) -> int:
        return sum(len(job) for job in self.jobs)

    def machine_workload(self, machine: int) -> int:
        return sum(op.duration for job in self.jobs for op in job if op.machine == machine)

    def job_length(self, job: int) -> int:
        return sum(op.duration for op in self.jobs[job])


@dataclass(frozen=True)
class BksTable:
    """Best-known makespans by instance name. Lookups never fall back to defaults."""

    entries: dict[str, int]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def lookup(self, name: str) -> int:
        if name not in self.entries:
            raise KeyError(f"no best-known solution recorded for {name!r}")
        return self.entries[name]


def _data_lines(text: str):
    """Yield (line_no, tokens) for non-blank, non-comment lines."""
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield i, line.split()


def _ints(line_no: int, tokens: list[str]) -> list[int]:
    values = []
    for tok in tokens:
        try:
            values.append(int(tok))
        except ValueError:
            raise ParseError(line_no, f"invalid integer {tok!r}") from None
    return values


def parse_standard(text: str, name: str = "unnamed") -> Instance:
    """Parse the OR-Library standard format (0-based machine indices)."""
    lines = _data_lines(text)
    try:
        line_no, tokens = next(lines)
    except StopIteration:
        raise ParseError(0, "empty input") from None
    header = _ints(line_no, tokens)
    if len(header) != 2:
        raise ParseError(line_no, f"expected 'n m' header, got {len(header)} values")
    n, m = header
    if n < 1 or m < 1:
        raise ParseError(line_no, f"bad dimensions {n}x{m}")

    jobs = []
    for _ in range(n):
        try:
            line_no, tokens = next(lines)
        except StopIteration:
            raise ParseError(line_no, f"expected {n} job lines, got {len(jobs)}") from None
        values = _ints(line_no, tokens)
        if len(values) != 2 * m:
            raise ParseError(line_no, f"expected {2 * m} values, got {len(values)}")
        ops = []
        for machine, duration in zip(values[0::2], values[1::2]):
            if not 0 <= machine < m:
                raise ParseError(line_no, f"machine index {machine} out of range 0..{m - 1}")
            if duration < 1:
                raise ParseError(line_no, f"duration {duration} must be >= 1")
            ops.append(Operation(machine, duration))
        jobs.append(tuple(ops))
    for line_no, _ in lines:
        raise ParseError(line_no, "trailing content after last job line")
    return Instance(name, n, m, tuple(jobs))


def parse_taillard(text: str, name: str = "unnamed") -> Instance:
    """Parse Taillard's native format (times matrix then 1-based machines matrix)."""
    lines = _data_lines(text)
    try:
        line_no, tokens = next(lines)
    except StopIteration:
        raise ParseError(0, "empty input") from None
    header = _ints(line_no, tokens)
    if len(header) != 2:
        raise ParseError(line_no, f"expected 'n m' header, got {len(header)} values")
    n, m = header
    if n < 1 or m < 1:
        raise ParseError(line_no, f"bad dimensions {n}x{m}")

    def read_matrix(label: str) -> list[list[int]]:
        rows = []
        nonlocal line_no
        for _ in range(n):
            try:
                row_no, tokens = next(lines)
            except StopIteration:
                raise ParseError(
                    line_no, f"{label} matrix has {len(rows)} rows, expected {n}"
                ) from None
            line_no = row_no
            row = _ints(row_no, tokens)
            if len(row) != m:
                raise ParseError(row_no, f"{label} row has {len(row)} values, expected {m}")
            rows.append(row)
        return rows

    times = read_matrix("times")
    machines = read_matrix("machines")
    for extra_no, _ in lines:
        raise ParseError(extra_no, "trailing content after machines matrix")

    jobs = []
    for i in range(n):
        ops = []
        for j in range(m):
            machine = machines[i][j]
            if machine == 0:
                raise ParseError(line_no, f"machine index 0 in 1-based matrix (job {i})")
            if not 1 <= machine <= m:
                raise ParseError(line_no, f"machine index {machine} out of range 1..{m}")
            if times[i][j] < 1:
                raise ParseError(line_no, f"duration {times[i][j]} must be >= 1")
            ops.append(Operation(machine - 1, times[i][j]))
        jobs.append(tuple(ops))
    return Instance(name, n, m, tuple(jobs))


def to_standard(instance: Instance) -> str:
    """Render an instance in the standard format; inverse of parse_standard."""
    out = [f"{instance.num_jobs} {instance.num_machines}"]
    for job in instance.jobs:
        out.append(" ".join(f"{op.machine} {op.duration}" for op in job))
    return "\n".join(out) + "\n"


def to_taillard(instance: Instance) -> str:
    """Render an instance in Taillard's format (machines written 1-based)."""
    out = [f"{instance.num_jobs} {instance.num_machines}"]
    for job in instance.jobs:
        out.append(" ".join(str(op.duration) for op in job))
    for job in instance.jobs:
        out.append(" ".join(str(op.machine + 1) for op in job))
    return "\n".join(out) + "\n"


def load_bks(text: str) -> BksTable:
    """Parse a CSV of "name,makespan" lines into a BksTable."""
    entries: dict[str, int] = {}
    for line_no, tokens in _data_lines(text):
        parts = " ".join(tokens).split(",")
        if len(parts) != 2:
            raise ParseError(line_no, f"expected 'name,makespan', got {parts!r}")
        name = parts[0].strip()
        try:
            makespan = int(parts[1])
        except ValueError:
            raise ParseError(line_no, f"invalid makespan {parts[1]!r}") from None
        if not name:
            raise ParseError(line_no, "empty instance name")
        if makespan < 1:
            raise ParseError(line_no, f"makespan {makespan} must be >= 1")
        if name in entries:
            raise ParseError(line_no, f"duplicate entry for {name!r}")
        entries[name] = makespan
    return BksTable(entries)


def load_instance_file(path: str, fmt: str, name: str | None = None) -> Instance:
    """Read an instance file in the given format ('standard' or 'taillard')."""
    import os

    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    if fmt == "standard":
        return parse_standard(text, name)
    if fmt == "taillard":
        return parse_taillard(text, name)
    raise ValueError(f"unknown instance format {fmt!r}")
