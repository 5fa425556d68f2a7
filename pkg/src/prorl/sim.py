"""Event-driven non-delay job-shop simulator.

The schedule is built one operation per decision. At a decision point the
candidate set holds every operation whose job predecessor has completed AND
whose machine is idle at the current clock, so a chosen operation always
starts immediately. After a dispatch, if no operation is startable at the
clock but work remains, the clock jumps to the earliest time at which some
operation becomes startable (the smallest max(job ready, machine free) over
pending next-operations). Episodes therefore make exactly one policy call
per operation and produce non-delay schedules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .concepts import ConceptVector, extract
from .instance import Instance


@dataclass
class SimState:
    """Mutable per-episode schedule state; owned by a single episode."""

    clock: int
    machine_free_at: list[int]
    job_next_op: list[int]
    job_ready_at: list[int]
    start_times: list[list[int | None]]
    scheduled_count: int


@dataclass(frozen=True)
class ReadyOp:
    """An operation startable at the current clock."""

    job: int
    op_index: int
    machine: int
    duration: int
    ready_at: int
    arrival: int  # completion time of the job predecessor; 0 for first ops


@dataclass(frozen=True)
class ScheduleResult:
    makespan: int
    start_times: tuple[tuple[int, ...], ...]
    decisions: tuple[tuple[ConceptVector, str], ...]


# A policy maps (concepts, ready set, state, instance) to the chosen ready
# operation plus a short action label recorded in the decision trace.
Policy = Callable[[ConceptVector, Sequence[ReadyOp], SimState, Instance], tuple[ReadyOp, str]]


def reset(instance: Instance) -> SimState:
    """Fresh state: clock 0, all machines free, every job at its first operation."""
    return SimState(
        clock=0,
        machine_free_at=[0] * instance.num_machines,
        job_next_op=[0] * instance.num_jobs,
        job_ready_at=[0] * instance.num_jobs,
        start_times=[[None] * len(job) for job in instance.jobs],
        scheduled_count=0,
    )


def ready_set(state: SimState, instance: Instance) -> list[ReadyOp]:
    """Operations startable now, ordered by job index for determinism."""
    if state.scheduled_count >= instance.total_operations:
        raise ValueError("all operations scheduled")
    ready = []
    for job in range(instance.num_jobs):
        k = state.job_next_op[job]
        if k >= len(instance.jobs[job]):
            continue
        op = instance.jobs[job][k]
        start = max(state.job_ready_at[job], state.machine_free_at[op.machine])
        if start <= state.clock:
            ready.append(
                ReadyOp(
                    job=job,
                    op_index=k,
                    machine=op.machine,
                    duration=op.duration,
                    ready_at=start,
                    arrival=state.job_ready_at[job],
                )
            )
    return ready


def _advance_clock(state: SimState, instance: Instance) -> None:
    """Jump to the earliest time at which some pending operation is startable."""
    next_time = None
    for job in range(instance.num_jobs):
        k = state.job_next_op[job]
        if k >= len(instance.jobs[job]):
            continue
        op = instance.jobs[job][k]
        t = max(state.job_ready_at[job], state.machine_free_at[op.machine])
        if next_time is None or t < next_time:
            next_time = t
    if next_time is not None and next_time > state.clock:
        state.clock = next_time


def step(state: SimState, instance: Instance, pick: ReadyOp) -> SimState:
    """Dispatch `pick` at the clock and advance to the next decision point."""
    k = state.job_next_op[pick.job]
    if k != pick.op_index or k >= len(instance.jobs[pick.job]):
        raise ValueError(f"pick J{pick.job}-op{pick.op_index} is not the job's next operation")
    op = instance.jobs[pick.job][k]
    if max(state.job_ready_at[pick.job], state.machine_free_at[op.machine]) > state.clock:
        raise ValueError(f"pick J{pick.job}-op{pick.op_index} is not startable at t={state.clock}")

    end = state.clock + op.duration
    state.start_times[pick.job][k] = state.clock
    state.machine_free_at[op.machine] = end
    state.job_ready_at[pick.job] = end
    state.job_next_op[pick.job] += 1
    state.scheduled_count += 1

    if state.scheduled_count < instance.total_operations and not ready_set(state, instance):
        _advance_clock(state, instance)
    return state


def run_episode(instance: Instance, policy: Policy) -> ScheduleResult:
    """Run one full episode; the episode return is -makespan (reward at the end)."""
    state = reset(instance)
    decisions = []
    for _ in range(instance.total_operations):
        ready = ready_set(state, instance)
        cv = extract(state, instance, ready)
        pick, label = policy(cv, ready, state, instance)
        decisions.append((cv, label))
        step(state, instance, pick)

    makespan = 0
    start_times = []
    for job, starts in zip(instance.jobs, state.start_times):
        row = []
        for op, start in zip(job, starts):
            row.append(start)
            makespan = max(makespan, start + op.duration)
        start_times.append(tuple(row))
    return ScheduleResult(makespan=makespan, start_times=tuple(start_times), decisions=tuple(decisions))


def verify_feasible(result: ScheduleResult, instance: Instance) -> bool:
    """Check job precedence, machine exclusivity, and the recorded makespan."""
    by_machine: dict[int, list[tuple[int, int]]] = {}
    makespan = 0
    for job_idx, (job, starts) in enumerate(zip(instance.jobs, result.start_times)):
        if len(starts) != len(job):
            return False
        prev_end = 0
        for op, start in zip(job, starts):
            if start is None or start < prev_end:
                return False
            end = start + op.duration
            prev_end = end
            makespan = max(makespan, end)
            by_machine.setdefault(op.machine, []).append((start, end))
    for intervals in by_machine.values():
        intervals.sort()
        for (_, end_a), (start_b, _) in zip(intervals, intervals[1:]):
            if start_b < end_a:
                return False
    return makespan == result.makespan


def schedule_csv(result: ScheduleResult, instance: Instance) -> str:
    """Schedule dump as CSV rows "job,op,machine,start,end" sorted by start."""
    rows = []
    for job_idx, (job, starts) in enumerate(zip(instance.jobs, result.start_times)):
        for op_idx, (op, start) in enumerate(zip(job, starts)):
            rows.append((start, job_idx, op_idx, op.machine, start + op.duration))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    lines = ["job,op,machine,start,end"]
    for start, job_idx, op_idx, machine, end in rows:
        lines.append(f"{job_idx},{op_idx},{machine},{start},{end}")
    return "\n".join(lines) + "\n"


def trace_csv(result: ScheduleResult) -> str:
    """Decision trace as CSV rows "t,ld,am,ao,jd,st,action"."""
    lines = ["t,ld,am,ao,jd,st,action"]
    for t, (cv, action) in enumerate(result.decisions):
        ld, am, ao, jd, st = cv.as_tuple()
        lines.append(f"{t},{ld:.6f},{am:.6f},{ao:.6f},{jd:.6f},{st:.6f},{action}")
    return "\n".join(lines) + "\n"
