"""State abstractions consumed by policy conditions.

Five normalized features summarize a partial schedule at a decision point:

  ld  machine load balance      (max - min) / max over per-machine remaining work
  am  available machine ratio   machines free at the clock / machine count
  ao  available operation ratio startable operations / unscheduled operations
  jd  job remaining-time balance (max - min) / max over per-job remaining work,
      jobs with nothing left excluded; 0 when at most one job remains
  st  shortest-op balance       (max - min) / max over unscheduled durations

Every feature lies in [0, 1]. Whenever a (max - min) / max ratio has max = 0
the feature is defined as 0 (nothing left in that dimension reads as
perfectly balanced).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from .instance import Instance
    from .sim import ReadyOp, SimState

CONCEPT_NAMES = ("LD", "AM", "AO", "JD", "ST")


@dataclass(frozen=True)
class ConceptVector:
    ld: float
    am: float
    ao: float
    jd: float
    st: float

    def __post_init__(self):
        for name, value in zip(CONCEPT_NAMES, self.as_tuple()):
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValueError(f"concept {name} = {value} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.ld, self.am, self.ao, self.jd, self.st)


def _spread(max_value: float, min_value: float) -> float:
    return (max_value - min_value) / max_value if max_value > 0 else 0.0


def extract(
    state: SimState,
    instance: Instance,
    ready: Sequence[ReadyOp] | None = None,
) -> ConceptVector:
    """Compute the concept vector for the pending decision.

    `ready` may pass in the already-computed startable set to avoid
    recomputing it; otherwise startable operations are counted directly
    from the state (same readiness predicate the simulator uses: job
    predecessor complete and machine free at the clock).
    """
    total = instance.total_operations
    unscheduled = total - state.scheduled_count
    if unscheduled <= 0:
        raise ValueError("all operations scheduled; no decision pending")

    m = instance.num_machines
    free = sum(1 for t in state.machine_free_at if t <= state.clock)
    am = free / m

    if ready is not None:
        ready_count = len(ready)
    else:
        ready_count = 0
        for job in range(instance.num_jobs):
            k = state.job_next_op[job]
            if k < len(instance.jobs[job]):
                op = instance.jobs[job][k]
                if max(state.job_ready_at[job], state.machine_free_at[op.machine]) <= state.clock:
                    ready_count += 1
    ao = ready_count / unscheduled

    machine_load = [0] * m
    job_work = []
    dur_min, dur_max = None, None
    for job in range(instance.num_jobs):
        ops = instance.jobs[job]
        k = state.job_next_op[job]
        if k >= len(ops):
            continue
        work = 0
        for op in ops[k:]:
            machine_load[op.machine] += op.duration
            work += op.duration
            if dur_max is None or op.duration > dur_max:
                dur_max = op.duration
            if dur_min is None or op.duration < dur_min:
                dur_min = op.duration
        job_work.append(work)

    ld = _spread(max(machine_load), min(machine_load))
    jd = _spread(max(job_work), min(job_work)) if len(job_work) > 1 else 0.0
    st = _spread(dur_max, dur_min)
    return ConceptVector(ld=ld, am=am, ao=ao, jd=jd, st=st)
