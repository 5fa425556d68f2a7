"""Shared fixtures: tiny instances, random-instance generation, brute-force oracles."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from prorl.instance import Instance, Operation, parse_standard

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
INSTANCE_DIR = DATA_DIR / "instances"

# J0 = (M0,3)(M1,2), J1 = (M1,2)(M0,4); every non-delay schedule reaches
# the M0-workload bound of 7 (asserted against the enumeration oracle).
TINY_2X2 = "2 2\n0 3 1 2\n1 2 0 4"


@pytest.fixture
def inst_2x2() -> Instance:
    return parse_standard(TINY_2X2, "tiny2x2")


@pytest.fixture
def inst_1x1() -> Instance:
    return parse_standard("1 1\n0 5", "tiny1x1")


@pytest.fixture
def ft06() -> Instance:
    from prorl.instance import load_instance_file

    return load_instance_file(str(INSTANCE_DIR / "ft06.txt"), "standard")


def random_instance(rng: random.Random, max_jobs: int = 4, max_machines: int = 4,
                    max_duration: int = 9, square: bool = False) -> Instance:
    """A small random instance; jobs visit distinct machines in random order."""
    n = rng.randint(1, max_jobs)
    m = rng.randint(1, max_machines)
    jobs = []
    for _ in range(n):
        machines = list(range(m))
        rng.shuffle(machines)
        if not square:
            machines = machines[: rng.randint(1, m)]
        jobs.append(tuple(Operation(mach, rng.randint(1, max_duration)) for mach in machines))
    return Instance(f"rand{n}x{m}", n, m, tuple(jobs))


def all_nondelay_makespans(instance: Instance) -> set[int]:
    """Enumerate every non-delay dispatch sequence; independent of the simulator.

    Exhaustive DFS over ready choices with the same readiness/advance rules,
    written against plain state tuples rather than the sim module.
    """
    total = instance.total_operations
    results: set[int] = set()

    def ready_ops(clock, mfree, jnext, jready):
        out = []
        for j in range(instance.num_jobs):
            k = jnext[j]
            if k < len(instance.jobs[j]):
                op = instance.jobs[j][k]
                if max(jready[j], mfree[op.machine]) <= clock:
                    out.append(j)
        return out

    def advance(clock, mfree, jnext, jready):
        best = None
        for j in range(instance.num_jobs):
            k = jnext[j]
            if k < len(instance.jobs[j]):
                op = instance.jobs[j][k]
                t = max(jready[j], mfree[op.machine])
                if best is None or t < best:
                    best = t
        return best

    def walk(clock, mfree, jnext, jready, done):
        if done == total:
            results.add(max(mfree))
            return
        choices = ready_ops(clock, mfree, jnext, jready)
        if not choices:
            walk(advance(clock, mfree, jnext, jready), mfree, jnext, jready, done)
            return
        for j in choices:
            k = jnext[j]
            op = instance.jobs[j][k]
            mfree2 = list(mfree)
            jnext2 = list(jnext)
            jready2 = list(jready)
            mfree2[op.machine] = clock + op.duration
            jready2[j] = clock + op.duration
            jnext2[j] += 1
            walk(clock, mfree2, jnext2, jready2, done + 1)

    walk(0, [0] * instance.num_machines, [0] * instance.num_jobs, [0] * instance.num_jobs, 0)
    return results
