"""The five priority dispatching rules forming the policy action set.

Rule keys over a ready operation (ties broken by lowest job index, then
lowest operation index, everywhere):

  FIFO  earliest arrival (completion of the job predecessor, 0 for first ops)
  SPT   smallest duration of the candidate operation
  MOR   most remaining operations of the job, the candidate included
  MWR   most remaining processing time of the job, the candidate included
  LOR   fewest remaining operations of the job, the candidate included
"""

from __future__ import annotations

import enum
import random
from typing import Sequence

from .concepts import ConceptVector
from .instance import Instance
from .sim import Policy, ReadyOp, ScheduleResult, SimState, run_episode


class Heuristic(enum.Enum):
    FIFO = "FIFO"
    SPT = "SPT"
    MOR = "MOR"
    MWR = "MWR"
    LOR = "LOR"

    @classmethod
    def parse(cls, text: str) -> "Heuristic":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown dispatching rule {text!r}") from None

    def __str__(self) -> str:
        return self.value


HEURISTICS = tuple(Heuristic)


def _remaining_ops(ready: ReadyOp, instance: Instance) -> int:
    return len(instance.jobs[ready.job]) - ready.op_index


def _remaining_work(ready: ReadyOp, instance: Instance) -> int:
    job = instance.jobs[ready.job]
    return sum(op.duration for op in job[ready.op_index:])


def apply(rule: Heuristic, ready: Sequence[ReadyOp], state: SimState, instance: Instance) -> ReadyOp:
    """Return the best candidate under the rule's key."""
    if not ready:
        raise ValueError("empty ready set")

    def key(cand: ReadyOp):
        if rule is Heuristic.FIFO:
            primary = cand.arrival
        elif rule is Heuristic.SPT:
            primary = cand.duration
        elif rule is Heuristic.MOR:
            primary = -_remaining_ops(cand, instance)
        elif rule is Heuristic.MWR:
            primary = -_remaining_work(cand, instance)
        else:  # LOR
            primary = _remaining_ops(cand, instance)
        return (primary, cand.job, cand.op_index)

    return min(ready, key=key)


def rule_policy(rule: Heuristic) -> Policy:
    """A policy that applies one fixed rule at every decision."""

    def policy(cv: ConceptVector, ready, state, instance):
        return apply(rule, ready, state, instance), rule.value

    return policy


def random_rule_policy(rng: random.Random) -> Policy:
    """A policy drawing a uniform rule independently at every decision."""

    def policy(cv: ConceptVector, ready, state, instance):
        rule = rng.choice(HEURISTICS)
        return apply(rule, ready, state, instance), rule.value

    return policy


def run_pdr(instance: Instance, rule: Heuristic) -> ScheduleResult:
    """One episode under a constant dispatching rule."""
    return run_episode(instance, rule_policy(rule))
