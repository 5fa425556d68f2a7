"""Outer loop: (1 + lambda) local search over program architectures.

Each generation mutates the incumbent into a neighborhood of candidates,
tunes every candidate's condition weights with the Bayesian inner loop,
and keeps the best of {optimized candidates} united with {incumbent}. The
incumbent's recorded return therefore never decreases. Training stops when
the episode budget is exhausted; a budget of zero returns the random
initial program untrained.

Reproducibility: the neighborhood and every candidate's inner loop draw
from random sources seeded deterministically from (seed, generation,
candidate index), and each candidate's episode allowance is reserved from
the shared meter up front in candidate order, so results do not depend on
worker scheduling.
"""

from __future__ import annotations

import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .bo import BoConfig, EpisodeMeter, optimize_params
from .dsl import (
    MAX_DEPTH,
    MAX_TOKENS,
    WEIGHTS_LEN,
    Program,
    if_count,
    make_policy,
    mutate,
    random_program,
    token_count,
)
from .instance import Instance
from .sim import run_episode

_EXTRA_MUTATIONS_CAP = 5


@dataclass
class SearchConfig:
    episode_budget: int
    lam: int = 10  # neighborhood (population) size
    mutation_rate: float = 0.1
    max_depth: int = MAX_DEPTH
    max_tokens: int = MAX_TOKENS
    seed: int = 0
    workers: int = 1
    bo: BoConfig = field(default_factory=BoConfig)

    def __post_init__(self):
        if self.episode_budget < 0:
            raise ValueError("episode_budget must be >= 0")
        if self.lam < 1:
            raise ValueError("lam must be >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    episodes_used: int  # cumulative after this generation
    best_return: float
    incumbent_tokens: int
    incumbent_depth: int
    candidate_dims: tuple[int, ...]
    candidate_charges: tuple[int, ...]


@dataclass
class SearchState:
    generation: int
    incumbent: Program
    incumbent_return: float | None
    episodes_used: int
    history: list[GenerationRecord] = field(default_factory=list)


def default_workers() -> int:
    """Worker count from PRORL_WORKERS, else the machine's parallelism."""
    env = os.environ.get("PRORL_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"PRORL_WORKERS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _derived_rng(seed: int, *scope) -> random.Random:
    return random.Random(":".join(str(part) for part in (seed,) + scope))


def make_neighborhood(
    incumbent: Program,
    lam: int,
    mutation_rate: float,
    rng: random.Random,
    max_depth: int = MAX_DEPTH,
    max_tokens: int = MAX_TOKENS,
) -> list[Program]:
    """lambda mutants of the incumbent; each chains extra mutations with
    probability `mutation_rate` (geometric, capped)."""
    neighborhood = []
    for _ in range(lam):
        candidate = mutate(incumbent, rng, max_depth, max_tokens)
        extra = 0
        while extra < _EXTRA_MUTATIONS_CAP and rng.random() < mutation_rate:
            candidate = mutate(candidate, rng, max_depth, max_tokens)
            extra += 1
        neighborhood.append(candidate)
    return neighborhood


def train(instance: Instance, config: SearchConfig) -> tuple[Program, SearchState]:
    """Run the full bilevel search on one instance."""
    init_rng = _derived_rng(config.seed, "init")
    incumbent = random_program(init_rng, config.max_depth, config.max_tokens)
    state = SearchState(generation=0, incumbent=incumbent, incumbent_return=None, episodes_used=0)
    if config.episode_budget == 0:
        return incumbent, state

    meter = EpisodeMeter(config.episode_budget)
    per_candidate = config.bo.init_points + config.bo.iterations

    while meter.remaining > 0:
        gen = state.generation + 1
        neighborhood = make_neighborhood(
            incumbent,
            config.lam,
            config.mutation_rate,
            _derived_rng(config.seed, "gen", gen, "mut"),
            config.max_depth,
            config.max_tokens,
        )

        # Reserve each candidate's episode allowance up front, in candidate
        # order; a candidate with no allowance left is skipped entirely.
        jobs = []
        dims, charges = [], []
        for idx, candidate in enumerate(neighborhood):
            dim = WEIGHTS_LEN * if_count(candidate)
            want = 1 if dim == 0 else per_candidate
            granted = meter.reserve(want)
            dims.append(dim)
            charges.append(granted)
            if granted > 0:
                jobs.append((idx, candidate, EpisodeMeter(granted)))

        def run_candidate(job):
            idx, candidate, sub_meter = job
            cand_rng = _derived_rng(config.seed, "gen", gen, "cand", idx)
            return idx, optimize_params(candidate, instance, sub_meter, cand_rng, config.bo)

        if config.workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(run_candidate, jobs))
        else:
            results = [run_candidate(job) for job in jobs]

        # Selection over optimized candidates plus the incumbent; ties keep
        # the incumbent, then the earlier candidate.
        best_program = incumbent
        best_return = state.incumbent_return
        for _, (program, value) in sorted(results, key=lambda r: r[0]):
            if best_return is None or value > best_return:
                best_program, best_return = program, value

        incumbent = best_program
        state.incumbent = best_program
        state.incumbent_return = best_return
        state.generation = gen
        state.episodes_used = meter.used
        state.history.append(
            GenerationRecord(
                generation=gen,
                episodes_used=meter.used,
                best_return=best_return if best_return is not None else float("-inf"),
                incumbent_tokens=token_count(incumbent),
                incumbent_depth=incumbent.depth,
                candidate_dims=tuple(dims),
                candidate_charges=tuple(charges),
            )
        )
    return incumbent, state


def evaluate_policy(
    program: Program, instance: Instance, bks: int | None = None
) -> tuple[int, float | None]:
    """One deterministic episode; gap = (makespan - bks) / bks when bks given."""
    makespan = run_episode(instance, make_policy(program)).makespan
    gap = (makespan - bks) / bks if bks is not None else None
    return makespan, gap


def training_log_csv(state: SearchState) -> str:
    """Per-generation log: gen,episodes_used,best_return,incumbent_tokens,incumbent_depth."""
    lines = ["gen,episodes_used,best_return,incumbent_tokens,incumbent_depth"]
    for rec in state.history:
        lines.append(
            f"{rec.generation},{rec.episodes_used},{rec.best_return},"
            f"{rec.incumbent_tokens},{rec.incumbent_depth}"
        )
    return "\n".join(lines) + "\n"
