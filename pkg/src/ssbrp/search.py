"""Multi-start driver: construct, reoptimize, keep the best.

Each iteration builds a fresh randomized solution (phase one) and replaces
its loading plans with exactly optimal ones (phase two). The loop stops
once a run of consecutive non-improving iterations reaches the configured
limit. Every iteration derives its RNG stream from (master seed, iteration
index), so iterations are independent of the incumbent and can be computed
in parallel while folding results in index order — parallel runs are
bit-identical to sequential ones.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .construction import ConstructionParams, construct_solution
from .loading import reoptimize_solution
from .model import Instance, ObjectiveBreakdown, ObjectiveWeights, Solution, check_instance

_TOLERANCE = 1e-12


@dataclass(frozen=True)
class RunConfig:
    max_iter: int = 500
    master_seed: int = 0
    weights: ObjectiveWeights = ObjectiveWeights()
    construction: ConstructionParams = ConstructionParams()
    parallelism: int = 1
    wall_clock_cap: float | None = None
    weighted_phase2: bool = False
    weighted_damaged_denominator: bool = False

    def __post_init__(self):
        if self.max_iter < 2:
            raise ValueError("max_iter must be at least 2")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if self.wall_clock_cap is not None and self.wall_clock_cap <= 0:
            raise ValueError("wall_clock_cap must be positive")


@dataclass(frozen=True)
class RunReport:
    best_solution: Solution
    best_objective: ObjectiveBreakdown
    iteration_of_best: int
    total_iterations: int
    elapsed_construction: float
    elapsed_loading: float
    elapsed_total: float
    incumbent_trace: tuple[tuple[int, float], ...]


def is_better(a: Solution, b: Solution | None, weights: ObjectiveWeights | None = None) -> bool:
    """Strict improvement on the objective total; a missing incumbent loses.

    Both solutions must have been evaluated under the same weights; the
    parameter documents that contract rather than re-evaluating anything.
    """
    if b is None:
        return True
    return a.objective.total < b.objective.total - _TOLERANCE


def _iteration(instance: Instance, config: RunConfig, index: int) -> tuple[Solution, float, float]:
    """One construct + reoptimize pass with its own seeded RNG stream."""
    rng = np.random.default_rng([config.master_seed, index])
    t0 = perf_counter()
    built = construct_solution(
        instance, config.construction, rng, config.weights,
        weighted_damaged_denominator=config.weighted_damaged_denominator,
    )
    t1 = perf_counter()
    improved = reoptimize_solution(
        instance, built, config.weights,
        weighted_phase2=config.weighted_phase2,
        weighted_damaged_denominator=config.weighted_damaged_denominator,
    )
    t2 = perf_counter()
    return improved, t1 - t0, t2 - t1


def run(instance: Instance, config: RunConfig = RunConfig()) -> RunReport:
    """Run the two-phase loop until max_iter consecutive iterations fail to improve.

    The non-improvement counter starts at 1, resets to 1 on improvement,
    and the loop stops when it reaches max_iter (or when the optional wall
    clock cap expires). Reports the best solution, where it was found, and
    per-phase elapsed time.
    """
    check_instance(instance)
    start = perf_counter()
    best: Solution | None = None
    best_iter = 0
    counter = 1
    iteration = 0
    t_construct = 0.0
    t_load = 0.0
    trace: list[tuple[int, float]] = []
    stop = False
    executor = ThreadPoolExecutor(config.parallelism) if config.parallelism > 1 else None
    block = 1 if executor is None else 4 * config.parallelism
    try:
        while not stop:
            indices = range(iteration + 1, iteration + 1 + block)
            if executor is None:
                results = [_iteration(instance, config, indices[0])]
            else:
                results = list(
                    executor.map(lambda i: _iteration(instance, config, i), indices)
                )
            for offset, (solution, tc, tl) in enumerate(results):
                iteration = indices[offset]
                t_construct += tc
                t_load += tl
                if is_better(solution, best, config.weights):
                    best = solution
                    best_iter = iteration
                    counter = 1
                    trace.append((iteration, solution.objective.total))
                else:
                    counter += 1
                if counter >= config.max_iter:
                    stop = True
                    break
                if config.wall_clock_cap is not None and perf_counter() - start >= config.wall_clock_cap:
                    stop = True
                    break
    finally:
        if executor is not None:
            executor.shutdown(wait=False)
    assert best is not None
    return RunReport(
        best_solution=best,
        best_objective=best.objective,
        iteration_of_best=best_iter,
        total_iterations=iteration,
        elapsed_construction=t_construct,
        elapsed_loading=t_load,
        elapsed_total=perf_counter() - start,
        incumbent_trace=tuple(trace),
    )
