"""Randomized greedy route construction (phase one).

Routes are built sequentially, one vehicle after the other, against a shared
build state that tracks residual station imbalances, residual damaged bikes,
and the unclaimed depot stock. Successor choice is greedy-randomized: every
candidate gets a ratio (moved bikes vs. detour time), a fresh threshold
epsilon keeps only candidates close to the best ratio, and the winner is
drawn uniformly among them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    DEPOT,
    Instance,
    LoadingPlan,
    ObjectiveWeights,
    Route,
    Solution,
    Station,
    Vehicle,
    solution_from_plans,
)


@dataclass(frozen=True)
class ConstructionParams:
    """Tuning knobs: theta dampens the moved-bikes count, mu scales depot pull."""

    theta: float = 0.5
    mu: float = 1.5

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")
        if self.mu <= 0:
            raise ValueError("mu must be positive")


@dataclass
class BuildState:
    """Mutable construction state shared across the fleet.

    Residuals and the remaining depot stock persist between routes; the
    onboard/elapsed fields describe the vehicle currently being routed and
    are reset by start_vehicle.
    """

    residual_imbalance: dict[int, int]
    residual_damaged: dict[int, int]
    depot_remaining: int
    onboard_operative: int = 0
    onboard_damaged: int = 0
    elapsed: float = 0.0
    min_free_lockers: int = 0
    last_depot_index: int = 0

    @classmethod
    def fresh(cls, instance: Instance) -> BuildState:
        return cls(
            residual_imbalance={s.id: s.imbalance for s in instance.stations},
            residual_damaged={s.id: s.damaged for s in instance.stations},
            depot_remaining=instance.depot.operative,
        )

    def start_vehicle(self, vehicle: Vehicle) -> None:
        self.onboard_operative = 0
        self.onboard_damaged = 0
        self.elapsed = 0.0
        self.min_free_lockers = vehicle.capacity
        self.last_depot_index = 0


def max_movable(state: BuildState, station: Station, vehicle: Vehicle) -> tuple[int, int]:
    """Largest (operative, damaged) move the vehicle could perform at a station.

    Surplus and balanced stations are served from free vehicle capacity.
    Deficit stations may draw on bikes already onboard plus a retroactive
    depot pickup bounded by the unclaimed stock and by the lockers that were
    free along the whole segment since the last depot visit.
    """
    k = vehicle.capacity
    free = k - state.onboard_operative - state.onboard_damaged
    d = state.residual_imbalance[station.id]
    avail_damaged = state.residual_damaged[station.id]
    if d < 0:
        beta = min(state.onboard_operative + min(state.depot_remaining, state.min_free_lockers), -d)
        # free space after the delivery, never beyond the lockers damaged bikes leave open
        alpha = min(free + beta, k - state.onboard_damaged, avail_damaged)
    else:
        beta = max(0, min(free, d))
        alpha = min(free - beta, avail_damaged)
    return beta, alpha


def feasible_successors(
    instance: Instance, state: BuildState, u: int, vehicle: Vehicle
) -> dict[int, tuple[int, int]]:
    """Candidate next visits from u, mapped to their (beta, alpha) moves.

    A station qualifies if it still has residual work, the route can visit it
    and return to the depot in time, and the vehicle can actually move at
    least one bike there. The depot qualifies only to unload damaged bikes.
    """
    travel = instance.travel
    budget = instance.time_budget
    out: dict[int, tuple[int, int]] = {}
    for s in instance.stations:
        v = s.id
        if v == u:
            continue
        if state.residual_imbalance[v] == 0 and state.residual_damaged[v] <= 0:
            continue
        if state.elapsed + travel.time(u, v) + travel.time(v, DEPOT) > budget:
            continue
        beta, alpha = max_movable(state, s, vehicle)
        if beta + alpha > 0:
            out[v] = (beta, alpha)
    if u != DEPOT and state.onboard_damaged > 0 and state.elapsed + travel.time(u, DEPOT) <= budget:
        out[DEPOT] = (0, 0)
    return out


def candidate_ratio(
    instance: Instance,
    state: BuildState,
    params: ConstructionParams,
    u: int,
    v: int,
    beta: int,
    alpha: int,
) -> float:
    """Attractiveness of moving from u to v; zero travel time dominates all."""
    t = instance.travel.time(u, v)
    if v == DEPOT:
        return math.inf if t == 0 else params.mu * state.onboard_damaged / t
    if t == 0:
        return math.inf
    return (beta + alpha) ** params.theta / t * instance.station(v).weight


def select_next(
    ratios: dict[int, float], rng: np.random.Generator, epsilon: float | None = None
) -> int:
    """Uniform draw among candidates whose ratio reaches epsilon * max ratio."""
    if not ratios:
        raise ValueError("no candidates to select from")
    if epsilon is None:
        epsilon = float(rng.uniform())
    rho_max = max(ratios.values())
    if math.isinf(rho_max):
        eligible = [v for v, r in ratios.items() if math.isinf(r)]
    else:
        eligible = [v for v, r in ratios.items() if r >= epsilon * rho_max]
    return eligible[int(rng.integers(len(eligible)))]


def apply_visit(
    instance: Instance,
    state: BuildState,
    vehicle: Vehicle,
    visits: list[int],
    moves: list[tuple[int, int]],
    v_star: int,
    beta: int,
    alpha: int,
) -> None:
    """Commit one visit: extend route and plan, update loads and residuals."""
    k = vehicle.capacity
    state.elapsed += instance.travel.time(visits[-1], v_star)
    if v_star == DEPOT:
        visits.append(DEPOT)
        moves.append((0, -state.onboard_damaged))
        state.onboard_damaged = 0
        state.last_depot_index = len(visits) - 1
        state.min_free_lockers = k - state.onboard_operative
        return
    if state.residual_imbalance[v_star] < 0:
        retro = max(0, beta - state.onboard_operative)
        if retro:
            # claim the extra bikes at the most recent depot visit
            dx, dy = moves[state.last_depot_index]
            moves[state.last_depot_index] = (dx + retro, dy)
            state.depot_remaining -= retro
            state.min_free_lockers -= retro
            state.onboard_operative += retro
        state.onboard_operative -= beta
        state.residual_imbalance[v_star] += beta
        delta_op = -beta
    else:
        state.onboard_operative += beta
        state.residual_imbalance[v_star] -= beta
        delta_op = beta
    state.onboard_damaged += alpha
    state.residual_damaged[v_star] -= alpha
    visits.append(v_star)
    moves.append((delta_op, alpha))
    state.min_free_lockers = min(
        state.min_free_lockers, k - state.onboard_operative - state.onboard_damaged
    )
    assert 0 <= state.onboard_operative + state.onboard_damaged <= k
    assert state.depot_remaining >= 0 and state.min_free_lockers >= 0


def build_route(
    instance: Instance,
    state: BuildState,
    vehicle: Vehicle,
    params: ConstructionParams,
    rng: np.random.Generator,
) -> tuple[Route, LoadingPlan]:
    """Grow one route from the depot until no candidate remains, then close it."""
    state.start_vehicle(vehicle)
    visits: list[int] = [DEPOT]
    moves: list[tuple[int, int]] = [(0, 0)]
    while True:
        candidates = feasible_successors(instance, state, visits[-1], vehicle)
        if not candidates:
            break
        ratios = {
            v: candidate_ratio(instance, state, params, visits[-1], v, beta, alpha)
            for v, (beta, alpha) in candidates.items()
        }
        v_star = select_next(ratios, rng)
        beta, alpha = candidates[v_star]
        apply_visit(instance, state, vehicle, visits, moves, v_star, beta, alpha)
    if len(visits) == 1:
        # never left the depot: an unused vehicle
        return Route(vehicle.id), LoadingPlan(vehicle.id)
    if visits[-1] == DEPOT:
        dx, dy = moves[-1]
        moves[-1] = (dx - state.onboard_operative, dy - state.onboard_damaged)
    else:
        state.elapsed += instance.travel.time(visits[-1], DEPOT)
        visits.append(DEPOT)
        moves.append((-state.onboard_operative, -state.onboard_damaged))
    state.onboard_operative = 0
    state.onboard_damaged = 0
    return Route(vehicle.id, tuple(visits)), LoadingPlan(vehicle.id, tuple(moves))


def construct_solution(
    instance: Instance,
    params: ConstructionParams,
    rng: np.random.Generator,
    weights: ObjectiveWeights = ObjectiveWeights(),
    *,
    weighted_damaged_denominator: bool = False,
) -> Solution:
    """Build one feasible solution: a route and provisional plan per vehicle."""
    state = BuildState.fresh(instance)
    routes = []
    plans = []
    for vehicle in instance.fleet:
        route, plan = build_route(instance, state, vehicle, params, rng)
        routes.append(route)
        plans.append(plan)
    return solution_from_plans(
        instance, routes, plans, weights,
        weighted_damaged_denominator=weighted_damaged_denominator,
    )
