"""Exact per-visit loading optimization over fixed routes (phase two).

Given the routes, the loading decisions form a small integer program: one
signed operative move x and damaged move y per visit, plus one depot
allotment w0 per vehicle. The objective counts the residual station
imbalance and the damaged bikes left uncollected. The program is solved
exactly by depth-first branch-and-bound with LP-relaxation bounds; an
independent brute-force enumerator over the same constraint semantics
serves as a verification oracle for small cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .model import (
    DEPOT,
    Instance,
    LoadingPlan,
    ObjectiveWeights,
    Route,
    Solution,
    StationClass,
    classify_station,
    solution_from_plans,
)

_INT_TOL = 1e-6
_NODE_LIMIT = 500_000


@dataclass(frozen=True)
class RouteSkeleton:
    """A fixed visit sequence plus, per node, the 1-based indices visiting it."""

    vehicle_id: int
    visits: tuple[int, ...]

    def __post_init__(self):
        if self.visits and (self.visits[0] != DEPOT or self.visits[-1] != DEPOT):
            raise ValueError(f"vehicle {self.vehicle_id}: route must start and end at the depot")

    @classmethod
    def from_route(cls, route: Route) -> RouteSkeleton:
        return cls(route.vehicle_id, route.visits)

    def visit_indices(self, node: int) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.visits, start=1) if v == node)


@dataclass(frozen=True)
class ModelVariable:
    name: str
    kind: str  # "x", "y", or "w0"
    vehicle_id: int
    visit: int  # 1-based visit index; 0 for w0
    node: int  # DEPOT or station id; -1 for w0
    lower: float
    upper: float


@dataclass(frozen=True)
class LoadingVariables:
    """An integral assignment: per-vehicle depot allotments and per-visit moves."""

    depot_allotment: dict[int, int]
    moves: dict[int, tuple[tuple[int, int], ...]]
    objective_value: float
    proven_optimal: bool


class LoadingModel:
    """The loading integer program in matrix form.

    Variables fixed to zero by their domain (operative moves at balanced
    stations, damaged moves where no damaged bikes exist) are not
    materialized. All materialized variables are integer.
    """

    def __init__(
        self,
        instance: Instance,
        skeletons: tuple[RouteSkeleton, ...],
        variables: list[ModelVariable],
        c: np.ndarray,
        constant: float,
        a_ub: np.ndarray,
        b_ub: np.ndarray,
        a_eq: np.ndarray,
        b_eq: np.ndarray,
    ):
        self.instance = instance
        self.skeletons = skeletons
        self.variables = variables
        self.c = c
        self.constant = constant
        self.a_ub = a_ub
        self.b_ub = b_ub
        self.a_eq = a_eq
        self.b_eq = b_eq
        self.branch_order = [i for i, v in enumerate(variables) if v.kind != "w0"]
        coefs = list(c) + [constant]
        self.objective_integral = all(float(v).is_integer() for v in coefs)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def bounds(self) -> list[tuple[float, float]]:
        return [(v.lower, v.upper) for v in self.variables]

    def dump(self) -> str:
        """Algebraic text form: `min <expr>`, `s.t.`, constraints, `bounds`."""
        lines = ["min " + self._expr(self.c, self.constant), "s.t."]
        for row, rhs in zip(self.a_ub, self.b_ub):
            lines.append(f"{self._expr(row)} <= {rhs:g}")
        for row, rhs in zip(self.a_eq, self.b_eq):
            lines.append(f"{self._expr(row)} = {rhs:g}")
        lines.append("bounds")
        for v in self.variables:
            lines.append(f"{v.lower:g} <= {v.name} <= {v.upper:g}")
        return "\n".join(lines) + "\n"

    def _expr(self, coefs: np.ndarray, constant: float = 0.0) -> str:
        parts: list[str] = []
        if constant != 0 or not np.any(coefs):
            parts.append(f"{constant:g}")
        for coef, var in zip(coefs, self.variables):
            if coef == 0:
                continue
            mag = abs(float(coef))
            term = var.name if mag == 1 else f"{mag:g} {var.name}"
            if not parts:
                parts.append(term if coef > 0 else f"- {term}")
            else:
                parts.append(f"+ {term}" if coef > 0 else f"- {term}")
        return " ".join(parts)


def build_model(
    instance: Instance,
    skeletons: tuple[RouteSkeleton, ...] | list[RouteSkeleton],
    *,
    weighted: bool = False,
) -> LoadingModel:
    """Instantiate the loading program for fixed routes.

    The optional weighted flag multiplies each station's residual in the
    objective by its weight (sensitivity variant; the default counts bikes).
    """
    skeletons = tuple(skeletons)
    fleet = {v.id: v for v in instance.fleet}
    for sk in skeletons:
        if sk.vehicle_id not in fleet:
            raise ValueError(f"vehicle {sk.vehicle_id}: not in fleet")
        for node in sk.visits:
            if node != DEPOT and not instance.is_station(node):
                raise ValueError(f"vehicle {sk.vehicle_id}: unknown node {node}")

    variables: list[ModelVariable] = []
    x_idx: dict[tuple[int, int], int] = {}  # (vehicle_id, visit) -> column
    y_idx: dict[tuple[int, int], int] = {}
    w0_idx: dict[int, int] = {}
    p_o = instance.depot.operative

    for sk in skeletons:
        if not sk.visits:
            continue
        k = fleet[sk.vehicle_id].capacity
        for i, node in enumerate(sk.visits, start=1):
            if node == DEPOT:
                x_idx[sk.vehicle_id, i] = len(variables)
                variables.append(
                    ModelVariable(f"x[{sk.vehicle_id},{i}]", "x", sk.vehicle_id, i, node, -k, k)
                )
                y_idx[sk.vehicle_id, i] = len(variables)
                variables.append(
                    ModelVariable(f"y[{sk.vehicle_id},{i}]", "y", sk.vehicle_id, i, node, -k, 0)
                )
                continue
            s = instance.station(node)
            cls = classify_station(s)
            if cls is StationClass.SURPLUS:
                lo, hi = 0, min(k, s.imbalance)
            elif cls is StationClass.DEFICIT:
                lo, hi = max(-k, s.imbalance), 0
            else:
                lo = hi = None  # balanced: x fixed to zero, not materialized
            if lo is not None:
                x_idx[sk.vehicle_id, i] = len(variables)
                variables.append(
                    ModelVariable(f"x[{sk.vehicle_id},{i}]", "x", sk.vehicle_id, i, node, lo, hi)
                )
            if s.damaged > 0:
                y_idx[sk.vehicle_id, i] = len(variables)
                variables.append(
                    ModelVariable(
                        f"y[{sk.vehicle_id},{i}]", "y", sk.vehicle_id, i, node, 0, min(k, s.damaged)
                    )
                )
        w0_idx[sk.vehicle_id] = len(variables)
        variables.append(
            ModelVariable(f"w0[{sk.vehicle_id}]", "w0", sk.vehicle_id, 0, -1, 0, p_o)
        )

    n = len(variables)
    rows_ub: list[np.ndarray] = []
    rhs_ub: list[float] = []
    rows_eq: list[np.ndarray] = []
    rhs_eq: list[float] = []

    def new_row() -> np.ndarray:
        return np.zeros(n)

    for sk in skeletons:
        if not sk.visits:
            continue
        lid = sk.vehicle_id
        k = fleet[lid].capacity
        nv = len(sk.visits)
        # running load: nonnegative by component, within capacity, on every proper prefix
        for j in range(1, nv):
            cap = new_row()
            op_row = new_row()
            dam_row = new_row()
            for i in range(1, j + 1):
                if (lid, i) in x_idx:
                    cap[x_idx[lid, i]] = 1
                    op_row[x_idx[lid, i]] = -1
                if (lid, i) in y_idx:
                    cap[y_idx[lid, i]] = 1
                    dam_row[y_idx[lid, i]] = -1
            rows_ub.append(cap)
            rhs_ub.append(k)
            rows_ub.append(op_row)
            rhs_ub.append(0)
            rows_ub.append(dam_row)
            rhs_ub.append(0)
        # everything on board is dropped by the end of the route
        total_x = new_row()
        for i in range(1, nv + 1):
            if (lid, i) in x_idx:
                total_x[x_idx[lid, i]] = 1
        rows_eq.append(total_x)
        rhs_eq.append(0)
        depot_visits = sk.visit_indices(DEPOT)
        for j in depot_visits:
            # all damaged bikes on board are unloaded at each depot stop
            row = new_row()
            for i in range(1, j + 1):
                if (lid, i) in y_idx:
                    row[y_idx[lid, i]] = 1
            rows_eq.append(row)
            rhs_eq.append(0)
            # cumulative depot takes never exceed the vehicle's allotment
            row = new_row()
            row[x_idx[lid, j]] = 1
            for i in depot_visits:
                if i < j:
                    row[x_idx[lid, i]] += 1
            row[w0_idx[lid]] = -1
            rows_ub.append(row)
            rhs_ub.append(0)

    if w0_idx:
        row = new_row()
        for col in w0_idx.values():
            row[col] = 1
        rows_ub.append(row)
        rhs_ub.append(p_o)

    # per-station totals across all vehicles
    c = np.zeros(n)
    constant = 0.0
    visit_cols: dict[int, tuple[list[int], list[int]]] = {}
    for sk in skeletons:
        for i, node in enumerate(sk.visits, start=1):
            if node == DEPOT:
                continue
            xs, ys = visit_cols.setdefault(node, ([], []))
            if (sk.vehicle_id, i) in x_idx:
                xs.append(x_idx[sk.vehicle_id, i])
            if (sk.vehicle_id, i) in y_idx:
                ys.append(y_idx[sk.vehicle_id, i])

    for s in instance.stations:
        weight = s.weight if weighted else 1.0
        xs, ys = visit_cols.get(s.id, ([], []))
        d = s.imbalance
        if d > 0:
            constant += weight * d
            for col in xs:
                c[col] -= weight
            if xs:  # total pickups never exceed the surplus
                row = new_row()
                row[xs] = 1
                rows_ub.append(row)
                rhs_ub.append(d)
        elif d < 0:
            constant -= weight * d
            for col in xs:
                c[col] += weight
            if xs:  # total deliveries never exceed the deficit
                row = new_row()
                row[xs] = -1
                rows_ub.append(row)
                rhs_ub.append(-d)
        if s.damaged > 0:
            constant += weight * s.damaged
            for col in ys:
                c[col] -= weight
            if ys:
                row = new_row()
                row[ys] = 1
                rows_ub.append(row)
                rhs_ub.append(s.damaged)
        if d < 0 and xs:
            # deliveries may not leave the station holding more than its docks:
            # p - sum(x) + a - sum(y) <= c  (binding only where bikes arrive)
            row = new_row()
            row[xs] = -1
            row[ys] = -1
            rows_ub.append(row)
            rhs_ub.append(s.capacity - s.operative - s.damaged)

    a_ub = np.array(rows_ub) if rows_ub else np.zeros((0, n))
    b_ub = np.array(rhs_ub) if rhs_ub else np.zeros(0)
    a_eq = np.array(rows_eq) if rows_eq else np.zeros((0, n))
    b_eq = np.array(rhs_eq) if rhs_eq else np.zeros(0)
    return LoadingModel(instance, skeletons, variables, c, constant, a_ub, b_ub, a_eq, b_eq)


def _assignment_to_result(
    model: LoadingModel, values: np.ndarray | None, objective: float, proven: bool
) -> LoadingVariables:
    allot: dict[int, int] = {}
    moves: dict[int, tuple[tuple[int, int], ...]] = {}
    lookup: dict[tuple[str, int, int], int] = {}
    if values is not None:
        for col, var in enumerate(model.variables):
            if var.kind == "w0":
                allot[var.vehicle_id] = int(round(values[col]))
            else:
                lookup[var.kind, var.vehicle_id, var.visit] = int(round(values[col]))
    for sk in model.skeletons:
        allot.setdefault(sk.vehicle_id, 0)
        moves[sk.vehicle_id] = tuple(
            (
                lookup.get(("x", sk.vehicle_id, i), 0),
                lookup.get(("y", sk.vehicle_id, i), 0),
            )
            for i in range(1, len(sk.visits) + 1)
        )
    return LoadingVariables(allot, moves, objective, proven)


def _derive_allotments(model: LoadingModel, values: np.ndarray) -> None:
    """Set each w0 to the smallest value covering its cumulative depot takes."""
    for sk in model.skeletons:
        if not sk.visits:
            continue
        col = next(
            i for i, v in enumerate(model.variables)
            if v.kind == "w0" and v.vehicle_id == sk.vehicle_id
        )
        running = 0.0
        peak = 0.0
        for i, node in enumerate(sk.visits, start=1):
            if node == DEPOT:
                running += values[_x_col(model, sk.vehicle_id, i)]
                peak = max(peak, running)
        values[col] = max(0.0, round(peak))


def _x_col(model: LoadingModel, vehicle_id: int, visit: int) -> int:
    for i, v in enumerate(model.variables):
        if v.kind == "x" and v.vehicle_id == vehicle_id and v.visit == visit:
            return i
    raise KeyError((vehicle_id, visit))


def _minimal_depot_takes(model: LoadingModel, values: np.ndarray) -> np.ndarray | None:
    """Rewrite depot operative moves to draw the least stock, station moves fixed.

    Among assignments that tie on the objective, prefer the one without
    shuttle artifacts (take-then-return): each intermediate depot visit takes
    only what upcoming deliveries still need, the final visit drops the rest.
    Returns None when vehicle capacity blocks the rewrite.
    """
    out = values.copy()
    cols: dict[tuple[int, int], int] = {}
    w0_cols: dict[int, int] = {}
    for i, v in enumerate(model.variables):
        if v.kind == "x":
            cols[v.vehicle_id, v.visit] = i
        elif v.kind == "w0":
            w0_cols[v.vehicle_id] = i
    for sk in model.skeletons:
        if not sk.visits:
            continue
        lid = sk.vehicle_id
        flow = []  # operative bikes gained from stations alone, after each visit
        c = 0.0
        for i, node in enumerate(sk.visits, start=1):
            if node != DEPOT and (lid, i) in cols:
                c += out[cols[lid, i]]
            flow.append(c)
        depots = [i for i, node in enumerate(sk.visits, start=1) if node == DEPOT]
        cum = 0.0
        for pos, j in enumerate(depots):
            if j == len(sk.visits):
                out[cols[lid, j]] = -(flow[-1] + cum)
                break
            end = depots[pos + 1]
            needed = -min(flow[i - 1] for i in range(j, end))
            take = max(cum, needed) - cum
            out[cols[lid, j]] = take
            cum += take
        out[w0_cols[lid]] = max(0.0, cum)
    for var, x in zip(model.variables, out):
        if x < var.lower - 1e-9 or x > var.upper + 1e-9:
            return None
    try:
        _check_assignment(model, out)
    except RuntimeError:
        return None
    return out


def solve_exact(model: LoadingModel) -> LoadingVariables:
    """Minimize the loading program exactly by LP-based branch-and-bound.

    Deterministic: branching follows (vehicle, visit, x before y) order,
    explores the larger-magnitude value first, and ties between equal
    incumbents keep the first one found. Depot allotments are never branched
    on; they are derived from the integral depot takes afterwards, and the
    winning assignment's depot moves are normalized to draw minimal stock.
    """
    if model.n_vars == 0:
        return _assignment_to_result(model, None, model.constant, True)

    # precompute column maps once; bounds vary per node
    x_cols: dict[tuple[int, int], int] = {}
    for i, v in enumerate(model.variables):
        if v.kind == "x":
            x_cols[v.vehicle_id, v.visit] = i

    def relax(bounds: list[tuple[float, float]]):
        return linprog(
            model.c,
            A_ub=model.a_ub if len(model.a_ub) else None,
            b_ub=model.b_ub if len(model.b_ub) else None,
            A_eq=model.a_eq if len(model.a_eq) else None,
            b_eq=model.b_eq if len(model.b_eq) else None,
            bounds=bounds,
            method="highs",
        )

    best_val = math.inf
    best_values: np.ndarray | None = None
    stack: list[list[tuple[float, float]]] = [model.bounds()]
    nodes = 0
    while stack:
        nodes += 1
        if nodes > _NODE_LIMIT:
            raise RuntimeError("branch-and-bound node limit exceeded")
        bounds = stack.pop()
        res = relax(bounds)
        if res.status != 0:
            continue  # infeasible subproblem
        lower = res.fun + model.constant
        if model.objective_integral:
            lower = math.ceil(lower - _INT_TOL)
        if lower >= best_val - 1e-9:
            continue
        values = res.x
        frac_col = None
        for col in model.branch_order:
            if abs(values[col] - round(values[col])) > _INT_TOL:
                frac_col = col
                break
        if frac_col is None:
            rounded = np.round(values)
            _derive_allotments(model, rounded)
            _check_assignment(model, rounded)
            val = float(model.c @ rounded + model.constant)
            if val < best_val - 1e-9:
                best_val = val
                best_values = rounded
            continue
        f = values[frac_col]
        lo, hi = bounds[frac_col]
        down = list(bounds)
        down[frac_col] = (lo, math.floor(f))
        up = list(bounds)
        up[frac_col] = (math.ceil(f), hi)
        # larger magnitude explored first (DFS pops the last pushed)
        var = model.variables[frac_col]
        if var.upper <= 0 or (var.lower < 0 and f < 0):
            first, second = down, up
        else:
            first, second = up, down
        stack.append(second)
        stack.append(first)

    assert best_values is not None, "loading program infeasible for a structurally valid route"
    canonical = _minimal_depot_takes(model, best_values)
    if canonical is not None:
        best_values = canonical
    return _assignment_to_result(model, best_values, best_val, True)


def _check_assignment(model: LoadingModel, values: np.ndarray) -> None:
    if len(model.a_ub) and np.any(model.a_ub @ values > model.b_ub + 1e-6):
        raise RuntimeError("rounded assignment violates an inequality")
    if len(model.a_eq) and np.any(np.abs(model.a_eq @ values - model.b_eq) > 1e-6):
        raise RuntimeError("rounded assignment violates an equality")


_GUARD_VISITS = 12
_GUARD_CAPACITY = 6
_GUARD_RESIDUAL = 6


def brute_force_loading(
    instance: Instance,
    skeletons: tuple[RouteSkeleton, ...] | list[RouteSkeleton],
    *,
    weighted: bool = False,
) -> LoadingVariables:
    """Exhaustively enumerate feasible loadings; oracle for solve_exact.

    Independent of the matrix model: simulates vehicle and station state
    move by move and explores every integral choice. Guard rails keep the
    search space small; breaching them raises ValueError.
    """
    skeletons = tuple(sk for sk in skeletons if sk.visits)
    fleet = {v.id: v for v in instance.fleet}
    total_visits = sum(len(sk.visits) for sk in skeletons)
    if total_visits > _GUARD_VISITS:
        raise ValueError(f"guard rail: {total_visits} visits exceed {_GUARD_VISITS}")
    for sk in skeletons:
        if fleet[sk.vehicle_id].capacity > _GUARD_CAPACITY:
            raise ValueError(f"guard rail: vehicle capacity exceeds {_GUARD_CAPACITY}")
    for s in instance.stations:
        if abs(s.imbalance) > _GUARD_RESIDUAL or s.damaged > _GUARD_RESIDUAL:
            raise ValueError(f"guard rail: station {s.id} residuals exceed {_GUARD_RESIDUAL}")

    rem_imb = {s.id: s.imbalance for s in instance.stations}
    rem_dam = {s.id: s.damaged for s in instance.stations}
    stock = instance.depot.operative
    best = {"val": math.inf, "moves": None, "allot": None}
    moves_now: dict[int, list[tuple[int, int]]] = {sk.vehicle_id: [] for sk in skeletons}
    allot_now: dict[int, int] = {}

    def leaf_value() -> float:
        total = 0.0
        for s in instance.stations:
            w = s.weight if weighted else 1.0
            total += w * (abs(rem_imb[s.id]) + rem_dam[s.id])
        return total

    def occupancy_ok() -> bool:
        for s in instance.stations:
            p_hat = s.target + rem_imb[s.id]
            if p_hat + rem_dam[s.id] > s.capacity:
                return False
        return True

    def visit(si: int, vi: int, op: int, dam: int, take_run: int, take_peak: int) -> None:
        nonlocal stock
        sk = skeletons[si]
        vehicle = fleet[sk.vehicle_id]
        if vi == len(sk.visits):
            claimed = max(0, take_peak)
            if claimed > stock:
                return
            allot_now[sk.vehicle_id] = claimed
            stock -= claimed
            if si + 1 < len(skeletons):
                visit(si + 1, 0, 0, 0, 0, 0)
            elif occupancy_ok():
                val = leaf_value()
                if val < best["val"] - 1e-12:
                    best["val"] = val
                    best["moves"] = {
                        vid: tuple(seq) for vid, seq in moves_now.items()
                    }
                    best["allot"] = dict(allot_now)
            stock += claimed
            del allot_now[sk.vehicle_id]
            return
        node = sk.visits[vi]
        k = vehicle.capacity
        last = vi == len(sk.visits) - 1
        if node == DEPOT:
            y = -dam  # every damaged bike on board is dropped here
            if last:
                x_choices = [-op]
            else:
                x_choices = range(-op, k - op + 1)
            for x in x_choices:
                run = take_run + x
                peak = max(take_peak, run)
                if peak > stock:
                    continue
                moves_now[sk.vehicle_id].append((x, y))
                visit(si, vi + 1, op + x, 0, run, peak)
                moves_now[sk.vehicle_id].pop()
            return
        s = instance.station(node)
        d0 = s.imbalance
        free = k - op - dam
        if d0 > 0:
            x_lo, x_hi = 0, min(free, rem_imb[node])
        elif d0 < 0:
            x_lo, x_hi = max(-op, rem_imb[node]), 0
        else:
            x_lo = x_hi = 0
        for x in range(x_lo, x_hi + 1):
            y_hi = min(free - x, rem_dam[node])
            for y in range(0, y_hi + 1):
                rem_imb[node] -= x
                rem_dam[node] -= y
                moves_now[sk.vehicle_id].append((x, y))
                visit(si, vi + 1, op + x, dam + y, take_run, take_peak)
                moves_now[sk.vehicle_id].pop()
                rem_imb[node] += x
                rem_dam[node] += y

    if skeletons:
        visit(0, 0, 0, 0, 0, 0)
    else:
        best["val"] = leaf_value()
        best["moves"] = {}
        best["allot"] = {}
    if best["moves"] is None:
        # every branch pruned: only possible via occupancy on all leaves,
        # which the all-zero assignment rules out for valid instances
        raise RuntimeError("enumeration found no feasible assignment")
    moves = dict(best["moves"])
    allot = dict(best["allot"])
    for sk in skeletons:
        moves.setdefault(sk.vehicle_id, ())
        allot.setdefault(sk.vehicle_id, 0)
    return LoadingVariables(allot, moves, best["val"], True)


def reoptimize_solution(
    instance: Instance,
    solution: Solution,
    weights: ObjectiveWeights = ObjectiveWeights(),
    *,
    weighted_phase2: bool = False,
    weighted_damaged_denominator: bool = False,
) -> Solution:
    """Replace a solution's loading plans with exactly optimal ones.

    Routes and route times are untouched; only the moves change. The
    resulting (imbalance + damaged) portion of the objective never exceeds
    the input's.
    """
    skeletons = tuple(RouteSkeleton.from_route(r) for r in solution.routes)
    model = build_model(instance, skeletons, weighted=weighted_phase2)
    result = solve_exact(model)
    plans = []
    for route in solution.routes:
        moves = result.moves.get(route.vehicle_id, ())
        plans.append(LoadingPlan(route.vehicle_id, moves))
    return solution_from_plans(
        instance, solution.routes, plans, weights,
        weighted_damaged_denominator=weighted_damaged_denominator,
    )
