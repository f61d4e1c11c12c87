"""Gas network coupling for the dispatch problem.

The Weymouth law ``g = W sqrt(p_send^2 - p_recv^2)`` is nonconvex, so the
coupled problem is solved by successive linear programming: each iteration
replaces every pipeline equation by its tangent plane at the current
pressures, adds elastic slacks with an l1 penalty, and bounds the pressure
step with a trust region. Steps that raise the penalized cost (the merit
function) are rejected and the trust region is halved.

Pipelines carry flow from ``from_node`` (sending) to ``to_node``
(receiving). Compressors also move gas ``from_node -> to_node`` and may
raise the outlet pressure by at most their ratio:
``p_to <= ratio * p_from``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from sedpce import lp
from sedpce.errors import (
    InvariantViolation,
    PressureOrderViolation,
    SlpNonconvergence,
    ZeroFlowSingularity,
)
from sedpce.grid import DispatchSolution, PowerSystem, line_flows, solve_sed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GasNode:
    id: int | str
    p_min: float
    p_max: float


@dataclass(frozen=True)
class GasWell:
    id: int | str
    node: int | str
    cost: float
    g_min: float
    g_max: float


@dataclass(frozen=True)
class Pipeline:
    id: int | str
    from_node: int | str
    to_node: int | str
    weymouth: float
    capacity: float


@dataclass(frozen=True)
class Compressor:
    id: int | str
    from_node: int | str
    to_node: int | str
    ratio: float
    capacity: float


@dataclass(frozen=True)
class GasLoad:
    node: int | str
    profile: tuple[float, ...]


@dataclass(frozen=True)
class GenCoupling:
    """Gas drawn at ``node`` is ``theta`` units per MW of ``generator`` output."""

    generator: int | str
    node: int | str
    theta: float


@dataclass(frozen=True)
class GasSystem:
    nodes: tuple[GasNode, ...] = ()
    wells: tuple[GasWell, ...] = ()
    pipelines: tuple[Pipeline, ...] = ()
    compressors: tuple[Compressor, ...] = ()
    loads: tuple[GasLoad, ...] = ()
    couplings: tuple[GenCoupling, ...] = ()

    def __post_init__(self):
        ids = {n.id for n in self.nodes}
        if len(ids) != len(self.nodes):
            raise InvariantViolation("duplicate gas node id")
        for n in self.nodes:
            if not 0 <= n.p_min <= n.p_max:
                raise InvariantViolation(f"gas node {n.id}: need 0 <= p_min <= p_max")
        for w in self.wells:
            if w.node not in ids:
                raise InvariantViolation(f"gas well {w.id}: unknown node {w.node}")
            if not 0 <= w.g_min <= w.g_max:
                raise InvariantViolation(f"gas well {w.id}: need 0 <= g_min <= g_max")
        for p in self.pipelines:
            if p.from_node not in ids or p.to_node not in ids:
                raise InvariantViolation(f"pipeline {p.id}: unknown endpoint")
            if not p.weymouth > 0:
                raise InvariantViolation(f"pipeline {p.id}: Weymouth constant must be > 0")
            if p.capacity < 0:
                raise InvariantViolation(f"pipeline {p.id}: negative capacity")
        for c in self.compressors:
            if c.from_node not in ids or c.to_node not in ids:
                raise InvariantViolation(f"compressor {c.id}: unknown endpoint")
            if c.ratio < 1:
                raise InvariantViolation(f"compressor {c.id}: ratio must be >= 1")
            if c.capacity < 0:
                raise InvariantViolation(f"compressor {c.id}: negative capacity")
        for d in self.loads:
            if d.node not in ids:
                raise InvariantViolation(f"gas load at unknown node {d.node}")
            if any(v < 0 for v in d.profile):
                raise InvariantViolation(f"gas load at node {d.node}: negative demand")
        for k in self.couplings:
            if k.node not in ids:
                raise InvariantViolation(f"gas coupling {k.generator}: unknown node {k.node}")
            if k.theta < 0:
                raise InvariantViolation(f"gas coupling {k.generator}: theta must be >= 0")

    @property
    def is_empty(self) -> bool:
        return not (self.wells or self.pipelines or self.compressors or self.loads or self.couplings)

    @property
    def node_index(self) -> dict:
        return {n.id: i for i, n in enumerate(self.nodes)}


def weymouth_flow(weymouth: float, p_send: float, p_recv: float) -> float:
    if p_send < p_recv:
        raise PressureOrderViolation(f"sending pressure {p_send} < receiving pressure {p_recv}")
    if p_recv < 0:
        raise PressureOrderViolation("negative pressure")
    return weymouth * math.sqrt(p_send * p_send - p_recv * p_recv)


class WeymouthTangent(NamedTuple):
    d_send: float
    d_recv: float
    constant: float

    def __call__(self, p_send, p_recv):
        return self.constant + self.d_send * p_send + self.d_recv * p_recv


def linearize_weymouth(weymouth: float, p_send: float, p_recv: float, flow: float | None = None,
                       eps: float = 1e-9) -> WeymouthTangent:
    """Tangent plane of the Weymouth flow at ``(p_send, p_recv)``.

    ``flow`` defaults to the exact Weymouth flow at the point; the tangent
    then passes through the origin because the flow is homogeneous of
    degree one in the pressures.
    """
    if flow is None:
        flow = weymouth_flow(weymouth, p_send, p_recv)
    if flow <= eps:
        raise ZeroFlowSingularity(f"flow {flow} at the linearization point is too small")
    w2 = weymouth * weymouth
    return WeymouthTangent(
        d_send=w2 * p_send / flow,
        d_recv=-w2 * p_recv / flow,
        constant=flow - w2 * (p_send * p_send - p_recv * p_recv) / flow,
    )


@dataclass
class GasOperatingPoint:
    """Pressures (nodes x periods) and pipeline flows (pipelines x periods)."""

    pressure: np.ndarray
    flow: np.ndarray


@dataclass(frozen=True)
class SlpConfig:
    max_iter: int = 50
    pressure_tol: float = 1e-6
    residual_tol: float = 1e-5
    trust_fraction: float = 0.1
    min_trust: float = 1e-10
    penalty: float | None = None  # default: 1e4 * (1 + largest cost coefficient)
    singular_flow: float = 1e-9
    solver: lp.SolverConfig = field(default_factory=lp.SolverConfig)


@dataclass
class GasDispatch:
    well_output: np.ndarray  # wells x T
    pressure: np.ndarray  # nodes x T
    pipeline_flow: np.ndarray  # pipelines x T
    compressor_flow: np.ndarray  # compressors x T
    iterations: int
    max_residual: float
    merit_history: list


def _initial_point(gas: GasSystem, periods: int) -> np.ndarray:
    """Bound midpoints, raised 1% per level upstream along the pipeline graph."""
    idx = gas.node_index
    nn = len(gas.nodes)
    # longest distance to a sink in the pipeline DAG (directions fixed by data)
    depth = np.zeros(nn)
    for _ in range(nn):
        changed = False
        for p in gas.pipelines:
            a, b = idx[p.from_node], idx[p.to_node]
            if depth[a] < depth[b] + 1:
                depth[a] = depth[b] + 1
                changed = True
        if not changed:
            break
    lo = np.array([n.p_min for n in gas.nodes])
    hi = np.array([n.p_max for n in gas.nodes])
    p = np.clip(0.5 * (lo + hi) * (1.0 + 0.01 * depth), lo, hi)
    return np.repeat(p[:, None], periods, axis=1)


def _tangents(gas: GasSystem, pressure: np.ndarray, cfg: SlpConfig):
    """Tangent per (pipeline, period); zero-flow points are nudged apart first."""
    idx = gas.node_index
    T = pressure.shape[1]
    out = {}
    for bi, p in enumerate(gas.pipelines):
        a, b = idx[p.from_node], idx[p.to_node]
        span = max(gas.nodes[a].p_max - gas.nodes[a].p_min, gas.nodes[b].p_max - gas.nodes[b].p_min, 1.0)
        for t in range(T):
            ps, pr = pressure[a, t], max(min(pressure[b, t], pressure[a, t]), 0.0)
            try:
                out[bi, t] = linearize_weymouth(p.weymouth, ps, pr, eps=cfg.singular_flow)
            except ZeroFlowSingularity:
                nudge = 1e-4 * span
                out[bi, t] = linearize_weymouth(p.weymouth, ps + nudge, max(pr - nudge, 0.0))
    return out


class _IedLayout:
    """Column offsets of the gas variables appended after the electric block."""

    def __init__(self, base_vars: int, gas: GasSystem, T: int):
        self.T = T
        self.S, self.A = len(gas.wells), len(gas.nodes)
        self.B, self.C = len(gas.pipelines), len(gas.compressors)
        self.well = base_vars
        self.pres = self.well + self.S * T
        self.pipe = self.pres + self.A * T
        self.comp = self.pipe + self.B * T
        self.slack_pos = self.comp + self.C * T
        self.slack_neg = self.slack_pos + self.B * T
        self.n = self.slack_neg + self.B * T

    def col(self, block: int, item: int, t: int) -> int:
        return block + item * self.T + t


def _build_ied_lp(system: PowerSystem, wind, pressure, trust, tangents, penalty) -> tuple[lp.LpProblem, _IedLayout]:
    gas: GasSystem = system.gas
    base = system.sed_template.problem(wind)
    T = system.periods
    L = _IedLayout(base.n_vars, gas, T)
    idx = gas.node_index
    gen_index = {g.id: gi for gi, g in enumerate(system.generators)}

    cost = np.concatenate([base.cost, np.zeros(L.n - base.n_vars)])
    lower = np.concatenate([base.lower, np.zeros(L.n - base.n_vars)])
    upper = np.concatenate([base.upper, np.full(L.n - base.n_vars, np.inf)])
    names = list(base.names or [f"x{j}" for j in range(base.n_vars)])
    names += [f"gs_{w.id}_t{t + 1}" for w in gas.wells for t in range(T)]
    names += [f"pi_{n.id}_t{t + 1}" for n in gas.nodes for t in range(T)]
    names += [f"gb_{p.id}_t{t + 1}" for p in gas.pipelines for t in range(T)]
    names += [f"gc_{c.id}_t{t + 1}" for c in gas.compressors for t in range(T)]
    names += [f"sp_{p.id}_t{t + 1}" for p in gas.pipelines for t in range(T)]
    names += [f"sn_{p.id}_t{t + 1}" for p in gas.pipelines for t in range(T)]

    for si, w in enumerate(gas.wells):
        for t in range(T):
            j = L.col(L.well, si, t)
            cost[j], lower[j], upper[j] = w.cost, w.g_min, w.g_max
    for ai, n in enumerate(gas.nodes):
        for t in range(T):
            j = L.col(L.pres, ai, t)
            lower[j] = max(n.p_min, pressure[ai, t] - trust[ai])
            upper[j] = min(n.p_max, pressure[ai, t] + trust[ai])
    for bi, p in enumerate(gas.pipelines):
        for t in range(T):
            upper[L.col(L.pipe, bi, t)] = p.capacity
            cost[L.col(L.slack_pos, bi, t)] = penalty
            cost[L.col(L.slack_neg, bi, t)] = penalty
    for ci, c in enumerate(gas.compressors):
        for t in range(T):
            upper[L.col(L.comp, ci, t)] = c.capacity

    rows, cols, vals = list(base.rows), list(base.cols), list(base.vals)
    sense, rhs = list(base.sense), list(base.rhs)
    row = base.n_rows

    def add(entries, s, r):
        nonlocal row
        for c_, v in entries:
            rows.append(row)
            cols.append(c_)
            vals.append(v)
        sense.append(s)
        rhs.append(r)
        row += 1

    for t in range(T):
        for bi, p in enumerate(gas.pipelines):
            e, a = L.col(L.pres, idx[p.from_node], t), L.col(L.pres, idx[p.to_node], t)
            tan = tangents[bi, t]
            add([(e, 1.0), (a, -1.0)], lp.GE, 0.0)
            add(
                [
                    (L.col(L.pipe, bi, t), 1.0),
                    (e, -tan.d_send),
                    (a, -tan.d_recv),
                    (L.col(L.slack_pos, bi, t), -1.0),
                    (L.col(L.slack_neg, bi, t), 1.0),
                ],
                lp.EQ,
                tan.constant,
            )
        for ci, c in enumerate(gas.compressors):
            add(
                [(L.col(L.pres, idx[c.to_node], t), 1.0), (L.col(L.pres, idx[c.from_node], t), -c.ratio)],
                lp.LE,
                0.0,
            )
        for ai, n in enumerate(gas.nodes):
            entries = []
            entries += [(L.col(L.well, si, t), 1.0) for si, w in enumerate(gas.wells) if w.node == n.id]
            for bi, p in enumerate(gas.pipelines):
                if p.to_node == n.id:
                    entries.append((L.col(L.pipe, bi, t), 1.0))
                if p.from_node == n.id:
                    entries.append((L.col(L.pipe, bi, t), -1.0))
            for ci, c in enumerate(gas.compressors):
                if c.to_node == n.id:
                    entries.append((L.col(L.comp, ci, t), 1.0))
                if c.from_node == n.id:
                    entries.append((L.col(L.comp, ci, t), -1.0))
            for k in gas.couplings:
                if k.node == n.id:
                    gi = gen_index[k.generator]
                    entries.append((gi * T + t, -k.theta))
            demand = sum(d.profile[t] for d in gas.loads if d.node == n.id)
            add(entries, lp.EQ, demand)

    problem = lp.build_problem(cost, (rows, cols, vals), sense, rhs, lower, upper, names)
    return problem, L


def _unpack(x: np.ndarray, L: _IedLayout):
    def block(start, count):
        return x[start:start + count * L.T].reshape(count, L.T)

    return (
        block(L.well, L.S),
        block(L.pres, L.A),
        block(L.pipe, L.B),
        block(L.comp, L.C),
    )


def weymouth_residual(gas: GasSystem, pressure: np.ndarray, pipe_flow: np.ndarray) -> np.ndarray:
    """|g_b - W sqrt(p_send^2 - p_recv^2)| per pipeline and period."""
    idx = gas.node_index
    out = np.zeros_like(pipe_flow)
    for bi, p in enumerate(gas.pipelines):
        ps, pr = pressure[idx[p.from_node]], pressure[idx[p.to_node]]
        true = p.weymouth * np.sqrt(np.maximum(ps * ps - pr * pr, 0.0))
        out[bi] = np.abs(pipe_flow[bi] - true)
    return out


def solve_ied(system: PowerSystem, wind, config: SlpConfig | None = None) -> DispatchSolution:
    """Joint electricity and gas dispatch; total cost includes gas well costs.

    Falls back to ``solve_sed`` when the system has no (or an empty) gas block.
    """
    cfg = config or SlpConfig()
    gas: GasSystem | None = system.gas
    if gas is None or gas.is_empty:
        return solve_sed(system, wind, cfg.solver)

    T = system.periods
    template = system.sed_template
    penalty = cfg.penalty
    if penalty is None:
        biggest = max(
            [abs(c) for g in system.generators for _, c in g.cost_segments]
            + [abs(w.cost) for w in gas.wells]
            + [0.0]
        )
        penalty = 1e4 * (1.0 + biggest)

    pressure = _initial_point(gas, T)
    spans = np.array([n.p_max - n.p_min for n in gas.nodes])
    trust = np.maximum(cfg.trust_fraction * spans, cfg.min_trust)
    merit = math.inf
    history: list[float] = []
    state = None
    total_lp_iters = 0

    for it in range(1, cfg.max_iter + 1):
        tangents = _tangents(gas, pressure, cfg)
        problem, L = _build_ied_lp(system, wind, pressure, trust, tangents, penalty)
        sol = lp.solve(problem, cfg.solver)
        total_lp_iters += sol.iterations
        if not sol.optimal:
            if state is None:
                return DispatchSolution(sol.status, float("nan"), None, None, total_lp_iters, sol.diagnostics)
            trust = trust / 2
            if trust.max() < cfg.min_trust:
                break
            continue
        wells, pres, pipes, comps = _unpack(sol.x, L)
        real_cost = float(problem.cost[: L.slack_pos] @ sol.x[: L.slack_pos])
        resid = weymouth_residual(gas, pres, pipes)
        new_merit = real_cost + penalty * float(resid.sum())

        if state is not None and new_merit > merit + 1e-9 * (1.0 + abs(merit)):
            trust = trust / 2
            log.debug("slp iter %d rejected (merit %.6g > %.6g)", it, new_merit, merit)
            if trust.max() < cfg.min_trust:
                break
            continue

        step = float(np.max(np.abs(pres - pressure))) if pres.size else 0.0
        stalled = state is not None and abs(real_cost - state[5]) <= 1e-10 * (1.0 + abs(real_cost))
        pressure, merit = pres, new_merit
        history.append(merit)
        state = (sol, wells, pres, pipes, comps, real_cost, resid)
        max_res = float(resid.max()) if resid.size else 0.0
        log.debug("slp iter %d: cost %.8g residual %.3g step %.3g", it, real_cost, max_res, step)
        # pressures are often not unique at the optimum; once the cost is flat
        # and the residual small, further steps only drift along that set
        if max_res <= cfg.residual_tol and (step <= cfg.pressure_tol or stalled):
            break
    else:
        it = cfg.max_iter

    if state is None:
        raise SlpNonconvergence("no accepted SLP iterate")
    sol, wells, pres, pipes, comps, real_cost, resid = state
    max_res = float(resid.max()) if resid.size else 0.0
    if max_res > cfg.residual_tol:
        raise SlpNonconvergence(
            f"Weymouth residual {max_res:.3g} above {cfg.residual_tol:g} after {it} iterations"
        )
    dispatch = template.dispatch(sol.x)
    return DispatchSolution(
        status=sol.status,
        cost=real_cost,
        dispatch=dispatch,
        flows=line_flows(system, dispatch, wind),
        iterations=total_lp_iters,
        diagnostics=sol.diagnostics,
        gas=GasDispatch(
            well_output=wells,
            pressure=pres,
            pipeline_flow=pipes,
            compressor_flow=comps,
            iterations=it,
            max_residual=max_res,
            merit_history=history,
        ),
    )
