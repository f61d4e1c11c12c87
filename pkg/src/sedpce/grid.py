"""Multi-period economic dispatch with fixed commitment on a DC network.

Line flows enter the LP through injection shift factors (PTDF), so the
only decision variables are generator outputs (plus cost-segment splits
for piecewise-linear costs). Wind is must-take and enters the right-hand
sides only, which lets ``SedTemplate`` assemble the constraint matrix once
and re-use it for every scenario.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy import sparse

from sedpce import lp
from sedpce.errors import (
    DimensionMismatch,
    DisconnectedNetwork,
    InvariantViolation,
    NegativeWind,
    SingularSusceptanceMatrix,
)


@dataclass(frozen=True)
class Bus:
    id: int | str
    slack: bool = False


@dataclass(frozen=True)
class Line:
    id: int | str
    from_bus: int | str
    to_bus: int | str
    reactance: float
    flow_min: float = -math.inf
    flow_max: float = math.inf


@dataclass(frozen=True)
class Generator:
    """Thermal unit with a convex piecewise-linear cost.

    ``cost_segments`` is a sequence of ``(width_mw, marginal_cost)`` pairs
    filled in order from 0 MW; their widths must cover ``p_max``.
    ``commitment`` is the fixed on/off schedule for periods 1..T and
    ``initial_status`` is the status in period 0. Ramp limits default to
    ``p_max`` (no restriction).
    """

    id: int | str
    bus: int | str
    p_min: float
    p_max: float
    cost_segments: tuple[tuple[float, float], ...]
    commitment: tuple[int, ...]
    initial_status: int = 1
    ramp_up: float | None = None
    ramp_down: float | None = None
    startup_ramp: float | None = None
    shutdown_ramp: float | None = None
    initial_output: float | None = None

    @property
    def ru(self) -> float:
        return self.p_max if self.ramp_up is None else self.ramp_up

    @property
    def rd(self) -> float:
        return self.p_max if self.ramp_down is None else self.ramp_down

    @property
    def su(self) -> float:
        return self.p_max if self.startup_ramp is None else self.startup_ramp

    @property
    def sd(self) -> float:
        return self.p_max if self.shutdown_ramp is None else self.shutdown_ramp

    @property
    def p0(self) -> float:
        if self.initial_output is not None:
            return self.initial_output
        return self.p_min * self.initial_status

    @property
    def min_marginal_cost(self) -> float:
        return min(c for _, c in self.cost_segments)


@dataclass(frozen=True)
class Load:
    id: int | str
    bus: int | str
    profile: tuple[float, ...]


@dataclass(frozen=True)
class WindFarm:
    id: int | str
    bus: int | str


@dataclass(frozen=True)
class PowerSystem:
    periods: int
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    loads: tuple[Load, ...]
    wind_farms: tuple[WindFarm, ...]
    gas: object | None = None  # sedpce.gas.GasSystem
    name: str = "system"
    cost_model: str = "piecewise_linear"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        T = self.periods
        if T < 1:
            raise InvariantViolation("periods must be >= 1")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise InvariantViolation("duplicate bus id")
        bus_ids = set(ids)
        if sum(b.slack for b in self.buses) != 1:
            raise InvariantViolation("exactly one slack bus is required")
        for ln in self.lines:
            if not ln.reactance > 0:
                raise InvariantViolation(f"line {ln.id}: reactance must be > 0")
            if ln.from_bus not in bus_ids or ln.to_bus not in bus_ids:
                raise InvariantViolation(f"line {ln.id}: unknown endpoint bus")
            if ln.flow_min > ln.flow_max:
                raise InvariantViolation(f"line {ln.id}: flow_min > flow_max")
        for g in self.generators:
            if g.bus not in bus_ids:
                raise InvariantViolation(f"generator {g.id}: unknown bus {g.bus}")
            if not 0 <= g.p_min <= g.p_max:
                raise InvariantViolation(f"generator {g.id}: need 0 <= p_min <= p_max")
            if min(g.ru, g.rd, g.su, g.sd) < 0:
                raise InvariantViolation(f"generator {g.id}: negative ramp rate")
            if len(g.commitment) != T:
                raise InvariantViolation(
                    f"generator {g.id}: commitment has {len(g.commitment)} periods, expected {T}"
                )
            if any(x not in (0, 1) for x in (*g.commitment, g.initial_status)):
                raise InvariantViolation(f"generator {g.id}: commitment must be 0/1")
            if not g.cost_segments:
                raise InvariantViolation(f"generator {g.id}: no cost segments")
            widths = [w for w, _ in g.cost_segments]
            marg = [c for _, c in g.cost_segments]
            if min(widths) <= 0:
                raise InvariantViolation(f"generator {g.id}: segment widths must be > 0")
            if any(b < a for a, b in zip(marg, marg[1:])):
                raise InvariantViolation(f"generator {g.id}: marginal costs must be nondecreasing")
            if sum(widths) < g.p_max - 1e-9:
                raise InvariantViolation(f"generator {g.id}: cost segments do not cover p_max")
        for d in self.loads:
            if d.bus not in bus_ids:
                raise InvariantViolation(f"load {d.id}: unknown bus {d.bus}")
            if len(d.profile) != T:
                raise InvariantViolation(f"load {d.id}: profile length != {T}")
        for w in self.wind_farms:
            if w.bus not in bus_ids:
                raise InvariantViolation(f"wind farm {w.id}: unknown bus {w.bus}")
        gen_ids = {g.id for g in self.generators}
        for k in getattr(self.gas, "couplings", ()):
            if k.generator not in gen_ids:
                raise InvariantViolation(f"gas coupling references unknown generator {k.generator}")

    @property
    def n_wind(self) -> int:
        return len(self.wind_farms) * self.periods

    @property
    def wind_labels(self) -> list[str]:
        return [f"w{w.id}_t{t + 1}" for w in self.wind_farms for t in range(self.periods)]

    @cached_property
    def bus_index(self) -> dict:
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def ptdf(self) -> "PtdfMatrix":
        return compute_ptdf(self)

    @cached_property
    def sed_template(self) -> "SedTemplate":
        return SedTemplate(self)

    def load_matrix(self) -> np.ndarray:
        """Bus x period demand."""
        out = np.zeros((len(self.buses), self.periods))
        for d in self.loads:
            out[self.bus_index[d.bus]] += d.profile
        return out

    def wind_to_bus(self, wind: np.ndarray) -> np.ndarray:
        """Map a wind vector (farm-major, length W*T) to a bus x period injection."""
        W, T = len(self.wind_farms), self.periods
        per_farm = np.asarray(wind, dtype=float).reshape(W, T)
        out = np.zeros((len(self.buses), T))
        for k, w in enumerate(self.wind_farms):
            out[self.bus_index[w.bus]] += per_farm[k]
        return out


@dataclass(frozen=True)
class PtdfMatrix:
    matrix: np.ndarray  # lines x buses
    slack_index: int
    line_ids: tuple
    bus_ids: tuple


def compute_ptdf(system: PowerSystem) -> PtdfMatrix:
    """Injection shift factors for every line w.r.t. every bus.

    Each injection is assumed withdrawn at the slack bus, so the slack
    column is zero.
    """
    nb, nl = len(system.buses), len(system.lines)
    idx = system.bus_index
    slack = next(i for i, b in enumerate(system.buses) if b.slack)
    f = np.array([idx[ln.from_bus] for ln in system.lines], dtype=int)
    t = np.array([idx[ln.to_bus] for ln in system.lines], dtype=int)
    b = np.array([1.0 / ln.reactance for ln in system.lines])

    adj = sparse.coo_matrix((np.ones(nl), (f, t)), shape=(nb, nb))
    n_comp, _ = connected_components(adj, directed=False)
    if n_comp != 1:
        raise DisconnectedNetwork(f"network has {n_comp} islands")

    inc = np.zeros((nl, nb))
    inc[np.arange(nl), f] = 1.0
    inc[np.arange(nl), t] = -1.0
    bbus = inc.T @ (b[:, None] * inc)
    keep = np.array([i for i in range(nb) if i != slack], dtype=int)
    ptdf = np.zeros((nl, nb))
    if keep.size:
        bred = bbus[np.ix_(keep, keep)]
        if np.linalg.cond(bred) > 1e14:
            raise SingularSusceptanceMatrix("reduced susceptance matrix is singular")
        x = np.linalg.solve(bred, np.eye(keep.size))
        ptdf[:, keep] = (b[:, None] * inc[:, keep]) @ x
    return PtdfMatrix(
        matrix=ptdf,
        slack_index=slack,
        line_ids=tuple(ln.id for ln in system.lines),
        bus_ids=tuple(bb.id for bb in system.buses),
    )


def dc_power_flow(system: PowerSystem, injections: np.ndarray) -> np.ndarray:
    """Line flows for a balanced injection vector by solving B theta = P."""
    nb = len(system.buses)
    idx = system.bus_index
    slack = next(i for i, b in enumerate(system.buses) if b.slack)
    bbus = np.zeros((nb, nb))
    for ln in system.lines:
        i, j, y = idx[ln.from_bus], idx[ln.to_bus], 1.0 / ln.reactance
        bbus[i, i] += y
        bbus[j, j] += y
        bbus[i, j] -= y
        bbus[j, i] -= y
    keep = [i for i in range(nb) if i != slack]
    theta = np.zeros(nb)
    theta[keep] = np.linalg.solve(bbus[np.ix_(keep, keep)], np.asarray(injections)[keep])
    return np.array(
        [(theta[idx[ln.from_bus]] - theta[idx[ln.to_bus]]) / ln.reactance for ln in system.lines]
    )


class SedTemplate:
    """Wind-independent part of the dispatch LP for one system.

    Variable layout: ``P[g, t]`` at ``g * T + t``, followed by segment
    variables for generators with more than one cost segment.
    """

    ptdf_floor = 1e-12

    def __init__(self, system: PowerSystem):
        self.system = system
        T = system.periods
        G = len(system.generators)
        self.n_p = G * T
        ptdf = system.ptdf.matrix

        cost, lower, upper, names = [], [], [], []
        for g in system.generators:
            for t in range(T):
                x = g.commitment[t]
                lower.append(g.p_min * x)
                upper.append(g.p_max * x)
                cost.append(g.cost_segments[0][1] if len(g.cost_segments) == 1 else 0.0)
                names.append(f"P_{g.id}_t{t + 1}")

        rows, cols, vals, sense = [], [], [], []
        rhs_const: list[float] = []
        row = 0

        def add(entries, s, r):
            nonlocal row
            for c, v in entries:
                rows.append(row)
                cols.append(c)
                vals.append(v)
            sense.append(s)
            rhs_const.append(r)
            row += 1

        # piecewise-linear cost: P - sum(seg) = 0
        for gi, g in enumerate(system.generators):
            if len(g.cost_segments) == 1:
                continue
            for t in range(T):
                seg_cols = []
                for s, (width, mc) in enumerate(g.cost_segments):
                    seg_cols.append(len(cost))
                    cost.append(mc)
                    lower.append(0.0)
                    upper.append(width * g.commitment[t])
                    names.append(f"S_{g.id}_t{t + 1}_{s}")
                add([(gi * T + t, 1.0)] + [(c, -1.0) for c in seg_cols], lp.EQ, 0.0)

        # power balance: sum_g P_g^t = load^t - wind^t  (wind part filled per scenario)
        self.balance_rows = np.arange(row, row + T)
        for t in range(T):
            add([(gi * T + t, 1.0) for gi in range(G)], lp.EQ, 0.0)

        # line limits through PTDF: flow = K_g P + (K w - K d)
        gen_bus = np.array([system.bus_index[g.bus] for g in system.generators], dtype=int)
        self.flow_rows = []  # (row, line, period, side)
        for li, ln in enumerate(system.lines):
            coeff = ptdf[li, gen_bus]
            entries_t = [
                [(gi * T + t, c) for gi, c in enumerate(coeff) if abs(c) > self.ptdf_floor]
                for t in range(T)
            ]
            for t in range(T):
                if math.isfinite(ln.flow_max):
                    self.flow_rows.append((row, li, t, ln.flow_max))
                    add(entries_t[t], lp.LE, ln.flow_max)
                if math.isfinite(ln.flow_min):
                    self.flow_rows.append((row, li, t, ln.flow_min))
                    add(entries_t[t], lp.GE, ln.flow_min)

        # ramping, with x^0 and P^0 constants in period 1
        for gi, g in enumerate(system.generators):
            xs = (g.initial_status, *g.commitment)
            for t in range(T):
                xp, xc = xs[t], xs[t + 1]
                up = g.ru * xp + g.su * (xc - xp) + g.p_max * (1 - xc)
                down = -g.rd * xc - g.sd * (xp - xc) - g.p_max * (1 - xp)
                cur = gi * T + t
                if t == 0:
                    add([(cur, 1.0)], lp.LE, up + g.p0)
                    add([(cur, 1.0)], lp.GE, down + g.p0)
                else:
                    add([(cur, 1.0), (cur - 1, -1.0)], lp.LE, up)
                    add([(cur, 1.0), (cur - 1, -1.0)], lp.GE, down)

        self.names = tuple(names)
        self.cost = np.array(cost)
        self.lower = np.array(lower)
        self.upper = np.array(upper)
        self.rows = np.array(rows, dtype=np.int64)
        self.cols = np.array(cols, dtype=np.int64)
        self.vals = np.array(vals)
        self.sense = np.array(sense, dtype="<U1")
        self.rhs_const = np.array(rhs_const)
        self.load_bus = system.load_matrix()
        self._flow_row_idx = np.array([r for r, *_ in self.flow_rows], dtype=int)
        self._flow_line = np.array([li for _, li, _, _ in self.flow_rows], dtype=int)
        self._flow_t = np.array([t for _, _, t, _ in self.flow_rows], dtype=int)

    def rhs(self, wind) -> np.ndarray:
        system = self.system
        wind = np.asarray(wind, dtype=float)
        if wind.ndim != 1 or wind.size != system.n_wind:
            raise DimensionMismatch(
                f"wind vector has {wind.size} entries, expected {system.n_wind}"
            )
        if np.any(np.isnan(wind)):
            raise DimensionMismatch("wind vector contains NaN")
        if np.any(wind < 0):
            raise NegativeWind(f"negative wind at position {int(np.argmax(wind < 0))}")
        rhs = self.rhs_const.copy()
        wind_bus = system.wind_to_bus(wind)
        rhs[self.balance_rows] = self.load_bus.sum(axis=0) - wind_bus.sum(axis=0)
        if self.flow_rows:
            base_flow = system.ptdf.matrix @ (wind_bus - self.load_bus)  # lines x T
            rhs[self._flow_row_idx] -= base_flow[self._flow_line, self._flow_t]
        return rhs

    def problem(self, wind) -> lp.LpProblem:
        return lp.LpProblem(
            cost=self.cost,
            rows=self.rows,
            cols=self.cols,
            vals=self.vals,
            sense=self.sense,
            rhs=self.rhs(wind),
            lower=self.lower,
            upper=self.upper,
            names=self.names,
        )

    def dispatch(self, x: np.ndarray) -> np.ndarray:
        """Generator x period output from an LP primal vector."""
        return x[: self.n_p].reshape(len(self.system.generators), self.system.periods)


@dataclass
class DispatchSolution:
    status: lp.Status
    cost: float
    dispatch: np.ndarray | None  # generators x periods
    flows: np.ndarray | None  # lines x periods
    iterations: int = 0
    diagnostics: str = ""
    gas: object | None = None  # sedpce.gas.GasDispatch when gas is modelled

    @property
    def optimal(self) -> bool:
        return self.status is lp.Status.OPTIMAL


def build_sed_lp(system: PowerSystem, wind) -> lp.LpProblem:
    return system.sed_template.problem(wind)


def line_flows(system: PowerSystem, dispatch: np.ndarray, wind) -> np.ndarray:
    gen_bus = np.zeros((len(system.buses), system.periods))
    for gi, g in enumerate(system.generators):
        gen_bus[system.bus_index[g.bus]] += dispatch[gi]
    inj = gen_bus + system.wind_to_bus(wind) - system.load_matrix()
    return system.ptdf.matrix @ inj


def solve_sed(system: PowerSystem, wind, config: lp.SolverConfig | None = None) -> DispatchSolution:
    template = system.sed_template
    sol = lp.solve(template.problem(wind), config)
    if not sol.optimal:
        return DispatchSolution(sol.status, float("nan"), None, None, sol.iterations, sol.diagnostics)
    dispatch = template.dispatch(sol.x)
    return DispatchSolution(
        status=sol.status,
        cost=sol.objective,
        dispatch=dispatch,
        flows=line_flows(system, dispatch, wind),
        iterations=sol.iterations,
        diagnostics=sol.diagnostics,
    )


class BatchResult(NamedTuple):
    status: list  # Status per row, or the exception text for rows that raised
    cost: np.ndarray  # nan where not optimal

    @property
    def optimal_mask(self) -> np.ndarray:
        return np.array([s is lp.Status.OPTIMAL for s in self.status])


def batch_solve(system: PowerSystem, scenarios, threads: int = 1, solver=None, config=None) -> BatchResult:
    """Solve one dispatch per scenario row; output order follows input order.

    A row that raises is recorded as ``"error: <message>"`` and the
    remaining rows still run. ``solver`` defaults to ``solve_sed``.
    """
    scenarios = np.asarray(scenarios, dtype=float)
    if scenarios.ndim != 2 or scenarios.shape[1] != system.n_wind:
        raise DimensionMismatch(
            f"scenario matrix has shape {scenarios.shape}, expected (N, {system.n_wind})"
        )
    solver = solver or solve_sed
    system.sed_template  # build once, outside worker threads

    def one(row):
        try:
            sol = solver(system, row, config) if config is not None else solver(system, row)
            return sol.status, sol.cost
        except Exception as exc:  # noqa: BLE001 - recorded per row
            return f"error: {type(exc).__name__}: {exc}", float("nan")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, scenarios))
    else:
        results = [one(r) for r in scenarios]
    return BatchResult([s for s, _ in results], np.array([c for _, c in results], dtype=float))
