"""Bounded-variable linear programs.

Problems are held in sparse triplet form and solved with the HiGHS dual
simplex shipped in scipy. The solver is run single-threaded with fixed
options, so identical inputs give bit-identical outputs.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from sedpce.errors import MalformedProblem

LE, EQ, GE = "L", "E", "G"


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL = "numerical"


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int | None = None  # None -> 50 * (rows + cols)
    presolve: bool = True


@dataclass(frozen=True)
class LpProblem:
    """min cost @ x  s.t.  A x (sense) rhs,  lower <= x <= upper.

    ``sense`` holds one of ``"L"`` (<=), ``"E"`` (=), ``"G"`` (>=) per row.
    Duplicate triplets are summed.
    """

    cost: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    sense: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    names: tuple[str, ...] | None = None

    @property
    def n_vars(self) -> int:
        return len(self.cost)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    def matrix(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.n_rows, self.n_vars)
        )

    def validate(self) -> None:
        n, m = self.n_vars, self.n_rows
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise MalformedProblem("triplet arrays differ in length")
        if len(self.sense) != m:
            raise MalformedProblem(f"sense has {len(self.sense)} entries for {m} rows")
        if len(self.lower) != n or len(self.upper) != n:
            raise MalformedProblem("bound arrays do not match the number of variables")
        if len(self.rows) and (self.rows.min() < 0 or self.rows.max() >= m):
            raise MalformedProblem("triplet row index out of range")
        if len(self.cols) and (self.cols.min() < 0 or self.cols.max() >= n):
            raise MalformedProblem("triplet column index out of range")
        if not np.all(np.isfinite(self.cost)) or not np.all(np.isfinite(self.vals)):
            raise MalformedProblem("NaN or infinite entry in objective or matrix")
        if np.any(np.isnan(self.rhs)) or np.any(np.isinf(self.rhs)):
            raise MalformedProblem("NaN or infinite right-hand side")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise MalformedProblem("NaN bound")
        bad = np.flatnonzero(self.lower > self.upper)
        if bad.size:
            raise MalformedProblem(f"lower > upper for variable {bad[0]}")
        unknown = set(np.unique(self.sense)) - {LE, EQ, GE}
        if unknown:
            raise MalformedProblem(f"unknown constraint sense {sorted(unknown)}")

    def violation(self, x: np.ndarray) -> np.ndarray:
        """Per-row constraint violation scaled by ``1 + |rhs|``."""
        ax = self.matrix() @ x
        gap = ax - self.rhs
        viol = np.where(
            self.sense == LE,
            np.maximum(gap, 0.0),
            np.where(self.sense == GE, np.maximum(-gap, 0.0), np.abs(gap)),
        )
        return viol / (1.0 + np.abs(self.rhs))


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray | None
    objective: float
    iterations: int
    diagnostics: str = ""
    max_violation: float = field(default=float("nan"))

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def build_problem(
    cost,
    triplets,
    sense,
    rhs,
    lower,
    upper,
    names=None,
) -> LpProblem:
    """Convenience constructor taking plain sequences; triplets is (rows, cols, vals)."""
    rows, cols, vals = triplets
    return LpProblem(
        cost=np.asarray(cost, dtype=float),
        rows=np.asarray(rows, dtype=np.int64),
        cols=np.asarray(cols, dtype=np.int64),
        vals=np.asarray(vals, dtype=float),
        sense=np.asarray(sense, dtype="<U1"),
        rhs=np.asarray(rhs, dtype=float),
        lower=np.asarray(lower, dtype=float),
        upper=np.asarray(upper, dtype=float),
        names=tuple(names) if names is not None else None,
    )


_STATUS = {
    0: Status.OPTIMAL,
    1: Status.ITERATION_LIMIT,
    2: Status.INFEASIBLE,
    3: Status.UNBOUNDED,
    4: Status.NUMERICAL,
}


def solve(problem: LpProblem, config: SolverConfig | None = None) -> LpSolution:
    """Solve ``problem``; never mutates it.

    Infeasible and unbounded problems come back as a status with the
    solver's message in ``diagnostics``. Hitting the iteration cap gives
    ``Status.ITERATION_LIMIT`` and no primal point.
    """
    config = config or SolverConfig()
    problem.validate()
    max_iter = config.max_iter or 50 * (problem.n_rows + problem.n_vars) + 50

    A = problem.matrix()
    le = problem.sense == LE
    ge = problem.sense == GE
    eq = problem.sense == EQ
    A_ub = b_ub = A_eq = b_eq = None
    if le.any() or ge.any():
        A_ub = sparse.vstack([A[le], -A[ge]], format="csr")
        b_ub = np.concatenate([problem.rhs[le], -problem.rhs[ge]])
    if eq.any():
        A_eq = A[eq]
        b_eq = problem.rhs[eq]

    res = linprog(
        problem.cost,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=np.column_stack([problem.lower, problem.upper]),
        method="highs-ds",
        options={
            "primal_feasibility_tolerance": config.tol,
            "dual_feasibility_tolerance": config.tol,
            "maxiter": max_iter,
            "presolve": config.presolve,
        },
    )
    status = _STATUS.get(res.status, Status.NUMERICAL)
    nit = int(getattr(res, "nit", 0) or 0)
    if status is not Status.OPTIMAL or res.x is None:
        return LpSolution(status, None, float("nan"), nit, res.message)

    # bounds are exact in the model; clip away solver round-off
    x = np.clip(res.x, problem.lower, problem.upper)
    viol = problem.violation(x)
    return LpSolution(
        status=status,
        x=x,
        objective=float(problem.cost @ x),
        iterations=nit,
        diagnostics=res.message,
        max_violation=float(viol.max()) if viol.size else 0.0,
    )


def format_lp(problem: LpProblem, digits: int = 10) -> str:
    """Plain-text dump, one constraint per line, fixed-point numbers.

    Meant for eyeballing or diffing against other solvers, not for parsing
    back in.
    """
    names = problem.names or tuple(f"x{j}" for j in range(problem.n_vars))
    fmt = f"{{:+.{digits}f}}"

    def term(c, j):
        return f"{fmt.format(c)} {names[j]}"

    lines = ["minimize"]
    obj = [term(c, j) for j, c in enumerate(problem.cost) if c != 0.0]
    lines.append("  obj: " + (" ".join(obj) if obj else "0"))
    lines.append("subject to")
    A = problem.matrix().tocsr()
    A.sum_duplicates()
    op = {LE: "<=", EQ: "=", GE: ">="}
    for i in range(problem.n_rows):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        body = " ".join(term(v, j) for v, j in zip(A.data[lo:hi], A.indices[lo:hi]))
        lines.append(f"  r{i}: {body or '0'} {op[problem.sense[i]]} {fmt.format(problem.rhs[i])}")
    lines.append("bounds")
    for j in range(problem.n_vars):
        lines.append(f"  {fmt.format(problem.lower[j])} <= {names[j]} <= {fmt.format(problem.upper[j])}")
    lines.append("end")
    return "\n".join(lines) + "\n"
