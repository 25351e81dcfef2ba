"""Dense linear programs: maximize c·x s.t. Ax ≤ b, Ex = g, x_j ≥ 0 where flagged.

The default engine is a two-phase tableau simplex with Bland's rule. Primal values
and duals are recomputed from the final basis against the original data, so the
returned pair is complementary by construction; both are then certified against
the tolerances before `optimal` is reported.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .settings import settings
from .telemetry import LP_PIVOTS, LP_SOLVES

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpError(RuntimeError):
    pass


def _as_matrix(m, cols: int) -> np.ndarray:
    if m is None:
        return np.zeros((0, cols))
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else np.zeros((0, cols))
    return arr


@dataclass(frozen=True, eq=False)
class LinearProgram:
    objective: np.ndarray
    ineq_matrix: np.ndarray
    ineq_rhs: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    nonneg_mask: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        n = c.size
        A = _as_matrix(self.ineq_matrix, n)
        E = _as_matrix(self.eq_matrix, n)
        b = np.asarray(self.ineq_rhs, dtype=float).reshape(-1)
        g = np.asarray(self.eq_rhs, dtype=float).reshape(-1)
        mask = np.asarray(self.nonneg_mask, dtype=bool).reshape(-1)
        if A.shape[1] != n or E.shape[1] != n:
            raise LpError(f"constraint matrices {A.shape}, {E.shape} do not have {n} columns")
        if b.size != A.shape[0] or g.size != E.shape[0]:
            raise LpError("right-hand sides do not match the number of rows")
        if mask.size != n:
            raise LpError(f"nonneg_mask has {mask.size} entries for {n} variables")
        for arr in (c, A, E, b, g):
            if not np.all(np.isfinite(arr)):
                raise LpError("linear program coefficients must be finite")
            arr.setflags(write=False)
        mask.setflags(write=False)
        for name, arr in (("objective", c), ("ineq_matrix", A), ("ineq_rhs", b),
                          ("eq_matrix", E), ("eq_rhs", g), ("nonneg_mask", mask)):
            object.__setattr__(self, name, arr)

    @classmethod
    def create(cls, objective, A_ub=None, b_ub=None, A_eq=None, b_eq=None, nonneg=True) -> "LinearProgram":
        c = np.asarray(objective, dtype=float).reshape(-1)
        n = c.size
        mask = np.full(n, True) if nonneg is True else (np.full(n, False) if nonneg is False else nonneg)
        A = _as_matrix(A_ub, n)
        E = _as_matrix(A_eq, n)
        b = np.zeros(0) if b_ub is None else b_ub
        g = np.zeros(0) if b_eq is None else b_eq
        return cls(c, A, b, E, g, mask)

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_ineq(self) -> int:
        return self.ineq_matrix.shape[0]

    @property
    def num_eq(self) -> int:
        return self.eq_matrix.shape[0]


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    primal: np.ndarray
    objective_value: float
    duals_ineq: np.ndarray
    duals_eq: np.ndarray
    pivots: int = 0
    secondary_value: Optional[float] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def dual_objective_of(lp: LinearProgram, sol: LpSolution) -> float:
    return float(lp.ineq_rhs @ sol.duals_ineq + lp.eq_rhs @ sol.duals_eq)


def _empty(lp: LinearProgram, status: str, pivots: int = 0) -> LpSolution:
    value = float("-inf") if status == INFEASIBLE else float("inf")
    return LpSolution(status, np.full(lp.num_vars, np.nan), value,
                      np.full(lp.num_ineq, np.nan), np.full(lp.num_eq, np.nan), pivots)


# ------- Tableau simplex -------

def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    hit = np.flatnonzero(factors)
    if hit.size:
        T[hit] -= np.outer(factors[hit], T[row])


def _bland(T: np.ndarray, basis: np.ndarray, allowed: int, tol: float, max_pivots: int) -> Tuple[str, int]:
    """Maximize over the tableau; the last row holds reduced costs and -objective."""
    pivots = 0
    while True:
        entering = np.flatnonzero(T[-1, :allowed] > tol)
        if entering.size == 0:
            return OPTIMAL, pivots
        col = int(entering[0])
        column = T[:-1, col]
        positive = column > tol
        if not positive.any():
            return UNBOUNDED, pivots
        rhs = np.maximum(T[:-1, -1], 0.0)
        ratios = np.full(column.size, np.inf)
        ratios[positive] = rhs[positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        row = int(ties[np.argmin(basis[ties])])
        _pivot(T, row, col)
        basis[row] = col
        pivots += 1
        if pivots > max_pivots:
            raise LpError(f"simplex exceeded {max_pivots} pivots")


def _standard_form(lp: LinearProgram):
    """Rows [A; E] with slacks on the A rows, free variables split, rows flipped to b ≥ 0."""
    n = lp.num_vars
    free = np.flatnonzero(~lp.nonneg_mask)
    X = np.vstack([lp.ineq_matrix, lp.eq_matrix])
    rhs = np.concatenate([lp.ineq_rhs, lp.eq_rhs])
    k = lp.num_ineq
    struct = np.hstack([X, -X[:, free]])
    slack = np.zeros((X.shape[0], k))
    slack[np.arange(k), np.arange(k)] = 1.0
    M = np.hstack([struct, slack])
    sign = np.where(rhs < 0, -1.0, 1.0)
    M = M * sign[:, None]
    rhs = rhs * sign
    cost = np.concatenate([lp.objective, -lp.objective[free], np.zeros(k)])
    return M, rhs, cost, sign, free


def _solve_simplex(lp: LinearProgram, feas_tol: float) -> LpSolution:
    n = lp.num_vars
    k = lp.num_ineq
    M, rhs, cost, sign, free = _standard_form(lp)
    rows, cols = M.shape
    tol = 1e-11
    slack_start = n + free.size

    # initial basis: unflipped slacks where possible, artificials elsewhere
    basis = np.full(rows, -1)
    needs_art = []
    for r in range(rows):
        if r < k and sign[r] > 0:
            basis[r] = slack_start + r
        else:
            needs_art.append(r)
    n_art = len(needs_art)
    T = np.zeros((rows + 1, cols + n_art + 1))
    T[:rows, :cols] = M
    T[:rows, -1] = rhs
    for j, r in enumerate(needs_art):
        T[r, cols + j] = 1.0
        basis[r] = cols + j

    pivots = 0
    keep = np.arange(rows)
    if n_art:
        T[-1, cols:cols + n_art] = -1.0
        for r in needs_art:
            T[-1] += T[r]
        status, used = _bland(T, basis, cols + n_art, tol, settings.lp_max_pivots)
        pivots += used
        phase1 = -T[-1, -1]
        if phase1 < -feas_tol * max(1.0, float(np.abs(rhs).max(initial=0.0))):
            logger.debug("phase 1 infeasible: residual %.3g", phase1)
            return _empty(lp, INFEASIBLE, pivots)
        redundant = []
        for r in range(rows):
            if basis[r] < cols:
                continue
            candidates = np.flatnonzero(np.abs(T[r, :cols]) > tol)
            if candidates.size:
                _pivot(T, r, int(candidates[0]))
                basis[r] = int(candidates[0])
                pivots += 1
            else:
                redundant.append(r)
        if redundant:
            logger.debug("dropping %d redundant rows", len(redundant))
        keep = np.setdiff1d(np.arange(rows), redundant)
        T = np.vstack([T[keep], T[-1:]])
        T = np.delete(T, np.arange(cols, cols + n_art), axis=1)
        basis = basis[keep]

    T[-1] = 0.0
    T[-1, :cols] = cost
    T[-1] -= cost[basis] @ T[:-1]
    status, used = _bland(T, basis, cols, tol, settings.lp_max_pivots)
    pivots += used
    LP_PIVOTS.observe(pivots)
    if status == UNBOUNDED:
        return _empty(lp, UNBOUNDED, pivots)

    B = M[keep][:, basis]
    try:
        x_basic = np.linalg.solve(B, rhs[keep])
        y_kept = np.linalg.solve(B.T, cost[basis])
    except np.linalg.LinAlgError:
        x_basic = T[:-1, -1].copy()
        y_kept = np.linalg.lstsq(B.T, cost[basis], rcond=None)[0]
    x_std = np.zeros(cols)
    x_std[basis] = x_basic
    x_std = np.maximum(x_std, 0.0)
    x = x_std[:n].copy()
    x[free] -= x_std[n:n + free.size]

    y = np.zeros(rows)
    y[keep] = y_kept
    y = y * sign
    duals_ineq = np.maximum(y[:k], 0.0)
    duals_eq = y[k:]
    return LpSolution(OPTIMAL, x, float(lp.objective @ x), duals_ineq, duals_eq, pivots)


# ------- HiGHS cross-check backend -------

def _solve_highs(lp: LinearProgram) -> LpSolution:
    from scipy.optimize import linprog

    bounds = [(0, None) if nn else (None, None) for nn in lp.nonneg_mask]
    res = linprog(
        -lp.objective,
        A_ub=lp.ineq_matrix if lp.num_ineq else None,
        b_ub=lp.ineq_rhs if lp.num_ineq else None,
        A_eq=lp.eq_matrix if lp.num_eq else None,
        b_eq=lp.eq_rhs if lp.num_eq else None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return _empty(lp, INFEASIBLE)
    if res.status == 3:
        return _empty(lp, UNBOUNDED)
    if res.status != 0:
        raise LpError(f"HiGHS failed: {res.message}")
    duals_ineq = -np.asarray(res.ineqlin.marginals, dtype=float) if lp.num_ineq else np.zeros(0)
    duals_eq = -np.asarray(res.eqlin.marginals, dtype=float) if lp.num_eq else np.zeros(0)
    x = np.asarray(res.x, dtype=float)
    return LpSolution(OPTIMAL, x, float(lp.objective @ x), np.maximum(duals_ineq, 0.0), duals_eq)


# ------- Certification -------

def residuals(lp: LinearProgram, sol: LpSolution) -> dict:
    x = sol.primal
    primal = max(
        float(np.max(lp.ineq_matrix @ x - lp.ineq_rhs, initial=0.0)),
        float(np.max(np.abs(lp.eq_matrix @ x - lp.eq_rhs), initial=0.0)),
        float(np.max(-x[lp.nonneg_mask], initial=0.0)),
    )
    reduced = lp.objective - lp.ineq_matrix.T @ sol.duals_ineq - lp.eq_matrix.T @ sol.duals_eq
    dual = max(
        float(np.max(reduced[lp.nonneg_mask], initial=0.0)),
        float(np.max(np.abs(reduced[~lp.nonneg_mask]), initial=0.0)),
        float(np.max(-sol.duals_ineq, initial=0.0)),
    )
    gap = abs(sol.objective_value - dual_objective_of(lp, sol))
    return {"primal": primal, "dual": dual, "gap": gap}


def _certify(lp: LinearProgram, sol: LpSolution, feas_tol: float, gap_tol: float) -> None:
    r = residuals(lp, sol)
    scale = 1.0 + float(np.max(np.abs(np.concatenate([lp.ineq_rhs, lp.eq_rhs, lp.objective])), initial=0.0))
    if r["primal"] > feas_tol * scale or r["dual"] > feas_tol * scale or r["gap"] > gap_tol * scale:
        raise LpError(
            f"solution failed certification: primal {r['primal']:.3g}, dual {r['dual']:.3g}, gap {r['gap']:.3g}"
        )


def solve(lp: LinearProgram, feas_tol: Optional[float] = None, gap_tol: Optional[float] = None,
          method: Optional[str] = None) -> LpSolution:
    feas_tol = settings.feas_tol if feas_tol is None else feas_tol
    gap_tol = settings.gap_tol if gap_tol is None else gap_tol
    method = (method or settings.lp_method).lower()
    logger.debug("solving LP: %d vars, %d ineq, %d eq (%s)", lp.num_vars, lp.num_ineq, lp.num_eq, method)
    if method == "simplex":
        sol = _solve_simplex(lp, feas_tol)
    elif method == "highs":
        sol = _solve_highs(lp)
    else:
        raise LpError(f"unknown LP method {method!r}")
    if sol.optimal:
        _certify(lp, sol, feas_tol, gap_tol)
    LP_SOLVES.labels(method=method, status=sol.status).inc()
    return sol


def solve_with_secondary(lp: LinearProgram, secondary_objective: Sequence[float], sense: str = "min",
                         feas_tol: Optional[float] = None, gap_tol: Optional[float] = None,
                         method: Optional[str] = None) -> LpSolution:
    """Optimize a secondary objective over the primary optimal face.

    The returned duals are those of the primary solve.
    """
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    gap_tol = settings.gap_tol if gap_tol is None else gap_tol
    s = np.asarray(secondary_objective, dtype=float).reshape(-1)
    if s.size != lp.num_vars:
        raise LpError(f"secondary objective has {s.size} entries for {lp.num_vars} variables")
    first = solve(lp, feas_tol, gap_tol, method)
    if not first.optimal:
        return first
    face = LinearProgram(
        s if sense == "max" else -s,
        np.vstack([lp.ineq_matrix, -lp.objective.reshape(1, -1)]),
        np.append(lp.ineq_rhs, -(first.objective_value - gap_tol)),
        lp.eq_matrix,
        lp.eq_rhs,
        lp.nonneg_mask,
    )
    second = solve(face, feas_tol, gap_tol, method)
    if not second.optimal:
        return second
    x = second.primal
    return LpSolution(OPTIMAL, x, float(lp.objective @ x), first.duals_ineq, first.duals_eq,
                      first.pivots + second.pivots, float(s @ x))


def dualize(lp: LinearProgram) -> LinearProgram:
    """Dual in maximize form: variables [y (one per ≤ row, ≥ 0), w (one per = row, free)].

    Its optimal value is the negated dual optimum min b·y + g·w.
    """
    k, l = lp.num_ineq, lp.num_eq
    At = np.hstack([lp.ineq_matrix.T, lp.eq_matrix.T])
    nn = lp.nonneg_mask
    return LinearProgram(
        -np.concatenate([lp.ineq_rhs, lp.eq_rhs]),
        -At[nn],
        -lp.objective[nn],
        At[~nn],
        lp.objective[~nn],
        np.concatenate([np.full(k, True), np.full(l, False)]),
    )


def debug_dump(lp: LinearProgram, names: Optional[List[str]] = None, precision: int = 4) -> str:
    """Plain-text tableau: one line per row, coefficients then relation and right-hand side."""
    names = names or [f"x{j}" for j in range(lp.num_vars)]

    def fmt(v: float) -> str:
        return f"{v:.{precision}g}"

    lines = ["max " + " ".join(fmt(v) for v in lp.objective), "vars " + " ".join(names)]
    for row, b in zip(lp.ineq_matrix, lp.ineq_rhs):
        lines.append(" ".join(fmt(v) for v in row) + " <= " + fmt(b))
    for row, g in zip(lp.eq_matrix, lp.eq_rhs):
        lines.append(" ".join(fmt(v) for v in row) + " = " + fmt(g))
    lines.append("nonneg " + "".join("1" if v else "0" for v in lp.nonneg_mask))
    return "\n".join(lines)
