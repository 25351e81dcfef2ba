"""Non-signalling value programs, κ, threshold constants and the incomplete-support fixes.

Every builder accepts a Game or a LiftedGame. For a lifted game the signalling rows
are written with the lifted marginal Q̃ while the objective keeps the original Q.
"""
import itertools
import json
import logging
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from .game_model import (
    Game,
    GameError,
    SignallingDirection,
    Strategy,
    _prod,
    _require_valid,
    load_game,
)
from .lp_engine import LinearProgram, dualize, solve, solve_with_secondary
from .models import (
    AnalysisReport,
    FeasibilityReport,
    GameSpec,
    LiftedGameSpec,
    LiftedQuestionEntry,
    ParameterCheck,
    ThresholdBound,
    ThresholdParameters,
)
from .settings import settings

logger = logging.getLogger(__name__)

_LOG_MAX = math.log(1e300)


class SolverError(RuntimeError):
    pass


class SizeLimitError(ValueError):
    pass


# ------- Lifted games -------

@dataclass(frozen=True, eq=False)
class LiftedGame:
    base: Game
    eta: float
    dummy_set: FrozenSet[Tuple[int, ...]]
    dummy_count: int
    lifted_dist: np.ndarray  # shape question_shape + (2,), last axis is d

    @property
    def players(self) -> int:
        return self.base.players

    @property
    def question_alphabets(self) -> Tuple[int, ...]:
        return self.base.question_alphabets

    @property
    def answer_alphabets(self) -> Tuple[int, ...]:
        return self.base.answer_alphabets

    @property
    def question_shape(self) -> Tuple[int, ...]:
        return self.base.question_shape

    @property
    def answer_shape(self) -> Tuple[int, ...]:
        return self.base.answer_shape

    @property
    def question_count(self) -> int:
        return self.base.question_count

    @property
    def answer_count(self) -> int:
        return self.base.answer_count

    @property
    def name(self) -> Optional[str]:
        return self.base.name

    @cached_property
    def marginal(self) -> np.ndarray:
        """Q̃(q) = Σ_d P(q, d)."""
        arr = self.lifted_dist.sum(axis=-1)
        arr.setflags(write=False)
        return arr

    def as_game(self) -> Game:
        """Q̃ with every answer accepted on dummy tuples."""
        accept = np.array(self.base.accept)
        for q in self.dummy_set:
            accept[q] = True
        return Game.from_arrays(self.marginal, accept, name=f"{self.base.name or 'game'}+lift")

    def to_spec(self) -> LiftedGameSpec:
        entries = [
            LiftedQuestionEntry(q=[int(v) for v in idx[:-1]], d=int(idx[-1]), p=float(self.lifted_dist[tuple(idx)]))
            for idx in np.argwhere(self.lifted_dist > 0)
        ]
        return LiftedGameSpec(base=self.base.to_spec(), eta=self.eta, dummy_count=self.dummy_count,
                              lifted_questions=entries)


GameLike = Union[Game, LiftedGame]


def complete_support_lift(game: Game, eta: float) -> LiftedGame:
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    dist = game.dist
    dummy = dist == 0
    count = int(dummy.sum())
    lifted = np.zeros(dist.shape + (2,))
    if count == 0:
        lifted[..., 0] = dist
    else:
        lifted[..., 0] = dist * (1.0 - eta)
        lifted[..., 1] = np.where(dummy, eta / count, 0.0)
    lifted.setflags(write=False)
    dummy_set = frozenset(tuple(int(v) for v in idx) for idx in np.argwhere(dummy)) if count else frozenset()
    return LiftedGame(game, float(eta), dummy_set, count, lifted)


def load_game_like(source: str) -> GameLike:
    """Like game_model.load_game, but also accepts a lifted-game JSON file."""
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as f:
            raw = json.load(f)
        if isinstance(raw, dict) and "base" in raw:
            spec = LiftedGameSpec.model_validate(raw)
            base = Game.from_spec(spec.base)
            _require_valid(base)
            return complete_support_lift(base, spec.eta)
        base = Game.from_spec(GameSpec.model_validate(raw))
        _require_valid(base)
        return base
    return load_game(source)


# ------- Program assembly -------

def _parts(game: GameLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(objective Q, constraint Q, predicate)."""
    if isinstance(game, LiftedGame):
        return game.base.dist, game.marginal, game.base.accept
    return game.dist, game.dist, game.accept


def _strides(shape: Sequence[int]) -> np.ndarray:
    out = np.ones(len(shape), dtype=np.int64)
    for k in range(len(shape) - 2, -1, -1):
        out[k] = out[k + 1] * shape[k + 1]
    return out


def _with(t: Sequence[int], pos: int, v: int) -> Tuple[int, ...]:
    out = list(t)
    out.insert(pos, v)
    return tuple(out)


def _signalling_block(constraint_dist: np.ndarray, answer_shape: Tuple[int, ...],
                      prefactor: Optional[np.ndarray] = None) -> Tuple[np.ndarray, List[SignallingDirection]]:
    """Rows prefactor(q)·[O(∘,a^ī|q) - Σ_r Q(r|q^ī) O(∘,a^ī|r,q^ī)], one per (i, q, a^ī).

    Blocks whose conditioning mass Σ_r Q(r, q^ī) is zero are omitted.
    """
    qshape = constraint_dist.shape
    m = len(qshape)
    na = _prod(answer_shape)
    nvars = _prod(qshape) * na
    prefactor = constraint_dist if prefactor is None else prefactor
    if m < 2:
        return np.zeros((0, nvars)), []
    qs, as_ = _strides(qshape), _strides(answer_shape)
    rows: List[np.ndarray] = []
    dirs: List[SignallingDirection] = []
    for i in range(m):
        others_q = [range(s) for k, s in enumerate(qshape) if k != i]
        others_a = [range(s) for k, s in enumerate(answer_shape) if k != i]
        for s_bar in itertools.product(*others_q):
            column = np.array([constraint_dist[_with(s_bar, i, r)] for r in range(qshape[i])])
            mass = column.sum()
            if mass <= 0:
                continue
            cond = column / mass
            for s_i in range(qshape[i]):
                weight = float(prefactor[_with(s_bar, i, s_i)])
                for b_bar in itertools.product(*others_a):
                    row = np.zeros(nvars)
                    if weight != 0.0:
                        for r in range(qshape[i]):
                            coef = weight * ((1.0 if r == s_i else 0.0) - cond[r])
                            if coef == 0.0:
                                continue
                            q_flat = int(np.dot(_with(s_bar, i, r), qs))
                            for x in range(answer_shape[i]):
                                a_flat = int(np.dot(_with(b_bar, i, x), as_))
                                row[q_flat * na + a_flat] += coef
                    rows.append(row)
                    dirs.append(SignallingDirection(i, tuple(b_bar), s_i, tuple(s_bar)))
    return (np.vstack(rows) if rows else np.zeros((0, nvars))), dirs


def _objective(game: GameLike) -> np.ndarray:
    obj_dist, _, accept = _parts(game)
    m = obj_dist.ndim
    return (obj_dist.reshape(obj_dist.shape + (1,) * m) * accept).reshape(-1).astype(float)


def _normalization(game: GameLike) -> np.ndarray:
    nq, na = game.question_count, game.answer_count
    return np.kron(np.eye(nq), np.ones((1, na)))


def signalling_directions(game: GameLike) -> List[SignallingDirection]:
    """Directions of the signalling rows of build_primal, in row order."""
    _, cons, _ = _parts(game)
    return _signalling_block(cons, game.answer_shape)[1]


def build_primal(game: GameLike, relaxed: bool = True, slack=None) -> LinearProgram:
    """Variables O(a|q) flattened as q_flat·|A| + a_flat.

    relaxed=True writes the signalling rows as ≤ slack (default 0), otherwise as = 0.
    """
    _, cons, _ = _parts(game)
    S, _ = _signalling_block(cons, game.answer_shape)
    N = _normalization(game)
    c = _objective(game)
    nq = game.question_count
    if relaxed:
        rhs = np.zeros(S.shape[0]) if slack is None else np.broadcast_to(np.asarray(slack, dtype=float), (S.shape[0],))
        return LinearProgram.create(c, A_ub=S, b_ub=np.array(rhs), A_eq=N, b_eq=np.ones(nq))
    return LinearProgram.create(c, A_eq=np.vstack([S, N]), b_eq=np.concatenate([np.zeros(S.shape[0]), np.ones(nq)]))


def build_dual(game: GameLike) -> LinearProgram:
    """Dual of the relaxed primal: variables [y_i(q,a^ī) ≥ 0 per signalling row, z(q) free].

    Maximizes -Σ_q z(q); the dual optimum is the negated objective value.
    """
    return dualize(build_primal(game, relaxed=True))


def _solve_or_raise(lp: LinearProgram, what: str):
    sol = solve(lp)
    if not sol.optimal:
        raise SolverError(f"{what}: LP status {sol.status}")
    return sol


def ns_value(game: GameLike) -> float:
    return _solve_or_raise(build_primal(game, relaxed=True), "ns_value").objective_value


def equality_value(game: GameLike) -> float:
    return _solve_or_raise(build_primal(game, relaxed=False), "equality program").objective_value


def optimal_strategy(game: GameLike) -> Strategy:
    sol = _solve_or_raise(build_primal(game, relaxed=True), "optimal_strategy")
    rows = np.maximum(sol.primal, 0.0).reshape(game.question_count, game.answer_count)
    rows = rows / rows.sum(axis=1, keepdims=True)
    return Strategy(rows.reshape(game.question_shape + game.answer_shape))


def kappa(game: GameLike, minimize: bool = False) -> float:
    """Σ_j y*_j over the signalling rows of an optimal dual."""
    dual = build_dual(game)
    d = len(signalling_directions(game))
    if minimize:
        secondary = np.concatenate([np.ones(d), np.zeros(dual.num_vars - d)])
        sol = solve_with_secondary(dual, secondary, "min")
        if not sol.optimal:
            raise SolverError(f"kappa: LP status {sol.status}")
    else:
        sol = _solve_or_raise(dual, "kappa")
    return float(np.maximum(sol.primal[:d], 0.0).sum())


def perturbed_value(game: GameLike, slack) -> float:
    """Relaxed program with every signalling right-hand side raised to `slack` (scalar or per row)."""
    s = np.asarray(slack, dtype=float)
    if np.any(s < 0):
        raise ValueError("slack must be non-negative")
    return _solve_or_raise(build_primal(game, relaxed=True, slack=s), "perturbed_value").objective_value


def analyze(game: GameLike) -> AnalysisReport:
    value = ns_value(game)
    eq_value = equality_value(game)
    k = kappa(game, minimize=False)
    k_min = kappa(game, minimize=True)
    d = test_count_d(game) if game.players >= 2 else 0
    return AnalysisReport(
        ns_value=min(1.0, max(0.0, value)),
        alpha=1.0 - value,
        kappa=k,
        kappa_minimized=k_min,
        d=d,
        relaxed_equals_equality=abs(eq_value - value) <= 2 * settings.gap_tol,
    )


# ------- Two-player modified programs -------

def build_modified_two_player(game: Game, eta: float, relaxed: bool = False) -> LinearProgram:
    """Signalling rows weighted by Q(q) on the support and by eta off it.

    relaxed=True uses ≤ 0 signalling rows and Σ_a O(a|q) ≤ 1.
    """
    if game.players != 2:
        raise GameError(f"modified program is defined for two players, got {game.players}")
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    dist = game.dist
    prefactor = np.where(dist > 0, dist, eta)
    S, _ = _signalling_block(dist, game.answer_shape, prefactor)
    N = _normalization(game)
    c = _objective(game)
    rhs = np.concatenate([np.zeros(S.shape[0]), np.ones(game.question_count)])
    if relaxed:
        return LinearProgram.create(c, A_ub=np.vstack([S, N]), b_ub=rhs)
    return LinearProgram.create(c, A_eq=np.vstack([S, N]), b_eq=rhs)


def modified_duals(game: Game, eta: float) -> np.ndarray:
    """Signalling-row duals of the relaxed modified program, chosen to minimize the largest entry."""
    lp = build_modified_two_player(game, eta, relaxed=True)
    d = len(_signalling_block(game.dist, game.answer_shape)[1])
    dual = dualize(lp)
    first = _solve_or_raise(dual, "modified dual")
    n = dual.num_vars

    def pad(M: np.ndarray) -> np.ndarray:
        return np.hstack([M, np.zeros((M.shape[0], 1))])

    # extra variable t ≥ y_j for every signalling dual; minimize t over the optimal face
    cap = np.hstack([np.eye(d), np.zeros((d, n - d)), -np.ones((d, 1))])
    face = np.append(-dual.objective, 0.0).reshape(1, -1)
    lp2 = LinearProgram(
        np.append(np.zeros(n), -1.0),
        np.vstack([pad(dual.ineq_matrix), face, cap]),
        np.concatenate([dual.ineq_rhs, [-(first.objective_value - settings.gap_tol)], np.zeros(d)]),
        pad(dual.eq_matrix),
        dual.eq_rhs,
        np.append(dual.nonneg_mask, True),
    )
    sol = _solve_or_raise(lp2, "modified dual (min-max)")
    return np.maximum(sol.primal[:d], 0.0)


# ------- Constants -------

def _exp_or_inf(log_value: float) -> float:
    return math.exp(log_value) if log_value < _LOG_MAX else math.inf


def log_sanov_delta(l: int, epsilon: float, alphabet_product: int) -> float:
    if l < 1:
        raise ValueError(f"l must be at least 1, got {l}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return (alphabet_product - 1) * math.log(l + 1) - l * epsilon ** 2 / 2.0


def sanov_delta(l: int, epsilon: float, alphabet_product: int) -> float:
    """(l+1)^(|A||Q|-1) e^(-l ε²/2); inf when the value exceeds 1e300."""
    return _exp_or_inf(log_sanov_delta(l, epsilon, alphabet_product))


def log_definetti_c(n: int, q_count: int, a_count: int) -> float:
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    return q_count * (a_count - 1) * math.log(n + 1)


def definetti_c(n: int, q_count: int, a_count: int) -> float:
    return _exp_or_inf(log_definetti_c(n, q_count, a_count))


def test_count_d(game: GameLike) -> int:
    """Σ_i |Q|·|A|/|A_i| over the full alphabets."""
    if game.players < 2:
        raise ValueError("signalling tests need at least two players")
    nq, na = game.question_count, game.answer_count
    return sum(nq * (na // a) for a in game.answer_alphabets)


def guessing_value(game: GameLike) -> float:
    """W_ns = max over players and supported question tuples of Q(q^i|q^ī)."""
    _, cons, _ = _parts(game)
    best = 0.0
    for i in range(cons.ndim):
        mass = cons.sum(axis=i, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where((cons > 0) & (mass > 0), cons / np.where(mass > 0, mass, 1.0), 0.0)
        best = max(best, float(cond.max(initial=0.0)))
    return best


def _min_support_prob(game: GameLike) -> float:
    _, cons, _ = _parts(game)
    return float(cons[cons > 0].min())


def _repetition_condition(n: int, q_count: int, a_count: int, log_term: float, eps: float) -> Tuple[float, float]:
    """(n/ln n, 20|Q||A|·log_term/ε²)."""
    lhs = n / math.log(n) if n > 1 else 0.0
    return lhs, 20.0 * q_count * a_count * log_term / eps ** 2


def _smallest_even(pred, start: int = 2) -> int:
    lo = start
    if pred(lo):
        return lo
    hi = lo * 2
    while not pred(hi):
        lo, hi = hi, hi * 2
        if hi > 1 << 120:
            raise ValueError("no admissible n below 2^120")
    while hi - lo > 2:
        mid = (lo + hi) // 2
        mid -= mid % 2
        if mid in (lo, hi):
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def required_repetitions(game: GameLike, beta: float, kappa_value: Optional[float] = None) -> int:
    """Smallest even n with n/ln n > 20|Q||A| ln(20κ/β)/(β/10κ)²."""
    k = kappa(game, minimize=True) if kappa_value is None else kappa_value
    if k <= 0:
        return 2
    eps = beta / (10.0 * k)
    nq, na = game.question_count, game.answer_count

    def ok(n: int) -> bool:
        lhs, rhs = _repetition_condition(n, nq, na, math.log(20.0 * k / beta), eps)
        return lhs > rhs

    return _smallest_even(ok, start=4)


def default_parameters(game: GameLike, beta: float, n: int, kappa_value: Optional[float] = None) -> ThresholdParameters:
    """ε = β/(10κ), ζ = 8ε, ν = ε with δ, c, d and W_ns filled in."""
    k = kappa(game, minimize=True) if kappa_value is None else kappa_value
    if k <= 0:
        raise ValueError("kappa is zero: the signalling rows do not constrain this game")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    eps = beta / (10.0 * k)
    nq, na = game.question_count, game.answer_count
    log_delta = log_sanov_delta(n // 2, eps, nq * na)
    log_c = log_definetti_c(n, nq, na)
    return ThresholdParameters(
        epsilon=eps, zeta=8 * eps, nu=eps, beta=beta, n=n,
        delta=_exp_or_inf(log_delta), c=_exp_or_inf(log_c),
        d=test_count_d(game), kappa=k, W_ns=guessing_value(game),
        log_delta=log_delta, log_c=log_c,
    )


def _check(name: str, lhs: float, rhs: float, strict: bool = False, detail: str = "") -> ParameterCheck:
    slack = 1e-12 * max(1.0, abs(lhs), abs(rhs)) if math.isfinite(lhs) and math.isfinite(rhs) else 0.0
    passed = lhs < rhs if strict else lhs <= rhs + slack
    margin = rhs - lhs if math.isfinite(rhs - lhs) else (math.inf if passed else -math.inf)
    return ParameterCheck(name=name, passed=bool(passed), lhs=lhs, rhs=rhs, margin=margin, detail=detail)


def check_parameters(game: GameLike, params: ThresholdParameters, alpha: Optional[float] = None) -> FeasibilityReport:
    """Every relation between the threshold constants, pass/fail with margin (rhs - lhs)."""
    p = params
    nq, na, m = game.question_count, game.answer_count, game.players
    alpha = 1.0 - ns_value(game) if alpha is None else alpha
    checks: List[ParameterCheck] = [
        _check("beta_positive", 0.0, p.beta, strict=True),
        _check("beta_le_alpha", p.beta, alpha),
        _check("epsilon_positive", 0.0, p.epsilon, strict=True),
        _check("epsilon_le_min_q", p.epsilon, _min_support_prob(game)),
        _check("seven_epsilon_le_zeta", 7 * p.epsilon, p.zeta),
        _check("zeta_le_one", p.zeta, 1.0),
        _check("zeta_window", p.zeta + 2 * p.epsilon, p.beta / p.kappa if p.kappa > 0 else math.inf),
        _check("nu_lt_zeta_minus_six_epsilon", p.nu, p.zeta - 6 * p.epsilon, strict=True),
    ]

    # ν lower bound 2cδ/(1-2cδ)·W_ns, evaluated from the formulas in log space
    if p.epsilon > 0 and p.n >= 2:
        log_delta = log_sanov_delta(p.n // 2, p.epsilon, nq * na)
        log_c = log_definetti_c(p.n, nq, na)
        log_2cd = math.log(2.0) + log_c + log_delta
        if log_2cd >= 0:
            lower = math.inf
        else:
            two_cd = math.exp(log_2cd)
            lower = two_cd / (1.0 - two_cd) * p.W_ns
        checks.append(_check("nu_gt_de_finetti_term", lower, p.nu, strict=True))
        checks.append(_consistency("delta_formula", p.delta, log_delta))
        checks.append(_consistency("c_formula", p.c, log_c))
    else:
        checks.append(ParameterCheck(name="nu_gt_de_finetti_term", passed=False, lhs=math.inf, rhs=p.nu,
                                     margin=-math.inf, detail="needs epsilon > 0 and n ≥ 2"))

    d_exact = test_count_d(game)
    checks.append(ParameterCheck(name="d_formula", passed=p.d == d_exact, lhs=p.d, rhs=d_exact,
                                 margin=float(d_exact - p.d)))
    checks.append(_check("d_lt_m_q_a", p.d, m * nq * na, strict=True))
    checks.append(ParameterCheck(name="n_even", passed=p.n % 2 == 0 and p.n >= 2, lhs=p.n % 2, rhs=0.0,
                                 margin=-float(p.n % 2)))

    if p.epsilon > 0 and p.n > 1:
        lhs, rhs = _repetition_condition(p.n, nq, na, math.log(2.0 / p.epsilon), p.epsilon)
        checks.append(_check("repetitions_for_epsilon", rhs, lhs, strict=True))
    if p.beta > 0 and p.kappa > 0 and p.n > 1:
        lhs, rhs = _repetition_condition(p.n, nq, na, math.log(20.0 * p.kappa / p.beta), p.beta / (10.0 * p.kappa))
        checks.append(_check("repetitions_for_beta", rhs, lhs, strict=True))
    return FeasibilityReport(passed=all(c.passed for c in checks), checks=checks)


def _consistency(name: str, value: float, log_value: float) -> ParameterCheck:
    if math.isinf(value):
        ok = log_value >= _LOG_MAX
    else:
        ok = math.isclose(value, _exp_or_inf(log_value), rel_tol=1e-9, abs_tol=1e-300)
    lhs = math.log(value) if value > 0 else -math.inf
    return ParameterCheck(name=name, passed=ok, lhs=lhs, rhs=log_value,
                          margin=0.0 if ok else -abs(lhs - log_value), detail="natural log")


def _log_threshold(m: int, nq: int, na: int, n: int, beta: float, k: float) -> Tuple[float, float]:
    log_c1 = math.log(10.0 * m * nq * na) + 2.0 * (nq * na - 1) * math.log(n + 1)
    if k <= 0:
        return log_c1, -math.inf
    return log_c1, log_c1 - (n / 4.0) * (beta / (10.0 * k)) ** 2


def check_beta(beta: float, alpha: float) -> None:
    """β must lie in (0, α]; gap_tol only widens the upper end when α itself is above it."""
    if alpha <= settings.gap_tol:
        raise ValueError(f"alpha={alpha:.6g} is zero within tolerance: no beta in (0, alpha] exists")
    if not 0.0 < beta <= alpha + settings.gap_tol:
        raise ValueError(f"beta must lie in (0, alpha={alpha:.6g}], got {beta}")


def threshold_bound(game: GameLike, n: int, beta: float, kappa_value: Optional[float] = None,
                    alpha: Optional[float] = None) -> ThresholdBound:
    """min(1, C1·exp(-(n/4)(β/10κ)²)) with C1 = 10 m|Q||A|(n+1)^(2(|Q||A|-1)), κ face-minimized."""
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and at least 2, got {n}")
    alpha = 1.0 - ns_value(game) if alpha is None else alpha
    check_beta(beta, alpha)
    k = kappa(game, minimize=True) if kappa_value is None else kappa_value
    m, nq, na = game.players, game.question_count, game.answer_count
    log_c1, log_bound = _log_threshold(m, nq, na, n, beta, k)
    smallest = _smallest_even(lambda x: _log_threshold(m, nq, na, x, beta, k)[1] < 0.0)
    return ThresholdBound(
        n=n, beta=beta, kappa=k, log_c1=log_c1, log_bound=log_bound,
        bound=min(1.0, math.exp(min(log_bound, 0.0))), smallest_n=smallest,
    )


# ------- LP sensitivity bound -------

def max_inverse_entry(matrix: np.ndarray, max_submatrices: Optional[int] = None) -> float:
    """Δ: the largest |entry| of B⁻¹ over every nonsingular square submatrix B."""
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    r, c = A.shape
    limit = settings.delta_max_submatrices if max_submatrices is None else max_submatrices
    total = sum(math.comb(r, k) * math.comb(c, k) for k in range(1, min(r, c) + 1))
    if total > limit:
        raise SizeLimitError(f"{total} square submatrices exceed the enumeration limit {limit}")
    best = 0.0
    for k in range(1, min(r, c) + 1):
        for rows in itertools.combinations(range(r), k):
            sub_rows = A[list(rows)]
            for cols in itertools.combinations(range(c), k):
                B = sub_rows[:, list(cols)]
                if abs(np.linalg.det(B)) <= 1e-12:
                    continue
                best = max(best, float(np.abs(np.linalg.inv(B)).max()))
    return best


def dual_solution_bound(game: GameLike) -> float:
    """r2·Δ·Σ|c_j|, an upper bound on κ for any basic optimal dual."""
    lp = build_primal(game, relaxed=True)
    A = np.vstack([lp.ineq_matrix, lp.eq_matrix])
    if A.shape[0] > settings.delta_max_columns:
        raise SizeLimitError(
            f"dual constraint matrix has {A.shape[0]} columns; the limit is {settings.delta_max_columns}"
        )
    delta = max_inverse_entry(A)
    return lp.num_vars * delta * float(np.abs(lp.objective).sum())


def lifted_bound(lifted: LiftedGame, n: int, beta: float) -> ThresholdBound:
    """Threshold bound of the lifted program (κ depends on η)."""
    return threshold_bound(lifted, n, beta)
