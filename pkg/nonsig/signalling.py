"""Signalling measure, empirical strategy estimates and the threshold signalling test."""
from typing import Optional, Sequence

import numpy as np

from .game_model import EstimatedStrategy, SignallingDirection, _prod, all_directions
from .models import SigReport

CONDITIONAL = "conditional"
JOINT = "joint"


def _table(strategy_or_table) -> np.ndarray:
    return strategy_or_table.table if hasattr(strategy_or_table, "table") else np.asarray(strategy_or_table)


def _coalition_marginal(table: np.ndarray, direction: SignallingDirection) -> np.ndarray:
    """M(r) = O(∘, b^ī | r, s^ī) for every r in player i's question alphabet."""
    i = direction.player
    q_index = list(direction.others_questions)
    q_index.insert(i, slice(None))
    a_index = list(direction.others_answers)
    a_index.insert(i, slice(None))
    return table[tuple(q_index) + tuple(a_index)].sum(axis=-1)


def sig_value(question_dist: np.ndarray, strategy_or_estimate, direction: SignallingDirection,
              form: str = CONDITIONAL) -> Optional[float]:
    """Signalling of one direction; None when Σ_r Q(r, s^ī) = 0 (undefined, not zero)."""
    Q = np.asarray(question_dist, dtype=float)
    table = _table(strategy_or_estimate)
    i = direction.player
    q_index = list(direction.others_questions)
    q_index.insert(i, slice(None))
    column = Q[tuple(q_index)]
    mass = column.sum()
    if mass <= 0:
        return None
    prior = column / mass
    M = _coalition_marginal(table, direction)
    s = direction.own_question
    if form == CONDITIONAL:
        return float(column[s] * (M[s] - prior @ M))
    if form == JOINT:
        joint_mass = float(column @ M)
        if joint_mass == 0.0:
            return 0.0
        posterior = column[s] * M[s] / joint_mass
        return float(joint_mass * (posterior - prior[s]))
    raise ValueError(f"unknown form {form!r}; use {CONDITIONAL!r} or {JOINT!r}")


def sig_tensor(question_dist: np.ndarray, table: np.ndarray, player: int) -> np.ndarray:
    """Conditional-form signalling of every direction of `player`.

    Result shape is question_shape + answers of the other players; NaN marks undefined directions.
    """
    Q = np.asarray(question_dist, dtype=float)
    m = Q.ndim
    M = table.sum(axis=m + player)
    mass = Q.sum(axis=player, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        prior = np.where(mass > 0, Q / np.where(mass > 0, mass, 1.0), 0.0)
    tail = (1,) * (m - 1)
    average = (prior.reshape(Q.shape + tail) * M).sum(axis=player, keepdims=True)
    sig = Q.reshape(Q.shape + tail) * (M - average)
    undefined = np.broadcast_to((mass == 0).reshape(mass.shape + tail), sig.shape)
    return np.where(undefined, np.nan, sig)


def summed_sig_gap(question_dist: np.ndarray, first, second, player: int) -> float:
    """Σ over (others' answers, q) of |Sig(first) − Sig(second)| for one player; undefined directions count 0."""
    gap = sig_tensor(question_dist, _table(first), player) - sig_tensor(question_dist, _table(second), player)
    return float(np.nansum(np.abs(gap)))


def estimate_strategy(questions, answers, question_alphabets: Sequence[int],
                      answer_alphabets: Sequence[int]) -> EstimatedStrategy:
    """f^q_a = #(q, a) / #q, all-zero rows for questions that never occur."""
    qs = np.asarray(questions, dtype=np.int64)
    as_ = np.asarray(answers, dtype=np.int64)
    if qs.shape[0] != as_.shape[0]:
        raise ValueError(f"{qs.shape[0]} question tuples but {as_.shape[0]} answer tuples")
    qshape, ashape = tuple(question_alphabets), tuple(answer_alphabets)
    nq, na = _prod(qshape), _prod(ashape)
    if qs.shape[0] == 0:
        return EstimatedStrategy(np.zeros(qshape + ashape), np.zeros(qshape, dtype=np.int64))
    flat_q = np.ravel_multi_index(tuple(qs.T), qshape)
    flat_a = np.ravel_multi_index(tuple(as_.T), ashape)
    counts = np.bincount(flat_q, minlength=nq)
    joint = np.bincount(flat_q * na + flat_a, minlength=nq * na).reshape(nq, na).astype(float)
    seen = counts > 0
    joint[seen] /= counts[seen, None]
    return EstimatedStrategy(joint.reshape(qshape + ashape), counts.reshape(qshape))


def signalling_test_estimate(direction: SignallingDirection, estimate: EstimatedStrategy, zeta: float,
                             epsilon: float, question_dist: np.ndarray) -> bool:
    if zeta < 7 * epsilon - 1e-12:
        raise ValueError(f"zeta={zeta} must be at least 7·epsilon={7 * epsilon}")
    if estimate.counts[direction.question()] == 0:
        return False
    value = sig_value(question_dist, estimate, direction, CONDITIONAL)
    if value is None:
        return False
    return value >= zeta - 2 * epsilon - 1e-12


def signalling_test(direction: SignallingDirection, test_questions, test_answers, zeta: float, epsilon: float,
                    question_dist: np.ndarray, answer_alphabets: Sequence[int]) -> bool:
    """T = 1 iff Sig of the test-data estimate reaches ζ - 2ε (inclusive)."""
    Q = np.asarray(question_dist)
    estimate = estimate_strategy(test_questions, test_answers, Q.shape, answer_alphabets)
    return signalling_test_estimate(direction, estimate, zeta, epsilon, Q)


def max_sig(question_dist: np.ndarray, strategy, answer_alphabets: Optional[Sequence[int]] = None) -> SigReport:
    """Conditional-form signalling over every direction, with the maximizer."""
    Q = np.asarray(question_dist, dtype=float)
    table = _table(strategy)
    m = Q.ndim
    ashape = tuple(table.shape[m:]) if answer_alphabets is None else tuple(answer_alphabets)
    tensors = [sig_tensor(Q, table, i) for i in range(m)] if m >= 2 else []
    values = {}
    best_key, best = None, None
    for direction in all_directions(Q.shape, ashape):
        v = tensors[direction.player][direction.question() + direction.others_answers]
        value = None if np.isnan(v) else float(v)
        key = direction.key()
        values[key] = value
        if value is not None and (best is None or value > best):
            best_key, best = key, value
    return SigReport(values=values, max_direction=best_key, max_value=best)
