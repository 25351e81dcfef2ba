"""Monte Carlo simulation of the repeated game and of the experiments built on it.

Trial t of an experiment seeded with s draws all of its randomness from
Philox(SeedSequence([s, t])), so results do not depend on how trials are scheduled.
"""
import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from scipy.stats import binomtest

from .game_model import (
    Game,
    SignallingDirection,
    Strategy,
    echo_strategy,
    strategy_distance,
    uniform_strategy,
)
from .models import (
    ConcentrationReport,
    EstimationReport,
    FrequencyReport,
    GuessingGameReport,
    Interval,
    JointEventReport,
    ReliabilityReport,
    TrialRecord,
)
from .ns_analysis import GameLike, LiftedGame, check_beta, ns_value, optimal_strategy, sanov_delta, threshold_bound
from .settings import settings
from .signalling import estimate_strategy, sig_value, signalling_test
from .telemetry import EXPERIMENT_LAT, TRIALS

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.Generator]


class InadmissibleDirectionError(ValueError):
    pass


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def _rng(seed: Seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else trial_rng(int(seed), 0)


def _check_n(n: int) -> None:
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and at least 2, got {n}")


def _base(game: GameLike) -> Game:
    return game.base if isinstance(game, LiftedGame) else game


# ------- Sampling -------

def _draw(game: Game, count: int, rng: np.random.Generator) -> np.ndarray:
    probs = game.dist.reshape(-1)
    flat = rng.choice(probs.size, size=count, p=probs / probs.sum())
    return np.stack(np.unravel_index(flat, game.question_shape), axis=1)


def sample_questions(game: Game, n: int, seed: Seed) -> np.ndarray:
    """n i.i.d. question tuples from Q as an (n, m) integer array."""
    _check_n(n)
    return _draw(game, n, _rng(seed))


def sample_questions_modified(lifted: LiftedGame, n: int, seed: Seed) -> Tuple[np.ndarray, np.ndarray]:
    """Draws (q, d) from the lifted distribution; returns questions and dummy flags."""
    _check_n(n)
    rng = _rng(seed)
    probs = lifted.lifted_dist.reshape(-1)
    flat = rng.choice(probs.size, size=n, p=probs / probs.sum())
    idx = np.unravel_index(flat, lifted.lifted_dist.shape)
    return np.stack(idx[:-1], axis=1), idx[-1].astype(bool)


# ------- Repeated strategies -------

class RepeatedStrategy:
    """Maps n question tuples (an (n, m) array) to n answer tuples."""
    name = "base"

    def respond(self, questions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class IIDStrategy(RepeatedStrategy):
    name = "iid"

    def __init__(self, strategy: Strategy):
        self.strategy = strategy

    def respond(self, questions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        s = self.strategy
        flat_q = np.ravel_multi_index(tuple(np.asarray(questions).T), s.question_shape)
        cdf = np.cumsum(s.matrix[flat_q], axis=1)
        cdf /= cdf[:, -1:]
        u = 1.0 - rng.random(len(flat_q))
        picks = np.minimum((cdf < u[:, None]).sum(axis=1), cdf.shape[1] - 1)
        return np.stack(np.unravel_index(picks, s.answer_shape), axis=1)


class MixtureStrategy(RepeatedStrategy):
    """One component is drawn per run, then played i.i.d. for every round."""
    name = "mixture"

    def __init__(self, weights: Sequence[float], components: Sequence[Strategy]):
        w = np.asarray(weights, dtype=float)
        if len(w) != len(components) or len(w) == 0:
            raise ValueError("weights and components must be non-empty and of equal length")
        if w.min() < 0 or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        self.weights = w / w.sum()
        self.components = [IIDStrategy(c) for c in components]

    def respond(self, questions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        k = 0 if len(self.components) == 1 else int(rng.choice(len(self.components), p=self.weights))
        return self.components[k].respond(questions, rng)


class PermutedWrapper(RepeatedStrategy):
    """Feeds the inner strategy π(questions) and returns π⁻¹ of its answers, π uniform per run."""
    name = "permuted"

    def __init__(self, inner: RepeatedStrategy):
        self.inner = inner

    def respond(self, questions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        perm = rng.permutation(len(questions))
        inner_answers = self.inner.respond(np.asarray(questions)[perm], rng)
        out = np.empty_like(inner_answers)
        out[perm] = inner_answers
        return out


class EchoStrategy(RepeatedStrategy):
    """Round j: the target answers the source's question of round j; others answer 0."""
    name = "echo"

    def __init__(self, source_player: int, target_player: int, answer_alphabets: Sequence[int]):
        self.source = source_player
        self.target = target_player
        self.answer_alphabets = tuple(answer_alphabets)

    def respond(self, questions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        q = np.asarray(questions)
        answers = np.zeros((len(q), len(self.answer_alphabets)), dtype=np.int64)
        answers[:, self.target] = q[:, self.source] % self.answer_alphabets[self.target]
        return answers


class RoundPeekStrategy(RepeatedStrategy):
    """Inner strategy, except the target answers the source's question `offset` rounds ahead.

    Each round on its own may look non-signalling while the whole strategy signals across rounds.
    """
    name = "echo-peek"

    def __init__(self, inner: RepeatedStrategy, source_player: int, target_player: int,
                 answer_alphabets: Sequence[int], offset: int = 1):
        self.inner = inner
        self.source = source_player
        self.target = target_player
        self.answer_alphabets = tuple(answer_alphabets)
        self.offset = offset

    def respond(self, questions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        q = np.asarray(questions)
        answers = np.array(self.inner.respond(q, rng))
        answers[:, self.target] = np.roll(q[:, self.source], -self.offset) % self.answer_alphabets[self.target]
        return answers


STRATEGY_NAMES = ("iid-optimal", "uniform", "zero", "echo", "echo-peek")


def build_one_game_strategy(name: str, game: GameLike) -> Strategy:
    base = _base(game)
    if name == "iid-optimal":
        return optimal_strategy(game)
    if name == "uniform":
        return uniform_strategy(base.question_alphabets, base.answer_alphabets)
    if name == "zero":
        table = np.zeros(base.question_shape + base.answer_shape)
        table[(Ellipsis,) + (0,) * base.players] = 1.0
        return Strategy(table)
    if name == "echo":
        return echo_strategy(base, source=1, target=0)
    raise ValueError(f"unknown strategy {name!r}; choose one of {', '.join(STRATEGY_NAMES)}")


def build_repeated_strategy(name: str, game: GameLike, permute: bool = False) -> RepeatedStrategy:
    base = _base(game)
    if name == "echo":
        rep: RepeatedStrategy = EchoStrategy(1, 0, base.answer_alphabets)
    elif name == "echo-peek":
        rep = RoundPeekStrategy(IIDStrategy(build_one_game_strategy("uniform", game)), 1, 0, base.answer_alphabets)
    else:
        rep = IIDStrategy(build_one_game_strategy(name, game))
    return PermutedWrapper(rep) if permute else rep


def _as_repeated(strategy) -> RepeatedStrategy:
    return IIDStrategy(strategy) if isinstance(strategy, Strategy) else strategy


# ------- Transcripts -------

@dataclass(frozen=True, eq=False)
class Transcript:
    questions: np.ndarray
    answers: np.ndarray
    dummy_flags: np.ndarray
    win_bits: np.ndarray

    def __post_init__(self):
        n = len(self.questions)
        if not (len(self.answers) == len(self.dummy_flags) == len(self.win_bits) == n):
            raise ValueError("transcript fields must have equal length")
        _check_n(n)
        for name in ("questions", "answers", "dummy_flags", "win_bits"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return len(self.questions)


@dataclass(frozen=True, eq=False)
class TranscriptHalf:
    questions: np.ndarray
    answers: np.ndarray
    dummy_flags: np.ndarray
    win_bits: np.ndarray


def play(game: GameLike, strategy, n: int, seed: Seed) -> Transcript:
    """Sample questions (with dummies for a lifted game), collect answers, score each round."""
    _check_n(n)
    rng = _rng(seed)
    base = _base(game)
    if isinstance(game, LiftedGame):
        questions, dummy = sample_questions_modified(game, n, rng)
    else:
        questions, dummy = sample_questions(base, n, rng), np.zeros(n, dtype=bool)
    answers = np.asarray(_as_repeated(strategy).respond(questions, rng))
    if answers.shape != (n, base.players):
        raise ValueError(f"strategy returned answers of shape {answers.shape}, expected {(n, base.players)}")
    if np.any(answers < 0) or np.any(answers >= np.asarray(base.answer_alphabets)):
        raise ValueError("strategy returned answers outside the answer alphabets")
    wins = base.accept[tuple(questions.T) + tuple(answers.T)] | dummy
    return Transcript(questions, answers, dummy, wins)


def split(transcript: Transcript) -> Tuple[TranscriptHalf, TranscriptHalf]:
    """First n/2 rounds are test data, the last n/2 are game data."""
    h = transcript.n // 2
    t = transcript
    return (
        TranscriptHalf(t.questions[:h], t.answers[:h], t.dummy_flags[:h], t.win_bits[:h]),
        TranscriptHalf(t.questions[h:], t.answers[h:], t.dummy_flags[h:], t.win_bits[h:]),
    )


def winning_frequencies(transcript: Transcript) -> FrequencyReport:
    h = transcript.n // 2
    wins = transcript.win_bits
    f_t = float(wins[:h].mean())
    f_g = float(wins[h:].mean())
    real = ~transcript.dummy_flags
    f_real = float(wins[real].mean()) if real.any() else None
    return FrequencyReport(f=(f_t + f_g) / 2, f_t=f_t, f_g=f_g, f_real=f_real)


# ------- Trial runner -------

def wilson_interval(k: int, n: int, confidence: float = 0.95) -> Interval:
    if n <= 0:
        return Interval(low=0.0, high=1.0)
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return Interval(low=float(ci.low), high=float(ci.high))


def _run_trials(fn: Callable[[int, np.random.Generator], TrialRecord], trials: int, seed: int,
                experiment: str, threads: Optional[int] = None) -> List[TrialRecord]:
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    workers = max(1, min(threads or settings.threads, trials))
    logger.info("%s: %d trials on %d worker(s), seed %d", experiment, trials, workers, seed)
    t0 = time.time()
    if workers == 1:
        out = [fn(t, trial_rng(seed, t)) for t in range(trials)]
    else:
        def run(t: int) -> TrialRecord:
            return fn(t, trial_rng(seed, t))

        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(run, range(trials)))
    elapsed_ms = (time.time() - t0) * 1000
    TRIALS.labels(experiment=experiment).inc(trials)
    EXPERIMENT_LAT.labels(experiment=experiment).observe(elapsed_ms)
    logger.info("%s: done in %.0f ms", experiment, elapsed_ms)
    return out


def _record(seed: int, trial: int, freq: FrequencyReport, **extra) -> TrialRecord:
    return TrialRecord(seed=seed, trial=trial, f=freq.f, f_t=freq.f_t, f_g=freq.f_g, f_real=freq.f_real, **extra)


def simulate(game: GameLike, strategy, n: int, trials: int, seed: int,
             threads: Optional[int] = None) -> List[TrialRecord]:
    rep = _as_repeated(strategy)

    def one(t: int, rng: np.random.Generator) -> TrialRecord:
        return _record(seed, t, winning_frequencies(play(game, rep, n, rng)))

    return _run_trials(one, trials, seed, "simulate", threads)


def write_csv(records: Sequence[TrialRecord], out: Union[str, TextIO]) -> None:
    """One row per trial; None is written as an empty cell."""
    columns = list(TrialRecord.model_fields)

    def cell(v) -> str:
        if v is None:
            return ""
        if isinstance(v, bool):
            return str(int(v))
        return repr(v) if isinstance(v, float) else str(v)

    def emit(f: TextIO) -> None:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for r in records:
            w.writerow([cell(getattr(r, c)) for c in columns])

    if isinstance(out, str):
        with open(out, "w", encoding="utf-8", newline="") as f:
            emit(f)
    else:
        emit(out)


def csv_text(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


# ------- Experiments -------

def run_concentration_experiment(game: GameLike, strategy, n: int, beta: float, trials: int, seed: int,
                                 threads: Optional[int] = None) -> Tuple[ConcentrationReport, List[TrialRecord]]:
    """Frequency of f_real > 1 - α + β next to the threshold bound and the i.i.d. Chernoff baseline."""
    _check_n(n)
    value = ns_value(game)
    alpha = 1.0 - value
    check_beta(beta, alpha)
    threshold = value + beta
    rep = _as_repeated(strategy)

    def one(t: int, rng: np.random.Generator) -> TrialRecord:
        freq = winning_frequencies(play(game, rep, n, rng))
        exceed = freq.f_real is not None and freq.f_real > threshold
        return _record(seed, t, freq, exceed=int(exceed))

    records = _run_trials(one, trials, seed, "concentration", threads)
    hits = sum(r.exceed for r in records)
    real_rounds = n * (1.0 - game.eta) if isinstance(game, LiftedGame) and game.dummy_count else n
    bound = threshold_bound(game, n, beta, alpha=alpha)
    if bound.bound >= 1.0:
        logger.warning("threshold bound is vacuous at n=%d (log bound %.1f)", n, bound.log_bound)
    reals = [r.f_real for r in records if r.f_real is not None]
    report = ConcentrationReport(
        n=n, beta=beta, trials=trials, ns_value=value, threshold=threshold,
        exceed_count=hits, probability=hits / trials, interval=wilson_interval(hits, trials),
        mean_f_real=float(np.mean(reals)) if reals else None,
        chernoff_bound=math.exp(-2.0 * real_rounds * beta ** 2),
        threshold_bound=bound.bound, log_threshold_bound=bound.log_bound,
    )
    return report, records


def _test_delta(game: Game, n: int, epsilon: float) -> float:
    return min(1.0, sanov_delta(n // 2, epsilon, game.question_count * game.answer_count))


def run_test_reliability_experiment(game: Game, one_game_strategy: Strategy, direction: SignallingDirection,
                                    n: int, zeta: float, epsilon: float, trials: int, seed: int,
                                    threads: Optional[int] = None) -> Tuple[ReliabilityReport, List[TrialRecord]]:
    """Acceptance frequency of the signalling test on the test half of i.i.d. play."""
    _check_n(n)
    direction.validate(game.question_alphabets, game.answer_alphabets)
    if zeta < 7 * epsilon - 1e-12:
        raise ValueError(f"zeta={zeta} must be at least 7·epsilon={7 * epsilon}")
    rep = IIDStrategy(one_game_strategy)

    def one(t: int, rng: np.random.Generator) -> TrialRecord:
        transcript = play(game, rep, n, rng)
        test_half, _ = split(transcript)
        accepted = signalling_test(direction, test_half.questions, test_half.answers, zeta, epsilon,
                                   game.dist, game.answer_alphabets)
        return _record(seed, t, winning_frequencies(transcript), test=int(accepted))

    records = _run_trials(one, trials, seed, "reliability", threads)
    hits = sum(r.test for r in records)
    report = ReliabilityReport(
        direction=direction.key(), n=n, zeta=zeta, epsilon=epsilon, trials=trials,
        accept_count=hits, acceptance=hits / trials, interval=wilson_interval(hits, trials),
        delta=_test_delta(game, n, epsilon),
    )
    return report, records


def run_joint_event_experiment(game: Game, mixture: MixtureStrategy, direction: SignallingDirection, n: int,
                               zeta: float, epsilon: float, trials: int, seed: int,
                               threads: Optional[int] = None) -> Tuple[JointEventReport, List[TrialRecord]]:
    """Frequencies of [T=1 and Sig(EST2) < ζ-4ε] and [T=0 and Sig(EST2) ≥ ζ+2ε]."""
    _check_n(n)
    direction.validate(game.question_alphabets, game.answer_alphabets)
    if zeta < 7 * epsilon - 1e-12:
        raise ValueError(f"zeta={zeta} must be at least 7·epsilon={7 * epsilon}")

    def one(t: int, rng: np.random.Generator) -> TrialRecord:
        transcript = play(game, mixture, n, rng)
        test_half, game_half = split(transcript)
        accepted = signalling_test(direction, test_half.questions, test_half.answers, zeta, epsilon,
                                   game.dist, game.answer_alphabets)
        est2 = estimate_strategy(game_half.questions, game_half.answers, game.question_alphabets,
                                 game.answer_alphabets)
        s2 = sig_value(game.dist, est2, direction) or 0.0
        return _record(seed, t, winning_frequencies(transcript), test=int(accepted), sig_game=s2)

    records = _run_trials(one, trials, seed, "joint_events", threads)
    first = sum(1 for r in records if r.test == 1 and r.sig_game < zeta - 4 * epsilon)
    second = sum(1 for r in records if r.test == 0 and r.sig_game >= zeta + 2 * epsilon)
    report = JointEventReport(
        direction=direction.key(), n=n, zeta=zeta, epsilon=epsilon, trials=trials,
        accepted_not_signalling=first / trials, accepted_interval=wilson_interval(first, trials),
        rejected_signalling=second / trials, rejected_interval=wilson_interval(second, trials),
        two_delta=min(1.0, 2.0 * _test_delta(game, n, epsilon)),
    )
    return report, records


def guessing_game(game: Game, repeated_strategy, direction: SignallingDirection, n: int, zeta: float,
                  epsilon: float, trials: int, seed: int,
                  threads: Optional[int] = None) -> Tuple[GuessingGameReport, List[TrialRecord]]:
    """The coalition ī runs the test on its own shared-randomness questions, then guesses an index j
    with q_j = (s^i, s^ī) among the n/2 game rounds."""
    _check_n(n)
    direction.validate(game.question_alphabets, game.answer_alphabets)
    i = direction.player
    others = [k for k in range(game.players) if k != i]
    s_bar = np.asarray(direction.others_questions)
    b_bar = np.asarray(direction.others_answers)
    column_index = list(direction.others_questions)
    column_index.insert(i, slice(None))
    column = game.dist[tuple(column_index)]
    q_s = float(column[direction.own_question])
    if q_s <= 0:
        raise InadmissibleDirectionError(f"Q{direction.question()} is zero")
    w_ns = q_s / float(column.sum())
    if w_ns >= 1.0:
        raise InadmissibleDirectionError(f"Q(s^i|s^ī) = 1 for {direction.key()}")
    rep = _as_repeated(repeated_strategy)
    h = n // 2

    def one(t: int, rng: np.random.Generator) -> TrialRecord:
        test_q = _draw(game, h, rng)
        game_q = _draw(game, h, rng)
        questions = np.concatenate([test_q, game_q])
        answers = np.asarray(rep.respond(questions, rng))
        accepted = signalling_test(direction, test_q, answers[:h], zeta, epsilon, game.dist, game.answer_alphabets)
        qg, ag = questions[h:], answers[h:]
        match_q = np.all(qg[:, others] == s_bar, axis=1)
        candidates = np.flatnonzero(match_q)
        if accepted:
            preferred = np.flatnonzero(match_q & np.all(ag[:, others] == b_bar, axis=1))
            if preferred.size:
                candidates = preferred
        win = False
        if candidates.size:
            j = int(candidates[rng.integers(candidates.size)])
            win = bool(qg[j, i] == direction.own_question)
        wins = game.accept[tuple(questions.T) + tuple(answers.T)]
        freq = FrequencyReport(f=(float(wins[:h].mean()) + float(wins[h:].mean())) / 2,
                               f_t=float(wins[:h].mean()), f_g=float(wins[h:].mean()), f_real=float(wins.mean()))
        return _record(seed, t, freq, test=int(accepted), win=int(win))

    records = _run_trials(one, trials, seed, "guessing_game", threads)
    wins = sum(r.win for r in records)
    accepts = sum(r.test for r in records)
    report = GuessingGameReport(
        direction=direction.key(), W_ns=w_ns, empirical_win=wins / trials, trials=trials,
        accept_rate=accepts / trials, sigma=math.sqrt(w_ns * (1.0 - w_ns) / trials),
        interval=wilson_interval(wins, trials),
    )
    return report, records


def run_estimation_experiment(game: Game, strategy: Strategy, l: int, epsilon: float, trials: int, seed: int,
                              threads: Optional[int] = None) -> Tuple[EstimationReport, List[TrialRecord]]:
    """Frequency of strategy_distance(estimate, truth) > ε from l i.i.d. rounds, next to δ(l, ε)."""
    if l < 1:
        raise ValueError(f"l must be at least 1, got {l}")
    rep = IIDStrategy(strategy)

    def one(t: int, rng: np.random.Generator) -> TrialRecord:
        questions = _draw(game, l, rng)
        answers = rep.respond(questions, rng)
        est = estimate_strategy(questions, answers, game.question_alphabets, game.answer_alphabets)
        dev = strategy_distance(game, est, strategy)
        rate = float(game.accept[tuple(questions.T) + tuple(answers.T)].mean())
        freq = FrequencyReport(f=rate, f_t=rate, f_g=rate, f_real=rate)
        return _record(seed, t, freq, deviation=dev, exceed=int(dev > epsilon))

    records = _run_trials(one, trials, seed, "estimation", threads)
    hits = sum(r.exceed for r in records)
    report = EstimationReport(
        l=l, epsilon=epsilon, trials=trials, deviations=hits, frequency=hits / trials,
        interval=wilson_interval(hits, trials),
        delta=min(1.0, sanov_delta(l, epsilon, game.question_count * game.answer_count)),
    )
    return report, records
