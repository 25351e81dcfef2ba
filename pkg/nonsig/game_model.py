"""Finite m-player games, one-game strategies and their elementary properties.

Indices are 0-based. A strategy table has shape
``question_alphabets + answer_alphabets`` so that ``table[q + a] = O(a|q)``.
"""
import itertools
import json
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .models import AcceptEntry, GameSpec, QuestionEntry, StrategyEntry, StrategySpec
from .settings import settings

Index = Tuple[int, ...]


class GameError(ValueError):
    pass


class DimensionMismatchError(GameError):
    pass


def _prod(xs: Sequence[int]) -> int:
    return int(math.prod(xs)) if xs else 1


def _in_range(t: Sequence[int], sizes: Sequence[int]) -> bool:
    return len(t) == len(sizes) and all(0 <= v < s for v, s in zip(t, sizes))


# ------- Game -------

@dataclass(frozen=True, eq=False)
class Game:
    players: int
    question_alphabets: Tuple[int, ...]
    answer_alphabets: Tuple[int, ...]
    question_dist: Mapping[Index, float]
    predicate: FrozenSet[Tuple[Index, Index]]
    name: Optional[str] = None

    @property
    def question_shape(self) -> Tuple[int, ...]:
        return tuple(self.question_alphabets)

    @property
    def answer_shape(self) -> Tuple[int, ...]:
        return tuple(self.answer_alphabets)

    @property
    def question_count(self) -> int:
        """|Q| over the full Cartesian product."""
        return _prod(self.question_alphabets)

    @property
    def answer_count(self) -> int:
        return _prod(self.answer_alphabets)

    @cached_property
    def dist(self) -> np.ndarray:
        arr = np.zeros(self.question_shape)
        for q, p in self.question_dist.items():
            arr[q] += p
        arr.setflags(write=False)
        return arr

    @cached_property
    def accept(self) -> np.ndarray:
        arr = np.zeros(self.question_shape + self.answer_shape, dtype=bool)
        for q, a in self.predicate:
            arr[tuple(q) + tuple(a)] = True
        arr.setflags(write=False)
        return arr

    @property
    def support(self) -> List[Index]:
        return [tuple(int(v) for v in idx) for idx in np.argwhere(self.dist > 0)]

    @classmethod
    def from_spec(cls, spec: GameSpec) -> "Game":
        dist: Dict[Index, float] = {}
        for e in spec.questions:
            q = tuple(e.q)
            if q in dist:
                raise GameError(f"duplicate question tuple {list(q)}")
            dist[q] = float(e.p)
        pred = set()
        for e in spec.accept:
            pair = (tuple(e.q), tuple(e.a))
            if pair in pred:
                raise GameError(f"duplicate accepted pair q={e.q} a={e.a}")
            pred.add(pair)
        return cls(
            players=spec.players,
            question_alphabets=tuple(spec.question_alphabets),
            answer_alphabets=tuple(spec.answer_alphabets),
            question_dist=dist,
            predicate=frozenset(pred),
            name=spec.name,
        )

    def to_spec(self) -> GameSpec:
        questions = [QuestionEntry(q=list(q), p=p) for q, p in sorted(self.question_dist.items()) if p != 0]
        accept = [AcceptEntry(q=list(q), a=list(a)) for q, a in sorted(self.predicate)]
        return GameSpec(
            name=self.name,
            players=self.players,
            question_alphabets=list(self.question_alphabets),
            answer_alphabets=list(self.answer_alphabets),
            questions=questions,
            accept=accept,
        )

    @classmethod
    def from_arrays(cls, dist: np.ndarray, accept: np.ndarray, name: Optional[str] = None) -> "Game":
        m = dist.ndim
        if accept.shape[:m] != dist.shape or accept.ndim != 2 * m:
            raise DimensionMismatchError(f"predicate shape {accept.shape} does not extend question shape {dist.shape}")
        qd = {tuple(int(v) for v in idx): float(dist[tuple(idx)]) for idx in np.argwhere(dist != 0)}
        pred = frozenset(
            (tuple(int(v) for v in idx[:m]), tuple(int(v) for v in idx[m:]))
            for idx in np.argwhere(accept)
        )
        return cls(m, tuple(dist.shape), tuple(accept.shape[m:]), qd, pred, name)


def validate_game(game: Game) -> List[str]:
    """Return the list of violations; empty iff the game is well-formed."""
    out: List[str] = []
    m = game.players
    if m < 1:
        out.append(f"players must be positive, got {m}")
    for label, sizes in (("question_alphabets", game.question_alphabets), ("answer_alphabets", game.answer_alphabets)):
        if len(sizes) != m:
            out.append(f"{label} has {len(sizes)} entries for {m} players")
        if any(s < 1 for s in sizes):
            out.append(f"{label} must be positive, got {list(sizes)}")
    if out:
        return out

    total = 0.0
    for q, p in game.question_dist.items():
        if not _in_range(q, game.question_alphabets):
            out.append(f"index violation: question tuple {list(q)} outside alphabets {list(game.question_alphabets)}")
        if not math.isfinite(p):
            out.append(f"non-finite probability {p} at {list(q)}")
            continue
        if p < 0:
            out.append(f"negative probability {p} at {list(q)}")
        total += p
    if abs(total - 1.0) > settings.norm_tol:
        out.append(f"normalization violation: question probabilities sum to {total!r}")
    for q, a in sorted(game.predicate):
        if not _in_range(q, game.question_alphabets):
            out.append(f"index violation: predicate question {list(q)} outside alphabets {list(game.question_alphabets)}")
        if not _in_range(a, game.answer_alphabets):
            out.append(f"index violation: predicate answer {list(a)} outside alphabets {list(game.answer_alphabets)}")
    return out


def _require_valid(game: Game) -> None:
    problems = validate_game(game)
    if problems:
        raise GameError("; ".join(problems))


# ------- Strategies -------

def _split_shape(table: np.ndarray) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    if table.ndim == 0 or table.ndim % 2:
        raise DimensionMismatchError(f"strategy table must have 2m axes, got shape {table.shape}")
    m = table.ndim // 2
    return tuple(table.shape[:m]), tuple(table.shape[m:])


class _TableMixin:
    table: np.ndarray

    @property
    def players(self) -> int:
        return self.table.ndim // 2

    @property
    def question_shape(self) -> Tuple[int, ...]:
        return tuple(self.table.shape[: self.players])

    @property
    def answer_shape(self) -> Tuple[int, ...]:
        return tuple(self.table.shape[self.players:])

    @property
    def matrix(self) -> np.ndarray:
        """(|Q|, |A|) view, rows indexed by flat question tuple."""
        return self.table.reshape(_prod(self.question_shape), _prod(self.answer_shape))

    def prob(self, q: Sequence[int], a: Sequence[int]) -> float:
        return float(self.table[tuple(q) + tuple(a)])


@dataclass(frozen=True, eq=False)
class Strategy(_TableMixin):
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        _split_shape(table)
        if not np.all(np.isfinite(table)) or table.min(initial=0.0) < 0:
            raise GameError("strategy entries must be finite and non-negative")
        m = table.ndim // 2
        sums = table.sum(axis=tuple(range(m, 2 * m)))
        worst = float(np.abs(sums - 1.0).max())
        if worst > max(settings.norm_tol, 1e-12):
            raise GameError(f"strategy rows must sum to 1 (worst deviation {worst:.3g})")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_spec(cls, spec: StrategySpec) -> "Strategy":
        shape = tuple(spec.question_alphabets) + tuple(spec.answer_alphabets)
        if len(spec.question_alphabets) != spec.players or len(spec.answer_alphabets) != spec.players:
            raise GameError("strategy alphabets do not match the number of players")
        table = np.zeros(shape)
        seen = set()
        for e in spec.table:
            key = tuple(e.q) + tuple(e.a)
            if key in seen:
                raise GameError(f"duplicate strategy entry q={e.q} a={e.a}")
            if not (_in_range(e.q, spec.question_alphabets) and _in_range(e.a, spec.answer_alphabets)):
                raise GameError(f"strategy entry q={e.q} a={e.a} outside alphabets")
            seen.add(key)
            table[key] = e.p
        return cls(table)

    def to_spec(self) -> StrategySpec:
        entries = [
            StrategyEntry(q=[int(v) for v in idx[: self.players]], a=[int(v) for v in idx[self.players:]], p=float(self.table[tuple(idx)]))
            for idx in np.argwhere(self.table != 0)
        ]
        return StrategySpec(
            players=self.players,
            question_alphabets=list(self.question_shape),
            answer_alphabets=list(self.answer_shape),
            table=entries,
        )


@dataclass(frozen=True, eq=False)
class EstimatedStrategy(_TableMixin):
    """Empirical frequencies f^q_a; rows of unseen questions are all zero."""
    table: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        counts = np.array(self.counts, dtype=np.int64)
        qs, _ = _split_shape(table)
        if counts.shape != qs:
            raise DimensionMismatchError(f"counts shape {counts.shape} != question shape {qs}")
        table.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "counts", counts)


def _check_shapes(game: Game, *tables: np.ndarray) -> None:
    want = game.question_shape + game.answer_shape
    for t in tables:
        if tuple(t.shape) != want:
            raise DimensionMismatchError(f"strategy shape {tuple(t.shape)} does not match game shape {want}")


def _expand_dist(dist: np.ndarray) -> np.ndarray:
    return dist.reshape(dist.shape + (1,) * dist.ndim)


def winning_probability(game: Game, strategy) -> float:
    """Σ_{q,a} Q(q) R(q,a) O(a|q)."""
    _check_shapes(game, strategy.table)
    return float((_expand_dist(game.dist) * game.accept * strategy.table).sum())


def strategy_distance(game: Game, k, r) -> float:
    """E_{q~Q} Σ_a |K(a|q) - R(a|q)|; works for estimates as well as strategies."""
    _check_shapes(game, k.table, r.table)
    m = game.players
    per_q = np.abs(k.table - r.table).sum(axis=tuple(range(m, 2 * m)))
    return float((game.dist * per_q).sum())


def is_complete_support(game: Game) -> bool:
    dist = game.dist
    m = dist.ndim
    occurring = []
    for i in range(m):
        marginal = dist.sum(axis=tuple(k for k in range(m) if k != i))
        occurring.append(np.flatnonzero(marginal > 0))
    block = dist[np.ix_(*occurring)]
    return bool(np.all(block > 0))


def is_non_signalling(strategy, question_alphabets: Optional[Sequence[int]] = None, tol: Optional[float] = None) -> bool:
    """Every coalition marginal O(∘, a^ī | q^i, q^ī) is independent of q^i within tol."""
    tol = settings.ns_tol if tol is None else tol
    table = strategy.table if hasattr(strategy, "table") else np.asarray(strategy)
    m = table.ndim // 2
    if question_alphabets is not None and tuple(question_alphabets) != tuple(table.shape[:m]):
        raise DimensionMismatchError(f"question alphabets {list(question_alphabets)} do not match table {table.shape}")
    for i in range(m):
        marginal = table.sum(axis=m + i)
        if float(np.ptp(marginal, axis=i).max(initial=0.0)) > tol:
            return False
    return True


# ------- Signalling directions -------

@dataclass(frozen=True)
class SignallingDirection:
    player: int
    others_answers: Index
    own_question: int
    others_questions: Index

    def question(self) -> Index:
        q = list(self.others_questions)
        q.insert(self.player, self.own_question)
        return tuple(q)

    def key(self) -> str:
        b = ",".join(str(v) for v in self.others_answers)
        s = ",".join(str(v) for v in self.others_questions)
        return f"({self.player}|{b}|{self.own_question}|{s})"

    @classmethod
    def parse(cls, key: str) -> "SignallingDirection":
        body = key.strip().strip("()")
        parts = body.split("|")
        if len(parts) != 4:
            raise GameError(f"direction {key!r} is not of the form (i|b_bar|s_i|s_bar)")

        def _tuple(text: str) -> Index:
            return tuple(int(v) for v in text.split(",") if v.strip() != "")

        try:
            return cls(int(parts[0]), _tuple(parts[1]), int(parts[2]), _tuple(parts[3]))
        except ValueError:
            raise GameError(f"direction {key!r} has non-integer fields") from None

    def validate(self, question_alphabets: Sequence[int], answer_alphabets: Sequence[int]) -> None:
        m = len(question_alphabets)
        i = self.player
        if not 0 <= i < m:
            raise GameError(f"direction player {i} outside 0..{m - 1}")
        others_q = [s for k, s in enumerate(question_alphabets) if k != i]
        others_a = [s for k, s in enumerate(answer_alphabets) if k != i]
        if not (_in_range(self.others_questions, others_q) and _in_range(self.others_answers, others_a)):
            raise GameError(f"direction {self.key()} indexes outside the alphabets")
        if not 0 <= self.own_question < question_alphabets[i]:
            raise GameError(f"direction {self.key()} own question outside alphabet {question_alphabets[i]}")


def all_directions(question_alphabets: Sequence[int], answer_alphabets: Sequence[int]) -> Iterator[SignallingDirection]:
    """Every (i, q, a^ī) combination over the full alphabets, in signalling-row order."""
    m = len(question_alphabets)
    if m < 2:
        return
    for i in range(m):
        others_q = [range(s) for k, s in enumerate(question_alphabets) if k != i]
        others_a = [range(s) for k, s in enumerate(answer_alphabets) if k != i]
        for s_bar in itertools.product(*others_q):
            for s_i in range(question_alphabets[i]):
                for b_bar in itertools.product(*others_a):
                    yield SignallingDirection(i, tuple(b_bar), s_i, tuple(s_bar))


# ------- Named strategies -------

def deterministic_strategy(question_alphabets: Sequence[int], answer_alphabets: Sequence[int],
                           rule: Callable[[Index], Sequence[int]]) -> Strategy:
    table = np.zeros(tuple(question_alphabets) + tuple(answer_alphabets))
    for q in itertools.product(*[range(s) for s in question_alphabets]):
        table[tuple(q) + tuple(rule(tuple(q)))] = 1.0
    return Strategy(table)


def product_strategy(local_tables: Sequence[np.ndarray]) -> Strategy:
    """O(a|q) = Π_i O_i(a_i|q_i); local_tables[i] has shape (|Q_i|, |A_i|)."""
    m = len(local_tables)
    qs = tuple(t.shape[0] for t in local_tables)
    as_ = tuple(t.shape[1] for t in local_tables)
    table = np.ones(qs + as_)
    for i, local in enumerate(local_tables):
        shape = [1] * (2 * m)
        shape[i], shape[m + i] = local.shape
        table = table * np.asarray(local, dtype=float).reshape(shape)
    return Strategy(table)


def uniform_strategy(question_alphabets: Sequence[int], answer_alphabets: Sequence[int]) -> Strategy:
    shape = tuple(question_alphabets) + tuple(answer_alphabets)
    return Strategy(np.full(shape, 1.0 / _prod(answer_alphabets)))


def echo_strategy(game: Game, source: int = 1, target: int = 0) -> Strategy:
    """Player `target` answers the question of player `source`; everyone else answers 0."""
    size = game.answer_alphabets[target]

    def rule(q: Index) -> List[int]:
        a = [0] * game.players
        a[target] = q[source] % size
        return a

    return deterministic_strategy(game.question_alphabets, game.answer_alphabets, rule)


def pr_box_strategy() -> Strategy:
    table = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        if (a ^ b) == (x & y):
            table[x, y, a, b] = 0.5
    return Strategy(table)


def mix(weights: Sequence[float], strategies: Sequence[Strategy]) -> Strategy:
    w = np.asarray(weights, dtype=float)
    if w.min(initial=0.0) < 0 or abs(w.sum() - 1.0) > 1e-12:
        raise GameError("mixture weights must be non-negative and sum to 1")
    table = sum(wi * s.table for wi, s in zip(w, strategies))
    return Strategy(table)


def random_strategy(question_alphabets: Sequence[int], answer_alphabets: Sequence[int],
                    rng: np.random.Generator) -> Strategy:
    nq, na = _prod(question_alphabets), _prod(answer_alphabets)
    rows = rng.dirichlet(np.ones(na), size=nq)
    return Strategy(rows.reshape(tuple(question_alphabets) + tuple(answer_alphabets)))


def random_non_signalling_strategy(question_alphabets: Sequence[int], answer_alphabets: Sequence[int],
                                   rng: np.random.Generator, components: int = 3) -> Strategy:
    """Convex mixture of random product strategies."""
    parts = []
    for _ in range(components):
        locals_ = [rng.dirichlet(np.ones(a), size=q) for q, a in zip(question_alphabets, answer_alphabets)]
        parts.append(product_strategy(locals_))
    weights = rng.dirichlet(np.ones(components))
    weights = weights / weights.sum()
    table = sum(w * s.table for w, s in zip(weights, parts))
    return Strategy(table)


def deterministic_strategies(game: Game, limit: int = 1_000_000) -> Iterator[Strategy]:
    """All local deterministic strategies: one answer function per player."""
    per_player = [game.answer_alphabets[i] ** game.question_alphabets[i] for i in range(game.players)]
    if _prod(per_player) > limit:
        raise GameError(f"{_prod(per_player)} deterministic strategies exceed the enumeration limit {limit}")
    functions = [
        list(itertools.product(range(game.answer_alphabets[i]), repeat=game.question_alphabets[i]))
        for i in range(game.players)
    ]
    for combo in itertools.product(*functions):
        yield deterministic_strategy(
            game.question_alphabets,
            game.answer_alphabets,
            lambda q, combo=combo: [combo[i][q[i]] for i in range(game.players)],
        )


def classical_value(game: Game, limit: int = 100_000) -> float:
    return max(winning_probability(game, s) for s in deterministic_strategies(game, limit))


# ------- Built-in games -------

def _from_rule(name: str, qa: Sequence[int], aa: Sequence[int], dist: Dict[Index, float],
               wins: Callable[[Index, Index], bool]) -> Game:
    pred = frozenset(
        (q, a)
        for q in itertools.product(*[range(s) for s in qa])
        for a in itertools.product(*[range(s) for s in aa])
        if wins(q, a)
    )
    return Game(len(qa), tuple(qa), tuple(aa), dist, pred, name)


def _anticorr3_wins(q: Index, a: Index) -> bool:
    if q == (0, 0, 1):
        return a[0] == a[1]
    if q == (0, 1, 0):
        return a[0] == a[2]
    if q == (1, 0, 0):
        return a[1] != a[2]
    return False


BUILTIN_GAMES = ("chsh", "gyni2", "anticorr3")


def builtin_game(name: str) -> Game:
    uniform2 = {q: 0.25 for q in itertools.product(range(2), repeat=2)}
    if name == "chsh":
        return _from_rule("chsh", (2, 2), (2, 2), uniform2, lambda q, a: (a[0] ^ a[1]) == (q[0] & q[1]))
    if name == "gyni2":
        return _from_rule("gyni2", (2, 2), (2, 2), uniform2, lambda q, a: a[0] == q[1] and a[1] == q[0])
    if name == "anticorr3":
        support = {(0, 0, 1): 1 / 3, (0, 1, 0): 1 / 3, (1, 0, 0): 1 / 3}
        return _from_rule("anticorr3", (2, 2, 2), (2, 2, 2), support, _anticorr3_wins)
    raise GameError(f"unknown built-in game {name!r}; choose one of {', '.join(BUILTIN_GAMES)}")


def random_game(question_alphabets: Sequence[int], answer_alphabets: Sequence[int], rng: np.random.Generator,
                complete_support: bool = True, accept_prob: float = 0.5, zero_tuples: int = 1) -> Game:
    """Random test game; with complete_support=False, `zero_tuples` question tuples get probability 0."""
    shape = tuple(question_alphabets)
    weights = rng.uniform(0.2, 1.0, size=shape)
    if not complete_support:
        flat = weights.reshape(-1)
        k = min(zero_tuples, flat.size - 1)
        flat[rng.choice(flat.size, size=k, replace=False)] = 0.0
    dist = weights / weights.sum()
    accept = rng.random(shape + tuple(answer_alphabets)) < accept_prob
    return Game.from_arrays(dist, accept, name="random")


# ------- Files -------

def load_game(source: str) -> Game:
    """Built-in name or path to a Game JSON file; invalid games raise GameError."""
    if source in BUILTIN_GAMES:
        return builtin_game(source)
    if not os.path.exists(source):
        raise GameError(f"unknown game {source!r}: not a built-in name or an existing file")
    with open(source, "r", encoding="utf-8") as f:
        raw = json.load(f)
    game = Game.from_spec(GameSpec.model_validate(raw))
    _require_valid(game)
    return game


def load_strategy(path: str) -> Strategy:
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    return Strategy.from_spec(StrategySpec.model_validate(raw))


def dump_json(obj, path: Optional[str] = None) -> str:
    """Serialize a Game, Strategy, LiftedGame or any pydantic spec; writes to `path` when given."""
    spec = obj.to_spec() if hasattr(obj, "to_spec") else obj
    text = spec.model_dump_json(indent=2, exclude_none=True)
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    return text
