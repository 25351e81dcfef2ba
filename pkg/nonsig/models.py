from pydantic import BaseModel, ConfigDict, Field
from typing import Dict, List, Optional, Union


# ---------- File formats ----------

class QuestionEntry(BaseModel):
    q: List[int]
    p: float


class AcceptEntry(BaseModel):
    q: List[int]
    a: List[int]


class GameSpec(BaseModel):
    """Game JSON format. Question tuples missing from `questions` have probability 0."""
    name: Optional[str] = None
    players: int = Field(ge=1)
    question_alphabets: List[int]
    answer_alphabets: List[int]
    questions: List[QuestionEntry]
    accept: List[AcceptEntry]


class LiftedQuestionEntry(BaseModel):
    q: List[int]
    d: int = Field(ge=0, le=1)
    p: float


class LiftedGameSpec(BaseModel):
    base: GameSpec
    eta: float = Field(gt=0.0, lt=1.0)
    dummy_count: int = 0
    lifted_questions: List[LiftedQuestionEntry] = []


class StrategyEntry(BaseModel):
    q: List[int]
    a: List[int]
    p: float


class StrategySpec(BaseModel):
    players: int = Field(ge=1)
    question_alphabets: List[int]
    answer_alphabets: List[int]
    table: List[StrategyEntry]


# ---------- Analysis ----------

class GameSummary(BaseModel):
    name: Optional[str] = None
    players: int
    question_alphabets: List[int]
    answer_alphabets: List[int]
    question_count: int
    answer_count: int
    support_size: int
    complete_support: bool
    lifted: bool = False
    eta: Optional[float] = None
    dummy_count: int = 0
    classical_value: Optional[float] = None
    violations: List[str] = []


class AnalysisReport(BaseModel):
    ns_value: float = Field(ge=0.0, le=1.0)
    alpha: float
    kappa: float
    kappa_minimized: float
    d: int
    relaxed_equals_equality: bool


class ThresholdParameters(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    epsilon: float
    zeta: float
    nu: float
    beta: float
    n: int
    delta: float
    c: float
    d: int
    kappa: float
    W_ns: float
    log_delta: Optional[float] = None
    log_c: Optional[float] = None


class ParameterCheck(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    name: str
    passed: bool
    lhs: float
    rhs: float
    margin: float
    detail: str = ""


class FeasibilityReport(BaseModel):
    passed: bool
    checks: List[ParameterCheck]

    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def check(self, name: str) -> ParameterCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


class ThresholdBound(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    n: int
    beta: float
    kappa: float
    log_c1: float
    log_bound: float
    bound: float = Field(ge=0.0, le=1.0)
    smallest_n: Optional[int] = None


class SigReport(BaseModel):
    """Per-direction signalling keyed by "(i|b_bar|s_i|s_bar)"; None marks an undefined direction."""
    values: Dict[str, Optional[float]]
    max_direction: Optional[str] = None
    max_value: Optional[float] = None

    def value_of(self, direction) -> Optional[float]:
        key = direction if isinstance(direction, str) else direction.key()
        return self.values[key]


# ---------- Experiments ----------

class Interval(BaseModel):
    low: float
    high: float


class FrequencyReport(BaseModel):
    f: float
    f_t: float
    f_g: float
    f_real: Optional[float] = None


class TrialRecord(BaseModel):
    """One CSV row. Column order is the field order."""
    seed: int
    trial: int
    f: float
    f_t: float
    f_g: float
    f_real: Optional[float] = None
    test: Optional[int] = None
    sig_game: Optional[float] = None
    exceed: Optional[int] = None
    win: Optional[int] = None
    deviation: Optional[float] = None


class ConcentrationReport(BaseModel):
    n: int
    beta: float
    trials: int
    ns_value: float
    threshold: float
    exceed_count: int
    probability: float
    interval: Interval
    mean_f_real: Optional[float] = None
    chernoff_bound: float
    threshold_bound: float
    log_threshold_bound: float


class ReliabilityReport(BaseModel):
    direction: str
    n: int
    zeta: float
    epsilon: float
    trials: int
    accept_count: int
    acceptance: float
    interval: Interval
    delta: float


class JointEventReport(BaseModel):
    direction: str
    n: int
    zeta: float
    epsilon: float
    trials: int
    accepted_not_signalling: float
    accepted_interval: Interval
    rejected_signalling: float
    rejected_interval: Interval
    two_delta: float


class GuessingGameReport(BaseModel):
    direction: str
    W_ns: float
    empirical_win: float
    trials: int
    accept_rate: float
    sigma: float
    interval: Interval


class EstimationReport(BaseModel):
    l: int
    epsilon: float
    trials: int
    deviations: int
    frequency: float
    interval: Interval
    delta: float


# ---------- Service requests ----------

GameInput = Union[LiftedGameSpec, GameSpec, str]


class AnalyzeRequest(BaseModel):
    """`game` is a built-in name, a GameSpec or a LiftedGameSpec; `eta` lifts a plain game."""
    game: GameInput
    eta: Optional[float] = Field(default=None, gt=0.0, lt=1.0)


class SigRequest(AnalyzeRequest):
    strategy: StrategySpec
    direction: Optional[str] = None


class BoundRequest(AnalyzeRequest):
    beta: float = Field(gt=0.0)
    n_grid: List[int] = Field(min_length=1)
    minimize_kappa: bool = True


class BoundResponse(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    ns_value: float
    alpha: float
    beta: float
    rows: List[ThresholdBound]
