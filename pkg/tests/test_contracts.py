import json
import math

import pytest
from pydantic import ValidationError

from nonsig.models import (
    AnalyzeRequest, GameSpec, LiftedGameSpec, ThresholdParameters, TrialRecord, SigReport, FeasibilityReport,
    ParameterCheck,
)


def test_game_spec_roundtrip():
    raw = {
        "players": 2, "question_alphabets": [2, 2], "answer_alphabets": [2, 2],
        "questions": [{"q": [0, 0], "p": 0.5}, {"q": [1, 1], "p": 0.5}],
        "accept": [{"q": [0, 0], "a": [1, 1]}],
    }
    spec = GameSpec.model_validate(raw)
    j = json.loads(spec.model_dump_json(exclude_none=True))
    assert j == raw


def test_game_spec_rejects_zero_players():
    with pytest.raises(ValidationError):
        GameSpec(players=0, question_alphabets=[], answer_alphabets=[], questions=[], accept=[])


def test_lifted_spec_requires_eta_in_open_interval():
    base = GameSpec(players=1, question_alphabets=[1], answer_alphabets=[1],
                    questions=[{"q": [0], "p": 1.0}], accept=[])
    with pytest.raises(ValidationError):
        LiftedGameSpec(base=base, eta=1.0)
    assert LiftedGameSpec(base=base, eta=0.5).dummy_count == 0


def test_trial_record_field_order_is_csv_order():
    assert list(TrialRecord.model_fields)[:6] == ["seed", "trial", "f", "f_t", "f_g", "f_real"]


def test_threshold_parameters_serialize_infinity():
    p = ThresholdParameters(epsilon=0.1, zeta=0.8, nu=0.1, beta=0.1, n=2, delta=math.inf, c=1.0, d=16,
                            kappa=1.0, W_ns=0.5)
    j = json.loads(p.model_dump_json())
    assert j["delta"] == math.inf


def test_feasibility_report_lookup():
    checks = [ParameterCheck(name="a", passed=True, lhs=0, rhs=1, margin=1),
              ParameterCheck(name="b", passed=False, lhs=2, rhs=1, margin=-1)]
    rep = FeasibilityReport(passed=False, checks=checks)
    assert rep.failed() == ["b"]
    assert rep.check("a").margin == 1
    with pytest.raises(KeyError):
        rep.check("c")


def test_sig_report_value_of_key():
    rep = SigReport(values={"(1|0|0|0)": 0.125, "(0|0|0|0)": None}, max_direction="(1|0|0|0)", max_value=0.125)
    assert rep.value_of("(1|0|0|0)") == 0.125
    assert rep.value_of("(0|0|0|0)") is None


def test_analyze_request_accepts_builtin_name_and_lifted_spec():
    assert AnalyzeRequest(game="chsh").game == "chsh"
    lifted = {"base": {"players": 1, "question_alphabets": [1], "answer_alphabets": [1],
                       "questions": [{"q": [0], "p": 1.0}], "accept": []}, "eta": 0.2}
    assert isinstance(AnalyzeRequest(game=lifted).game, LiftedGameSpec)
