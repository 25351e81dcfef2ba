import json

import pytest

from nonsig.cli import main
from nonsig.game_model import builtin_game
from nonsig.ns_analysis import LiftedGame, complete_support_lift, kappa, load_game_like


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_value_with_lift(capsys):
    code, out, _ = _run(capsys, "value", "--game", "anticorr3", "--lift", "0.1")
    assert code == 0
    payload = json.loads(out)
    assert payload["ns_value"] == pytest.approx(2 / 3, abs=1e-6)
    assert payload["lifted"] is True


def test_value_without_lift_warns(capsys):
    code, out, err = _run(capsys, "value", "--game", "anticorr3")
    assert code == 0
    payload = json.loads(out)
    assert payload["ns_value"] == pytest.approx(1.0, abs=1e-6)
    assert payload["warnings"]
    assert "complete support" in err


def test_info_and_kappa(capsys):
    code, out, _ = _run(capsys, "info", "--game", "chsh")
    assert code == 0
    info = json.loads(out)
    assert info["complete_support"] is True
    assert info["classical_value"] == pytest.approx(0.75)
    code, out, _ = _run(capsys, "kappa", "--game", "gyni2")
    k = json.loads(out)
    assert k["d"] == 16
    assert k["kappa_minimized"] <= k["kappa"] + 1e-9


def test_bound_grid_as_csv(capsys):
    code, out, _ = _run(capsys, "bound", "--game", "gyni2", "--beta", "0.05", "--n-grid", "1000,100000",
                        "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("n,beta,kappa")
    assert len(lines) == 3


def test_lifted_bound_uses_plain_kappa_unless_asked(capsys):
    lifted = complete_support_lift(builtin_game("anticorr3"), 0.1)
    argv = ("bound", "--game", "anticorr3", "--lift", "0.1", "--beta", "0.05", "--n", "1000")
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    assert json.loads(out)["rows"][0]["kappa"] == pytest.approx(kappa(lifted), abs=1e-9)
    code, out, _ = _run(capsys, *argv, "--minimize-kappa")
    assert code == 0
    assert json.loads(out)["rows"][0]["kappa"] == pytest.approx(kappa(lifted, minimize=True), abs=1e-9)


def test_check_params_infeasible_exits_2(capsys):
    code, out, err = _run(capsys, "check-params", "--game", "gyni2", "--beta", "0.05", "--n", "1000",
                          "--zeta", "0.0001")
    assert code == 2
    assert "seven_epsilon_le_zeta" in json.loads(out)["failed"]
    assert "infeasible" in err


def test_lift_output_loads_back(tmp_path, capsys):
    path = tmp_path / "lifted.json"
    code, _, _ = _run(capsys, "lift", "--game", "anticorr3", "--lift", "0.2", "--out", str(path))
    assert code == 0
    back = load_game_like(str(path))
    assert isinstance(back, LiftedGame)
    assert back.dummy_count == 5


def test_sig_with_strategy_file(tmp_path, capsys):
    from nonsig.game_model import builtin_game, dump_json, echo_strategy
    path = tmp_path / "echo.json"
    dump_json(echo_strategy(builtin_game("chsh")), str(path))
    code, out, _ = _run(capsys, "sig", "--game", "chsh", "--strategy-file", str(path))
    assert code == 0
    assert json.loads(out)["max_value"] == pytest.approx(0.125)
    code, out, _ = _run(capsys, "sig", "--game", "chsh", "--strategy", "echo", "--direction", "(1|1|1|0)")
    assert json.loads(out)["value"] == pytest.approx(0.125)


def test_simulate_is_byte_identical(tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        code, _, _ = _run(capsys, "simulate", "--game", "chsh", "--strategy", "iid-optimal", "--n", "1000",
                          "--trials", "20", "--seed", "7", "--format", "csv", "--out", str(path))
        assert code == 0
        outs.append(path.read_bytes())
        summary = json.loads((tmp_path / f"run{k}.csv.summary.json").read_text())
        assert summary["trials"] == 20
    assert outs[0] == outs[1]


def test_reliability_and_guess(capsys):
    code, out, _ = _run(capsys, "reliability", "--game", "gyni2", "--strategy", "echo", "--n", "400",
                        "--trials", "5", "--seed", "1", "--zeta", "0.1", "--epsilon", "0.01")
    assert code == 0
    assert json.loads(out)["trials"] == 5
    code, out, _ = _run(capsys, "guess", "--game", "gyni2", "--strategy", "echo", "--n", "200",
                        "--trials", "20", "--seed", "1", "--zeta", "0.1", "--epsilon", "0.01")
    assert code == 0
    assert json.loads(out)["W_ns"] == pytest.approx(0.5)


def test_joint_events_mixture(capsys):
    code, out, _ = _run(capsys, "joint-events", "--game", "gyni2", "--strategy", "echo,uniform",
                        "--weights", "0.5,0.5", "--direction", "(1|0|0|0)", "--n", "400", "--trials", "6",
                        "--seed", "3", "--zeta", "0.1", "--epsilon", "0.01")
    assert code == 0
    assert "two_delta" in json.loads(out)


@pytest.mark.parametrize("argv", [
    ["simulate", "--game", "chsh", "--n", "100"],
    ["simulate", "--game", "chsh", "--n", "101", "--seed", "1"],
    ["value", "--game", "no-such-game"],
    ["value", "--game", "chsh", "--lift", "1.5"],
    ["lift", "--game", "chsh"],
    ["value", "--game", "chsh", "--format", "csv"],
    ["frobnicate"],
])
def test_validation_failures_exit_2(argv, capsys):
    code, _, err = _run(capsys, *argv)
    assert code == 2
    assert err


def test_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, _, err = _run(capsys, "value", "--game", str(path))
    assert code == 2
    assert "error" in err


def test_runs_are_audited(capsys, audit_log):
    _run(capsys, "value", "--game", "chsh")
    code, out, _ = _run(capsys, "audit")
    assert code == 0
    report = json.loads(out)
    assert report["ok"] is True
    assert report["results"][-1]["command"] == "value"
