import json

import pytest
from fastapi.testclient import TestClient

from nonsig.game_model import builtin_game, echo_strategy, pr_box_strategy
from nonsig.service import app

client = TestClient(app)


def _strategy(s):
    return json.loads(s.to_spec().model_dump_json())


def test_health():
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["ok"] is True
    assert "chsh" in body["builtin_games"]


def test_analyze_builtin_and_lifted():
    r = client.post("/analyze", json={"game": "chsh"})
    assert r.status_code == 200
    assert r.json()["ns_value"] == pytest.approx(1.0, abs=1e-6)
    r = client.post("/analyze", json={"game": "anticorr3", "eta": 0.1})
    assert r.status_code == 200
    assert r.json()["ns_value"] == pytest.approx(2 / 3, abs=1e-6)


def test_analyze_inline_game_spec():
    spec = json.loads(builtin_game("gyni2").to_spec().model_dump_json())
    r = client.post("/analyze", json={"game": spec})
    assert r.status_code == 200
    assert r.json()["d"] == 16


def test_bad_input_is_400_with_trace():
    r = client.post("/analyze", json={"game": "no-such-game"})
    assert r.status_code == 400
    body = r.json()
    assert body["error"] == "bad_request"
    assert body["trace_id"]
    # paths are not accepted over the wire
    assert client.post("/analyze", json={"game": "/etc/passwd"}).status_code == 400


def test_eta_out_of_range_is_rejected_by_schema():
    assert client.post("/analyze", json={"game": "chsh", "eta": 1.5}).status_code == 422


def test_sig_report_and_single_direction():
    r = client.post("/sig", json={"game": "chsh", "strategy": _strategy(pr_box_strategy())})
    assert r.status_code == 200
    assert all(abs(v) <= 1e-12 for v in r.json()["values"].values())
    echo = _strategy(echo_strategy(builtin_game("chsh")))
    r = client.post("/sig", json={"game": "chsh", "strategy": echo, "direction": "(1|1|1|0)"})
    assert r.status_code == 200
    body = r.json()
    assert body["value"] == pytest.approx(0.125)
    assert body["joint_form"] == pytest.approx(0.125)


def test_sig_shape_mismatch_is_400():
    three = _strategy(echo_strategy(builtin_game("anticorr3")))
    r = client.post("/sig", json={"game": "chsh", "strategy": three})
    assert r.status_code == 400


def test_bound_rows():
    r = client.post("/bound", json={"game": "gyni2", "beta": 0.05, "n_grid": [1000, 1000000]})
    assert r.status_code == 200
    body = r.json()
    assert body["alpha"] == pytest.approx(0.5, abs=1e-6)
    assert [row["n"] for row in body["rows"]] == [1000, 1000000]
    assert all(0.0 <= row["bound"] <= 1.0 for row in body["rows"])


def test_bound_on_perfect_game_is_400():
    r = client.post("/bound", json={"game": "chsh", "beta": 0.05, "n_grid": [1000]})
    assert r.status_code == 400


def test_requests_are_audited_and_verify(audit_log):
    client.post("/analyze", json={"game": "chsh"})
    r = client.get("/audit/verify")
    assert r.status_code == 200
    body = r.json()
    assert body["checked"] >= 1
    assert all(x["ok"] for x in body["results"])
    assert body["results"][-1]["command"] == "/analyze"


def test_metrics():
    client.get("/health")
    r = client.get("/metrics")
    assert r.status_code == 200
    assert b"nonsig_requests_total" in r.content


def test_run_serves_on_configured_port(monkeypatch):
    import nonsig.service as service
    from nonsig.settings import settings

    calls = []
    monkeypatch.setattr("uvicorn.run", lambda target, **kw: calls.append((target, kw)))
    monkeypatch.setattr(settings, "app_port", 8123)
    service.run()
    assert calls == [(app, {"host": "0.0.0.0", "port": 8123})]
