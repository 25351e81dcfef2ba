import pytest

from nonsig.settings import settings


@pytest.fixture(autouse=True)
def audit_log(tmp_path, monkeypatch):
    """Every test writes its audit lines to a private file."""
    path = tmp_path / "audit" / "runs.jsonl"
    monkeypatch.setattr(settings, "audit_path", str(path))
    monkeypatch.setattr(settings, "audit_enabled", True)
    return path
