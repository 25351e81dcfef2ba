"""Signed JSONL run log.

Each CLI run and service request appends one line {"ts", "entry", "sig"}; entry
holds the trace id, the command or route, its arguments and either a scalar
summary of the result or the error text. The signature is HMAC-SHA256 over the
canonical JSON of {"ts", "entry"}.
"""
import hashlib
import hmac
import json
import os
import time
import uuid
from typing import Any, Dict, Iterable, List, Mapping, Optional

from .settings import settings


def new_trace_id() -> str:
    return uuid.uuid4().hex


def _canonical(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True, default=str)


def _sign(payload: dict, key: str) -> str:
    return hmac.new(key.encode(), _canonical(payload).encode(), hashlib.sha256).hexdigest()


def _scalars(result: Mapping[str, Any]) -> Dict[str, Any]:
    # experiment tables and per-direction maps stay out of the log
    return {k: v for k, v in result.items() if not isinstance(v, (list, dict))}


def write_audit(entry: dict, path: Optional[str] = None) -> Optional[str]:
    """Append a signed line; returns the path written, or None when auditing is off."""
    if not settings.audit_enabled:
        return None
    path = path or settings.audit_path
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    payload = {"ts": round(time.time(), 3), "entry": entry}
    line = {**payload, "sig": _sign(payload, settings.audit_signing_key)}
    with open(path, "a", encoding="utf-8") as f:
        f.write(_canonical(line) + "\n")
    return path


def record_run(command: str, args: Optional[Mapping[str, Any]] = None, result: Optional[Mapping[str, Any]] = None,
               error: Optional[str] = None, trace_id: Optional[str] = None) -> str:
    """Audit one run of `command`; None-valued arguments are dropped. Returns the trace id."""
    trace_id = trace_id or new_trace_id()
    entry: Dict[str, Any] = {"trace_id": trace_id, "command": command,
                             "args": {k: v for k, v in (args or {}).items() if v is not None}}
    if result is not None:
        entry["result"] = _scalars(result)
    if error is not None:
        entry["error"] = error
    write_audit(entry)
    return trace_id


def tail_audit(n: int = 50, path: Optional[str] = None) -> str:
    path = path or settings.audit_path
    if not os.path.exists(path):
        return ""
    with open(path, "r", encoding="utf-8") as f:
        return "".join(f.readlines()[-n:])


def verify_audit_lines(lines: Iterable[str]) -> List[dict]:
    """Check each line against the current key or any in NONSIG_AUDIT_PREV_KEYS."""
    keys = [settings.audit_signing_key] + list(settings.audit_prev_keys)
    results = []
    for ln in lines:
        ln = ln.strip()
        if not ln:
            continue
        try:
            obj = json.loads(ln)
            payload = {"ts": obj.get("ts"), "entry": obj.get("entry")}
            ok = any(hmac.compare_digest(_sign(payload, k), obj.get("sig", "")) for k in keys)
            entry = obj.get("entry") or {}
            results.append({"ok": ok, "ts": obj.get("ts"), "trace_id": entry.get("trace_id"),
                            "command": entry.get("command"), "failed": "error" in entry})
        except Exception:
            results.append({"ok": False, "error": "parse_error"})
    return results


def verify_tail(n: int = 50) -> Dict[str, Any]:
    results = verify_audit_lines(tail_audit(n).splitlines())
    return {"checked": len(results), "ok": all(r["ok"] for r in results), "results": results}
