from typing import List, Optional
from pydantic import BaseModel
from dotenv import load_dotenv
import os

load_dotenv()

def _split_csv(v: Optional[str]) -> List[str]:
    return [x.strip() for x in (v or "").split(",") if x.strip()]

def _truthy(v: Optional[str], default: bool = False) -> bool:
    if v is None:
        return default
    return v.strip().lower() in ("1", "true", "yes", "y", "on")

def _int(v: Optional[str], default: int) -> int:
    try:
        return int(v) if v is not None else default
    except Exception:
        return default

def _float(v: Optional[str], default: float) -> float:
    try:
        return float(v) if v is not None else default
    except Exception:
        return default

def _default_threads() -> int:
    return max(1, min(8, os.cpu_count() or 1))

class Settings(BaseModel):
    # Parallel trials (NONSIG_THREADS caps the worker pool)
    threads: int = max(1, _int(os.getenv("NONSIG_THREADS"), _default_threads()))

    # Numerical tolerances
    feas_tol: float = _float(os.getenv("NONSIG_FEAS_TOL"), 1e-9)
    gap_tol: float = _float(os.getenv("NONSIG_GAP_TOL"), 1e-8)
    ns_tol: float = _float(os.getenv("NONSIG_NS_TOL"), 1e-9)
    norm_tol: float = _float(os.getenv("NONSIG_NORM_TOL"), 1e-12)

    # LP engine
    lp_method: str = os.getenv("NONSIG_LP_METHOD", "simplex")
    lp_max_pivots: int = _int(os.getenv("NONSIG_LP_MAX_PIVOTS"), 100_000)

    # Brute-force Δ enumeration limits
    delta_max_columns: int = _int(os.getenv("NONSIG_DELTA_MAX_COLUMNS"), 12)
    delta_max_submatrices: int = _int(os.getenv("NONSIG_DELTA_MAX_SUBMATRICES"), 500_000)

    # Audit (signed run log + key rotation)
    audit_enabled: bool = _truthy(os.getenv("NONSIG_AUDIT"), True)
    audit_path: str = os.getenv("NONSIG_AUDIT_PATH", "./data/audit/runs.jsonl")
    audit_signing_key: str = os.getenv("NONSIG_AUDIT_KEY", "dev-signing-key")
    audit_prev_keys: List[str] = _split_csv(os.getenv("NONSIG_AUDIT_PREV_KEYS"))

    # Logging / service
    log_level: str = os.getenv("NONSIG_LOG_LEVEL", "WARNING").upper()
    app_port: int = _int(os.getenv("APP_PORT"), 8000)

settings = Settings()
