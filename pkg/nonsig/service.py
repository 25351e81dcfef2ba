from fastapi import FastAPI
from fastapi.responses import JSONResponse, Response
from prometheus_client import generate_latest, CONTENT_TYPE_LATEST
import json, logging, math, time

from .models import AnalyzeRequest, SigRequest, BoundRequest, BoundResponse, LiftedGameSpec
from .game_model import BUILTIN_GAMES, Game, GameError, SignallingDirection, Strategy, _check_shapes, _require_valid, builtin_game
from .ns_analysis import GameLike, LiftedGame, analyze, complete_support_lift, kappa, ns_value, threshold_bound
from .signalling import JOINT, max_sig, sig_value
from .audit import new_trace_id, record_run, verify_tail
from .telemetry import REQS, FAILS, LAT
from .version import __version__

logger = logging.getLogger(__name__)

app = FastAPI(title="nonsig", version=__version__)


def _game(req: AnalyzeRequest) -> GameLike:
    spec = req.game
    if isinstance(spec, str):
        if spec not in BUILTIN_GAMES:
            raise GameError(f"unknown built-in game {spec!r}; choose one of {', '.join(BUILTIN_GAMES)}")
        game: GameLike = builtin_game(spec)
    elif isinstance(spec, LiftedGameSpec):
        base = Game.from_spec(spec.base)
        _require_valid(base)
        game = complete_support_lift(base, spec.eta)
    else:
        game = Game.from_spec(spec)
        _require_valid(game)
    if req.eta is not None:
        if isinstance(game, LiftedGame):
            raise GameError("game is already lifted; drop eta")
        game = complete_support_lift(game, req.eta)
    return game


def _finite(obj):
    """JSON has no inf or nan; they go out as null."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def _handle(route: str, req, fn):
    """Shared route body: metrics, audit entry, 400 on bad input, 500 with a trace id otherwise."""
    REQS.labels(route=route).inc()
    trace = new_trace_id()
    t0 = time.time()
    try:
        resp = fn()
        body = _finite(json.loads(resp.model_dump_json()) if hasattr(resp, "model_dump_json") else resp)
        record_run(route, req.model_dump(mode="json"), result=body if isinstance(body, dict) else None, trace_id=trace)
        return JSONResponse(body)
    except ValueError as e:
        FAILS.labels(route=route, reason="bad_request").inc()
        record_run(route, req.model_dump(mode="json"), error=str(e), trace_id=trace)
        return JSONResponse({"error": "bad_request", "detail": str(e), "trace_id": trace}, status_code=400)
    except Exception as e:
        logger.exception("%s failed (trace %s)", route, trace)
        FAILS.labels(route=route, reason="exception").inc()
        record_run(route, req.model_dump(mode="json"), error=str(e), trace_id=trace)
        return JSONResponse({"error": "internal_error", "trace_id": trace}, status_code=500)
    finally:
        LAT.labels(route=route).observe((time.time() - t0) * 1000)

@app.get("/health")
def health():
    return {"ok": True, "version": __version__, "builtin_games": list(BUILTIN_GAMES)}


@app.post("/analyze")
def analyze_route(req: AnalyzeRequest):
    return _handle("/analyze", req, lambda: analyze(_game(req)))


@app.post("/sig")
def sig_route(req: SigRequest):
    def run():
        game = _game(req)
        plain = game.as_game() if isinstance(game, LiftedGame) else game
        strategy = Strategy.from_spec(req.strategy)
        _check_shapes(plain, strategy.table)
        if req.direction:
            d = SignallingDirection.parse(req.direction)
            d.validate(plain.question_alphabets, plain.answer_alphabets)
            return {"direction": d.key(), "value": sig_value(plain.dist, strategy, d),
                    "joint_form": sig_value(plain.dist, strategy, d, JOINT)}
        return max_sig(plain.dist, strategy, plain.answer_alphabets)
    return _handle("/sig", req, run)


@app.post("/bound")
def bound_route(req: BoundRequest):
    def run():
        game = _game(req)
        value = ns_value(game)
        k = kappa(game, minimize=req.minimize_kappa)
        rows = [threshold_bound(game, n, req.beta, kappa_value=k, alpha=1.0 - value) for n in req.n_grid]
        return BoundResponse(ns_value=value, alpha=1.0 - value, beta=req.beta, rows=rows)
    return _handle("/bound", req, run)


# ---------- Audit & Metrics ----------
@app.get("/audit/verify")
def audit_verify(n: int = 50):
    return verify_tail(n)


@app.get("/metrics")
def metrics():
    return Response(generate_latest(), media_type=CONTENT_TYPE_LATEST)


def run():
    import uvicorn
    from .settings import settings
    uvicorn.run(app, host="0.0.0.0", port=settings.app_port)


if __name__ == "__main__":
    run()
