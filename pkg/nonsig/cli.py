"""nonsig command line.

Examples:
  python -m nonsig value --game anticorr3 --lift 0.1
  python -m nonsig bound --game gyni2 --beta 0.05 --n-grid 1000,100000,1000000
  python -m nonsig simulate --game chsh --strategy iid-optimal --n 1000 --trials 100 --seed 7 --format csv
"""
import argparse
import csv
import io
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from .audit import record_run, verify_tail
from .game_model import (
    Game,
    SignallingDirection,
    Strategy,
    _check_shapes,
    classical_value,
    is_complete_support,
    load_strategy,
    validate_game,
)
from .models import GameSummary
from .ns_analysis import (
    GameLike,
    LiftedGame,
    check_parameters,
    complete_support_lift,
    default_parameters,
    kappa,
    load_game_like,
    log_sanov_delta,
    ns_value,
    sanov_delta,
    test_count_d,
    threshold_bound,
)
from .repetition import (
    STRATEGY_NAMES,
    IIDStrategy,
    MixtureStrategy,
    PermutedWrapper,
    RepeatedStrategy,
    build_one_game_strategy,
    build_repeated_strategy,
    csv_text,
    guessing_game,
    run_concentration_experiment,
    run_joint_event_experiment,
    run_test_reliability_experiment,
    simulate,
)
from .settings import settings
from .signalling import JOINT, max_sig, sig_value
from .version import __version__

logger = logging.getLogger("nonsig.cli")

STOCHASTIC = ("simulate", "reliability", "joint-events", "guess")


class UsageError(ValueError):
    pass


# ------- Argument parsing -------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--game", default="chsh", help="built-in name (chsh, gyni2, anticorr3) or path to a game JSON")
    p.add_argument("--lift", type=float, default=None, metavar="ETA", help="complete-support lift with dummy mass η")
    p.add_argument("--n", type=int, default=None, help="number of repetitions (even)")
    p.add_argument("--n-grid", default=None, help="comma-separated n values for `bound`")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--zeta", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--strategy", default=None,
                   help=f"one of {', '.join(STRATEGY_NAMES)}; comma-separated components for joint-events")
    p.add_argument("--strategy-file", default=None, help="strategy JSON (overrides --strategy)")
    p.add_argument("--weights", default=None, help="mixture weights for joint-events, comma-separated")
    p.add_argument("--direction", default=None, help='signalling direction "(i|b_bar|s_i|s_bar)"')
    p.add_argument("--permute", action="store_true", help="wrap the repeated strategy in a uniform round permutation")
    p.add_argument("--minimize-kappa", action="store_true", help="use the smallest κ on the optimal dual face")
    p.add_argument("--out", default=None, help="write the artifact here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nonsig", description="Non-signalling game analysis and repetition experiments")
    ap.add_argument("--version", action="version", version=f"nonsig {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    common = _common()
    helps = {
        "info": "game summary and support check",
        "value": "optimal non-signalling value",
        "kappa": "sum of signalling-row duals and the test count d",
        "bound": "threshold bound over an n grid",
        "check-params": "feasibility of the threshold constants",
        "lift": "write the complete-support lifted game",
        "sig": "signalling report of a one-game strategy",
        "simulate": "repeated play; with --beta, the concentration experiment",
        "reliability": "acceptance frequency of the signalling test",
        "joint-events": "joint test/signalling events for a strategy mixture",
        "guess": "guessing-game win rate against W_ns",
        "audit": "verify the signed run log",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return ap


def _floats(text: Optional[str]) -> List[float]:
    return [float(x) for x in (text or "").split(",") if x.strip()]


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command} requires {', '.join(missing)}")


def _validate(args: argparse.Namespace) -> None:
    if args.command in STOCHASTIC:
        _require(args, "seed", "n")
        if args.seed < 0:
            raise UsageError("--seed must be non-negative")
        if args.trials < 1:
            raise UsageError("--trials must be positive")
    if args.n is not None and (args.n < 2 or args.n % 2):
        raise UsageError(f"--n must be even and at least 2, got {args.n}")
    if args.lift is not None and not 0.0 < args.lift < 1.0:
        raise UsageError(f"--lift must lie in (0, 1), got {args.lift}")
    if args.format == "csv" and args.command not in STOCHASTIC + ("bound",):
        raise UsageError(f"--format csv is not available for {args.command}")


# ------- Inputs -------

def _load(args: argparse.Namespace, warnings: List[str]) -> GameLike:
    game = load_game_like(args.game)
    if args.lift is not None:
        if isinstance(game, LiftedGame):
            raise UsageError("the game file is already lifted; drop --lift")
        game = complete_support_lift(game, args.lift)
    base = game.base if isinstance(game, LiftedGame) else game
    if not isinstance(game, LiftedGame) and not is_complete_support(base):
        warnings.append(f"game {base.name or args.game!r} does not have complete support; consider --lift ETA")
    return game


def _plain_game(game: GameLike) -> Game:
    return game.as_game() if isinstance(game, LiftedGame) else game


def _one_game_strategy(args: argparse.Namespace, game: GameLike) -> Strategy:
    if args.strategy_file:
        strategy = load_strategy(args.strategy_file)
        _check_shapes(_plain_game(game), strategy.table)
        return strategy
    return build_one_game_strategy(args.strategy or "iid-optimal", game)


def _repeated_strategy(args: argparse.Namespace, game: GameLike) -> RepeatedStrategy:
    if args.strategy_file:
        rep: RepeatedStrategy = IIDStrategy(_one_game_strategy(args, game))
        return PermutedWrapper(rep) if args.permute else rep
    return build_repeated_strategy(args.strategy or "iid-optimal", game, permute=args.permute)


def _direction(args: argparse.Namespace, game: Game, strategy: Optional[Strategy]) -> SignallingDirection:
    if args.direction:
        d = SignallingDirection.parse(args.direction)
        d.validate(game.question_alphabets, game.answer_alphabets)
        return d
    if strategy is None:
        raise UsageError(f"{args.command} requires --direction")
    report = max_sig(game.dist, strategy, game.answer_alphabets)
    if report.max_direction is None:
        raise UsageError("no signalling direction is defined for this game")
    logger.info("using the maximal-signalling direction %s", report.max_direction)
    return SignallingDirection.parse(report.max_direction)


def _kappa_value(args: argparse.Namespace, game: GameLike) -> float:
    return kappa(game, minimize=args.minimize_kappa)


# ------- Commands -------

def cmd_info(args, game: GameLike, warnings: List[str]) -> Dict[str, Any]:
    base = game.base if isinstance(game, LiftedGame) else game
    try:
        classical = classical_value(base)
    except ValueError:
        classical = None
    summary = GameSummary(
        name=base.name, players=base.players,
        question_alphabets=list(base.question_alphabets), answer_alphabets=list(base.answer_alphabets),
        question_count=base.question_count, answer_count=base.answer_count,
        support_size=len(base.support), complete_support=is_complete_support(base),
        lifted=isinstance(game, LiftedGame),
        eta=game.eta if isinstance(game, LiftedGame) else None,
        dummy_count=game.dummy_count if isinstance(game, LiftedGame) else 0,
        classical_value=classical, violations=validate_game(base),
    )
    return json.loads(summary.model_dump_json())


def cmd_value(args, game: GameLike, warnings: List[str]) -> Dict[str, Any]:
    out = {"game": game.name or args.game, "ns_value": ns_value(game), "lifted": isinstance(game, LiftedGame)}
    if isinstance(game, LiftedGame):
        out["eta"] = game.eta
    return out


def cmd_kappa(args, game: GameLike, warnings: List[str]) -> Dict[str, Any]:
    out: Dict[str, Any] = {"kappa": kappa(game), "kappa_minimized": kappa(game, minimize=True)}
    out["d"] = test_count_d(game) if game.players >= 2 else 0
    return out


def cmd_bound(args, game: GameLike, warnings: List[str]) -> Dict[str, Any]:
    _require(args, "beta")
    grid = [int(x) for x in _floats(args.n_grid)] or ([args.n] if args.n else [])
    if not grid:
        raise UsageError("bound requires --n or --n-grid")
    k = _kappa_value(args, game)
    value = ns_value(game)
    rows = []
    for n in grid:
        row = threshold_bound(game, n, args.beta, kappa_value=k, alpha=1.0 - value)
        rows.append(json.loads(row.model_dump_json()))
    return {"ns_value": value, "alpha": 1.0 - value, "beta": args.beta, "rows": rows}


def cmd_check_params(args, game: GameLike, warnings: List[str]) -> Dict[str, Any]:
    _require(args, "beta", "n")
    params = default_parameters(game, args.beta, args.n, kappa_value=_kappa_value(args, game))
    update = {k: getattr(args, k) for k in ("epsilon", "zeta", "nu") if getattr(args, k) is not None}
    if "epsilon" in update:
        alphabet = game.question_count * game.answer_count
        update["log_delta"] = log_sanov_delta(args.n // 2, update["epsilon"], alphabet)
        update["delta"] = sanov_delta(args.n // 2, update["epsilon"], alphabet)
    params = params.model_copy(update=update)
    report = check_parameters(game, params)
    return {
        "parameters": json.loads(params.model_dump_json()),
        "report": json.loads(report.model_dump_json()),
        "failed": report.failed(),
    }


def cmd_lift(args, game: GameLike, warnings: List[str]) -> Dict[str, Any]:
    if not isinstance(game, LiftedGame):
        raise UsageError("lift requires --lift ETA")
    return json.loads(game.to_spec().model_dump_json(exclude_none=True))


def cmd_sig(args, game: GameLike, warnings: List[str]) -> Dict[str, Any]:
    plain = _plain_game(game)
    strategy = _one_game_strategy(args, game)
    if args.direction:
        d = _direction(args, plain, strategy)
        return {
            "direction": d.key(),
            "value": sig_value(plain.dist, strategy, d),
            "joint_form": sig_value(plain.dist, strategy, d, JOINT),
        }
    return json.loads(max_sig(plain.dist, strategy, plain.answer_alphabets).model_dump_json())


def cmd_simulate(args, game: GameLike, warnings: List[str]):
    rep = _repeated_strategy(args, game)
    if args.beta is not None:
        report, records = run_concentration_experiment(game, rep, args.n, args.beta, args.trials, args.seed)
        return json.loads(report.model_dump_json()), records
    records = simulate(game, rep, args.n, args.trials, args.seed)
    reals = [r.f_real for r in records if r.f_real is not None]
    summary = {
        "n": args.n, "trials": args.trials, "seed": args.seed,
        "mean_f": sum(r.f for r in records) / len(records),
        "mean_f_real": sum(reals) / len(reals) if reals else None,
        "ns_value": ns_value(game),
    }
    return summary, records


def cmd_reliability(args, game: GameLike, warnings: List[str]):
    _require(args, "zeta", "epsilon")
    plain = _plain_game(game)
    strategy = _one_game_strategy(args, game)
    d = _direction(args, plain, strategy)
    report, records = run_test_reliability_experiment(plain, strategy, d, args.n, args.zeta, args.epsilon,
                                                      args.trials, args.seed)
    return json.loads(report.model_dump_json()), records


def cmd_joint_events(args, game: GameLike, warnings: List[str]):
    _require(args, "zeta", "epsilon")
    plain = _plain_game(game)
    if args.strategy_file:
        components = [_one_game_strategy(args, game)]
    else:
        names = [x.strip() for x in (args.strategy or "iid-optimal").split(",") if x.strip()]
        components = [build_one_game_strategy(name, game) for name in names]
    weights = _floats(args.weights) or [1.0 / len(components)] * len(components)
    mixture = MixtureStrategy(weights, components)
    d = _direction(args, plain, components[0])
    report, records = run_joint_event_experiment(plain, mixture, d, args.n, args.zeta, args.epsilon,
                                                 args.trials, args.seed)
    return json.loads(report.model_dump_json()), records


def cmd_guess(args, game: GameLike, warnings: List[str]):
    _require(args, "zeta", "epsilon")
    plain = _plain_game(game)
    rep = _repeated_strategy(args, game)
    hint = None
    if not args.direction and args.strategy != "echo-peek":
        hint = _one_game_strategy(args, game)
    d = _direction(args, plain, hint)
    report, records = guessing_game(plain, rep, d, args.n, args.zeta, args.epsilon, args.trials, args.seed)
    return json.loads(report.model_dump_json()), records


def cmd_audit(args) -> Dict[str, Any]:
    return verify_tail(args.n or 50)


COMMANDS = {
    "info": cmd_info,
    "value": cmd_value,
    "kappa": cmd_kappa,
    "bound": cmd_bound,
    "check-params": cmd_check_params,
    "lift": cmd_lift,
    "sig": cmd_sig,
    "simulate": cmd_simulate,
    "reliability": cmd_reliability,
    "joint-events": cmd_joint_events,
    "guess": cmd_guess,
}


# ------- Output -------

def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def _rows_csv(rows: Sequence[Dict[str, Any]]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def _emit(args: argparse.Namespace, payload: Dict[str, Any], records=None) -> None:
    if args.format == "csv" and records is not None:
        _write(csv_text(records), args.out)
        if args.out:
            with open(args.out + ".summary.json", "w", encoding="utf-8") as f:
                f.write(_json(payload))
        return
    if args.format == "csv" and args.command == "bound":
        _write(_rows_csv(payload["rows"]), args.out)
        return
    _write(_json(payload), args.out)


def _audit_args(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k != "command"}


def run(args: argparse.Namespace) -> int:
    if args.command == "audit":
        payload = cmd_audit(args)
        _emit(args, payload)
        return 0 if payload["ok"] else 1

    _validate(args)
    warnings: List[str] = []
    game = _load(args, warnings)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    result = COMMANDS[args.command](args, game, warnings)
    payload, records = result if isinstance(result, tuple) else (result, None)
    if warnings and isinstance(payload, dict) and args.command != "lift":
        payload = {**payload, "warnings": warnings}
    _emit(args, payload, records)
    record_run(args.command, _audit_args(args), result=payload)
    if args.command == "check-params" and payload["failed"]:
        print(f"error: infeasible parameters: {', '.join(payload['failed'])}", file=sys.stderr)
        return 2
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=getattr(logging, settings.log_level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) if e.code in (0, None) else 2
    try:
        return run(args)
    except (ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        record_run(args.command, _audit_args(args), error=str(e))
        return 2
    except Exception as e:
        logger.exception("command %s failed", args.command)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        record_run(args.command, _audit_args(args), error=str(e))
        return 1
