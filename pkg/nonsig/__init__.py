"""Non-signalling values of multiplayer games, signalling tests and parallel-repetition experiments."""
from .version import __version__
from .game_model import (
    Game,
    GameError,
    DimensionMismatchError,
    Strategy,
    EstimatedStrategy,
    SignallingDirection,
    load_game,
    load_strategy,
    dump_json,
    winning_probability,
    strategy_distance,
    is_complete_support,
    is_non_signalling,
)
from .lp_engine import LinearProgram, LpSolution, LpError, solve
from .ns_analysis import (
    LiftedGame,
    SolverError,
    SizeLimitError,
    complete_support_lift,
    ns_value,
    kappa,
    analyze,
    threshold_bound,
    check_parameters,
)
from .signalling import sig_value, max_sig, estimate_strategy, signalling_test
from .repetition import InadmissibleDirectionError, play, simulate, trial_rng
