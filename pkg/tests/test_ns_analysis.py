import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from nonsig.game_model import Game, builtin_game, classical_value, random_game, random_non_signalling_strategy, \
    winning_probability, is_non_signalling
from nonsig.lp_engine import solve
from nonsig.ns_analysis import (
    LiftedGame, SizeLimitError, analyze, build_dual, build_modified_two_player, build_primal, check_parameters,
    complete_support_lift, default_parameters, definetti_c, dual_solution_bound, equality_value, guessing_value,
    kappa, lifted_bound, load_game_like, max_inverse_entry, modified_duals, ns_value, optimal_strategy,
    perturbed_value, required_repetitions, sanov_delta, signalling_directions, test_count_d, threshold_bound,
    check_beta, _min_support_prob,
)
from nonsig.game_model import dump_json
from nonsig.repetition import trial_rng
from nonsig.settings import settings

# library helper imported by name; keep pytest from collecting it as a test
test_count_d.__test__ = False


def test_known_values():
    assert ns_value(builtin_game("chsh")) == pytest.approx(1.0, abs=1e-9)
    assert ns_value(builtin_game("gyni2")) == pytest.approx(0.5, abs=1e-9)


def test_incomplete_support_game_and_its_lift():
    g = builtin_game("anticorr3")
    assert ns_value(g) == pytest.approx(1.0, abs=1e-6)
    for eta in (0.01, 0.1, 0.5):
        assert ns_value(complete_support_lift(g, eta)) == pytest.approx(2 / 3, abs=1e-6)


def test_lift_structure():
    g = builtin_game("anticorr3")
    lifted = complete_support_lift(g, 0.1)
    assert isinstance(lifted, LiftedGame)
    assert lifted.dummy_count == 5
    assert lifted.lifted_dist.sum() == pytest.approx(1.0)
    assert lifted.lifted_dist[..., 1].sum() == pytest.approx(0.1)
    assert np.all(lifted.marginal > 0)
    with pytest.raises(ValueError):
        complete_support_lift(g, 1.0)


def test_lift_of_complete_game_adds_no_dummies():
    lifted = complete_support_lift(builtin_game("chsh"), 0.2)
    assert lifted.dummy_count == 0
    assert ns_value(lifted) == pytest.approx(1.0, abs=1e-9)


def test_lifted_file_loads(tmp_path):
    path = tmp_path / "lifted.json"
    dump_json(complete_support_lift(builtin_game("anticorr3"), 0.1), str(path))
    back = load_game_like(str(path))
    assert isinstance(back, LiftedGame)
    assert back.eta == pytest.approx(0.1)


def test_optimal_strategy_attains_value():
    g = builtin_game("gyni2")
    s = optimal_strategy(g)
    assert winning_probability(g, s) == pytest.approx(0.5, abs=1e-8)
    assert is_non_signalling(s, tol=1e-7)


def test_relaxation_and_duality_on_builtins():
    for name in ("chsh", "gyni2"):
        g = builtin_game(name)
        v = ns_value(g)
        assert equality_value(g) == pytest.approx(v, abs=1e-7)
        assert solve(build_dual(g)).objective_value == pytest.approx(-v, abs=1e-7)


def test_primal_shape():
    g = builtin_game("chsh")
    lp = build_primal(g)
    assert lp.num_vars == 16
    assert lp.num_ineq == len(signalling_directions(g)) == test_count_d(g) == 16
    assert lp.num_eq == 4


def test_kappa_flavours_and_sensitivity():
    g = builtin_game("gyni2")
    k, k_min = kappa(g), kappa(g, minimize=True)
    assert k > 0
    assert k_min <= k + 1e-9
    v = ns_value(g)
    for s in (0.01, 0.05, 0.1):
        assert perturbed_value(g, s) <= v + s * k_min + 1e-7


def test_perturbation_vectors_bounded_by_duals():
    g = builtin_game("gyni2")
    sol = solve(build_primal(g))
    rng = trial_rng(11, 0)
    for _ in range(20):
        e = rng.uniform(0.0, 0.05, size=sol.duals_ineq.size)
        assert perturbed_value(g, e) <= sol.objective_value + float(e @ sol.duals_ineq) + 1e-7
    with pytest.raises(ValueError):
        perturbed_value(g, -0.1)


def test_analyze_report():
    rep = analyze(builtin_game("chsh"))
    assert rep.ns_value == pytest.approx(1.0)
    assert rep.alpha == pytest.approx(0.0, abs=1e-9)
    assert rep.d == 16
    assert rep.relaxed_equals_equality


def test_constants():
    assert definetti_c(1, 4, 4) == 4096
    assert sanov_delta(10, 0.5, 2) == pytest.approx(11 * math.exp(-10 * 0.25 / 2))
    assert sanov_delta(1, 1e-6, 10 ** 6) == math.inf
    assert guessing_value(builtin_game("gyni2")) == pytest.approx(0.5)


def test_threshold_bound_matches_log_formula():
    g = builtin_game("gyni2")
    n, beta = 10 ** 6, 0.05
    b = threshold_bound(g, n, beta)
    nq, na = 4, 4
    direct = math.log(10 * 2 * nq * na) + 2 * (nq * na - 1) * math.log(n + 1) - (n / 4) * (beta / (10 * b.kappa)) ** 2
    assert b.log_bound == pytest.approx(direct, rel=1e-9)
    assert 0.0 <= b.bound <= 1.0
    assert b.smallest_n % 2 == 0
    assert threshold_bound(g, b.smallest_n, beta).log_bound < 0.0


def test_threshold_bound_preconditions():
    g = builtin_game("gyni2")
    with pytest.raises(ValueError):
        threshold_bound(g, 101, 0.05)
    with pytest.raises(ValueError):
        threshold_bound(g, 100, 0.9)
    with pytest.raises(ValueError):
        threshold_bound(builtin_game("chsh"), 100, 0.05)


def test_default_parameters_pass_their_own_relations():
    g = builtin_game("gyni2")
    beta = 0.05
    n = required_repetitions(g, beta)
    assert n % 2 == 0
    p = default_parameters(g, beta, n)
    assert p.zeta == pytest.approx(8 * p.epsilon)
    assert p.nu == pytest.approx(p.epsilon)
    rep = check_parameters(g, p)
    for name in ("beta_positive", "beta_le_alpha", "seven_epsilon_le_zeta", "zeta_window",
                 "nu_lt_zeta_minus_six_epsilon", "delta_formula", "c_formula", "d_formula", "d_lt_m_q_a",
                 "n_even", "repetitions_for_beta"):
        assert rep.check(name).passed, name


def test_check_parameters_flags_single_violations():
    g = builtin_game("gyni2")
    p = default_parameters(g, 0.05, 1000)
    bad_zeta = check_parameters(g, p.model_copy(update={"zeta": 6 * p.epsilon}))
    assert not bad_zeta.check("seven_epsilon_le_zeta").passed
    odd = check_parameters(g, p.model_copy(update={"n": 1001}))
    assert not odd.check("n_even").passed
    bad_d = check_parameters(g, p.model_copy(update={"d": p.d + 1}))
    assert not bad_d.check("d_formula").passed
    assert not bad_d.passed


def test_max_inverse_entry():
    assert max_inverse_entry(np.eye(2)) == pytest.approx(1.0)
    assert max_inverse_entry(np.array([[2.0]])) == pytest.approx(0.5)
    assert max_inverse_entry(np.array([[1.0, 1.0], [0.0, 1.0]])) == pytest.approx(1.0)
    with pytest.raises(SizeLimitError):
        max_inverse_entry(np.ones((6, 6)), max_submatrices=10)


def test_dual_solution_bound_size_guard():
    with pytest.raises(SizeLimitError):
        dual_solution_bound(builtin_game("chsh"))


def test_lifted_bound_uses_lifted_program():
    lifted = complete_support_lift(builtin_game("anticorr3"), 0.1)
    b = lifted_bound(lifted, 1000, 0.1)
    assert b.kappa == pytest.approx(kappa(lifted, minimize=True))


def test_modified_program_shapes():
    g = random_game((2, 2), (2, 2), trial_rng(5, 0), complete_support=False)
    eq = build_modified_two_player(g, 0.1)
    rel = build_modified_two_player(g, 0.1, relaxed=True)
    assert eq.num_eq == rel.num_ineq
    with pytest.raises(ValueError):
        build_modified_two_player(builtin_game("anticorr3"), 0.1)


@pytest.mark.slow
def test_modified_duals_are_at_most_one():
    for k in range(20):
        g = random_game((2, 2), (2, 2), trial_rng(100 + k, 0), complete_support=False)
        for eta in (1e-3, 1e-2, 1e-1):
            y = modified_duals(g, eta)
            assert y.max(initial=0.0) <= 1.0 + 1e-8


def _flip_player0(g: Game) -> Game:
    return Game.from_arrays(np.flip(g.dist, axis=0), np.flip(g.accept, axis=0))


@hsettings(max_examples=15, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
def test_value_bounds_and_relabelling(seed):
    rng = trial_rng(seed, 0)
    g = random_game((2, 2), (2, 3), rng)
    v = ns_value(g)
    assert classical_value(g) <= v + 1e-9
    s = random_non_signalling_strategy(g.question_alphabets, g.answer_alphabets, rng)
    assert winning_probability(g, s) <= v + 1e-9
    assert ns_value(_flip_player0(g)) == pytest.approx(v, abs=1e-8)
    assert equality_value(g) == pytest.approx(v, abs=1e-7)


@pytest.mark.slow
def test_three_player_random_games_relaxation_is_tight():
    for k in range(10):
        g = random_game((2, 2, 2), (2, 2, 2), trial_rng(200 + k, 0))
        v = ns_value(g)
        assert equality_value(g) == pytest.approx(v, abs=1e-7)
        assert solve(build_dual(g)).objective_value == pytest.approx(-v, abs=1e-7)


@hsettings(max_examples=15, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
def test_face_minimized_kappa_never_exceeds_plain(seed):
    g = random_game((2, 2), (2, 2), trial_rng(seed, 0))
    k = kappa(g)
    k_min = kappa(g, minimize=True)
    assert k_min <= k + settings.gap_tol
    assert analyze(g).kappa_minimized == pytest.approx(k_min, abs=1e-12)


def test_all_accepting_game_needs_no_signalling_rows():
    chsh = builtin_game("chsh")
    g = Game.from_arrays(chsh.dist, np.ones((2, 2, 2, 2), dtype=bool))
    assert ns_value(g) == pytest.approx(1.0, abs=1e-9)
    assert kappa(g, minimize=True) == pytest.approx(0.0, abs=1e-9)
    assert kappa(g) >= -1e-9


@pytest.mark.parametrize("seed", range(5))
def test_dual_solution_bound_dominates_kappa(seed):
    g = random_game((2, 1), (2, 2), trial_rng(seed, 0))
    assert dual_solution_bound(g) >= kappa(g) - 1e-9


def test_check_parameters_rejects_large_epsilon_and_zero_beta():
    g = builtin_game("gyni2")
    p = default_parameters(g, 0.05, 1000)
    wide = check_parameters(g, p.model_copy(update={"epsilon": 2 * _min_support_prob(g)}))
    assert not wide.check("epsilon_le_min_q").passed
    assert not wide.passed
    flat = check_parameters(g, p.model_copy(update={"beta": 0.0}))
    assert not flat.check("beta_positive").passed
    assert not flat.passed


def test_beta_tolerance_only_applies_when_alpha_is_positive():
    with pytest.raises(ValueError):
        check_beta(5e-9, 0.0)
    with pytest.raises(ValueError):
        threshold_bound(builtin_game("chsh"), 100, 5e-9)
    check_beta(0.5 + settings.gap_tol / 2, 0.5)
    with pytest.raises(ValueError):
        check_beta(0.0, 0.5)
