import io
import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from nonsig.game_model import (
    SignallingDirection, builtin_game, echo_strategy, pr_box_strategy, uniform_strategy, winning_probability,
)
from nonsig.ns_analysis import complete_support_lift, optimal_strategy
from nonsig.repetition import (
    EchoStrategy, IIDStrategy, InadmissibleDirectionError, MixtureStrategy, PermutedWrapper, RoundPeekStrategy,
    Transcript, build_repeated_strategy, csv_text, guessing_game, play, run_concentration_experiment,
    run_estimation_experiment, run_joint_event_experiment, run_test_reliability_experiment, sample_questions,
    simulate, split, trial_rng, wilson_interval, winning_frequencies, write_csv,
)

GYNI_DIRECTION = SignallingDirection(1, (0,), 0, (0,))


def test_trial_rng_is_reproducible():
    a = trial_rng(7, 3).random(5)
    b = trial_rng(7, 3).random(5)
    c = trial_rng(7, 4).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        trial_rng(-1, 0)


def test_sample_questions_requires_even_n():
    g = builtin_game("chsh")
    with pytest.raises(ValueError):
        sample_questions(g, 7, 0)
    q = sample_questions(g, 8, 0)
    assert q.shape == (8, 2)


def test_sampled_questions_stay_in_support():
    g = builtin_game("anticorr3")
    q = sample_questions(g, 200, 1)
    assert all(g.dist[tuple(row)] > 0 for row in q)


def test_play_and_frequencies():
    g = builtin_game("chsh")
    t = play(g, pr_box_strategy(), 100, 5)
    assert t.n == 100
    assert t.win_bits.all()
    freq = winning_frequencies(t)
    assert freq.f == freq.f_t == freq.f_g == freq.f_real == 1.0
    test_half, game_half = split(t)
    assert len(test_half.questions) == len(game_half.questions) == 50


def test_frequency_identity_holds_exactly():
    g = builtin_game("gyni2")
    for seed in range(5):
        freq = winning_frequencies(play(g, uniform_strategy((2, 2), (2, 2)), 30, seed))
        assert freq.f == (freq.f_t + freq.f_g) / 2


def test_transcript_validation():
    with pytest.raises(ValueError):
        Transcript(np.zeros((3, 2)), np.zeros((3, 2)), np.zeros(3, bool), np.zeros(3, bool))
    with pytest.raises(ValueError):
        Transcript(np.zeros((4, 2)), np.zeros((2, 2)), np.zeros(4, bool), np.zeros(4, bool))


def test_lifted_play_marks_dummy_rounds_as_wins():
    lifted = complete_support_lift(builtin_game("anticorr3"), 0.5)
    t = play(lifted, uniform_strategy((2, 2, 2), (2, 2, 2)), 400, 3)
    assert t.dummy_flags.any()
    assert t.win_bits[t.dummy_flags].all()
    assert all(lifted.base.dist[tuple(q)] == 0 for q in t.questions[t.dummy_flags])
    freq = winning_frequencies(t)
    assert freq.f_real == pytest.approx(float(t.win_bits[~t.dummy_flags].mean()))


def test_play_rejects_bad_answers():
    class Broken(IIDStrategy):
        def respond(self, questions, rng):
            return np.full((len(questions), 2), 5)

    with pytest.raises(ValueError):
        play(builtin_game("chsh"), Broken(uniform_strategy((2, 2), (2, 2))), 10, 0)


def test_echo_strategies():
    g = builtin_game("gyni2")
    q = sample_questions(g, 20, 2)
    rng = trial_rng(0, 0)
    echo = EchoStrategy(1, 0, (2, 2)).respond(q, rng)
    assert np.array_equal(echo[:, 0], q[:, 1])
    assert not echo[:, 1].any()
    # echo is round-wise, so a permutation changes nothing
    permuted = PermutedWrapper(EchoStrategy(1, 0, (2, 2))).respond(q, rng)
    assert np.array_equal(permuted, echo)
    peek = RoundPeekStrategy(IIDStrategy(uniform_strategy((2, 2), (2, 2))), 1, 0, (2, 2)).respond(q, rng)
    assert np.array_equal(peek[:, 0], np.roll(q[:, 1], -1))


def test_mixture_validation():
    s = uniform_strategy((2, 2), (2, 2))
    with pytest.raises(ValueError):
        MixtureStrategy([0.5, 0.6], [s, s])
    with pytest.raises(ValueError):
        MixtureStrategy([], [])


def test_named_strategies():
    g = builtin_game("chsh")
    for name in ("iid-optimal", "uniform", "zero", "echo", "echo-peek"):
        assert build_repeated_strategy(name, g) is not None
    assert isinstance(build_repeated_strategy("uniform", g, permute=True), PermutedWrapper)
    with pytest.raises(ValueError):
        build_repeated_strategy("telepathy", g)


def test_simulate_is_thread_independent():
    g = builtin_game("chsh")
    s = optimal_strategy(g)
    one = csv_text(simulate(g, s, 100, 30, 7, threads=1))
    many = csv_text(simulate(g, s, 100, 30, 7, threads=4))
    assert one == many
    assert one.splitlines()[0].startswith("seed,trial,f,f_t,f_g,f_real")
    assert len(one.splitlines()) == 31


def test_write_csv_formats_cells():
    recs = simulate(builtin_game("gyni2"), uniform_strategy((2, 2), (2, 2)), 10, 2, 1)
    buf = io.StringIO()
    write_csv(recs, buf)
    rows = buf.getvalue().splitlines()
    first = rows[1].split(",")
    assert first[0] == "1" and first[1] == "0"
    # test, sig_game, exceed, win and deviation are empty for plain simulation
    assert first[6:] == ["", "", "", "", ""]


def test_wilson_interval():
    ci = wilson_interval(0, 100)
    assert ci.low == pytest.approx(0.0, abs=1e-12) and 0.0 < ci.high < 0.05
    ci = wilson_interval(50, 100)
    assert ci.low < 0.5 < ci.high
    assert wilson_interval(0, 0).high == 1.0


def test_concentration_experiment():
    g = builtin_game("gyni2")
    rep, records = run_concentration_experiment(g, optimal_strategy(g), 200, 0.1, 40, 3)
    assert len(records) == 40
    assert rep.threshold == pytest.approx(0.6)
    assert rep.chernoff_bound == pytest.approx(math.exp(-2 * 200 * 0.01))
    assert rep.probability <= 0.1
    assert 0.0 <= rep.threshold_bound <= 1.0
    with pytest.raises(ValueError):
        run_concentration_experiment(builtin_game("chsh"), pr_box_strategy(), 200, 0.1, 4, 3)


def test_reliability_experiment_separates_echo_from_uniform():
    g = builtin_game("gyni2")
    echo, _ = run_test_reliability_experiment(g, echo_strategy(g), GYNI_DIRECTION, 2000, 0.1, 0.01, 20, 1)
    quiet, _ = run_test_reliability_experiment(g, uniform_strategy((2, 2), (2, 2)), GYNI_DIRECTION,
                                               2000, 0.1, 0.01, 20, 1)
    assert echo.acceptance == 1.0
    assert quiet.acceptance == 0.0
    assert 0.0 <= echo.delta <= 1.0
    with pytest.raises(ValueError):
        run_test_reliability_experiment(g, echo_strategy(g), GYNI_DIRECTION, 2000, 0.05, 0.01, 2, 1)


def test_joint_events_for_pure_components():
    g = builtin_game("gyni2")
    for strategy in (echo_strategy(g), uniform_strategy((2, 2), (2, 2))):
        rep, records = run_joint_event_experiment(g, MixtureStrategy([1.0], [strategy]), GYNI_DIRECTION,
                                                  2000, 0.1, 0.01, 10, 4)
        assert rep.accepted_not_signalling == 0.0
        assert rep.rejected_signalling == 0.0
        assert all(r.sig_game is not None for r in records)


def test_joint_events_mixture_records_both_outcomes():
    g = builtin_game("gyni2")
    mixture = MixtureStrategy([0.5, 0.5], [echo_strategy(g), uniform_strategy((2, 2), (2, 2))])
    _, records = run_joint_event_experiment(g, mixture, GYNI_DIRECTION, 2000, 0.1, 0.01, 30, 9)
    assert {r.test for r in records} == {0, 1}


def test_guessing_game():
    g = builtin_game("gyni2")
    d = SignallingDirection(1, (1,), 1, (0,))
    honest, _ = guessing_game(g, IIDStrategy(uniform_strategy((2, 2), (2, 2))), d, 200, 0.1, 0.01, 300, 2)
    assert honest.W_ns == pytest.approx(0.5)
    assert abs(honest.empirical_win - honest.W_ns) <= 4 * honest.sigma
    cheat, _ = guessing_game(g, EchoStrategy(1, 0, (2, 2)), d, 200, 0.1, 0.01, 300, 2)
    assert cheat.empirical_win - cheat.W_ns > 3 * cheat.sigma
    assert cheat.accept_rate > 0.9


def test_guessing_game_admissibility():
    g = builtin_game("anticorr3")
    # question (0, 1, 1) never occurs
    with pytest.raises(InadmissibleDirectionError):
        guessing_game(g, IIDStrategy(uniform_strategy((2, 2, 2), (2, 2, 2))),
                      SignallingDirection(0, (0, 0), 0, (1, 1)), 20, 0.1, 0.01, 2, 0)
    # given (s_1, s_2) = (0, 1), player 0's question is always 0
    with pytest.raises(InadmissibleDirectionError):
        guessing_game(g, IIDStrategy(uniform_strategy((2, 2, 2), (2, 2, 2))),
                      SignallingDirection(0, (0, 0), 0, (0, 1)), 20, 0.1, 0.01, 2, 0)


def test_estimation_experiment_stays_under_sanov_bound():
    g = builtin_game("chsh")
    rep, _ = run_estimation_experiment(g, uniform_strategy((2, 2), (2, 2)), 2001, 0.15, 20, 8)
    assert rep.frequency <= 0.05
    assert rep.frequency <= rep.delta


@pytest.mark.slow
def test_permutation_does_not_change_frequency_law():
    g = builtin_game("chsh")
    s = uniform_strategy((2, 2), (2, 2))
    bare = [r.f for r in simulate(g, IIDStrategy(s), 200, 500, 10)]
    perm = [r.f for r in simulate(g, PermutedWrapper(IIDStrategy(s)), 200, 500, 11)]
    assert ks_2samp(bare, perm).pvalue > 0.001


def test_sample_questions_modified_marks_dummies():
    lifted = complete_support_lift(builtin_game("anticorr3"), 0.5)
    from nonsig.repetition import sample_questions_modified
    q, dummy = sample_questions_modified(lifted, 2000, 4)
    assert q.shape == (2000, 3)
    assert all(lifted.base.dist[tuple(row)] == 0 for row in q[dummy])
    assert all(lifted.base.dist[tuple(row)] > 0 for row in q[~dummy])
    assert 0.4 < dummy.mean() < 0.6


def test_iid_tail_stays_under_chernoff():
    chsh = builtin_game("chsh")
    s = uniform_strategy((2, 2), (2, 2))
    w = winning_probability(chsh, s)
    n, beta, trials = 100, 0.1, 400
    records = simulate(chsh, IIDStrategy(s), n, trials, 11)
    exceed = sum(r.f > w + beta for r in records)
    bound = math.exp(-2 * n * beta ** 2)
    assert wilson_interval(exceed, trials).low <= bound
    assert exceed / trials <= bound + 0.05


def test_iid_rounds_are_independent_and_identical():
    chsh = builtin_game("chsh")
    t = play(chsh, IIDStrategy(uniform_strategy((2, 2), (2, 2))), 20000, 5)
    wins = t.win_bits.astype(float)
    lag_one = np.corrcoef(wins[:-1], wins[1:])[0, 1]
    assert abs(lag_one) < 0.04
    freq = winning_frequencies(t)
    assert abs(freq.f_t - freq.f_g) < 0.03
    assert freq.f == pytest.approx(0.5, abs=0.02)
