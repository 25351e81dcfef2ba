"""
Acceptance harness:
- Runs the exact LP checks, the constant checks and the repeated-play Monte Carlo runs
- Writes ./data/reports/acceptance.json and ./data/reports/acceptance.html
Example: PYTHONPATH=. python scripts/acceptance.py --seed 1 --quick
"""
import argparse, json, os, time, html, math

from nonsig.game_model import (
    builtin_game, random_game, random_strategy, random_non_signalling_strategy, echo_strategy,
    uniform_strategy, all_directions, SignallingDirection, mix, strategy_distance,
)
from nonsig.ns_analysis import (
    complete_support_lift, ns_value, equality_value, build_primal, build_dual, kappa, perturbed_value,
    definetti_c, threshold_bound, default_parameters, check_parameters, required_repetitions, _min_support_prob,
)
from nonsig.lp_engine import solve
from nonsig.signalling import sig_value, summed_sig_gap, JOINT
from nonsig.repetition import (
    trial_rng, run_test_reliability_experiment, guessing_game, EchoStrategy, IIDStrategy,
    run_estimation_experiment, simulate, PermutedWrapper,
)

OUT_DIR = "./data/reports"


def check(name, passed, detail, t0):
    return {"name": name, "passed": bool(passed), "detail": detail, "ms": int((time.time() - t0) * 1000)}


def incomplete_support_game():
    t0 = time.time()
    g = builtin_game("anticorr3")
    raw = ns_value(g)
    lifted = {eta: ns_value(complete_support_lift(g, eta)) for eta in (0.01, 0.1, 0.5)}
    ok = abs(raw - 1.0) <= 1e-6 and all(abs(v - 2 / 3) <= 1e-6 for v in lifted.values())
    return check("anticorr3 value with and without lift", ok, {"raw": raw, "lifted": lifted}, t0)


def corpus(seed, size):
    rng = trial_rng(seed, 0)
    games = [builtin_game("chsh"), builtin_game("gyni2")]
    for k in range(size):
        if k % 2:
            games.append(random_game((2, 2, 2), (2, 2, 2), rng))
        else:
            qa = tuple(int(x) for x in rng.integers(2, 4, size=2))
            aa = tuple(int(x) for x in rng.integers(2, 4, size=2))
            games.append(random_game(qa, aa, rng))
    return games


def relaxation_and_duality(games, seed, vectors):
    t0 = time.time()
    rng = trial_rng(seed, 1)
    worst_relax = worst_gap = worst_sens = 0.0
    for g in games:
        primal = solve(build_primal(g, relaxed=True))
        v, y = primal.objective_value, primal.duals_ineq
        worst_relax = max(worst_relax, abs(v - equality_value(g)))
        dual = solve(build_dual(g))
        worst_gap = max(worst_gap, abs(v + dual.objective_value))
        for _ in range(vectors):
            e = rng.uniform(0.0, 0.05, size=len(y))
            worst_sens = max(worst_sens, perturbed_value(g, e) - (v + float(e @ y)))
        k = kappa(g)
        for s in (0.01, 0.05, 0.1):
            worst_sens = max(worst_sens, perturbed_value(g, s) - (v + s * k))
    ok = worst_relax <= 1e-7 and worst_gap <= 1e-7 and worst_sens <= 1e-7
    return check("relaxation, strong duality, sensitivity", ok,
                 {"games": len(games), "max_relax_gap": worst_relax, "max_duality_gap": worst_gap,
                  "max_sensitivity_excess": worst_sens}, t0)


def sig_checks(seed, pairs):
    t0 = time.time()
    rng = trial_rng(seed, 2)
    worst_forms = worst_ns = 0.0
    for _ in range(pairs):
        g = random_game((2, 3), (2, 2), rng)
        s = random_strategy(g.question_alphabets, g.answer_alphabets, rng)
        dirs = list(all_directions(g.question_alphabets, g.answer_alphabets))
        d = dirs[int(rng.integers(len(dirs)))]
        a, b = sig_value(g.dist, s, d), sig_value(g.dist, s, d, JOINT)
        if a is not None:
            worst_forms = max(worst_forms, abs(a - b))
        ns = random_non_signalling_strategy(g.question_alphabets, g.answer_alphabets, rng)
        for d in dirs:
            v = sig_value(g.dist, ns, d)
            worst_ns = max(worst_ns, abs(v or 0.0))
    chsh = builtin_game("chsh")
    echo = sig_value(chsh.dist, echo_strategy(chsh), SignallingDirection(1, (1,), 1, (0,)))
    ok = worst_forms <= 1e-10 and worst_ns <= 1e-10 and abs(echo - 0.125) <= 1e-12
    return check("signalling measure", ok, {"max_form_gap": worst_forms, "max_ns_sig": worst_ns, "chsh_echo": echo}, t0)


# rows the default ε, ζ, ν choice satisfies at n = required_repetitions; the de Finetti ν row needs larger n
DEFAULT_ROWS = ("beta_positive", "beta_le_alpha", "epsilon_positive", "epsilon_le_min_q", "seven_epsilon_le_zeta",
                "zeta_le_one", "zeta_window", "nu_lt_zeta_minus_six_epsilon", "delta_formula", "c_formula",
                "d_formula", "d_lt_m_q_a", "n_even", "repetitions_for_beta")


def _off(value):
    # a value no formula row can match; doubling an underflowed 0 would still match
    return 2 * value if 1e-300 < value < 1e300 else 0.5


def single_violations(g, p):
    """One parameter set per row, each differing from `p` in a single field."""
    alpha = 1.0 - ns_value(g)
    return {
        "beta_positive": {"beta": 0.0},
        "beta_le_alpha": {"beta": alpha + 0.1},
        "epsilon_positive": {"epsilon": 0.0},
        "epsilon_le_min_q": {"epsilon": 2 * _min_support_prob(g)},
        "seven_epsilon_le_zeta": {"zeta": 6 * p.epsilon},
        "zeta_le_one": {"zeta": 1.5},
        "zeta_window": {"zeta": p.beta / p.kappa},
        "nu_lt_zeta_minus_six_epsilon": {"nu": p.zeta - 6 * p.epsilon},
        "nu_gt_de_finetti_term": {"nu": 0.0},
        "delta_formula": {"delta": _off(p.delta)},
        "c_formula": {"c": _off(p.c)},
        "d_formula": {"d": p.d + 1},
        "d_lt_m_q_a": {"d": g.players * g.question_count * g.answer_count},
        "n_even": {"n": p.n + 1},
        "repetitions_for_epsilon": {"n": 4},
        "repetitions_for_beta": {"n": 4},
    }


def constants():
    t0 = time.time()
    g = builtin_game("gyni2")
    c = definetti_c(1, 4, 4)
    b = threshold_bound(g, 10 ** 6, 0.05)
    k = b.kappa
    nq, na = g.question_count, g.answer_count
    direct = (math.log(10 * 2 * nq * na) + 2 * (nq * na - 1) * math.log(10 ** 6 + 1)
              - (10 ** 6 / 4) * (0.05 / (10 * k)) ** 2)
    beta = 0.05
    p = default_parameters(g, beta, required_repetitions(g, beta))
    default_failed = []
    if _min_support_prob(g) > p.epsilon:
        report = check_parameters(g, p)
        default_failed = [name for name in DEFAULT_ROWS if not report.check(name).passed]
    missed = [row for row, update in single_violations(g, p).items()
              if check_parameters(g, p.model_copy(update=update)).check(row).passed]
    ok = (c == 4096 and math.isclose(b.log_bound, direct, rel_tol=1e-9)
          and default_failed == [] and missed == [])
    return check("constants", ok, {"definetti_c": c, "log_bound": b.log_bound, "direct": direct,
                                   "default_failed_checks": default_failed, "unrejected_rows": missed}, t0)


def continuity(seed, pairs):
    t0 = time.time()
    rng = trial_rng(seed, 3)
    worst_single = worst_summed = -math.inf
    for k in range(pairs):
        eps = (0.01, 0.1)[k % 2]
        g = random_game((2, 3), (2, 2), rng)
        r = random_strategy(g.question_alphabets, g.answer_alphabets, rng)
        noise = random_strategy(g.question_alphabets, g.answer_alphabets, rng)
        w = float(rng.uniform(0.0, eps / 2))
        s = mix([1.0 - w, w], [r, noise])
        dist = strategy_distance(g, s, r)
        for i in range(g.players):
            worst_summed = max(worst_summed, summed_sig_gap(g.dist, s, r, i) - 2 * dist)
        for d in all_directions(g.question_alphabets, g.answer_alphabets):
            a, b = sig_value(g.dist, s, d), sig_value(g.dist, r, d)
            if a is not None and b is not None:
                worst_single = max(worst_single, abs(a - b) - 2 * dist)
    ok = worst_single <= 1e-10 and worst_summed <= 1e-9
    return check("signalling continuity under strategy distance", ok,
                 {"pairs": pairs, "max_direction_excess": worst_single, "max_summed_excess": worst_summed}, t0)


def reliability(seed, trials):
    t0 = time.time()
    g = builtin_game("gyni2")
    d = SignallingDirection(1, (0,), 0, (0,))
    echo = echo_strategy(g)
    zeta, eps, n = 0.1, 0.01, 20000
    signalling, _ = run_test_reliability_experiment(g, echo, d, n, zeta, eps, trials, seed)
    quiet, _ = run_test_reliability_experiment(g, uniform_strategy((2, 2), (2, 2)), d, n, zeta, eps, trials, seed)
    ok = signalling.acceptance >= 0.99 and quiet.acceptance <= 0.01
    return check("signalling test reliability (gyni2, ζ=0.1, ε=0.01)", ok,
                 {"echo_acceptance": signalling.acceptance, "uniform_acceptance": quiet.acceptance}, t0)


def guessing(seed, trials):
    t0 = time.time()
    g = builtin_game("gyni2")
    d = SignallingDirection(1, (1,), 1, (0,))
    honest, _ = guessing_game(g, IIDStrategy(uniform_strategy((2, 2), (2, 2))), d, 200, 0.1, 0.01, trials, seed)
    cheat, _ = guessing_game(g, EchoStrategy(1, 0, (2, 2)), d, 200, 0.1, 0.01, trials, seed)
    ok = (abs(honest.empirical_win - honest.W_ns) <= 3 * honest.sigma
          and cheat.empirical_win - cheat.W_ns > 3 * cheat.sigma)
    return check("guessing game", ok, {"W_ns": honest.W_ns, "iid_win": honest.empirical_win,
                                       "echo_win": cheat.empirical_win, "sigma": honest.sigma}, t0)


def estimation(seed, trials):
    t0 = time.time()
    g = builtin_game("chsh")
    rows = []
    ok = True
    for l in (2000, 5000):
        for eps in (0.1, 0.15):
            rep, _ = run_estimation_experiment(g, uniform_strategy((2, 2), (2, 2)), l, eps, trials, seed)
            ok = ok and rep.frequency <= rep.delta + (rep.interval.high - rep.frequency)
            if l == 5000:
                ok = ok and rep.frequency <= 0.05
            rows.append({"l": l, "epsilon": eps, "frequency": rep.frequency, "delta": rep.delta})
    return check("strategy estimation", ok, {"runs": rows}, t0)


def permutation(seed, trials):
    from scipy.stats import ks_2samp
    t0 = time.time()
    g = builtin_game("chsh")
    s = uniform_strategy((2, 2), (2, 2))
    bare = simulate(g, IIDStrategy(s), 200, trials, seed)
    perm = simulate(g, PermutedWrapper(IIDStrategy(s)), 200, trials, seed + 1)
    same = all(abs(r.f - (r.f_t + r.f_g) / 2) == 0.0 for r in bare + perm)
    p = float(ks_2samp([r.f for r in bare], [r.f for r in perm]).pvalue)
    return check("frequencies and permutation invariance", same and p > 0.001, {"ks_pvalue": p}, t0)


def write_report(results, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "acceptance.json"), "w", encoding="utf-8") as f:
        json.dump(results, f, indent=2, default=str)
    rows = "\n".join(
        f"<tr><td>{html.escape(r['name'])}</td><td>{'pass' if r['passed'] else 'FAIL'}</td>"
        f"<td>{r['ms']} ms</td><td><code>{html.escape(json.dumps(r['detail'], default=str))}</code></td></tr>"
        for r in results
    )
    passed = sum(r["passed"] for r in results)
    page = f"""<!doctype html>
<html><head><meta charset="utf-8"><title>Acceptance Report</title>
<style>body{{font-family:system-ui}} table{{border-collapse:collapse}} td,th{{border:1px solid #ddd;padding:6px}}</style>
</head><body>
<h2>Acceptance Report</h2>
<ul><li>Checks: {len(results)}</li><li>Passed: {passed}</li></ul>
<table>
<tr><th>Check</th><th>Result</th><th>Time</th><th>Detail</th></tr>
{rows}
</table>
</body></html>"""
    path = os.path.join(out_dir, "acceptance.html")
    with open(path, "w", encoding="utf-8") as f:
        f.write(page)
    return path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--quick", action="store_true", help="smaller corpus and trial counts")
    ap.add_argument("--out-dir", default=OUT_DIR)
    args = ap.parse_args()

    scale = 5 if args.quick else 1
    results = [
        incomplete_support_game(),
        relaxation_and_duality(corpus(args.seed, 50 // scale), args.seed, 100 // scale),
        sig_checks(args.seed, 1000 // scale),
        continuity(args.seed, 1000 // scale),
        constants(),
        estimation(args.seed, 500 // scale),
        reliability(args.seed, 300 // scale),
        guessing(args.seed, 2000 // scale),
        permutation(args.seed, 500 // scale),
    ]
    path = write_report(results, args.out_dir)
    print(f"Wrote {path}  ({sum(r['passed'] for r in results)}/{len(results)} passed)")
    return 0 if all(r["passed"] for r in results) else 1


if __name__ == "__main__":
    raise SystemExit(main())
