"""Acceptance criteria 1-9, each recorded as one pass/fail line."""

import time

import numpy as np
import pytest

import properties
from stackelberg_align import algo_policy as ap
from stackelberg_align import cli, oracle
from stackelberg_align import sampling as sm
from stackelberg_align.domain import Content, TypeStrategy
from stackelberg_align.equilibrium import (
    critical_gamma,
    signal_engagement_limit,
    solve_equilibrium,
    steerable_set,
    user_q_closed_form,
)
from stackelberg_align.errors import DegenerateGamma
from stackelberg_align.simulator import (
    BASELINE_GAMMA,
    engagement_lengths,
    value_T,
    regret_curve,
    replication_rng,
)


def _draw_case(rng, signaling):
    sc = sm.random_scenario(rng, n_types=int(rng.integers(2, 5)), signaling=signaling, gamma_alg=(0.5, 0.95))
    pr = sm.random_profile(rng, sc)
    lam = sm.random_belief(rng, sc.n_types, interior=False)
    return sc, pr, lam, Content(int(rng.integers(2)))


def test_c1_closed_form_matches_value_iteration(acceptance):
    rng = np.random.default_rng(101)
    cfg = oracle.OracleConfig()
    worst = 0.0
    failures = 0
    t0 = time.perf_counter()
    for j in range(200):
        sc, pr, lam, s = _draw_case(rng, signaling=j % 2 == 1)
        T = oracle.oracle_horizon(sc, cfg)
        g = sc.gamma_alg
        bound = 1e-6 + g**T * float(np.max(1.0 / sc.alpha)) / (1.0 - g)
        err = abs(ap.qa_value(sc, pr, lam, s) - oracle.value_iterate_qa(sc, pr, lam, s, cfg))
        worst = max(worst, err / bound)
        failures += err >= bound
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 60.0
    acceptance(1, ok, f"200 draws, {failures} over bound, worst err/bound {worst:.3g}, {elapsed:.1f}s")
    assert failures == 0
    assert elapsed < 60.0


def test_c2_history_sufficiency(acceptance):
    rng = np.random.default_rng(202)
    worst = 0.0
    for signaling in (False, True):
        for _ in range(50):
            sc, pr, lam, _ = _draw_case(rng, signaling)
            for hz in range(1, 5):
                for method in oracle.METHODS:
                    vi = oracle.value_iterate(sc, pr, lam, oracle.OracleConfig(horizon=hz, method=method)).q[0]
                    for s in Content:
                        e = oracle.enumerate_qa_over_histories(sc, pr, s, hz, belief=lam)
                        worst = max(worst, abs(e - vi[int(s)]))
    ok = worst <= 1e-12
    acceptance(2, ok, f"50 draws x 2 games x horizons 1-4 x both oracle routes, max diff {worst:.3g}")
    assert ok


def test_c3_classifier_matches_oracle_argmax(s1, s1_signal, acceptance):
    rng = np.random.default_rng(303)
    cfg = oracle.OracleConfig(tolerance=1e-7)
    sweep = np.linspace(0.0, 1.0, 101)
    beliefs = np.column_stack([sweep, 1.0 - sweep])
    checked = disagree = indecisive = 0
    for sc in (s1, s1_signal):
        for _ in range(10):
            pr = sm.random_profile(rng, sc)
            for c in oracle.policy_agreement(sc, pr, beliefs, cfg):
                if abs(c.score) <= 1e-5:
                    continue
                checked += 1
                indecisive += not c.decisive
                disagree += c.closed_form is not c.oracle
    ok = disagree == 0 and indecisive == 0
    acceptance(3, ok, f"{checked} beliefs over 20 profiles, {disagree} disagreements, {indecisive} within error bound")
    assert disagree == 0
    assert indecisive == 0


def test_c4_lemma_properties(acceptance):
    counts = {}
    for k, (name, check) in enumerate(properties.LEMMAS.items()):
        rng = np.random.default_rng(400 + k)
        counts[name] = sum(check(rng) > 0 for _ in range(1000))
    ok = all(v == 0 for v in counts.values())
    acceptance(4, ok, "1000 draws each, violations " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    assert ok, counts


def test_c5_s1_equilibria(s1, acceptance):
    ones = TypeStrategy(1.0, 1.0)
    lo = solve_equilibrium(s1.with_(gamma_user=0.4))
    hi = solve_equilibrium(s1.with_(gamma_user=0.6))
    shape_ok = (
        lo.profile["theta1"].close_to(ones)
        and lo.profile["theta2"].close_to(ones)
        and hi.profile["theta1"].close_to(TypeStrategy(0.0, 1.0))
        and hi.profile["theta2"].close_to(ones)
    )
    gains = [
        oracle.verify_no_deviation(r_sc, r, oracle.OracleConfig(deviation_grid=201)).max_improvement
        for r_sc, r in ((s1.with_(gamma_user=0.4), lo), (s1.with_(gamma_user=0.6), hi))
    ]
    below = solve_equilibrium(s1.with_(gamma_user=0.5 - 1e-9)).profile["theta1"]
    above = solve_equilibrium(s1.with_(gamma_user=0.5 + 1e-9)).profile["theta1"]
    flip = below.close_to(ones) and above.close_to(TypeStrategy(0.0, 1.0))
    with pytest.raises(DegenerateGamma):
        solve_equilibrium(s1.with_(gamma_user=0.5))
    ok = shape_ok and max(gains) <= 1e-9 and flip
    acceptance(5, ok, f"profiles {'ok' if shape_ok else 'wrong'}, max deviation gain {max(gains):.3g}, flip at 0.5 {'ok' if flip else 'missing'}")
    assert shape_ok and flip
    assert max(gains) <= 1e-9


def test_c6_thresholds(s1, acceptance):
    cg = critical_gamma(s1, "theta1", cost=0.05)
    exact = abs(cg.no_signal - 0.5) <= 1e-9 and abs(cg.with_signal - 0.65 / 1.65) <= 1e-9
    exact = exact and abs(cg.reduction - 0.175) <= 1e-9

    rng = np.random.default_rng(606)
    bad = 0
    misplaced = 0
    for _ in range(500):
        sc = sm.random_scenario(rng, signaling=True)
        t = sc.types[int(rng.integers(sc.n_types))]
        phi = signal_engagement_limit(t)
        c = float(rng.uniform(0.0, phi * t.reward(t.other)))
        g = critical_gamma(sc, t.id, cost=c)
        bad += not (g.with_signal < g.no_signal)
        # the threshold is where signaling and full engagement trade places
        sig, full = TypeStrategy.from_point(t, phi, 1.0), TypeStrategy.from_point(t, 1.0, 0.0)
        for side, gh in ((-1, g.with_signal - 1e-6), (1, g.with_signal + 1e-6)):
            if not 0.0 < gh < 1.0:
                continue
            s2 = sc.with_(gamma_user=gh, cost=c)
            d = user_q_closed_form(s2, t.id, sig).q_other - user_q_closed_form(s2, t.id, full).q_other
            misplaced += d * side < 0
    ok = exact and bad == 0 and misplaced == 0
    acceptance(6, ok, f"S1 ({cg.no_signal!r}, {cg.with_signal!r}, {cg.reduction!r}); 500 draws, {bad} not reduced, {misplaced} misplaced")
    assert exact
    assert bad == 0 and misplaced == 0


def test_c7_regret_dichotomy(s1, s1_signal, acceptance):
    T = 200
    lo = regret_curve(s1, 0.4, T, reps=3, seed=7, type_ids=["theta1"])["theta1"]
    linear = np.array_equal(lo.regret, lo.t - 2.0)
    hi = regret_curve(s1, 0.6, T, reps=3, seed=7, type_ids=["theta1"])["theta1"]
    zero = not np.any(hi.regret)

    bound = 2.0 + 0.05 + 1.0
    sig = regret_curve(s1_signal, 0.6, T, reps=10_000, seed=7, type_ids=["theta1"])["theta1"]
    # signaling user against the far-sighted user of the plain game
    plain_base = solve_equilibrium(s1.with_(gamma_user=BASELINE_GAMMA)).profile
    sig_profile = solve_equilibrium(s1_signal).profile
    cross = value_T(s1, plain_base, "theta1", T, 10_000, 7)[1:] - value_T(
        s1_signal, sig_profile, "theta1", T, 10_000, 7
    )[1:]
    bounded = np.max(np.abs(sig.regret)) <= bound and np.max(np.abs(cross)) <= bound
    for r in (sig.regret, cross):
        bounded = bounded and bool(np.all(np.diff(r[int(np.argmax(r)):]) <= 1e-12))
    ok = linear and zero and bounded
    acceptance(
        7,
        ok,
        f"gamma 0.4 regret(T)={float(lo.regret[-1])!r}, gamma 0.6 max |regret|={float(np.max(np.abs(hi.regret)))!r}, "
        f"signaling max |regret|={max(np.max(np.abs(sig.regret)), np.max(np.abs(cross))):.4g} <= {bound}",
    )
    assert linear and zero and bounded


def test_c8_signaling_slice_matches_plain_set(acceptance):
    rng = np.random.default_rng(808)
    mismatches = nonempty = 0
    for _ in range(200):
        sc = sm.random_scenario(rng, signaling=True)
        t = sc.types[int(rng.integers(sc.n_types))]
        lam = sc.prior[sc.index(t.id)]
        m = float(rng.uniform(-3.0, 3.0)) * lam / min(t.alpha_a, t.alpha_b)
        plain = steerable_set(sc.with_(cost=None), t.id, m).interval
        sliced = steerable_set(sc, t.id, m).slice(0.0)
        if plain.empty or sliced.empty:
            mismatches += plain.empty != sliced.empty
            continue
        nonempty += 1
        same = abs(plain.lo - sliced.lo) <= 1e-12 and abs(plain.hi - sliced.hi) <= 1e-12
        mismatches += not (same and plain.hi_closed == sliced.hi_closed)
    ok = mismatches == 0
    acceptance(8, ok, f"200 draws ({nonempty} nonempty), {mismatches} mismatches")
    assert ok


def test_c9_simulator_statistics(s1, tmp_path, acceptance):
    n = 100_000
    worst = 0.0
    for i, t in enumerate(s1.types):
        for s in Content:
            a = t.alpha(s)
            u = replication_rng(99, 10 * i + int(s)).random(n)
            x = engagement_lengths(a, u)
            z = abs(x.mean() - 1.0 / a) / (x.std(ddof=1) / np.sqrt(n))
            worst = max(worst, z)

    scen = tmp_path / "s1.json"
    from stackelberg_align.domain import dump_scenario

    dump_scenario(s1, scen)
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        args = ["simulate", "--scenario", str(scen), "--profile", "solve", "--type", "theta1",
                "--steps", "50", "--reps", "500", "--seed", "11", "--cost", "0.05", "--out", str(out)]
        assert cli.main(args) == 0
        outs.append(out.read_bytes())
    same = outs[0] == outs[1]
    ok = worst < 3.0 and same
    acceptance(9, ok, f"max |z| of length means {worst:.3f} (< 3), CSVs byte-identical: {same}")
    assert worst < 3.0
    assert same
