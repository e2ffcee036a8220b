import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from stackelberg_align import algo_policy as ap
from stackelberg_align import oracle
from stackelberg_align import sampling as sm
from stackelberg_align.domain import Content, StrategyProfile, TypeStrategy, validate_scenario
from stackelberg_align.equilibrium import solve_equilibrium, user_q_closed_form
from stackelberg_align.errors import DegenerateGamma, DeviationFound, HorizonTooLarge, NotConverged

EQ = {"theta1": TypeStrategy(0.0, 1.0), "theta2": TypeStrategy(1.0, 1.0)}


@pytest.fixture
def eq():
    return StrategyProfile(EQ)


@pytest.mark.parametrize("method", oracle.METHODS)
def test_value_examples(s1, eq, method):
    cfg = oracle.OracleConfig(horizon=200, method=method)
    assert oracle.value_iterate_qa(s1, eq, [1.0, 0.0], Content.B, cfg) == pytest.approx(20.0, abs=1e-6)
    assert oracle.value_iterate_qa(s1, eq, [0.5, 0.5], Content.A, cfg) == pytest.approx(29.0, abs=1e-6)
    assert oracle.value_iterate_qa(s1, eq, [0.5, 0.5], Content.B, cfg) == pytest.approx(
        ap.qa_value(s1, eq, np.array([0.5, 0.5]), Content.B), abs=1e-6
    )
    zero = oracle.value_iterate(s1, eq, [0.5, 0.5], oracle.OracleConfig(horizon=0, method=method))
    np.testing.assert_array_equal(zero.q, 0.0)


def test_horizon_from_tolerance():
    T = oracle.horizon_for(0.9, 5.0, 1e-6)
    assert oracle.truncation_bound(0.9, 5.0, T) < 1e-6 <= oracle.truncation_bound(0.9, 5.0, T - 1)


def test_unknown_method(s1, eq):
    with pytest.raises(ValueError):
        oracle.value_iterate(s1, eq, [0.5, 0.5], oracle.OracleConfig(method="grid"))


@settings(max_examples=60, deadline=None)
@given(hs.integers(0, 2**32 - 1), hs.booleans(), hs.integers(1, 25))
def test_vector_and_lattice_routes_agree(seed, signaling, horizon):
    rng = np.random.default_rng(seed)
    sc = sm.random_scenario(rng, n_types=int(rng.integers(2, 4)), signaling=signaling)
    pr = sm.random_profile(rng, sc)
    lams = np.array([sm.random_belief(rng, sc.n_types, interior=False) for _ in range(3)])
    a = oracle.value_iterate(sc, pr, lams, oracle.OracleConfig(horizon=horizon, method="vectors"))
    b = oracle.value_iterate(sc, pr, lams, oracle.OracleConfig(horizon=horizon, method="lattice"))
    np.testing.assert_allclose(a.q, b.q, atol=1e-10 + a.prune_bound)


def test_prune_certificate():
    ends = [[1.0, 0.0], [0.0, 1.0]]
    kept, lossy = oracle._prune(np.array(ends + [[0.45, 0.45]]))
    assert len(kept) == 2 and lossy == 1  # below the chord: removed via the LP
    kept, lossy = oracle._prune(np.array(ends + [[0.5, 0.5 + 1e-6]]))
    assert len(kept) == 3 and lossy == 0  # above it at the centre
    kept, lossy = oracle._prune(np.array(ends + [[0.4, 0.4], [1.0, 0.5]]))
    assert {tuple(r) for r in kept} == {(0.0, 1.0), (1.0, 0.5)} and lossy == 0  # componentwise
    assert oracle._dominated(np.array([0.5, 0.5]), np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert not oracle._dominated(np.array([0.6, 0.5]), np.array([[1.0, 0.0], [0.0, 1.0]]))


def test_enumeration_examples(s1, eq, s1_signal):
    lam = s1.prior_array
    f, _ = eq.arrays(s1)
    for s in Content:
        one = oracle.enumerate_qa_over_histories(s1, eq, s, 1)
        assert one == pytest.approx(float(np.dot(lam, f[s] / s1.alpha[s])), abs=0)
    three = oracle.enumerate_qa_over_histories(s1, eq, Content.A, 3)
    assert three == pytest.approx(oracle.value_iterate_qa(s1, eq, lam, Content.A, oracle.OracleConfig(horizon=3)), abs=1e-12)
    sig = StrategyProfile({"theta1": TypeStrategy(0.3, 1.0, u_a=1.0), "theta2": TypeStrategy(1.0, 1.0)})
    for method in oracle.METHODS:
        vi = oracle.value_iterate(s1_signal, sig, lam, oracle.OracleConfig(horizon=2, method=method)).q[0]
        for s in Content:
            assert oracle.enumerate_qa_over_histories(s1_signal, sig, s, 2) == pytest.approx(vi[int(s)], abs=1e-12)
    assert oracle.enumerate_qa_over_histories(s1, eq, Content.A, 0) == 0.0
    with pytest.raises(HorizonTooLarge):
        oracle.enumerate_qa_over_histories(s1, eq, Content.A, 5)


def test_deviation_examples(s1, s1_signal):
    res = solve_equilibrium(s1)
    assert oracle.verify_no_deviation(s1, res).max_improvement <= 1e-9
    bad = res.profile.replace("theta1", TypeStrategy(1.0, 1.0))
    with pytest.raises(DeviationFound) as err:
        oracle.verify_no_deviation(s1, bad)
    d = err.value.report.per_type["theta1"]
    assert d.witness.f_a == 0.0
    assert d.improvement == pytest.approx(0.5, abs=1e-12)
    assert d.best_value == pytest.approx(3.0) and d.equilibrium_value == pytest.approx(2.5)
    sig = solve_equilibrium(s1_signal)
    report = oracle.verify_no_deviation(s1_signal, sig, oracle.OracleConfig(deviation_grid=101))
    assert report.max_improvement <= 1e-6
    assert report.per_type["theta1"].grid_points == 101 * 101 + 1


def test_deviation_grid_shape(s1):
    cfg = oracle.OracleConfig(deviation_grid=11)
    X, Y = oracle.deviation_grid(s1, "theta1", cfg)
    assert X[-1] == 1.0 and X[-2] == pytest.approx(0.4 - cfg.epsilon_atom) and len(X) == 12
    X2, _ = oracle.deviation_grid(s1, "theta2", cfg)
    assert X2[0] == 0.0 and X2[-1] == 1.0 and len(X2) == 11
    assert not np.any(Y)


@pytest.fixture
def s1_re(s1_raw):
    s1_raw["entry"] = {"mode": "re", "p1_a": 0.5}
    return validate_scenario(s1_raw)


def test_random_entry_deviation(s1_re):
    res = solve_equilibrium(s1_re)
    cfg = oracle.OracleConfig(deviation_grid=21)
    assert oracle.verify_no_deviation(s1_re, res, cfg).max_improvement <= 1e-9
    bad = res.profile.replace("theta1", TypeStrategy(1.0, 1.0))
    with pytest.raises(DeviationFound) as err:
        oracle.verify_no_deviation(s1_re, bad, cfg)
    assert err.value.report.per_type["theta1"].witness.f_a == 0.0
    assert err.value.report.per_type["theta1"].improvement == pytest.approx(0.4, abs=1e-6)


def test_user_recursion_example(s1):
    res = solve_equilibrium(s1)
    hz = oracle.user_horizon(s1, 1e-9)
    v = oracle.value_iterate_user(s1, res.profile, "theta1", Content.A, hz)
    assert v == pytest.approx(3.0, abs=1e-8)
    v = oracle.value_iterate_user(s1, res.profile, "theta2", Content.A, hz)
    assert v == pytest.approx(2.0 / 0.4, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(hs.integers(0, 2**32 - 1), hs.booleans())
def test_user_recursion_matches_closed_form_at_equilibrium(seed, signaling):
    rng = np.random.default_rng(seed)
    sc = sm.random_scenario(rng, n_types=int(rng.integers(2, 4)), signaling=signaling)
    try:
        res = solve_equilibrium(sc)
    except (DegenerateGamma, NotConverged):
        return
    tol = 1e-7
    hz = oracle.user_horizon(sc, tol)
    entry = ap.best_content(sc, res.profile, sc.prior_array)
    for t in sc.types:
        q = user_q_closed_form(sc, t.id, res.profile[t.id])
        cf = q.q_preferred if entry is t.preferred else q.q_other
        rec = oracle.value_iterate_user(sc, res.profile, t.id, entry, hz)
        assert rec == pytest.approx(cf, abs=2 * tol)


def test_policy_agreement_on_simplex(s1, eq):
    grid = np.column_stack([np.linspace(0, 1, 41), 1 - np.linspace(0, 1, 41)])
    checks = oracle.policy_agreement(s1, eq, grid)
    for c in checks:
        if abs(c.score) > 1e-5:
            assert c.decisive and c.closed_form is c.oracle
