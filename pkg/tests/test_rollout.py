import itertools

import numpy as np
import pytest

from lolalab.autodiff import seed_variables
from lolalab.exact import LearnerConfig, Rule, lola_step
from lolalab.games import exact_value, finite_horizon_value, imp, ipd
from lolalab.rollout import (
    Baseline,
    EpisodeBatch,
    PGConfig,
    PGRule,
    cross_hessian_estimate,
    discounted_tails,
    lola_pg_step,
    nl_pg_step,
    pg_agent_update,
    pg_gradient,
    pg_gradient_samples,
    rollout,
    train_pg,
)


def enumerate_batch(game, t1, t2, horizon):
    """Every joint trajectory of ``horizon + 1`` steps with its probability."""
    p1 = 1 / (1 + np.exp(-t1))
    p2 = 1 / (1 + np.exp(-t2))
    rows = []
    for outcomes in itertools.product(range(4), repeat=horizon + 1):
        s, prob = 0, 1.0
        st, a1, a2 = [], [], []
        for k in outcomes:
            x, y = divmod(k, 2)
            prob *= (p1[s] if x == 0 else 1 - p1[s]) * (p2[s] if y == 0 else 1 - p2[s])
            st.append(s)
            a1.append(x)
            a2.append(y)
            s = k + 1
        rows.append((st, a1, a2, prob))
    states = np.array([r[0] for r in rows])
    A1 = np.array([r[1] for r in rows])
    A2 = np.array([r[2] for r in rows])
    k = 2 * A1 + A2
    batch = EpisodeBatch(game.gamma, states, A1, A2, game.r1[k], game.r2[k])
    return batch, np.array([r[3] for r in rows])


def finite_jets(game, t1, t2, horizon, order):
    x = seed_variables(np.concatenate([t1, t2]), order)
    return finite_horizon_value(game, x[:5], x[5:], horizon)


@pytest.fixture(params=[0, 1])
def horizon(request):
    return request.param


@pytest.fixture(params=["ipd", "imp"])
def game(request):
    return ipd() if request.param == "ipd" else imp()


def test_enumeration_probabilities_sum_to_one(game, horizon):
    rng = np.random.default_rng(0)
    _, w = enumerate_batch(game, rng.standard_normal(5), rng.standard_normal(5), horizon)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)


def test_pg_gradient_enumeration_oracle(game, horizon):
    rng = np.random.default_rng(1)
    for _ in range(5):
        t1, t2 = 2 * rng.standard_normal(5), 2 * rng.standard_normal(5)
        batch, w = enumerate_batch(game, t1, t2, horizon)
        j1, j2 = finite_jets(game, t1, t2, horizon, 1)
        np.testing.assert_allclose(pg_gradient(batch, t1, 1, weights=w), j1.grad[:5], rtol=0, atol=1e-14)
        np.testing.assert_allclose(pg_gradient(batch, t2, 2, weights=w), j2.grad[5:], rtol=0, atol=1e-14)
        np.testing.assert_allclose(
            pg_gradient(batch, t2, 2, reward_agent=1, weights=w), j1.grad[5:], rtol=0, atol=1e-14
        )


def test_cross_hessian_enumeration_oracle(game, horizon):
    rng = np.random.default_rng(2)
    for _ in range(5):
        t1, t2 = 2 * rng.standard_normal(5), 2 * rng.standard_normal(5)
        batch, w = enumerate_batch(game, t1, t2, horizon)
        j1, j2 = finite_jets(game, t1, t2, horizon, 2)
        H2 = cross_hessian_estimate(batch, t1, t2, reward_agent=2, weights=w)
        H1 = cross_hessian_estimate(batch, t1, t2, reward_agent=1, weights=w)
        np.testing.assert_allclose(H2, j2.hess[:5, 5:], rtol=0, atol=1e-14)
        np.testing.assert_allclose(H1, j1.hess[:5, 5:], rtol=0, atol=1e-14)


def test_cross_hessian_matches_brute_force_definition():
    rng = np.random.default_rng(3)
    t1, t2 = rng.standard_normal(5), rng.standard_normal(5)
    batch = rollout(ipd(), t1, t2, 50, 12, rng)
    p1, p2 = 1 / (1 + np.exp(-t1)), 1 / (1 + np.exp(-t2))
    ref = np.zeros((5, 5))
    for e in range(50):
        c1, c2 = np.zeros(5), np.zeros(5)
        for t in range(13):
            s = batch.states[e, t]
            c1[s] += (1 - batch.actions1[e, t]) - p1[s]
            c2[s] += (1 - batch.actions2[e, t]) - p2[s]
            ref += ipd().gamma**t * batch.rewards2[e, t] * np.outer(c1, c2)
    np.testing.assert_allclose(cross_hessian_estimate(batch, t1, t2), ref / 50, rtol=1e-12, atol=1e-12)


def test_baseline_invariance(game, horizon):
    rng = np.random.default_rng(4)
    t1, t2 = rng.standard_normal(5), rng.standard_normal(5)
    batch, w = enumerate_batch(game, t1, t2, horizon)
    plain = pg_gradient(batch, t1, 1, weights=w)
    for _ in range(3):
        b = 5 * rng.standard_normal(5)
        np.testing.assert_allclose(pg_gradient(batch, t1, 1, baseline=b, weights=w), plain, atol=1e-13)


def test_zero_rewards_zero_estimates():
    rng = np.random.default_rng(5)
    t1, t2 = rng.standard_normal(5), rng.standard_normal(5)
    b = rollout(ipd(), t1, t2, 20, 10, rng)
    z = EpisodeBatch(b.gamma, b.states, b.actions1, b.actions2, 0 * b.rewards1, 0 * b.rewards2)
    assert not pg_gradient(z, t1).any()
    assert not cross_hessian_estimate(z, t1, t2).any()


def test_return_recursion_exact():
    rng = np.random.default_rng(6)
    b = rollout(ipd(), rng.standard_normal(5), rng.standard_normal(5), 30, 40, rng)
    for a in (1, 2):
        R, r = b.returns(a), b.rewards(a)
        assert np.array_equal(R[:, -1], r[:, -1])
        assert np.array_equal(R[:, :-1], r[:, :-1] + b.gamma * R[:, 1:])
    np.testing.assert_array_equal(discounted_tails(b.rewards1, b.gamma), b.returns1)


def test_state_sequence_follows_actions():
    rng = np.random.default_rng(7)
    b = rollout(imp(), rng.standard_normal(5), rng.standard_normal(5), 10, 20, rng)
    assert np.all(b.states[:, 0] == 0)
    np.testing.assert_array_equal(b.states[:, 1:], 1 + 2 * b.actions1[:, :-1] + b.actions2[:, :-1])


def test_deterministic_policies_repeat():
    rng = np.random.default_rng(8)
    theta = np.array([30.0, -30.0, 30.0, -30.0, 30.0])
    b = rollout(ipd(), theta, -theta, 16, 15, rng)
    assert np.all(b.states == b.states[0]) and np.all(b.actions1 == b.actions1[0])


def test_always_defect_rewards():
    b = rollout(ipd(), np.full(5, -40.0), np.full(5, -40.0), 8, 30, np.random.default_rng(9))
    assert np.all(b.rewards1 == -2.0) and np.all(b.rewards2 == -2.0)


def test_uniform_visit_frequencies():
    b = rollout(ipd(), np.zeros(5), np.zeros(5), 4000, 10, np.random.default_rng(10))
    freq = np.bincount(b.states[:, 1:].ravel(), minlength=5)[1:] / b.states[:, 1:].size
    se = np.sqrt(0.25 * 0.75 / b.states[:, 1:].size)
    assert np.all(np.abs(freq - 0.25) < 4 * se)


def test_rollout_deterministic_and_validated():
    t = np.zeros(5)
    a = rollout(ipd(), t, t, 5, 5, np.random.default_rng(3))
    b = rollout(ipd(), t, t, 5, 5, np.random.default_rng(3))
    assert np.array_equal(a.states, b.states) and np.array_equal(a.returns2, b.returns2)
    with pytest.raises(ValueError):
        rollout(ipd(), t, t, 0, 5, np.random.default_rng(3))
    with pytest.raises(ValueError):
        rollout(ipd(), t, t, 5, -1, np.random.default_rng(3))


def test_large_batch_gradient_matches_exact():
    rng = np.random.default_rng(11)
    t1, t2 = 0.5 * rng.standard_normal(5), 0.5 * rng.standard_normal(5)
    T = 200
    b = rollout(ipd(), t1, t2, 4000, T, rng)
    samples = pg_gradient_samples(b, t1, 1)
    est = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(len(samples))
    j1, _ = finite_jets(ipd(), t1, t2, T, 1)
    assert np.all(np.abs(est - j1.grad[:5]) <= 3 * se)


def test_large_batch_cross_hessian_matches_exact():
    from lolalab.rollout import cross_hessian_samples

    rng = np.random.default_rng(12)
    t1, t2 = 0.5 * rng.standard_normal(5), 0.5 * rng.standard_normal(5)
    T = 200
    b = rollout(ipd(), t1, t2, 4000, T, rng)
    samples = cross_hessian_samples(b, t1, t2)
    est = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(len(samples))
    _, j2 = finite_jets(ipd(), t1, t2, T, 2)
    assert np.all(np.abs(est - j2.hess[:5, 5:]) <= 3 * se)


def test_learned_baseline_reduces_variance():
    rng = np.random.default_rng(13)
    t = np.zeros(5)
    base = Baseline()
    base.update(rollout(ipd(), t, t, 4000, 100, rng), 1)
    plain, with_b = [], []
    for _ in range(20):
        b = rollout(ipd(), t, t, 4000, 100, rng)
        plain.append(pg_gradient(b, t, 1))
        with_b.append(pg_gradient(b, t, 1, baseline=base.values))
    assert np.var(with_b, axis=0).sum() <= np.var(plain, axis=0).sum()


def test_baseline_moves_to_batch_mean():
    rng = np.random.default_rng(14)
    b = rollout(ipd(), rng.standard_normal(5), rng.standard_normal(5), 200, 20, rng)
    base = Baseline()
    base.update(b, 1)
    s0 = b.returns1[:, 0].mean()
    assert base.values[0] == pytest.approx(s0)
    half = Baseline(lr=0.5)
    half.update(b, 1)
    assert half.values[0] == pytest.approx(0.5 * s0)


def test_lola_pg_zero_eta_is_nl_pg():
    rng = np.random.default_rng(15)
    t1, t2 = rng.standard_normal(5), rng.standard_normal(5)
    b = rollout(ipd(), t1, t2, 100, 50, rng)
    cfg = PGConfig(PGRule.LOLA_PG, eta=0.0)
    np.testing.assert_array_equal(lola_pg_step(ipd(), t1, t2, cfg, b), nl_pg_step(t1, b, cfg))


def test_lola_pg_direction_matches_exact_lola():
    rng = np.random.default_rng(16)
    t1, t2 = 0.5 * rng.standard_normal(5), 0.5 * rng.standard_normal(5)
    cfg = PGConfig(PGRule.LOLA_PG, delta=1.0, eta=10.0)
    base = Baseline()
    base.update(rollout(ipd(), t1, t2, 4000, 200, rng), 1)
    ups = [lola_pg_step(ipd(), t1, t2, cfg, rollout(ipd(), t1, t2, 4000, 200, rng), base.values) for _ in range(10)]
    est = np.mean(ups, axis=0)
    exact = lola_step(ipd(), t1, t2, LearnerConfig(Rule.LOLA_EX, delta=1.0, eta=10.0))
    cos = est @ exact / np.linalg.norm(est) / np.linalg.norm(exact)
    assert cos > 0.9, cos


def test_pg_update_reproducible():
    rng_a, rng_b = np.random.default_rng(17), np.random.default_rng(17)
    t1, t2 = np.zeros(5), np.ones(5)
    cfg = PGConfig()
    ua, _ = pg_agent_update(ipd(), t1, t2, cfg, rollout(ipd(), t1, t2, 64, 20, rng_a))
    ub, _ = pg_agent_update(ipd(), t1, t2, cfg, rollout(ipd(), t1, t2, 64, 20, rng_b))
    assert np.array_equal(ua, ub)


def test_seat_two_update_uses_swapped_view():
    rng = np.random.default_rng(18)
    t1, t2 = rng.standard_normal(5), rng.standard_normal(5)
    b = rollout(ipd(), t1, t2, 500, 30, rng)
    cfg = PGConfig(PGRule.NL_PG, delta=1.0)
    u2, _ = pg_agent_update(ipd(), t2, t1, cfg, b, seat=2)
    np.testing.assert_allclose(u2, pg_gradient(b, t2, 2), rtol=1e-12, atol=1e-12)


def test_train_pg_smoke_and_determinism():
    cfgs = (PGConfig(PGRule.LOLA_OM), PGConfig(PGRule.LOLA_PG))
    a = train_pg(imp(), *cfgs, iterations=3, seed=2, batch_size=64, horizon=20)
    b = train_pg(imp(), *cfgs, iterations=3, seed=2, batch_size=64, horizon=20)
    assert a.iterations == 3
    assert "p2_s0_om" in a.extra and "gnorm1" in a.extra
    np.testing.assert_array_equal(a.probs1, b.probs1)
    np.testing.assert_array_equal(a.extra["p2_CC_om"], b.extra["p2_CC_om"])
    v = exact_value(imp(), np.log(a.probs1[-1] / (1 - a.probs1[-1])), np.log(a.probs2[-1] / (1 - a.probs2[-1])))
    assert v == pytest.approx(a.final_values, abs=1e-9)
