import itertools

import numpy as np
import pytest

from lolalab.baselines import (
    JointActionQLearner,
    NaiveQLearner,
    PHCLearner,
    PHCState,
    QTable,
    WoLFLearner,
    step_jal_q,
    step_nl_q,
    step_phc,
    step_wolf,
)
from lolalab.games import exact_value, ipd


def test_zero_alpha_leaves_q_unchanged():
    q = QTable.independent()
    q.values[:] = np.arange(10.0).reshape(5, 2)
    before = q.values.copy()
    step_nl_q(q, 1, 0, 5.0, 2, alpha=0.0)
    assert np.array_equal(q.values, before)


def test_single_state_converges_to_reward():
    q = QTable.independent()
    for _ in range(300):
        step_nl_q(q, 0, 0, 1.0, 0, alpha=0.1, gamma=0.0)
    assert q.values[0, 0] == pytest.approx(1.0, abs=1e-10)


def test_jal_q_degenerate_opponent_bootstrap():
    q = QTable.joint()
    q.values[2] = [[3.0, -9.0], [5.0, 7.0]]
    q.opponent_freq[2] = [4.0, 0.0]
    # opponent always plays 0 at state 2, so the bootstrap is max_a Q(2, a, 0)
    assert q.expected(2).max() == 5.0
    step_jal_q(q, 1, 0, 0, 0.0, 2, alpha=1.0, gamma=1.0)
    assert q.values[1, 0, 0] == 5.0
    assert q.opponent_freq[1, 0] == 1.0


def test_phc_zero_lr_keeps_policy():
    st = PHCState(lr=0.0)
    before = st.mixed_policy.copy()
    step_phc(st, 0, 1, 1.0, 3, np.random.default_rng(0))
    assert np.array_equal(st.mixed_policy, before)


def test_phc_saturated_policy_stays_put():
    st = PHCState(lr=0.1)
    st.mixed_policy[0] = [1.0, 0.0]
    st.qtable.values[0] = [1.0, 0.0]
    step_phc(st, 0, 0, 0.0, 0, np.random.default_rng(0), alpha=0.0)
    assert st.mixed_policy[0].tolist() == [1.0, 0.0]


def test_phc_moves_toward_greedy():
    st = PHCState(lr=0.05)
    st.qtable.values[3] = [0.0, 1.0]
    step_phc(st, 3, 1, 0.0, 3, np.random.default_rng(0), alpha=0.0)
    assert st.mixed_policy[3] == pytest.approx([0.45, 0.55])


def test_wolf_rates_recorded_and_policies_valid():
    learner = WoLFLearner(0.96, np.random.default_rng(1), lr_win=0.01, lr_lose=0.02)
    assert learner.hyperparameters()["lr_lose"] == 2 * learner.hyperparameters()["lr_win"]
    rng = np.random.default_rng(2)
    s = 0
    for _ in range(2000):
        a = learner.act(s)
        o = int(rng.integers(2))
        s2 = 1 + 2 * a + o
        learner.observe(s, a, o, ipd().r1[2 * a + o], s2)
        s = s2
    pi, avg = learner.state.mixed_policy, learner.state.avg_policy
    assert np.all(pi >= 0) and np.allclose(pi.sum(axis=1), 1.0)
    assert np.all(avg >= 0) and np.allclose(avg.sum(axis=1), 1.0)


def test_wolf_uses_losing_rate_when_behind():
    st = PHCState(lr_win=0.01, lr_lose=0.02)
    st.qtable.values[1] = [0.0, 1.0]
    st.mixed_policy[1] = [0.8, 0.2]
    st.avg_policy[1] = [0.5, 0.5]
    st.visits[1] = 10**9  # freeze the average
    step_wolf(st, 1, 0, 0.0, 1, np.random.default_rng(0), alpha=0.0)
    # 0.2 * 1 (current) < 0.5 * 1 (average): losing, big step
    assert st.mixed_policy[1] == pytest.approx([0.78, 0.22], abs=1e-9)


def _best_response_value(game, theta2):
    best = -np.inf
    for bits in itertools.product((0, 1), repeat=5):
        theta1 = np.where(np.array(bits) == 0, 40.0, -40.0)
        best = max(best, exact_value(game, theta1, theta2)[0])
    return best


def test_nl_q_learns_best_response_to_stationary_opponent():
    game = ipd(0.8)
    p2 = np.array([0.7, 0.9, 0.2, 0.6, 0.3])
    theta2 = np.log(p2 / (1 - p2))
    rng = np.random.default_rng(3)
    learner = NaiveQLearner(game.gamma, np.random.default_rng(4), alpha=0.05, epsilon=1.0)
    for ep in range(3000):
        learner.epsilon = max(0.01, 1.0 / (1 + ep / 50))
        s = 0
        for _ in range(30):
            a = learner.act(s)
            o = int(rng.random() >= p2[s])
            k = 2 * a + o
            learner.observe(s, a, o, game.r1[k], k + 1)
            s = k + 1
    greedy = np.where(learner.q.values[:, 0] >= learner.q.values[:, 1], 40.0, -40.0)
    assert exact_value(game, greedy, theta2)[0] == pytest.approx(_best_response_value(game, theta2), abs=1e-9)


@pytest.mark.parametrize("cls", [NaiveQLearner, JointActionQLearner, PHCLearner, WoLFLearner])
def test_learners_deterministic_per_seed(cls):
    def run():
        learner = cls(0.9, np.random.default_rng(7))
        out, s = [], 0
        for t in range(300):
            a = learner.act(s)
            o = t % 2
            learner.observe(s, a, o, float(a - o), 1 + 2 * a + o)
            out.append(a)
            s = 1 + 2 * a + o
        return out

    assert run() == run()
