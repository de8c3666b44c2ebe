"""Classic tabular multi-agent learners used as tournament opposition.

Every learner sees the game from its own seat: states are ``[s0, (own,
opp) pairs...]`` in the same order as :mod:`lolalab.games`, and action 0 is
cooperate/heads. The tournament driver takes care of relabelling for the
second seat.

Learning rates and exploration are constants by default (alpha=0.1,
epsilon=0.05, PHC lr=0.01, WoLF lr_win=0.01 / lr_lose=0.02).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .games import N_STATES

N_ACTIONS = 2


def _argmax_random(values: np.ndarray, rng) -> int:
    if len(values) == 2:
        v0, v1 = values[0], values[1]
        if v0 != v1:
            return 0 if v0 > v1 else 1
        return int(rng.integers(2))
    best = np.flatnonzero(values == values.max())
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(len(best))])


@dataclass
class QTable:
    """Q-values per state and own action, or per joint action for JAL-Q."""

    values: np.ndarray
    opponent_freq: np.ndarray | None = None

    @classmethod
    def independent(cls) -> "QTable":
        return cls(np.zeros((N_STATES, N_ACTIONS)))

    @classmethod
    def joint(cls) -> "QTable":
        return cls(np.zeros((N_STATES, N_ACTIONS, N_ACTIONS)), np.zeros((N_STATES, N_ACTIONS)))

    def expected(self, s: int) -> np.ndarray:
        """Own-action values at ``s``; JAL-Q averages over the empirical opponent."""
        if self.opponent_freq is None:
            return self.values[s]
        n = self.opponent_freq[s]
        total = n.sum()
        w = n / total if total > 0 else np.full(N_ACTIONS, 1.0 / N_ACTIONS)
        return self.values[s] @ w


def step_nl_q(q: QTable, s, a, r, s2, alpha=0.1, gamma=0.96) -> QTable:
    """``Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a'))`` in place."""
    target = r + gamma * q.values[s2].max()
    q.values[s, a] = (1.0 - alpha) * q.values[s, a] + alpha * target
    return q


def step_jal_q(q: QTable, s, a, o, r, s2, alpha=0.1, gamma=0.96) -> QTable:
    """Joint-action update; bootstraps with the best expected own action at ``s2``."""
    q.opponent_freq[s, o] += 1.0
    target = r + gamma * q.expected(s2).max()
    q.values[s, a, o] = (1.0 - alpha) * q.values[s, a, o] + alpha * target
    return q


@dataclass
class PHCState:
    qtable: QTable = field(default_factory=QTable.independent)
    mixed_policy: np.ndarray = field(
        default_factory=lambda: np.full((N_STATES, N_ACTIONS), 1.0 / N_ACTIONS)
    )
    avg_policy: np.ndarray = field(
        default_factory=lambda: np.full((N_STATES, N_ACTIONS), 1.0 / N_ACTIONS)
    )
    visits: np.ndarray = field(default_factory=lambda: np.zeros(N_STATES))
    lr: float = 0.01
    lr_win: float = 0.01
    lr_lose: float = 0.02


def _hill_climb(pi: np.ndarray, greedy: int, lr: float) -> None:
    # move probability mass toward the greedy action without leaving the simplex
    dec = np.minimum(pi, lr / (N_ACTIONS - 1))
    dec[greedy] = 0.0
    pi -= dec
    pi[greedy] += dec.sum()
    np.clip(pi, 0.0, 1.0, out=pi)
    pi /= pi.sum()


def step_phc(st: PHCState, s, a, r, s2, rng, alpha=0.1, gamma=0.96) -> PHCState:
    step_nl_q(st.qtable, s, a, r, s2, alpha, gamma)
    greedy = _argmax_random(st.qtable.values[s], rng)
    _hill_climb(st.mixed_policy[s], greedy, st.lr)
    return st


def step_wolf(st: PHCState, s, a, r, s2, rng, alpha=0.1, gamma=0.96) -> PHCState:
    """WoLF-PHC: small steps while winning against the average policy, large while losing."""
    step_nl_q(st.qtable, s, a, r, s2, alpha, gamma)
    st.visits[s] += 1
    st.avg_policy[s] += (st.mixed_policy[s] - st.avg_policy[s]) / st.visits[s]
    q = st.qtable.values[s]
    winning = st.mixed_policy[s] @ q > st.avg_policy[s] @ q
    lr = st.lr_win if winning else st.lr_lose
    greedy = _argmax_random(q, rng)
    _hill_climb(st.mixed_policy[s], greedy, lr)
    return st


# -- learner objects for the tournament ----------------------------------------


class TabularLearner:
    """Per-step learner interface shared with the gradient learners."""

    name = "tabular"
    parametric = False

    def __init__(self, gamma: float, rng, alpha=0.1, epsilon=0.05):
        self.gamma = gamma
        self.rng = rng
        self.alpha = alpha
        self.epsilon = epsilon

    def begin_episode(self) -> None:
        pass

    def end_episode(self, states, own_actions, opp_actions, rewards, opponent_theta=None) -> None:
        pass

    def hyperparameters(self) -> dict:
        return {"alpha": self.alpha, "epsilon": self.epsilon}

    def _epsilon_greedy(self, values: np.ndarray) -> int:
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(N_ACTIONS))
        return _argmax_random(values, self.rng)


class NaiveQLearner(TabularLearner):
    name = "nl-q"

    def __init__(self, gamma, rng, alpha=0.1, epsilon=0.05):
        super().__init__(gamma, rng, alpha, epsilon)
        self.q = QTable.independent()

    def act(self, s: int) -> int:
        return self._epsilon_greedy(self.q.values[s])

    def observe(self, s, a, o, r, s2) -> None:
        step_nl_q(self.q, s, a, r, s2, self.alpha, self.gamma)


class JointActionQLearner(TabularLearner):
    name = "jal-q"

    def __init__(self, gamma, rng, alpha=0.1, epsilon=0.05):
        super().__init__(gamma, rng, alpha, epsilon)
        self.q = QTable.joint()

    def act(self, s: int) -> int:
        return self._epsilon_greedy(self.q.expected(s))

    def observe(self, s, a, o, r, s2) -> None:
        step_jal_q(self.q, s, a, o, r, s2, self.alpha, self.gamma)


class PHCLearner(TabularLearner):
    name = "phc"

    def __init__(self, gamma, rng, alpha=0.1, epsilon=0.05, lr=0.01):
        super().__init__(gamma, rng, alpha, epsilon)
        self.state = PHCState(lr=lr)

    def hyperparameters(self) -> dict:
        return {**super().hyperparameters(), "lr": self.state.lr}

    def act(self, s: int) -> int:
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(N_ACTIONS))
        return int(self.rng.random() >= self.state.mixed_policy[s, 0])

    def observe(self, s, a, o, r, s2) -> None:
        step_phc(self.state, s, a, r, s2, self.rng, self.alpha, self.gamma)


class WoLFLearner(PHCLearner):
    name = "wolf"

    def __init__(self, gamma, rng, alpha=0.1, epsilon=0.05, lr_win=0.01, lr_lose=0.02):
        super().__init__(gamma, rng, alpha, epsilon)
        self.state = PHCState(lr_win=lr_win, lr_lose=lr_lose)

    def hyperparameters(self) -> dict:
        return {
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "lr_win": self.state.lr_win,
            "lr_lose": self.state.lr_lose,
        }

    def observe(self, s, a, o, r, s2) -> None:
        step_wolf(self.state, s, a, r, s2, self.rng, self.alpha, self.gamma)
