"""Monte-Carlo rollouts of memory-1 policies and policy-gradient learners.

A batch holds ``batch_size`` independent episodes of ``horizon + 1`` steps
(``t = 0..horizon``). The estimators are written per episode so tests can
weight enumerated trajectories by their probabilities and recover exact
expectations.

For a sigmoid policy the score of action ``u`` in state ``s`` with respect to
the logit of ``s`` is ``1[u == 0] - p(s)``; all other logits have zero score.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numba
import numpy as np

from .autodiff import sigmoid
from .games import N_STATES, STATE_NAMES, STATE_SWAP, BimatrixGame, exact_value
from .records import RunRecord, TraceBuilder

PG_DEFAULT_HORIZON = 100
_SWAP8 = STATE_SWAP.astype(np.int8)


@dataclass(frozen=True)
class EpisodeBatch:
    """Trajectories ``(s_t, u1_t, u2_t, r1_t, r2_t)`` with discounted tails ``R_t``."""

    gamma: float
    states: np.ndarray  # (B, T+1) int, state index before acting
    actions1: np.ndarray  # (B, T+1) int
    actions2: np.ndarray
    rewards1: np.ndarray  # (B, T+1) float
    rewards2: np.ndarray
    returns1: np.ndarray | None = None
    returns2: np.ndarray | None = None

    def __post_init__(self):
        if self.returns1 is None:
            object.__setattr__(self, "returns1", discounted_tails(self.rewards1, self.gamma))
        if self.returns2 is None:
            object.__setattr__(self, "returns2", discounted_tails(self.rewards2, self.gamma))

    @property
    def batch_size(self) -> int:
        return self.states.shape[0]

    @property
    def horizon(self) -> int:
        return self.states.shape[1] - 1

    def actions(self, agent: int) -> np.ndarray:
        return self.actions1 if agent == 1 else self.actions2

    def rewards(self, agent: int) -> np.ndarray:
        return self.rewards1 if agent == 1 else self.rewards2

    def returns(self, agent: int) -> np.ndarray:
        return self.returns1 if agent == 1 else self.returns2

    @functools.cached_property
    def _swapped(self) -> "EpisodeBatch":
        return EpisodeBatch(
            self.gamma,
            _SWAP8.take(self.states),
            self.actions2,
            self.actions1,
            self.rewards2,
            self.rewards1,
            self.returns2,
            self.returns1,
        )

    def swapped(self) -> "EpisodeBatch":
        """The batch seen from agent 2's seat (computed once, then cached)."""
        return self._swapped

    def normalised_returns(self, agent: int) -> np.ndarray:
        return (1.0 - self.gamma) * self.returns(agent)[:, 0]


def discounted_tails(rewards: np.ndarray, gamma: float) -> np.ndarray:
    """``R_t = r_t + gamma * R_{t+1}`` along the last axis, ``R_{T+1} = 0``."""
    rewards = np.asarray(rewards, dtype=float)
    return _tails_kernel(rewards.reshape(-1, rewards.shape[-1]), gamma).reshape(rewards.shape)


@numba.njit(cache=True)
def _tails_kernel(r, gamma):
    out = np.empty_like(r)
    for b in range(r.shape[0]):
        acc = 0.0
        for t in range(r.shape[1] - 1, -1, -1):
            acc = r[b, t] + gamma * acc
            out[b, t] = acc
    return out


def rollout(game: BimatrixGame, theta1, theta2, batch_size: int, horizon: int, rng) -> EpisodeBatch:
    """Sample ``batch_size`` episodes of ``horizon + 1`` steps."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    p1 = sigmoid(np.asarray(theta1, dtype=float))
    p2 = sigmoid(np.asarray(theta2, dtype=float))
    u = rng.random((batch_size, horizon + 1, 2), dtype=np.float32)
    states, a1, a2, r1, r2, R1, R2 = _rollout_kernel(p1, p2, u, game.r1, game.r2, game.gamma)
    return EpisodeBatch(game.gamma, states, a1, a2, r1, r2, R1, R2)


@numba.njit(cache=True)
def _rollout_kernel(p1, p2, u, pay1, pay2, gamma):
    B, steps, _ = u.shape
    states = np.empty((B, steps), dtype=np.int8)
    a1 = np.empty((B, steps), dtype=np.int8)
    a2 = np.empty((B, steps), dtype=np.int8)
    r1 = np.empty((B, steps))
    r2 = np.empty((B, steps))
    R1 = np.empty((B, steps))
    R2 = np.empty((B, steps))
    for b in range(B):
        s = 0
        for t in range(steps):
            states[b, t] = s
            x1 = 1 if u[b, t, 0] >= p1[s] else 0
            x2 = 1 if u[b, t, 1] >= p2[s] else 0
            a1[b, t] = x1
            a2[b, t] = x2
            k = 2 * x1 + x2
            r1[b, t] = pay1[k]
            r2[b, t] = pay2[k]
            s = 1 + k
        # discounted tails while the episode is still in cache
        acc1 = 0.0
        acc2 = 0.0
        for t in range(steps - 1, -1, -1):
            acc1 = r1[b, t] + gamma * acc1
            acc2 = r2[b, t] + gamma * acc2
            R1[b, t] = acc1
            R2[b, t] = acc2
    return states, a1, a2, r1, r2, R1, R2


def _discounts(batch: EpisodeBatch) -> np.ndarray:
    return batch.gamma ** np.arange(batch.horizon + 1)


def pg_gradient_samples(batch, theta, agent=1, baseline=None, reward_agent=None) -> np.ndarray:
    """Per-episode terms ``sum_t score_t * gamma^t (R_t - b(s_t))``, shape (B, 5).

    ``agent`` selects whose actions and logits are differentiated;
    ``reward_agent`` (default: the same agent) selects whose returns are used.
    """
    reward_agent = agent if reward_agent is None else reward_agent
    b = np.zeros(N_STATES) if baseline is None else np.asarray(baseline, dtype=float)
    p = sigmoid(np.asarray(theta, dtype=float))
    return _pg_kernel(
        batch.states, batch.actions(agent), p, _discounts(batch), batch.returns(reward_agent), b
    )


@numba.njit(cache=True)
def _pg_kernel(states, actions, p, disc, R, b):
    B, steps = states.shape
    out = np.zeros((B, N_STATES))
    for e in range(B):
        for t in range(steps):
            s = states[e, t]
            score = (1 - actions[e, t]) - p[s]
            out[e, s] += score * disc[t] * (R[e, t] - b[s])
    return out


def _weighted_mean(samples, weights):
    if weights is None:
        return samples.mean(axis=0)
    w = np.asarray(weights, dtype=float)
    return np.tensordot(w, samples, axes=1)


def pg_gradient(batch, theta, agent=1, baseline=None, reward_agent=None, weights=None):
    """Likelihood-ratio estimate of ``grad_theta E[R_0]``.

    ``weights`` replaces the plain batch mean with a weighted sum (e.g.
    trajectory probabilities of an enumerated batch).
    """
    return _weighted_mean(pg_gradient_samples(batch, theta, agent, baseline, reward_agent), weights)


def cross_hessian_samples(batch, theta1, theta2, reward_agent=2) -> np.ndarray:
    """Per-episode ``sum_t gamma^t r_t (sum_{l<=t} score1_l)(sum_{l<=t} score2_l)^T``."""
    p1 = sigmoid(np.asarray(theta1, dtype=float))
    p2 = sigmoid(np.asarray(theta2, dtype=float))
    w = batch.rewards(reward_agent) * _discounts(batch)
    return _cross_kernel(batch.states, batch.actions1, batch.actions2, p1, p2, w)


@numba.njit(cache=True)
def _cross_kernel(states, a1, a2, p1, p2, w):
    # sum_t w_t c1_t c2_t^T with c = running score sums, rewritten as
    # sum_k W_k (e1_k c2_k^T + c1_{k-1} e2_k^T) where W_k = sum_{t>=k} w_t
    # and e_k is the one-hot score at step k
    B, steps = states.shape
    out = np.zeros((B, N_STATES, N_STATES))
    acc = np.zeros((N_STATES, N_STATES))
    c1 = np.zeros(N_STATES)
    c2 = np.zeros(N_STATES)
    W = np.empty(steps)
    for b in range(B):
        tail = 0.0
        for t in range(steps - 1, -1, -1):
            tail += w[b, t]
            W[t] = tail
        acc[:, :] = 0.0
        c1[:] = 0.0
        c2[:] = 0.0
        for t in range(steps):
            s = states[b, t]
            e1 = (1 - a1[b, t]) - p1[s]
            e2 = (1 - a2[b, t]) - p2[s]
            w2 = W[t] * e2
            for i in range(N_STATES):
                acc[i, s] += w2 * c1[i]
            c2[s] += e2
            w1 = W[t] * e1
            for j in range(N_STATES):
                acc[s, j] += w1 * c2[j]
            c1[s] += e1
        out[b] = acc
    return out


def cross_hessian_estimate(batch, theta1, theta2, reward_agent=2, weights=None) -> np.ndarray:
    """Estimate of ``grad_theta1 grad_theta2 E[R_0]`` (rows: theta1)."""
    return _weighted_mean(cross_hessian_samples(batch, theta1, theta2, reward_agent), weights)


# -- learners ------------------------------------------------------------------


class PGRule(str, enum.Enum):
    NL_PG = "nl-pg"
    LOLA_PG = "lola-pg"
    LOLA_OM = "lola-om"


@dataclass(frozen=True)
class PGConfig:
    rule: PGRule = PGRule.LOLA_PG
    delta: float = 0.005
    eta: float = 20.0
    critic_lr: float = 1.0
    smoothing: float = 1.0  # opponent-model pseudo-count (LOLA-OM)

    def __post_init__(self):
        object.__setattr__(self, "rule", PGRule(self.rule))
        if self.delta < 0 or self.eta < 0:
            raise ValueError("step sizes must be non-negative")


@dataclass
class Baseline:
    """Tabular critic ``b(s)`` over the 5 states, one per agent."""

    values: np.ndarray = field(default_factory=lambda: np.zeros(N_STATES))
    lr: float = 1.0

    def update(self, batch: EpisodeBatch, agent: int) -> None:
        """Move each visited state's estimate toward the batch-mean return."""
        n, tot = _state_sums(batch.states, batch.returns(agent))
        seen = n > 0
        target = self.values.copy()
        target[seen] = tot[seen] / n[seen]
        self.values = self.values + self.lr * (target - self.values)


@numba.njit(cache=True)
def _state_sums(states, values):
    n = np.zeros(N_STATES, dtype=np.int64)
    tot = np.zeros(N_STATES)
    for e in range(states.shape[0]):
        for t in range(states.shape[1]):
            s = states[e, t]
            n[s] += 1
            tot[s] += values[e, t]
    return n, tot


def nl_pg_step(theta1, batch, cfg, baseline=None) -> np.ndarray:
    return cfg.delta * pg_gradient(batch, theta1, 1, baseline)


def lola_pg_step(game, theta1, theta2, cfg, batch, baseline=None) -> np.ndarray:
    """``delta * g11 + delta * eta * H(E R2) @ g21`` from one shared batch.

    ``g11`` is agent 1's own policy gradient, ``g21`` the gradient of agent
    1's return w.r.t. agent 2's logits and ``H`` the cross-Hessian estimate
    of agent 2's return. ``game`` is accepted for signature symmetry with the
    exact rules; everything is read off the batch.
    """
    g11 = pg_gradient(batch, theta1, 1, baseline)
    if cfg.eta == 0.0:
        return cfg.delta * g11
    g21 = pg_gradient(batch, theta2, 2, baseline, reward_agent=1)
    H = cross_hessian_estimate(batch, theta1, theta2, reward_agent=2)
    return cfg.delta * g11 + cfg.delta * cfg.eta * (H @ g21)


def lola_om_step(game, theta1, batch, cfg, model=None, baseline=None) -> np.ndarray:
    """LOLA-PG with the opponent's logits replaced by a fitted model."""
    from .opponent_model import fit

    if model is None:
        model = fit(batch, agent=2, smoothing=cfg.smoothing)
    return lola_pg_step(game, theta1, model.fitted_logits, cfg, batch, baseline)


def pg_agent_update(game, theta_own, theta_other, cfg: PGConfig, batch, baseline=None, seat=1):
    """Update for the agent in ``seat``; returns ``(update, opponent model or None)``."""
    if seat == 2:
        batch = batch.swapped()
        game = game.swapped()
        theta_own, theta_other = theta_own[STATE_SWAP], theta_other[STATE_SWAP]
    model = None
    if cfg.rule is PGRule.NL_PG:
        u = nl_pg_step(theta_own, batch, cfg, baseline)
    elif cfg.rule is PGRule.LOLA_PG:
        u = lola_pg_step(game, theta_own, theta_other, cfg, batch, baseline)
    else:
        from .opponent_model import fit

        model = fit(batch, agent=2, smoothing=cfg.smoothing)
        u = lola_om_step(game, theta_own, batch, cfg, model, baseline)
    if seat == 2:
        u = u[STATE_SWAP]
        if model is not None:
            model = model.swapped()
    if not np.all(np.isfinite(u)):
        raise FloatingPointError("non-finite policy-gradient update")
    return u, model


def train_pg(
    game: BimatrixGame,
    cfg1: PGConfig,
    cfg2: PGConfig,
    iterations: int = 1000,
    seed: int = 0,
    batch_size: int = 4000,
    horizon: int = PG_DEFAULT_HORIZON,
    init=None,
) -> RunRecord:
    """Simultaneous policy-gradient training on fresh batches.

    Each iteration samples one batch at the current policies, refits both
    critics on it, and applies both agents' updates computed from that batch.
    """
    from .exact import clamp_logits, random_init

    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    theta1, theta2 = random_init(seed) if init is None else (np.array(init[0]), np.array(init[1]))
    rng = np.random.default_rng([seed, 1])
    base1 = Baseline(lr=cfg1.critic_lr)
    base2 = Baseline(lr=cfg2.critic_lr)
    trace = TraceBuilder(seed)
    for _ in range(iterations):
        batch = rollout(game, theta1, theta2, batch_size, horizon, rng)
        base1.update(batch, 1)
        # agent 2's critic lives in its own seat's state labels
        base2.update(batch.swapped(), 1)
        u1, m1 = pg_agent_update(game, theta1, theta2, cfg1, batch, base1.values, seat=1)
        u2, m2 = pg_agent_update(game, theta2, theta1, cfg2, batch, base2.values, seat=2)
        theta1, bad1 = clamp_logits(theta1 + u1)
        theta2, bad2 = clamp_logits(theta2 + u2)
        trace.diverged |= bad1 or bad2
        v1, v2 = exact_value(game, theta1, theta2)
        extra = {"gnorm1": np.linalg.norm(u1), "gnorm2": np.linalg.norm(u2)}
        if m1 is not None:
            extra.update({f"p2_{s}_om": p for s, p in zip(STATE_NAMES, m1.probabilities)})
        if m2 is not None:
            extra.update({f"p1_{s}_om": p for s, p in zip(STATE_NAMES, m2.probabilities)})
        trace.append(v1, v2, sigmoid(theta1), sigmoid(theta2), **extra)
    return trace.build()
