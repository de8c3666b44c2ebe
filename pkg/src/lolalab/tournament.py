"""Round-robin tournaments between learners on a repeated 2x2 game.

Each learner plays from its own seat: it sees states as ``(own, opponent)``
action pairs and payoffs of the game as seen from that seat. Tabular
learners update after every step; policy learners keep their policy fixed
for an episode and update between episodes.

Exact learners need the opponent's logits. Against another policy learner
they read them directly; against a tabular learner they use a maximum
likelihood memory-1 model fitted on the previous episode's actions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import sigmoid
from .baselines import JointActionQLearner, NaiveQLearner, PHCLearner, WoLFLearner
from .exact import STEP_FUNCTIONS, LearnerConfig, clamp_logits
from .games import STATE_SWAP, BimatrixGame
from .opponent_model import fit_counts
from .rollout import Baseline, EpisodeBatch, PGConfig, pg_agent_update

DEFAULT_ROSTER = ("nl-ex", "lola-ex", "nl-q", "jal-q", "phc", "wolf")
LEARNER_NAMES = ("nl-ex", "lola-ex", "nl-pg", "lola-pg", "lola-om", "nl-q", "jal-q", "phc", "wolf")
Z95 = 1.959963984540054


class PolicyLearner:
    """Memory-1 sigmoid policy, updated once per episode."""

    name = "policy"
    parametric = True

    def __init__(self, game: BimatrixGame, rng, smoothing: float = 1.0):
        self.game = game
        self.rng = rng
        self.smoothing = smoothing
        self.theta = rng.standard_normal(5)
        self._p = None
        self._u = None
        self._t = 0

    def begin_episode(self, steps: int) -> None:
        self._p = sigmoid(self.theta)
        self._u = self.rng.random(steps)
        self._t = 0

    def act(self, s: int) -> int:
        a = int(self._u[self._t] >= self._p[s])
        self._t += 1
        return a

    def observe(self, s, a, o, r, s2) -> None:
        pass

    def estimate_opponent(self, states, opp_actions, opponent_theta):
        if opponent_theta is not None:
            return opponent_theta
        return fit_counts(opp_actions, states, self.smoothing).fitted_logits


class ExactLearner(PolicyLearner):
    def __init__(self, game, rng, rule="lola-ex", delta=0.5, eta=2.0, smoothing=1.0):
        super().__init__(game, rng, smoothing)
        self.cfg = LearnerConfig(rule, delta=delta, eta=eta)
        self.name = self.cfg.rule.value

    def hyperparameters(self) -> dict:
        return {"delta": self.cfg.delta, "eta": self.cfg.eta, "smoothing": self.smoothing}

    def end_episode(self, states, own_actions, opp_actions, rewards, opponent_theta=None):
        other = self.estimate_opponent(states, opp_actions, opponent_theta)
        u = STEP_FUNCTIONS[self.cfg.rule](self.game, self.theta, other, self.cfg)
        self.theta, _ = clamp_logits(self.theta + u)


class PGLearner(PolicyLearner):
    """Policy-gradient learner trained on its own episodes (batch of one)."""

    def __init__(self, game, rng, rule="lola-pg", delta=0.005, eta=20.0, smoothing=1.0):
        super().__init__(game, rng, smoothing)
        self.cfg = PGConfig(rule, delta=delta, eta=eta, smoothing=smoothing)
        self.name = self.cfg.rule.value
        self.baseline = Baseline(lr=self.cfg.critic_lr)

    def hyperparameters(self) -> dict:
        return {"delta": self.cfg.delta, "eta": self.cfg.eta, "smoothing": self.smoothing}

    def end_episode(self, states, own_actions, opp_actions, rewards, opponent_theta=None):
        opp_rewards = self.game.payoff_a2[own_actions, opp_actions]
        batch = EpisodeBatch(
            self.game.gamma,
            np.asarray(states)[None],
            np.asarray(own_actions)[None],
            np.asarray(opp_actions)[None],
            np.asarray(rewards, dtype=float)[None],
            opp_rewards[None],
        )
        self.baseline.update(batch, 1)
        other = None if self.cfg.rule.value == "lola-om" else opponent_theta
        if other is None:
            other = self.estimate_opponent(states, opp_actions, None)
        u, _ = pg_agent_update(self.game, self.theta, other, self.cfg, batch, self.baseline.values)
        self.theta, _ = clamp_logits(self.theta + u)


_TABULAR = {"nl-q": NaiveQLearner, "jal-q": JointActionQLearner, "phc": PHCLearner, "wolf": WoLFLearner}


def make_learner(name: str, game: BimatrixGame, rng, **hyper):
    """Instantiate a learner by name for a game already seen from its seat."""
    if name in ("nl-ex", "lola-ex"):
        return ExactLearner(game, rng, rule=name, **hyper)
    if name in ("nl-pg", "lola-pg", "lola-om"):
        return PGLearner(game, rng, rule=name, **hyper)
    if name in _TABULAR:
        return _TABULAR[name](game.gamma, rng, **hyper)
    raise ValueError(f"unknown learner {name!r}; expected one of {', '.join(LEARNER_NAMES)}")


@dataclass
class MatchResult:
    pair: tuple[str, str]
    returns_a: np.ndarray  # normalised return per episode
    returns_b: np.ndarray
    episodes: int
    steps_per_episode: int

    @property
    def mean_a(self) -> float:
        return float(self.returns_a.mean())

    @property
    def mean_b(self) -> float:
        return float(self.returns_b.mean())


def _normalised(rewards, disc, gamma):
    return (1.0 - gamma) * float(rewards @ disc)


def run_match(game, learner_a, learner_b, episodes=1000, steps=200, seed=0, hyper=None) -> MatchResult:
    """Play ``episodes`` episodes of ``steps`` rounds; ``learner_a`` sits in seat 1.

    Learners are given by name; ``hyper`` optionally maps a name to keyword
    arguments for its constructor.
    """
    if episodes < 1 or steps < 1:
        raise ValueError("episodes and steps must be >= 1")
    hyper = hyper or {}
    ss = np.random.SeedSequence([seed])
    rng_a, rng_b = (np.random.default_rng(s) for s in ss.spawn(2))
    a = make_learner(learner_a, game, rng_a, **hyper.get(learner_a, {}))
    b = make_learner(learner_b, game.swapped(), rng_b, **hyper.get(learner_b, {}))

    pay1, pay2 = game.r1, game.r2
    swap = STATE_SWAP.tolist()
    disc = game.gamma ** np.arange(steps)
    ret_a = np.empty(episodes)
    ret_b = np.empty(episodes)
    states = np.empty(steps, dtype=np.int64)
    x = np.empty(steps, dtype=np.int64)
    y = np.empty(steps, dtype=np.int64)
    r1 = np.empty(steps)
    r2 = np.empty(steps)
    for ep in range(episodes):
        if a.parametric:
            a.begin_episode(steps)
        if b.parametric:
            b.begin_episode(steps)
        s = 0
        for t in range(steps):
            sb = swap[s]
            ua = a.act(s)
            ub = b.act(sb)
            k = 2 * ua + ub
            s2 = k + 1
            ra, rb = pay1[k], pay2[k]
            a.observe(s, ua, ub, ra, s2)
            b.observe(sb, ub, ua, rb, swap[s2])
            states[t], x[t], y[t], r1[t], r2[t] = s, ua, ub, ra, rb
            s = s2
        ret_a[ep] = _normalised(r1, disc, game.gamma)
        ret_b[ep] = _normalised(r2, disc, game.gamma)
        # simultaneous updates: both see the other's pre-update logits
        theta_a = a.theta[STATE_SWAP] if a.parametric else None
        theta_b = b.theta[STATE_SWAP] if b.parametric else None
        if a.parametric:
            a.end_episode(states.copy(), x.copy(), y.copy(), r1.copy(), theta_b)
        if b.parametric:
            b.end_episode(STATE_SWAP[states], y.copy(), x.copy(), r2.copy(), theta_a)
    return MatchResult((learner_a, learner_b), ret_a, ret_b, episodes, steps)


@dataclass
class TournamentResult:
    roster: tuple[str, ...]
    rows: list[tuple[str, str, int, float]] = field(default_factory=list)

    def summary(self) -> dict[str, tuple[float, float, float, int]]:
        """Per learner: ``(mean, ci_low, ci_high, n)`` over all its match means."""
        out = {}
        for name in self.roster:
            vals = np.array([r[3] for r in self.rows if r[0] == name])
            n = len(vals)
            mean = float(vals.mean())
            half = Z95 * float(vals.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
            out[name] = (mean, mean - half, mean + half, n)
        return out

    def ranking(self) -> list[str]:
        s = self.summary()
        return sorted(self.roster, key=lambda n: -s[n][0])


def run_tournament(game, roster=DEFAULT_ROSTER, episodes=1000, steps=200, seeds=(0,), hyper=None):
    """Every unordered pair, self-pairings included, once per seed.

    Each match contributes one row per side: ``(learner, opponent, seed,
    mean normalised return)``.
    """
    roster = tuple(roster)
    if len(roster) < 2:
        raise ValueError("roster needs at least two learners")
    for name in roster:
        if name not in LEARNER_NAMES:
            raise ValueError(f"unknown learner {name!r}")
    result = TournamentResult(roster)
    for seed in seeds:
        for i, na in enumerate(roster):
            for j in range(i, len(roster)):
                nb = roster[j]
                m = run_match(game, na, nb, episodes, steps, seed=_match_seed(seed, i, j), hyper=hyper)
                result.rows.append((na, nb, seed, m.mean_a))
                result.rows.append((nb, na, seed, m.mean_b))
    return result


def _match_seed(seed, i, j) -> int:
    return int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])
