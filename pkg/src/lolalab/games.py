"""Iterated 2x2 matrix games and their closed-form memory-1 value functions.

Conventions used throughout the package:

* Actions are integers; action 0 is Cooperate (IPD) or Heads (IMP).
* A policy is 5 logits. ``sigmoid(logit)`` is the probability of action 0 in
  each state ``[s0, (0,0), (0,1), (1,0), (1,1)]``. Every pair is
  ``(agent-1 action, agent-2 action)`` from the previous round, for *both*
  agents, so the tables are indexed identically and agent 2's tit-for-tat is
  ``(1, 1, 1, 0, 0)`` while agent 1's is ``(1, 1, 0, 1, 0)``.
* Outcomes (joint actions) are ordered ``[CC, CD, DC, DD]``, i.e. index
  ``2 * u1 + u2``. Outcome ``k`` leads to state ``k + 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autodiff import Jet, sigmoid

N_STATES = 5
N_OUTCOMES = 4
STATE_NAMES = ("s0", "CC", "CD", "DC", "DD")
IMP_STATE_NAMES = ("s0", "HH", "HT", "TH", "TT")

# relabels states when the two agents swap roles
STATE_SWAP = np.array([0, 1, 3, 2, 4])
OUTCOME_SWAP = np.array([0, 2, 1, 3])


class GameKind(str, enum.Enum):
    IPD = "ipd"
    IMP = "imp"
    CUSTOM = "custom"


IPD_PAYOFFS = (
    np.array([[-1.0, -3.0], [0.0, -2.0]]),
    np.array([[-1.0, 0.0], [-3.0, -2.0]]),
)
IMP_PAYOFFS = (
    np.array([[1.0, -1.0], [-1.0, 1.0]]),
    np.array([[-1.0, 1.0], [1.0, -1.0]]),
)


@dataclass(frozen=True, eq=False)
class BimatrixGame:
    """Per-step payoffs ``payoff_a*[u1, u2]`` plus discount factor."""

    payoff_a1: np.ndarray
    payoff_a2: np.ndarray
    gamma: float
    kind: GameKind = GameKind.CUSTOM
    r1: np.ndarray = field(init=False, repr=False)
    r2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a1 = np.asarray(self.payoff_a1, dtype=float)
        a2 = np.asarray(self.payoff_a2, dtype=float)
        if a1.shape != (2, 2) or a2.shape != (2, 2):
            raise ValueError("payoff matrices must be 2x2")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        kind = GameKind(self.kind)
        if kind is GameKind.IPD and not (
            np.array_equal(a1, IPD_PAYOFFS[0]) and np.array_equal(a2, IPD_PAYOFFS[1])
        ):
            raise ValueError("kind=IPD requires the prisoners' dilemma payoffs")
        if kind is GameKind.IMP and not (
            np.array_equal(a1, IMP_PAYOFFS[0]) and np.array_equal(a2, IMP_PAYOFFS[1])
        ):
            raise ValueError("kind=IMP requires the matching pennies payoffs")
        a1.setflags(write=False)
        a2.setflags(write=False)
        object.__setattr__(self, "payoff_a1", a1)
        object.__setattr__(self, "payoff_a2", a2)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "r1", a1.ravel())
        object.__setattr__(self, "r2", a2.ravel())

    @property
    def state_names(self):
        return IMP_STATE_NAMES if self.kind is GameKind.IMP else STATE_NAMES

    @property
    def payoff_bounds(self) -> tuple[float, float]:
        both = np.concatenate([self.r1, self.r2])
        return float(both.min()), float(both.max())

    def swapped(self) -> "BimatrixGame":
        """The same game seen from agent 2's seat."""
        kind = self.kind
        a1, a2 = self.payoff_a2.T, self.payoff_a1.T
        if kind is GameKind.IMP:
            # matching pennies is not symmetric: the seats play different roles
            kind = GameKind.CUSTOM
        return BimatrixGame(a1, a2, self.gamma, kind)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "gamma": self.gamma,
            "payoff_a1": self.payoff_a1.tolist(),
            "payoff_a2": self.payoff_a2.tolist(),
        }


def ipd(gamma: float = 0.96) -> BimatrixGame:
    return BimatrixGame(*IPD_PAYOFFS, gamma=gamma, kind=GameKind.IPD)


def imp(gamma: float = 0.9) -> BimatrixGame:
    return BimatrixGame(*IMP_PAYOFFS, gamma=gamma, kind=GameKind.IMP)


def make_game(name: str, gamma: float | None = None, payoffs=None) -> BimatrixGame:
    """Look up a game by name; ``payoffs=(a1, a2)`` builds a custom 2x2 game."""
    name = name.lower()
    if payoffs is not None:
        return BimatrixGame(payoffs[0], payoffs[1], 0.96 if gamma is None else gamma)
    if name == "ipd":
        return ipd() if gamma is None else ipd(gamma)
    if name == "imp":
        return imp() if gamma is None else imp(gamma)
    raise ValueError(f"unknown game {name!r}; expected 'ipd' or 'imp'")


def swap_policy(theta):
    """Re-index a 5-entry policy table for the swapped seat."""
    return [theta[i] for i in STATE_SWAP] if not isinstance(theta, np.ndarray) else theta[STATE_SWAP]


def _joint(a, b):
    return [a * b, a * (1 - b), (1 - a) * b, (1 - a) * (1 - b)]


def _check_probs(p):
    for x in p:
        v = x.value if isinstance(x, Jet) else float(x)
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"probability {v} outside [0, 1]")


def _transition(p1, p2):
    d0 = _joint(p1[0], p2[0])
    P = [_joint(p1[s + 1], p2[s + 1]) for s in range(N_OUTCOMES)]
    return d0, P


def build_transition(game: BimatrixGame, p1, p2):
    """Initial outcome distribution, 4x4 outcome transition matrix, rewards.

    ``p1``/``p2`` are per-state probabilities of action 0. Row ``k`` of the
    transition matrix is the joint-action distribution played in state
    ``k + 1``. Jet entries produce object arrays.
    """
    if len(p1) != N_STATES or len(p2) != N_STATES:
        raise ValueError("policies must have 5 entries")
    _check_probs(p1)
    _check_probs(p2)
    d0, P = _transition(list(p1), list(p2))
    jets = any(isinstance(x, Jet) for x in list(p1) + list(p2))
    dtype = object if jets else float
    return np.array(d0, dtype=dtype), np.array(P, dtype=dtype), (game.r1.copy(), game.r2.copy())


def gauss_solve(A, b):
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    Works on nested lists of floats or jets (pivot choice uses value parts).
    """
    n = len(b)
    M = [list(row) + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(float(M[r][col])))
        if float(M[piv][col]) == 0.0:
            raise np.linalg.LinAlgError("singular system in gauss_solve")
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
        inv = 1.0 / M[col][col]
        for r in range(col + 1, n):
            f = M[r][col] * inv
            row, prow = M[r], M[col]
            for c in range(col + 1, n + 1):
                row[c] = row[c] - f * prow[c]
    x = [None] * n
    for r in range(n - 1, -1, -1):
        acc = M[r][n]
        for c in range(r + 1, n):
            acc = acc - M[r][c] * x[c]
        x[r] = acc / M[r][r]
    return x


def _discounted_occupancy(gamma, d0, P):
    # x = (I - gamma P^T)^{-1} d0, the discounted visitation of each outcome
    A = [
        [(1.0 if i == j else 0.0) - gamma * P[j][i] for j in range(N_OUTCOMES)]
        for i in range(N_OUTCOMES)
    ]
    return gauss_solve(A, d0)


def exact_value_from_probs(game: BimatrixGame, p1, p2, normalise: bool = True):
    """``(V1, V2)`` for policies given directly as action-0 probabilities."""
    _check_probs(p1)
    _check_probs(p2)
    d0, P = _transition(list(p1), list(p2))
    x = _discounted_occupancy(game.gamma, d0, P)
    v1 = _dot(x, game.r1)
    v2 = _dot(x, game.r2)
    if normalise:
        scale = 1.0 - game.gamma
        v1, v2 = v1 * scale, v2 * scale
    return v1, v2


def _sum(xs):
    xs = iter(xs)
    acc = next(xs)
    for x in xs:
        acc = acc + x
    return acc


def _dot(x, r):
    acc = x[0] * float(r[0])
    for xi, ri in zip(x[1:], r[1:]):
        acc = acc + xi * float(ri)
    return acc


def exact_value(game: BimatrixGame, theta1, theta2, normalise: bool = True):
    """Infinite-horizon discounted value of both agents under memory-1 logits.

    ``V_a = d0^T (I - gamma P)^{-1} r_a``, multiplied by ``1 - gamma`` when
    ``normalise`` is set so that values are in per-step payoff units. Entries
    of ``theta1``/``theta2`` may be floats or jets.
    """
    if len(theta1) != N_STATES or len(theta2) != N_STATES:
        raise ValueError("policies must have 5 logits")
    p1 = [sigmoid(t) for t in theta1]
    p2 = [sigmoid(t) for t in theta2]
    return exact_value_from_probs(game, p1, p2, normalise=normalise)


def finite_horizon_value(game: BimatrixGame, theta1, theta2, horizon: int, normalise: bool = False):
    """Expected discounted return over steps ``t = 0..horizon`` (inclusive).

    This is the expectation that a rollout of length ``horizon + 1``
    estimates; it differs from :func:`exact_value` by the ``gamma**(T+1)``
    tail.
    """
    p1 = [sigmoid(t) for t in theta1]
    p2 = [sigmoid(t) for t in theta2]
    d, P = _transition(p1, p2)
    g = game.gamma
    v1 = v2 = 0.0
    disc = 1.0
    for t in range(horizon + 1):
        v1 = v1 + _dot(d, game.r1) * disc
        v2 = v2 + _dot(d, game.r2) * disc
        if t == horizon:
            break
        d = [_sum(d[i] * P[i][j] for i in range(N_OUTCOMES)) for j in range(N_OUTCOMES)]
        disc *= g
    if normalise:
        v1, v2 = v1 * (1.0 - g), v2 * (1.0 - g)
    return v1, v2


def normalised_return(rewards: Sequence[float], gamma: float) -> float:
    """``(1 - gamma) * sum_t gamma**t r_t``; 0 for an empty sequence."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    r = np.asarray(rewards, dtype=float)
    if r.size == 0:
        return 0.0
    return float((1.0 - gamma) * np.sum(gamma ** np.arange(r.size) * r))
