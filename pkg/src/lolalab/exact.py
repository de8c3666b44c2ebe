"""Exact-gradient learners: naive learning, LOLA and second-order LOLA.

All three rules differentiate the closed-form value of the iterated game.
One jet evaluation over the ten logits ``(theta1, theta2)`` yields every
derivative block; agent 2's update is computed by the same code from agent
2's seat (swapped game, re-indexed states), which keeps the dynamics exactly
symmetric under relabelling of the agents.

The learners ascend the raw expected discounted return (not the
``(1 - gamma)``-normalised one); normalised values are used for reporting.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .autodiff import seed_variables, sigmoid
from .games import STATE_SWAP, BimatrixGame, exact_value
from .records import RunRecord, TraceBuilder

LOGIT_LIMIT = 1e4

A = slice(0, 5)  # own logits
B = slice(5, 10)  # opponent logits


class Rule(str, enum.Enum):
    NL_EX = "nl-ex"
    LOLA_EX = "lola-ex"
    LOLA2_EX = "lola2-ex"

    @property
    def jet_order(self) -> int:
        return {Rule.NL_EX: 1, Rule.LOLA_EX: 2, Rule.LOLA2_EX: 3}[self]


@dataclass(frozen=True)
class LearnerConfig:
    """Step sizes for the first-order (``delta``) and look-ahead (``eta``) terms."""

    rule: Rule = Rule.LOLA_EX
    delta: float = 0.5
    eta: float = 2.0
    normalise_objective: bool = False

    def __post_init__(self):
        object.__setattr__(self, "rule", Rule(self.rule))
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.rule is not Rule.NL_EX and self.eta < 0:
            raise ValueError("eta must be non-negative")


@dataclass
class ExactTrainState:
    theta1: np.ndarray
    theta2: np.ndarray
    iteration: int = 0
    history: list = field(default_factory=list)


def value_derivatives(game, theta1, theta2, order, normalise=False):
    """Derivative tensors of ``V1`` and ``V2`` w.r.t. all ten logits.

    Returns two tuples ``(value, grad, hess, third)`` truncated at ``order``;
    indices 0..4 are ``theta1`` and 5..9 are ``theta2``.
    """
    x = seed_variables(np.concatenate([theta1, theta2]), order)
    v1, v2 = exact_value(game, x[:5], x[5:], normalise=normalise)
    return _unpack(v1), _unpack(v2)


def _unpack(j):
    return j.value, j.grad, j.hess, j.third


def _checked(update):
    if not np.all(np.isfinite(update)):
        raise FloatingPointError("non-finite update vector")
    return update


def nl_step(game, theta1, theta2, cfg: LearnerConfig) -> np.ndarray:
    """``delta * grad_theta1 V1``."""
    (_, g1, _, _), _ = value_derivatives(game, theta1, theta2, 1, cfg.normalise_objective)
    return _checked(cfg.delta * g1[A])


def lola_from_blocks(g1, h2, delta, eta):
    # (grad_theta2 V1)^T grad_theta1 grad_theta2 V2, contracted over theta2
    return delta * g1[A] + delta * eta * (h2[A, B] @ g1[B])


def lola_step(game, theta1, theta2, cfg: LearnerConfig) -> np.ndarray:
    """First-order LOLA against an opponent assumed to take a naive step of size ``eta``.

    ``grad_theta2 V1`` enters as a fixed vector; only the opponent's step is
    differentiated with respect to ``theta1``.
    """
    (_, g1, _, _), (_, _, h2, _) = value_derivatives(
        game, theta1, theta2, 2, cfg.normalise_objective
    )
    return _checked(lola_from_blocks(g1, h2, cfg.delta, cfg.eta))


def lola2_from_blocks(d1, d2, delta, opp_delta, opp_eta):
    _, g1, h1, t1 = d1
    _, g2, h2, _ = d2
    # jacobian of the opponent's LOLA step
    #   dtheta2_b = opp_delta * (g2_b + opp_eta * sum_a g2_a h1_ab)
    # with respect to theta1_c
    jac = opp_delta * (
        h2[B, A]
        + opp_eta * (h1[A, B].T @ h2[A, A] + np.einsum("a,abc->bc", g2[A], t1[A, B, A]))
    )
    return delta * (g1[A] + jac.T @ g1[B])


def lola2_step(game, theta1, theta2, cfg: LearnerConfig, opp_delta=None, opp_eta=None):
    """Second-order LOLA: look ahead through the opponent's own LOLA step.

    The opponent is assumed to update by ``opp_delta * grad V2 + opp_delta *
    opp_eta * (grad_theta1 V2)^T grad_theta1 grad_theta2 V1``, by default with
    this learner's ``delta`` and ``eta``. Differentiating that step with
    respect to ``theta1`` needs third derivatives of ``V1``. With
    ``opp_eta=0`` this is :func:`lola_step` with ``eta = opp_delta``.
    """
    opp_delta = cfg.delta if opp_delta is None else opp_delta
    opp_eta = cfg.eta if opp_eta is None else opp_eta
    d1, d2 = value_derivatives(game, theta1, theta2, 3, cfg.normalise_objective)
    return _checked(lola2_from_blocks(d1, d2, cfg.delta, opp_delta, opp_eta))


STEP_FUNCTIONS = {Rule.NL_EX: nl_step, Rule.LOLA_EX: lola_step, Rule.LOLA2_EX: lola2_step}


def agent_update(game: BimatrixGame, theta_own, theta_other, cfg: LearnerConfig, seat: int):
    """Update vector for the agent sitting in ``seat`` (1 or 2)."""
    step = STEP_FUNCTIONS[cfg.rule]
    if seat == 1:
        return step(game, theta_own, theta_other, cfg)
    if seat == 2:
        u = step(game.swapped(), theta_own[STATE_SWAP], theta_other[STATE_SWAP], cfg)
        return u[STATE_SWAP]
    raise ValueError(f"seat must be 1 or 2, got {seat}")


def random_init(seed: int, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Standard-normal initial logits for both agents."""
    rng = np.random.default_rng(seed)
    theta = scale * rng.standard_normal(10)
    return theta[:5].copy(), theta[5:].copy()


def clamp_logits(theta) -> tuple[np.ndarray, bool]:
    bad = bool(np.any(np.abs(theta) > LOGIT_LIMIT))
    return np.clip(theta, -LOGIT_LIMIT, LOGIT_LIMIT), bad


def train_exact(
    game: BimatrixGame,
    init1,
    init2,
    cfg1: LearnerConfig,
    cfg2: LearnerConfig,
    iterations: int = 200,
    seed: int = 0,
) -> RunRecord:
    """Simultaneous exact-gradient training from the given initial logits."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    state = ExactTrainState(np.array(init1, dtype=float), np.array(init2, dtype=float))
    trace = TraceBuilder(seed)
    for _ in range(iterations):
        u1 = agent_update(game, state.theta1, state.theta2, cfg1, seat=1)
        u2 = agent_update(game, state.theta2, state.theta1, cfg2, seat=2)
        state.theta1, bad1 = clamp_logits(state.theta1 + u1)
        state.theta2, bad2 = clamp_logits(state.theta2 + u2)
        trace.diverged |= bad1 or bad2
        state.iteration += 1
        v1, v2 = exact_value(game, state.theta1, state.theta2)
        p1, p2 = sigmoid(state.theta1), sigmoid(state.theta2)
        state.history.append((v1, v2, p1, p2))
        trace.append(v1, v2, p1, p2)
    return trace.build()
