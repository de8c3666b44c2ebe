"""Maximum-likelihood opponent models for tabular memory-1 policies.

The likelihood of a sigmoid policy factorises over states, so the MLE of each
logit is the logit of the empirical action-0 frequency in that state. A
symmetric pseudo-count (Laplace smoothing) keeps the estimate finite for
unvisited or deterministic states.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .games import N_STATES, STATE_SWAP


class OpponentModelError(ValueError):
    """The fitted logit would be infinite (no smoothing, degenerate counts)."""


@dataclass(frozen=True)
class OpponentModel:
    counts: np.ndarray  # action-0 count per state
    visits: np.ndarray
    smoothing: float = 1.0

    @property
    def probabilities(self) -> np.ndarray:
        a = self.smoothing
        with np.errstate(invalid="ignore", divide="ignore"):
            return (self.counts + a) / (self.visits + 2.0 * a)

    @property
    def fitted_logits(self) -> np.ndarray:
        p = self.probabilities
        if not np.all((p > 0.0) & (p < 1.0)):
            raise OpponentModelError(
                "degenerate counts give an infinite logit; use smoothing > 0"
            )
        return np.log(p) - np.log1p(-p)

    def swapped(self) -> "OpponentModel":
        return OpponentModel(self.counts[STATE_SWAP], self.visits[STATE_SWAP], self.smoothing)


def action_counts(batch, agent: int) -> tuple[np.ndarray, np.ndarray]:
    s = batch.states.ravel()
    zero = (batch.actions(agent).ravel() == 0).astype(float)
    visits = np.bincount(s, minlength=N_STATES).astype(float)
    counts = np.bincount(s, weights=zero, minlength=N_STATES)
    return counts, visits


def fit(batch, agent: int = 2, smoothing: float = 1.0) -> OpponentModel:
    """Fit the tabular policy of ``agent`` from one batch of trajectories."""
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    counts, visits = action_counts(batch, agent)
    model = OpponentModel(counts, visits, float(smoothing))
    model.fitted_logits  # raises on degenerate counts
    return model


def fit_counts(actions, states, smoothing: float = 1.0) -> OpponentModel:
    """Fit from flat arrays of observed (state, action) pairs."""
    states = np.asarray(states, dtype=np.int64).ravel()
    zero = (np.asarray(actions).ravel() == 0).astype(float)
    visits = np.bincount(states, minlength=N_STATES).astype(float)
    counts = np.bincount(states, weights=zero, minlength=N_STATES)
    model = OpponentModel(counts, visits, float(smoothing))
    model.fitted_logits
    return model


class WindowedOpponentModel:
    """Pools counts over the most recent ``window`` batches (default: last only)."""

    def __init__(self, agent: int = 2, smoothing: float = 1.0, window: int = 1):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.agent = agent
        self.smoothing = smoothing
        self._recent = deque(maxlen=window)

    def update(self, batch) -> OpponentModel:
        self._recent.append(action_counts(batch, self.agent))
        counts = sum(c for c, _ in self._recent)
        visits = sum(v for _, v in self._recent)
        model = OpponentModel(counts, visits, self.smoothing)
        model.fitted_logits
        return model
