"""Opponent-shaping learners for iterated 2x2 matrix games.

Modules:

* ``games``: iterated prisoner's dilemma / matching pennies, closed-form values
* ``autodiff``: forward-mode jets up to third order
* ``exact``: exact-gradient naive, LOLA and second-order LOLA learners
* ``rollout``: Monte-Carlo batches and policy-gradient learners
* ``opponent_model``: tabular maximum-likelihood opponent models
* ``baselines``: Q-learning, joint-action Q-learning, PHC, WoLF-PHC
* ``tournament``: round-robin matches between any of the above
* ``analysis``, ``svg``, ``cli``: classification, figures, command line
"""

from .exact import LearnerConfig, Rule, random_init, train_exact
from .games import BimatrixGame, exact_value, imp, ipd, make_game
from .rollout import PGConfig, PGRule, train_pg

__all__ = [
    "BimatrixGame",
    "LearnerConfig",
    "PGConfig",
    "PGRule",
    "Rule",
    "exact_value",
    "imp",
    "ipd",
    "make_game",
    "random_init",
    "train_exact",
    "train_pg",
]
__version__ = "0.1.0"
