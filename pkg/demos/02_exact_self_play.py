"""
Naive learners vs LOLA with exact gradients
===========================================

Both agents start from random logits and update simultaneously. Naive
learners follow their own gradient and end up defecting; LOLA learners
account for the opponent's next learning step and mostly settle on
tit-for-tat. The policy scatter is written to ``exact_self_play.svg``.
"""

import numpy as np

from lolalab.analysis import summarize
from lolalab.exact import LearnerConfig, Rule, random_init, train_exact
from lolalab.games import imp, ipd
from lolalab.svg import emit_policy_scatter

SEEDS = range(10)

for game in (ipd(), imp()):
    for rule in (Rule.NL_EX, Rule.LOLA_EX):
        cfg = LearnerConfig(rule)
        runs = [train_exact(game, *random_init(s), cfg, cfg, 200, seed=s) for s in SEEDS]
        stats = summarize(runs, game)
        frac = stats.tft_fraction if stats.tft_fraction is not None else stats.nash_fraction
        kind = "TFT" if stats.tft_fraction is not None else "Nash"
        print(
            f"{game.kind.value} {rule.value:8s} mean return {np.round(stats.mean_return, 3)} "
            f"std {np.round(stats.std_return, 3)} {kind} {frac:.0%}"
        )
        if game.kind.value == "ipd" and rule is Rule.LOLA_EX:
            with open("exact_self_play.svg", "w") as fh:
                fh.write(emit_policy_scatter(runs, title="IPD LOLA-Ex self-play"))
