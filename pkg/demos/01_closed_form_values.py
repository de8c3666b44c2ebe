"""
Closed-form values of memory-1 policies
=======================================

A memory-1 policy is five numbers: the probability of cooperating at the
start and after each of the four joint outcomes. Two such policies turn the
repeated game into a small Markov chain whose discounted value is one 4x4
linear solve.
"""

import numpy as np

from lolalab.games import build_transition, exact_value_from_probs, ipd

game = ipd()

# states: s0, CC, CD, DC, DD (pairs are agent-1 move, agent-2 move)
always_defect = np.zeros(5)
tft_1 = np.array([1, 1, 0, 1, 0.0])  # agent 1 copies agent 2's last move
tft_2 = np.array([1, 1, 1, 0, 0.0])  # agent 2 copies agent 1's last move

for label, p1, p2 in [
    ("defect / defect", always_defect, always_defect),
    ("tft / tft", tft_1, tft_2),
    ("tft / defect", tft_1, always_defect),
]:
    v1, v2 = exact_value_from_probs(game, p1, p2)
    print(f"{label:16s} per-step values: {v1:+.3f} {v2:+.3f}")

# a slightly noisy tit-for-tat pair drifts away from full cooperation
noisy_1 = np.clip(tft_1, 0.05, 0.95)
noisy_2 = np.clip(tft_2, 0.05, 0.95)
d0, P, _ = build_transition(game, noisy_1, noisy_2)
print("\ninitial outcome distribution:", d0)
print("transition matrix rows (from CC, CD, DC, DD):\n", P.round(4))
print("noisy tft values:", np.round(exact_value_from_probs(game, noisy_1, noisy_2), 3))
