"""
A small round-robin tournament
==============================

Exact LOLA and naive learners against tabular Q-learners, policy hill
climbing and WoLF. Shorter than the full protocol (1000 episodes of 200
steps) so that it runs in about a minute; the bar chart goes to
``tournament.svg``.
"""

from lolalab.games import ipd
from lolalab.svg import emit_tournament_bars
from lolalab.tournament import DEFAULT_ROSTER, run_tournament

result = run_tournament(ipd(), DEFAULT_ROSTER, episodes=100, steps=100, seeds=[0])
summary = result.summary()
for name in result.ranking():
    mean, lo, hi, n = summary[name]
    print(f"{name:8s} {mean:+.3f}  [{lo:+.3f}, {hi:+.3f}]  ({n} match sides)")

with open("tournament.svg", "w") as fh:
    fh.write(emit_tournament_bars(summary, "IPD tournament"))
