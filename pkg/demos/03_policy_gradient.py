"""
LOLA from sampled episodes
==========================

The same learning rule, but every derivative is estimated from a batch of
rollouts: the agent's own policy gradient, the gradient of its return with
respect to the opponent's logits, and the cross-Hessian of the opponent's
return. A short run on matching pennies pulls both agents to the mixed
equilibrium.
"""

import numpy as np

from lolalab.games import exact_value, imp
from lolalab.rollout import PGConfig, PGRule, cross_hessian_estimate, rollout, train_pg

game = imp()
rng = np.random.default_rng(0)
t1, t2 = rng.standard_normal(5), rng.standard_normal(5)

# the estimators on their own
batch = rollout(game, t1, t2, batch_size=2000, horizon=100, rng=rng)
print("mean normalised return (agent 1):", batch.normalised_returns(1).mean().round(3))
print("exact value                      :", round(exact_value(game, t1, t2)[0], 3))
print("cross-Hessian estimate, row s0   :", cross_hessian_estimate(batch, t1, t2)[0].round(2))

# a short training run
cfg = PGConfig(PGRule.LOLA_PG)
rec = train_pg(game, cfg, cfg, iterations=150, seed=0, batch_size=2000)
for i in (0, 49, 99, 149):
    print(f"iter {i + 1:4d}  p1={rec.probs1[i].round(2)}  p2={rec.probs2[i].round(2)}")
