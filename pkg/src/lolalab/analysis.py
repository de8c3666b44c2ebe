"""Run classification (tit-for-tat, mixed Nash) and seed-fan summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact import LearnerConfig, Rule, random_init, train_exact
from .games import BimatrixGame, ipd
from .records import RunRecord

TFT_THRESHOLD = 0.5
NASH_EPSILON = 0.1

# states in which the opponent cooperated last round, per agent
# (agent 1 looks at the second letter of the pair, agent 2 at the first)
_OPP_COOPERATED = {1: (1, 3), 2: (1, 2)}
_OPP_DEFECTED = {1: (2, 4), 2: (3, 4)}


def classify_tft(probs, agent: int = 1, threshold: float = TFT_THRESHOLD) -> bool:
    """True iff the policy cooperates at s0 and copies the opponent's last move."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (5,):
        raise ValueError("expected 5 probabilities")
    if agent not in (1, 2):
        raise ValueError("agent must be 1 or 2")
    coop = [0, *_OPP_COOPERATED[agent]]
    return bool(np.all(p[coop] > threshold) and np.all(p[list(_OPP_DEFECTED[agent])] < threshold))


def classify_nash_imp(probs, eps: float = NASH_EPSILON) -> bool:
    """True iff every state's heads probability is within ``eps`` of one half."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (5,):
        raise ValueError("expected 5 probabilities")
    return bool(np.all(np.abs(p - 0.5) <= eps + 1e-12))


@dataclass(frozen=True)
class SummaryStats:
    runs: int
    mean_return: tuple[float, float]
    std_return: tuple[float, float]
    tft_fraction: float | None = None
    nash_fraction: float | None = None
    diverged: int = 0

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "mean_v1": self.mean_return[0],
            "mean_v2": self.mean_return[1],
            "std_v1": self.std_return[0],
            "std_v2": self.std_return[1],
            "tft_fraction": self.tft_fraction,
            "nash_fraction": self.nash_fraction,
            "diverged": self.diverged,
        }


def summarize(
    records: list[RunRecord],
    game: BimatrixGame,
    tft_threshold: float = TFT_THRESHOLD,
    nash_eps: float = NASH_EPSILON,
) -> SummaryStats:
    """Final-iterate statistics over a seed fan.

    TFT (IPD) is a per-policy property: the fraction is over all 2 x runs
    agent policies. Nash (IMP) is a property of the pair, so a run counts
    only if both agents qualify.
    """
    if not records:
        raise ValueError("no records")
    finals = np.array([r.final_values for r in records])
    tft = nash = None
    if game.kind.value == "ipd":
        hits = sum(
            classify_tft(r.probs1[-1], 1, tft_threshold) + classify_tft(r.probs2[-1], 2, tft_threshold)
            for r in records
        )
        tft = hits / (2 * len(records))
    elif game.kind.value == "imp":
        hits = sum(
            classify_nash_imp(r.probs1[-1], nash_eps) and classify_nash_imp(r.probs2[-1], nash_eps)
            for r in records
        )
        nash = hits / len(records)
    mean = finals.mean(axis=0)
    std = finals.std(axis=0)
    return SummaryStats(
        runs=len(records),
        mean_return=(float(mean[0]), float(mean[1])),
        std_return=(float(std[0]), float(std[1])),
        tft_fraction=tft,
        nash_fraction=nash,
        diverged=sum(r.diverged for r in records),
    )


EXPLOIT_ROWS = (Rule.NL_EX, Rule.LOLA_EX)
EXPLOIT_COLS = (Rule.NL_EX, Rule.LOLA_EX, Rule.LOLA2_EX)


def exploit_table(
    game: BimatrixGame | None = None,
    seeds=range(20),
    delta: float = 0.5,
    eta: float = 2.0,
    iterations: int = 200,
    rows=EXPLOIT_ROWS,
    cols=EXPLOIT_COLS,
) -> dict[tuple[str, str], tuple[float, float]]:
    """Mean final normalised returns ``(row agent, column agent)`` per rule pairing."""
    game = ipd() if game is None else game
    seeds = list(seeds)
    table = {}
    for r in rows:
        for c in cols:
            cfg1 = LearnerConfig(Rule(r), delta=delta, eta=eta)
            cfg2 = LearnerConfig(Rule(c), delta=delta, eta=eta)
            finals = []
            for seed in seeds:
                rec = train_exact(game, *random_init(seed), cfg1, cfg2, iterations, seed)
                finals.append(rec.final_values)
            m = np.mean(finals, axis=0)
            table[(Rule(r).value, Rule(c).value)] = (float(m[0]), float(m[1]))
    return table
