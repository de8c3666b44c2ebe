"""Command-line entry point: ``lolalab <subcommand> [flags]``.

Every subcommand writes into ``<out>/<subcommand>-<timestamp>/`` (or
``<out>/<run-name>/``). CSV files carry the resolved configuration as a
``# config:`` comment line, so reruns with the same flags produce identical
bytes; only the directory name depends on the clock.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis, svg
from .exact import LearnerConfig, Rule, random_init, train_exact
from .games import make_game
from .records import read_records_csv, write_records_csv, write_table_csv
from .rollout import PGConfig, PGRule, train_pg
from .tournament import DEFAULT_ROSTER, LEARNER_NAMES, run_tournament

log = logging.getLogger("lolalab")

SUBCOMMANDS = ("train-exact", "train-pg", "tournament", "exploit", "plot")

_DEFAULTS = {
    "train-exact": {"rule1": "lola-ex", "rule2": "lola-ex", "delta": 0.5, "eta": 2.0, "iterations": 200},
    "train-pg": {"rule1": "lola-pg", "rule2": "lola-pg", "delta": 0.005, "eta": 20.0, "iterations": 1000},
    "exploit": {"delta": 0.5, "eta": 2.0, "iterations": 200},
}


@dataclass
class ExperimentConfig:
    command: str = "train-exact"
    game: str = "ipd"
    gamma: float | None = None
    rule1: str = "lola-ex"
    rule2: str = "lola-ex"
    delta: float = 0.5
    eta: float = 2.0
    iterations: int = 200
    batch: int = 4000
    horizon: int = 100
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    out: str = "runs"
    run_name: str | None = None
    tft_threshold: float = analysis.TFT_THRESHOLD
    nash_eps: float = analysis.NASH_EPSILON
    roster: list[str] = field(default_factory=lambda: list(DEFAULT_ROSTER))
    episodes: int = 1000
    steps: int = 200
    input: str | None = None

    def validate(self) -> None:
        if self.command not in SUBCOMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        make_game(self.game, self.gamma)
        if self.command == "train-exact":
            Rule(self.rule1), Rule(self.rule2)
        if self.command == "train-pg":
            PGRule(self.rule1), PGRule(self.rule2)
        for name in self.roster:
            if name not in LEARNER_NAMES:
                raise ValueError(f"unknown learner {name!r}")
        if not 0.0 < self.nash_eps < 0.5:
            raise ValueError("nash_eps must lie in (0, 0.5)")
        if not 0.0 < self.tft_threshold < 1.0:
            raise ValueError("tft_threshold must lie in (0, 1)")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.command == "plot" and not self.input:
            raise ValueError("plot needs --input")

    def resolved(self) -> dict:
        """The fields that affect results (written into every output file)."""
        d = dataclasses.asdict(self)
        for k in ("out", "run_name", "input"):
            d.pop(k)
        return d


def parse_seeds(text) -> list[int]:
    """``"0-4,10"`` -> ``[0, 1, 2, 3, 4, 10]``; lists pass through."""
    if isinstance(text, list):
        return [int(s) for s in text]
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lolalab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with ExperimentConfig keys; flags override it")
        sp.add_argument("--out", help="parent directory for outputs (default: runs)")
        sp.add_argument("--run-name", dest="run_name", help="fixed output subdirectory instead of a timestamp")
        sp.add_argument("--game", choices=["ipd", "imp"])
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--seeds", help='e.g. "0-49" or "1,2,7"')
        sp.add_argument("--tft-threshold", dest="tft_threshold", type=float)
        sp.add_argument("--nash-eps", dest="nash_eps", type=float)
        if name in ("train-exact", "train-pg"):
            sp.add_argument("--rule1")
            sp.add_argument("--rule2")
        if name in ("train-exact", "train-pg", "exploit"):
            sp.add_argument("--delta", type=float)
            sp.add_argument("--eta", type=float)
            sp.add_argument("--iters", dest="iterations", type=int)
        if name == "train-pg":
            sp.add_argument("--batch", type=int)
            sp.add_argument("--horizon", type=int)
        if name == "tournament":
            sp.add_argument("--roster", help="comma-separated learner names")
            sp.add_argument("--episodes", type=int)
            sp.add_argument("--steps", type=int)
        if name == "plot":
            sp.add_argument("--input", help="runs.csv written by train-exact/train-pg")
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    values = dict(_DEFAULTS.get(args.command, {}))
    if getattr(args, "config", None):
        values.update(json.loads(Path(args.config).read_text()))
    for key, val in vars(args).items():
        if key in ("config", "verbose") or val is None:
            continue
        values[key] = val
    values["command"] = args.command
    if "seeds" in values:
        values["seeds"] = parse_seeds(values["seeds"])
    if isinstance(values.get("roster"), str):
        values["roster"] = [s.strip() for s in values["roster"].split(",") if s.strip()]
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def output_dir(cfg: ExperimentConfig) -> Path:
    name = cfg.run_name or f"{cfg.command}-{time.strftime('%Y%m%d-%H%M%S')}"
    path = Path(cfg.out) / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_summary(path, stats: analysis.SummaryStats, config) -> None:
    d = stats.to_dict()
    write_table_csv(path, list(d), [list(d.values())], config)


def cmd_train_exact(cfg: ExperimentConfig, out: Path) -> dict:
    game = make_game(cfg.game, cfg.gamma)
    c1 = LearnerConfig(Rule(cfg.rule1), delta=cfg.delta, eta=cfg.eta)
    c2 = LearnerConfig(Rule(cfg.rule2), delta=cfg.delta, eta=cfg.eta)
    records = []
    for seed in cfg.seeds:
        records.append(train_exact(game, *random_init(seed), c1, c2, cfg.iterations, seed))
        log.info("seed %d: final %s", seed, records[-1].final_values)
    return _finish_training(cfg, game, records, out)


def cmd_train_pg(cfg: ExperimentConfig, out: Path) -> dict:
    game = make_game(cfg.game, cfg.gamma)
    c1 = PGConfig(PGRule(cfg.rule1), delta=cfg.delta, eta=cfg.eta)
    c2 = PGConfig(PGRule(cfg.rule2), delta=cfg.delta, eta=cfg.eta)
    records = []
    for seed in cfg.seeds:
        rec = train_pg(game, c1, c2, cfg.iterations, seed, batch_size=cfg.batch, horizon=cfg.horizon)
        records.append(rec)
        log.info("seed %d: final %s", seed, rec.final_values)
    return _finish_training(cfg, game, records, out)


def _finish_training(cfg, game, records, out: Path) -> dict:
    config = cfg.resolved()
    write_records_csv(out / "runs.csv", records, config)
    stats = analysis.summarize(records, game, cfg.tft_threshold, cfg.nash_eps)
    _write_summary(out / "summary.csv", stats, config)
    title = f"{cfg.game.upper()} {cfg.rule1} vs {cfg.rule2}"
    (out / "policies.svg").write_text(svg.emit_policy_scatter(records, game.state_names, title))
    return stats.to_dict()


def cmd_tournament(cfg: ExperimentConfig, out: Path) -> dict:
    game = make_game(cfg.game, cfg.gamma)
    res = run_tournament(game, cfg.roster, cfg.episodes, cfg.steps, cfg.seeds)
    config = cfg.resolved()
    write_table_csv(out / "matches.csv", ["learner", "opponent", "seed", "mean_return"], res.rows, config)
    summary = res.summary()
    rows = [[n, *summary[n]] for n in res.ranking()]
    write_table_csv(out / "summary.csv", ["learner", "mean", "ci_low", "ci_high", "n"], rows, config)
    (out / "tournament.svg").write_text(svg.emit_tournament_bars(summary, f"{cfg.game.upper()} tournament"))
    return {n: summary[n][0] for n in res.ranking()}


def cmd_exploit(cfg: ExperimentConfig, out: Path) -> dict:
    game = make_game(cfg.game, cfg.gamma)
    table = analysis.exploit_table(game, cfg.seeds, cfg.delta, cfg.eta, cfg.iterations)
    rows = [[r, c, v[0], v[1]] for (r, c), v in table.items()]
    write_table_csv(out / "exploit.csv", ["rule_row", "rule_col", "v_row", "v_col"], rows, cfg.resolved())
    return {f"{r} vs {c}": v for (r, c), v in table.items()}


def cmd_plot(cfg: ExperimentConfig, out: Path) -> dict:
    config, records = read_records_csv(cfg.input)
    game = make_game(config.get("game", cfg.game), config.get("gamma"))
    title = f"{game.kind.value.upper()} {config.get('rule1', '')} vs {config.get('rule2', '')}".strip()
    (out / "policies.svg").write_text(svg.emit_policy_scatter(records, game.state_names, title))
    return {"runs": len(records)}


COMMANDS = {
    "train-exact": cmd_train_exact,
    "train-pg": cmd_train_pg,
    "tournament": cmd_tournament,
    "exploit": cmd_exploit,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"lolalab: error: {exc}", file=sys.stderr)
        return 2
    out = output_dir(cfg)
    (out / "config.json").write_text(json.dumps(cfg.resolved(), indent=2, sort_keys=True) + "\n")
    result = COMMANDS[cfg.command](cfg, out)
    print(json.dumps({"out": str(out), "result": result}, indent=2, default=float))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
