import json
import xml.dom.minidom

import numpy as np
import pytest

from lolalab.analysis import SummaryStats, classify_nash_imp, classify_tft, summarize
from lolalab.cli import main, parse_seeds
from lolalab.exact import LearnerConfig, Rule, random_init, train_exact
from lolalab.games import imp, ipd
from lolalab.records import RunRecord, read_records_csv, read_table_csv, write_records_csv
from lolalab.svg import emit_policy_scatter, emit_tournament_bars


def test_classify_tft_examples():
    assert classify_tft([0.9, 0.9, 0.1, 0.9, 0.1], agent=1)
    assert classify_tft([0.9, 0.9, 0.9, 0.1, 0.1], agent=2)
    assert not classify_tft([0.9, 0.9, 0.1, 0.9, 0.1], agent=2)
    assert not classify_tft(np.full(5, 0.5))
    assert not classify_tft(np.full(5, 1e-6))
    with pytest.raises(ValueError):
        classify_tft([0.5] * 4)


def test_classify_nash_examples():
    assert classify_nash_imp(np.full(5, 0.5))
    assert not classify_nash_imp([0.5, 0.5, 0.9, 0.5, 0.5])
    assert classify_nash_imp(np.full(5, 0.45), eps=0.1)
    assert classify_nash_imp(np.full(5, 0.6), eps=0.1)
    assert not classify_nash_imp(np.full(5, 0.45), eps=0.01)


def _record(seed, p1, p2, v=(-1.0, -1.0)):
    return RunRecord(seed, np.array([v[0]]), np.array([v[1]]), np.array([p1]), np.array([p2]))


def test_summary_fractions_are_exact_ratios():
    tft1, tft2 = [0.9, 0.9, 0.1, 0.9, 0.1], [0.9, 0.9, 0.9, 0.1, 0.1]
    recs = [_record(0, tft1, tft2), _record(1, tft1, tft1), _record(2, tft1, tft2, (-1.5, -0.5))]
    s = summarize(recs, ipd())
    assert s.tft_fraction == 5 / 6 and s.nash_fraction is None
    assert s.mean_return == pytest.approx((-7 / 6, -5 / 6))
    s = summarize([_record(0, [0.5] * 5, [0.55] * 5, (0, 0)), _record(1, [0.5] * 5, [0.9] * 5, (0, 0))], imp())
    assert s.nash_fraction == 0.5 and s.tft_fraction is None
    assert isinstance(s, SummaryStats) and s.to_dict()["runs"] == 2


def test_records_csv_round_trip(tmp_path):
    cfg = LearnerConfig(Rule.LOLA_EX)
    recs = [train_exact(ipd(), *random_init(s), cfg, cfg, 5, seed=s) for s in (3, 4)]
    recs[0].extra["gnorm1"] = np.linspace(0, 1, 5) / 3
    recs[1].extra["gnorm1"] = np.linspace(1, 2, 5) / 7
    path = tmp_path / "runs.csv"
    write_records_csv(path, recs, {"delta": 0.5, "seeds": [3, 4]})
    config, back = read_records_csv(path)
    assert config == {"delta": 0.5, "seeds": [3, 4]}
    for a, b in zip(recs, back):
        assert a.seed == b.seed and a.diverged == b.diverged
        for f in ("v1", "v2", "probs1", "probs2"):
            assert np.array_equal(getattr(a, f), getattr(b, f))
        assert np.array_equal(a.extra["gnorm1"], b.extra["gnorm1"])


def test_scatter_svg_layout():
    tft1, tft2 = [0.95, 0.95, 0.05, 0.95, 0.05], [0.95, 0.95, 0.95, 0.05, 0.05]
    doc = emit_policy_scatter([_record(0, tft1, tft2)])
    dom = xml.dom.minidom.parseString(doc)
    assert dom.documentElement.getAttribute("version") == "1.1"
    assert len(dom.getElementsByTagName("circle")) == 5
    panels = {g.getAttribute("id"): g for g in dom.getElementsByTagName("g")}
    cd = panels["panel-CD"].getElementsByTagName("circle")[0]
    dc = panels["panel-DC"].getElementsByTagName("circle")[0]
    rect_x = float(panels["panel-CD"].getElementsByTagName("rect")[0].getAttribute("x"))
    # CD: agent 1 defects back, agent 2 cooperates -> top-left of its panel
    assert float(cd.getAttribute("cx")) - rect_x < 20 and float(cd.getAttribute("cy")) < 80
    rect_x = float(panels["panel-DC"].getElementsByTagName("rect")[0].getAttribute("x"))
    assert float(dc.getAttribute("cx")) - rect_x > 160 and float(dc.getAttribute("cy")) > 200
    assert doc == emit_policy_scatter([_record(0, tft1, tft2)])


def test_scatter_svg_empty_is_valid():
    dom = xml.dom.minidom.parseString(emit_policy_scatter([]))
    assert not dom.getElementsByTagName("circle")
    assert len(dom.getElementsByTagName("g")) == 5


def test_bar_chart_valid():
    doc = emit_tournament_bars({"a": (-1.0, -1.2, -0.8, 4), "b": (-2.0, -2.1, -1.9, 4)})
    dom = xml.dom.minidom.parseString(doc)
    assert len(dom.getElementsByTagName("rect")) == 3  # background + 2 bars


def test_parse_seeds():
    assert parse_seeds("0-3,7") == [0, 1, 2, 3, 7]
    assert parse_seeds([1, 2]) == [1, 2]
    assert parse_seeds("5") == [5]


def _run(tmp_path, name, *args):
    assert main([*args, "--out", str(tmp_path), "--run-name", name]) == 0
    return tmp_path / name


def test_cli_train_exact_is_byte_identical(tmp_path, capsys):
    args = ["train-exact", "--game", "ipd", "--seeds", "0-2", "--iters", "10"]
    a = _run(tmp_path, "a", *args)
    b = _run(tmp_path, "b", *args)
    for f in ("runs.csv", "summary.csv", "policies.svg", "config.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    config, rows = read_table_csv(a / "summary.csv")
    assert config["tft_threshold"] == 0.5 and config["nash_eps"] == 0.1 and config["seeds"] == [0, 1, 2]
    assert config["delta"] == 0.5 and rows[0]["runs"] == "3"


def test_cli_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"game": "imp", "iterations": 4, "seeds": "1-2", "eta": 1.5}))
    out = _run(tmp_path, "c", "train-exact", "--config", str(cfg), "--eta", "0.25", "--rule2", "nl-ex")
    config = json.loads((out / "config.json").read_text())
    assert config["game"] == "imp" and config["eta"] == 0.25 and config["iterations"] == 4
    assert config["rule2"] == "nl-ex"


def test_cli_train_pg_tournament_exploit_plot(tmp_path, capsys):
    pg = _run(tmp_path, "pg", "train-pg", "--game", "imp", "--seeds", "0", "--iters", "2", "--batch", "32", "--horizon", "10")
    assert (pg / "runs.csv").exists()
    pg2 = _run(tmp_path, "pg2", "train-pg", "--game", "imp", "--seeds", "0", "--iters", "2", "--batch", "32", "--horizon", "10")
    assert (pg / "runs.csv").read_bytes() == (pg2 / "runs.csv").read_bytes()
    t = _run(tmp_path, "t", "tournament", "--roster", "nl-q,phc", "--episodes", "2", "--steps", "10", "--seeds", "0")
    assert (t / "matches.csv").exists() and (t / "tournament.svg").exists()
    e = _run(tmp_path, "e", "exploit", "--seeds", "0", "--iters", "3")
    _, rows = read_table_csv(e / "exploit.csv")
    assert len(rows) == 6
    p = _run(tmp_path, "p", "plot", "--input", str(pg / "runs.csv"))
    assert "HH" in (p / "policies.svg").read_text()


def test_cli_rejects_bad_config(tmp_path, capsys):
    assert main(["train-exact", "--rule1", "sgd", "--out", str(tmp_path)]) == 2
    assert main(["train-exact", "--nash-eps", "0.7", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_timestamped_directory(tmp_path, capsys):
    assert main(["train-exact", "--seeds", "0", "--iters", "2", "--out", str(tmp_path)]) == 0
    (d,) = list(tmp_path.iterdir())
    assert d.name.startswith("train-exact-")
