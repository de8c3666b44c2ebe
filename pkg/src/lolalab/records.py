"""Per-run training traces and their CSV form.

CSV files start with ``#``-prefixed comment lines holding the resolved
configuration as JSON, followed by a normal header row. Floats are written
with ``repr`` so parsing a file gives back bit-identical arrays.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .games import STATE_NAMES

PROB_COLUMNS = [f"p{a}_{s}" for a in (1, 2) for s in STATE_NAMES]


@dataclass
class RunRecord:
    """Trace of one training run (one seed).

    Row ``i`` describes the policies after update ``i + 1``; values are
    normalised exact returns at those policies.
    """

    seed: int
    v1: np.ndarray
    v2: np.ndarray
    probs1: np.ndarray
    probs2: np.ndarray
    extra: dict[str, np.ndarray] = field(default_factory=dict)
    diverged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.v1)

    @property
    def final_values(self) -> tuple[float, float]:
        return float(self.v1[-1]), float(self.v2[-1])

    @property
    def final_probs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.probs1[-1], self.probs2[-1]

    def columns(self) -> list[str]:
        return ["seed", "iteration", "v1", "v2", *PROB_COLUMNS, *self.extra, "diverged"]

    def rows(self):
        for i in range(self.iterations):
            row = [self.seed, i + 1, self.v1[i], self.v2[i], *self.probs1[i], *self.probs2[i]]
            row.extend(col[i] for col in self.extra.values())
            row.append(int(self.diverged))
            yield row


class TraceBuilder:
    """Accumulates per-iteration rows, then freezes them into a RunRecord."""

    def __init__(self, seed: int):
        self.seed = seed
        self._v1, self._v2, self._p1, self._p2 = [], [], [], []
        self._extra: dict[str, list] = {}
        self.diverged = False

    def append(self, v1, v2, p1, p2, **extra):
        self._v1.append(float(v1))
        self._v2.append(float(v2))
        self._p1.append(np.asarray(p1, dtype=float))
        self._p2.append(np.asarray(p2, dtype=float))
        for k, v in extra.items():
            self._extra.setdefault(k, []).append(float(v))

    def build(self) -> RunRecord:
        return RunRecord(
            seed=self.seed,
            v1=np.array(self._v1),
            v2=np.array(self._v2),
            probs1=np.array(self._p1).reshape(-1, 5),
            probs2=np.array(self._p2).reshape(-1, 5),
            extra={k: np.array(v) for k, v in self._extra.items()},
            diverged=self.diverged,
        )


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def config_header(config: dict) -> str:
    body = json.dumps(config, sort_keys=True, default=_json_default)
    return f"# config: {body}\n"


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def read_config_header(lines) -> dict:
    for line in lines:
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    return {}


def write_table_csv(path, header: list[str], rows, config: dict | None = None) -> None:
    """Write a comment-headed CSV; ``rows`` are sequences matching ``header``."""
    buf = io.StringIO()
    if config is not None:
        buf.write(config_header(config))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    Path(path).write_text(buf.getvalue())


def read_table_csv(path) -> tuple[dict, list[dict[str, str]]]:
    text = Path(path).read_text().splitlines()
    comments = [ln for ln in text if ln.startswith("#")]
    body = [ln for ln in text if not ln.startswith("#")]
    return read_config_header(comments), list(csv.DictReader(body))


def write_records_csv(path, records: list[RunRecord], config: dict | None = None) -> None:
    if not records:
        raise ValueError("no records to write")
    header = records[0].columns()
    rows = (row for rec in records for row in rec.rows())
    write_table_csv(path, header, rows, config)


def read_records_csv(path) -> tuple[dict, list[RunRecord]]:
    """Inverse of :func:`write_records_csv`."""
    config, rows = read_table_csv(path)
    if not rows:
        return config, []
    fixed = {"seed", "iteration", "v1", "v2", "diverged", *PROB_COLUMNS}
    extra_cols = [c for c in rows[0] if c not in fixed]
    records = []
    by_seed: dict[int, list[dict]] = {}
    for row in rows:
        by_seed.setdefault(int(row["seed"]), []).append(row)
    for seed, group in by_seed.items():
        group.sort(key=lambda r: int(r["iteration"]))
        rec = RunRecord(
            seed=seed,
            v1=np.array([float(r["v1"]) for r in group]),
            v2=np.array([float(r["v2"]) for r in group]),
            probs1=np.array([[float(r[c]) for c in PROB_COLUMNS[:5]] for r in group]),
            probs2=np.array([[float(r[c]) for c in PROB_COLUMNS[5:]] for r in group]),
            extra={c: np.array([float(r[c]) for r in group]) for c in extra_cols},
            diverged=bool(int(group[-1]["diverged"])),
        )
        records.append(rec)
    return config, records
