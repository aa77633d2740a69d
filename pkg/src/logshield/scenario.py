"""Continuous-publishing experiments: time-frame releases, anonymization, attack sweeps.

Scenario I keeps the whole log as the later release and grows the earlier
one towards it; Scenario II fixes the earlier release at half of the cases
and grows the later one.  Each release of each pair is anonymized
separately for every ``n`` and the indicators are tabulated.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from os import PathLike
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .anonymizer import AnonymizedRelease, suppress_anonymize
from .attacks import INDICATOR_FIELDS, ReleasePair, fa_ca_ba
from .errors import Infeasible
from .model import RawEvent, SimpleEventLog, to_simple_log

log = logging.getLogger(__name__)

MODES = {"I": "grow_first", "II": "grow_second", "grow_first": "grow_first", "grow_second": "grow_second"}
DEFAULT_PERCENTAGES = {"grow_first": (99, 95, 90, 75), "grow_second": (51, 55, 60, 75)}
SECOND_BASE = 50

CSV_COLUMNS = (
    ("scenario", "gap_pct", "n") + INDICATOR_FIELDS + ("argmin_bk_fa", "argmin_bk_ca", "argmin_bk_ba")
)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LOGSHIELD_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ScenarioSpec:
    mode: str = "grow_first"
    percentages: Tuple[int, ...] = ()
    k: int = 20
    n_values: Tuple[int, ...] = (1,)
    bk_max_len: int = 5
    seed: int = 0
    sensitive_attr: str = "disease"
    drop_partial: bool = False

    def __post_init__(self):
        mode = MODES.get(self.mode)
        if mode is None:
            raise ValueError(f"unknown scenario mode {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if not self.percentages:
            object.__setattr__(self, "percentages", DEFAULT_PERCENTAGES[mode])
        object.__setattr__(self, "percentages", tuple(int(p) for p in self.percentages))
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        for p in self.percentages:
            if not 0 < p <= 100:
                raise ValueError(f"percentage {p} outside (0, 100]")
            if mode == "grow_second" and p <= SECOND_BASE:
                raise ValueError(f"percentage {p} must exceed {SECOND_BASE} in Scenario II")
        if not self.n_values:
            raise ValueError("n_values is empty")
        for v in self.n_values:
            if not 1 <= v <= self.bk_max_len:
                raise ValueError(f"n={v} outside [1, bk_max_len={self.bk_max_len}]")
        if self.k < 2:
            raise ValueError("k must be >= 2")

    @property
    def label(self) -> str:
        return "I" if self.mode == "grow_first" else "II"

    def pairs(self) -> List[Tuple[int, int, int]]:
        """``(gap_pct, earlier_pct, later_pct)`` for every release pair."""
        if self.mode == "grow_first":
            return [(100 - p, p, 100) for p in self.percentages]
        return [(p - SECOND_BASE, SECOND_BASE, p) for p in self.percentages]


def case_starts(events: Sequence[RawEvent]) -> Dict[str, datetime]:
    starts: Dict[str, datetime] = {}
    for ev in events:
        if ev.case_id not in starts or ev.timestamp < starts[ev.case_id]:
            starts[ev.case_id] = ev.timestamp
    return starts


def timeframe_cutoff(events: Sequence[RawEvent], percent: int) -> datetime:
    """Earliest end time such that at least ``percent`` % of cases start by it."""
    if not 0 < percent <= 100:
        raise ValueError(f"percent {percent} outside (0, 100]")
    starts = sorted(case_starts(events).values())
    if not starts:
        raise ValueError("no events")
    if percent == 100:
        return max(ev.timestamp for ev in events)
    need = math.ceil(percent * len(starts) / 100)
    return starts[need - 1]


def timeframe_filter(events: Sequence[RawEvent], percent: int, drop_partial: bool = False) -> List[RawEvent]:
    """Events of cases started by the cutoff, truncated at the cutoff.

    The window always opens at the start of the log.  With ``drop_partial``
    the cases still running at the cutoff are left out entirely.
    """
    cutoff = timeframe_cutoff(events, percent)
    starts = case_starts(events)
    keep = {cid for cid, t in starts.items() if t <= cutoff}
    if drop_partial:
        running = {ev.case_id for ev in events if ev.timestamp > cutoff}
        keep -= running
    return [ev for ev in events if ev.case_id in keep and ev.timestamp <= cutoff]


@dataclass
class ScenarioRow:
    scenario: str
    gap_pct: int
    n: int
    values: Dict[str, object] = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"scenario": self.scenario, "gap_pct": self.gap_pct, "n": self.n}
        out.update(self.values)
        return out


def _anonymize(log_in: SimpleEventLog, spec: ScenarioSpec, n: int, prefix: str, what: str) -> AnonymizedRelease:
    try:
        return suppress_anonymize(log_in, spec.k, n, spec.bk_max_len, seed=spec.seed, id_prefix=prefix)
    except Infeasible as exc:
        raise Infeasible(exc.bk, exc.best_k, f"{what}, n={n}") from None


def run_scenario(spec: ScenarioSpec, events: Sequence[RawEvent]) -> List[ScenarioRow]:
    """Indicator table ordered by gap then ``n``."""
    percents = sorted({p for _, a, b in spec.pairs() for p in (a, b)})
    logs = {
        p: to_simple_log(timeframe_filter(events, p, spec.drop_partial), spec.sensitive_attr) for p in percents
    }
    releases: Dict[Tuple[int, int, str], AnonymizedRelease] = {}

    def release(pct: int, n: int, role: str) -> AnonymizedRelease:
        # dummy-id prefixes keep the two releases of a pair disjoint
        key = (pct, n, role)
        if key not in releases:
            releases[key] = _anonymize(logs[pct], spec, n, f"{role}{pct}-", f"{pct}% release")
        return releases[key]

    tasks = [(gap, a, b, n) for gap, a, b in spec.pairs() for n in spec.n_values]
    # anonymization runs up front and serially; only attack sweeps fan out
    prepared = [(gap, n, release(a, n, "a"), release(b, n, "b")) for gap, a, b, n in tasks]

    def evaluate(item):
        gap, n, r1, r2 = item
        ind = fa_ca_ba(ReleasePair(r1.log, r2.log, n), max_len=spec.bk_max_len)
        values = ind.to_dict()
        values = {f: values[f] for f in INDICATOR_FIELDS} | {
            f"argmin_bk_{f}": values[f"argmin_bk_{f}"] for f in ("fa", "ca", "ba")
        }
        return ScenarioRow(spec.label, gap, n, values)

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        rows = list(pool.map(evaluate, prepared))
    rows.sort(key=lambda r: (r.gap_pct, r.n))
    return rows


def _csv_cell(value) -> str:
    if isinstance(value, list):
        return ">".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(rows: Sequence[ScenarioRow], out: Union[str, PathLike]) -> None:
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            d = r.as_dict()
            w.writerow([_csv_cell(d[c]) for c in CSV_COLUMNS])


def write_rows_json(rows: Sequence[ScenarioRow], out: Union[str, PathLike]) -> None:
    with open(out, "w", encoding="utf-8") as fh:
        json.dump([{c: r.as_dict()[c] for c in CSV_COLUMNS} for r in rows], fh, indent=2)
        fh.write("\n")


def write_outputs(rows: Sequence[ScenarioRow], out_dir: Union[str, PathLike], stem: Optional[str] = None) -> Tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    stem = stem or f"scenario_{rows[0].scenario if rows else 'empty'}"
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}.json")
    write_rows_csv(rows, csv_path)
    write_rows_json(rows, json_path)
    return csv_path, json_path
