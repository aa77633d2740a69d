import csv
import json
from datetime import datetime, timedelta

import pytest

from logshield.model import RawEvent, to_simple_log
from logshield.scenario import (
    CSV_COLUMNS,
    ScenarioSpec,
    run_scenario,
    thread_count,
    timeframe_cutoff,
    timeframe_filter,
    write_outputs,
)
from logshield.synthetic import hospital_log, random_release_pair

T0 = datetime(2024, 1, 1)


def _events():
    # four cases starting on days 0..3, each with two steps one day apart
    out = []
    for c in range(4):
        for step, act in enumerate("ab"):
            out.append(RawEvent(str(c), act, T0 + timedelta(days=c + step), None, {"d": "x"}))
    return out


def test_cutoff_is_start_of_the_needed_case():
    ev = _events()
    assert timeframe_cutoff(ev, 50) == T0 + timedelta(days=1)
    assert timeframe_cutoff(ev, 51) == T0 + timedelta(days=2)
    assert timeframe_cutoff(ev, 100) == T0 + timedelta(days=4)
    with pytest.raises(ValueError):
        timeframe_cutoff(ev, 0)


def test_filter_truncates_running_cases():
    log = to_simple_log(timeframe_filter(_events(), 50), "d")
    assert [(p.case_id, "".join(p.trace)) for p in log] == [("0", "ab"), ("1", "a")]
    log = to_simple_log(timeframe_filter(_events(), 50, drop_partial=True), "d")
    assert log.case_ids == ("0",)
    assert len(timeframe_filter(_events(), 100)) == 8


def test_spec_validation_and_pairs():
    assert ScenarioSpec("I").pairs() == [(1, 99, 100), (5, 95, 100), (10, 90, 100), (25, 75, 100)]
    assert ScenarioSpec("II").pairs() == [(1, 50, 51), (5, 50, 55), (10, 50, 60), (25, 50, 75)]
    assert ScenarioSpec("grow_second").label == "II"
    for bad in (dict(mode="III"), dict(mode="II", percentages=(50,)), dict(percentages=(101,)),
                dict(n_values=()), dict(n_values=(6,)), dict(k=1)):
        with pytest.raises(ValueError):
            ScenarioSpec(**bad)


def test_thread_count(monkeypatch):
    monkeypatch.setenv("LOGSHIELD_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.delenv("LOGSHIELD_THREADS")
    assert thread_count() >= 1


def test_small_run_and_outputs(tmp_path):
    events = hospital_log(60, seed=1)
    spec = ScenarioSpec("I", (90, 75), k=3, n_values=(1, 2), bk_max_len=3)
    rows = run_scenario(spec, events)
    assert [(r.gap_pct, r.n) for r in rows] == [(10, 1), (10, 2), (25, 1), (25, 2)]
    for r in rows:
        v = r.values
        assert v["ka1"] >= 3 and v["ka2"] >= 3
        assert v["fa"] <= v["ka1"] and v["ca"] <= v["ka2"] and v["ba"] <= v["ka2"]
    csv_path, json_path = write_outputs(rows, tmp_path)
    assert csv_path.endswith("scenario_I.csv") and json_path.endswith("scenario_I.json")
    with open(csv_path, newline="") as fh:
        table = list(csv.reader(fh))
    assert tuple(table[0]) == CSV_COLUMNS and len(table) == 5
    data = json.loads(open(json_path).read())
    assert len(data) == 4


def test_synthetic_generators_are_seeded():
    assert hospital_log(30, seed=4) == hospital_log(30, seed=4)
    assert hospital_log(30, seed=4) != hospital_log(30, seed=5)
    log = to_simple_log(hospital_log(30, seed=4), "disease")
    assert len(log) == 30
    a, b = random_release_pair(7), random_release_pair(7)
    assert a.earlier == b.earlier and a.later == b.later
