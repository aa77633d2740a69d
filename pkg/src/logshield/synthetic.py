"""Synthetic hospital-style event logs for experiments and tests."""

from __future__ import annotations

import random
from datetime import datetime, timedelta
from typing import List, Sequence, Tuple

from .model import RawEvent

# (path, weight); short activity codes keep traces readable in reports
HOSPITAL_PATHS: Tuple[Tuple[Tuple[str, ...], int], ...] = (
    (("reg", "triage", "lab", "admit", "release"), 30),
    (("reg", "triage", "lab", "xray", "admit", "release"), 20),
    (("reg", "triage", "xray", "admit", "release"), 15),
    (("reg", "triage", "lab", "admit", "icu", "release"), 15),
    (("reg", "triage", "release"), 12),
    (("reg", "triage", "lab", "xray", "admit", "icu", "release"), 8),
)

DISEASES: Tuple[Tuple[str, int], ...] = (("Corona", 35), ("Flu", 30), ("Fever", 20), ("HIV", 15))

# optional detours: (activity, inserted after, probability)
DETOURS: Tuple[Tuple[str, str, float], ...] = (
    ("consult", "triage", 0.2),
    ("ecg", "admit", 0.1),
)

START = datetime(2023, 1, 2, 8, 0, 0)


def hospital_log(
    n_cases: int = 200,
    seed: int = 0,
    days: int = 200,
    sensitive_attr: str = "disease",
    paths: Sequence[Tuple[Tuple[str, ...], int]] = HOSPITAL_PATHS,
    diseases: Sequence[Tuple[str, int]] = DISEASES,
    detours: Sequence[Tuple[str, str, float]] = DETOURS,
) -> List[RawEvent]:
    """Cases start at distinct times spread over ``days``; steps follow every 6 to 60 hours."""
    rng = random.Random(seed)
    span = days * 24 * 3600
    offsets = sorted(rng.sample(range(span), n_cases))
    traces, tw = zip(*paths)
    names, dw = zip(*diseases)
    events = []
    for i, off in enumerate(offsets):
        case_id = str(i + 1)
        trace = list(rng.choices(traces, weights=tw)[0])
        for act, after, prob in detours:
            if after in trace and rng.random() < prob:
                trace.insert(trace.index(after) + 1, act)
        disease = rng.choices(names, weights=dw)[0]
        t = START + timedelta(seconds=off)
        for a in trace:
            events.append(RawEvent(case_id, a, t, None, {sensitive_attr: disease}))
            t += timedelta(hours=rng.randint(6, 60))
    events.sort(key=lambda e: (e.timestamp, int(e.case_id)))
    return events


def random_release_pair(
    seed: int,
    cases: int = 6,
    alphabet: str = "abcd",
    max_len: int = 4,
    sensitive: Sequence[str] = ("x", "y"),
    n: int = 1,
):
    """A small earlier/later release pair of one incrementally collected log.

    Every case has a full trace; the earlier release holds a prefix of the
    cases started by then, and each release independently drops up to ``n``
    events per trace.  Dummy ids are ``a<i>`` and ``b<i>``.
    """
    from .attacks import ReleasePair
    from .model import SimpleEventLog, SimpleProcessInstance

    rng = random.Random(seed)
    full = []
    for _ in range(cases):
        trace = [rng.choice(alphabet) for _ in range(rng.randint(1, max_len))]
        full.append((trace, rng.choice(list(sensitive))))
    started = rng.randint(1, cases)

    def suppress(trace):
        trace = list(trace)
        for _ in range(rng.randint(0, n)):
            if len(trace) > 1:
                del trace[rng.randrange(len(trace))]
        return tuple(trace)

    earlier = []
    for i, (trace, s) in enumerate(full[:started]):
        prefix = trace[: rng.randint(1, len(trace))]
        earlier.append(SimpleProcessInstance(f"a{i + 1}", suppress(prefix), s))
    later = [SimpleProcessInstance(f"b{i + 1}", suppress(t), s) for i, (t, s) in enumerate(full)]
    rng.shuffle(later)
    return ReleasePair(SimpleEventLog(earlier), SimpleEventLog(later), n)
