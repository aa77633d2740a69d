"""Event data model: raw events, simple process instances and simple event logs.

A raw event log is a flat list of :class:`RawEvent` rows (one per executed
activity).  Attack analysis works on the projected view, a
:class:`SimpleEventLog`, where each case is reduced to its activity sequence
and a single sensitive value.
"""

from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from os import PathLike
from typing import IO, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import (
    BadTimestamp,
    DuplicateCaseId,
    EmptyInput,
    InconsistentSensitive,
    MalformedRow,
    MissingColumn,
    MissingSensitive,
)

Activity = str
Trace = Tuple[Activity, ...]

FORBIDDEN_LABEL_CHARS = frozenset(",\r\n")

# Accepted header spellings, first match wins.
CASE_COLUMNS = ("case", "case_id", "case:concept:name")
ACTIVITY_COLUMNS = ("activity", "concept:name")
TIMESTAMP_COLUMNS = ("timestamp", "time:timestamp")
RESOURCE_COLUMNS = ("resource", "org:resource")

_SYNTHETIC_EPOCH = datetime(2000, 1, 1)


def is_subsequence(a: Sequence, b: Sequence) -> bool:
    """True iff ``a`` embeds order-preservingly into ``b``."""
    it = iter(b)
    return all(any(x == y for y in it) for x in a)


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 instant; aware values are normalised to naive UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts


def _check_label(label: str, what: str) -> None:
    if not label:
        raise ValueError(f"{what} must be non-empty")
    if FORBIDDEN_LABEL_CHARS.intersection(label):
        raise ValueError(f"{what} {label!r} contains a field separator")


@dataclass(frozen=True)
class RawEvent:
    case_id: str
    activity: Activity
    timestamp: datetime
    resource: Optional[str] = None
    attributes: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class SimpleProcessInstance:
    """A case projected onto ``(case id, activity sequence, sensitive value)``."""

    case_id: str
    trace: Trace
    sensitive: str

    def __post_init__(self):
        if not isinstance(self.trace, tuple):
            object.__setattr__(self, "trace", tuple(self.trace))
        if len(self.trace) < 1:
            raise ValueError(f"case {self.case_id!r}: trace must contain at least one activity")


class SimpleEventLog:
    """An immutable set of simple process instances with unique case ids.

    Iteration order is the construction order; equality ignores order.
    """

    __slots__ = ("_instances", "_by_case", "sensitive_attr")

    def __init__(self, instances: Iterable[SimpleProcessInstance], sensitive_attr: str = "sensitive"):
        items = tuple(instances)
        by_case: Dict[str, SimpleProcessInstance] = {}
        for p in items:
            if p.case_id in by_case:
                raise DuplicateCaseId(p.case_id)
            by_case[p.case_id] = p
        self._instances = items
        self._by_case = by_case
        self.sensitive_attr = sensitive_attr

    @classmethod
    def from_rows(cls, rows: Iterable[Tuple[str, Sequence[str], str]], sensitive_attr: str = "sensitive"):
        return cls((SimpleProcessInstance(str(c), tuple(t), s) for c, t, s in rows), sensitive_attr)

    def __iter__(self) -> Iterator[SimpleProcessInstance]:
        return iter(self._instances)

    def __len__(self) -> int:
        return len(self._instances)

    def __contains__(self, item) -> bool:
        return isinstance(item, SimpleProcessInstance) and self._by_case.get(item.case_id) == item

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimpleEventLog):
            return NotImplemented
        return set(self._instances) == set(other._instances)

    def __hash__(self) -> int:
        return hash(frozenset(self._instances))

    def __repr__(self) -> str:
        return f"SimpleEventLog({len(self)} cases)"

    @property
    def instances(self) -> Tuple[SimpleProcessInstance, ...]:
        return self._instances

    @property
    def case_ids(self) -> Tuple[str, ...]:
        return tuple(p.case_id for p in self._instances)

    @property
    def alphabet(self) -> frozenset:
        return frozenset(a for p in self._instances for a in p.trace)

    def case(self, case_id: str) -> SimpleProcessInstance:
        return self._by_case[case_id]

    def variants(self) -> Dict[Trace, int]:
        counts: Dict[Trace, int] = {}
        for p in self._instances:
            counts[p.trace] = counts.get(p.trace, 0) + 1
        return counts


@dataclass(frozen=True)
class ReleaseSeries:
    """Ordered releases ``(label, log)`` of one continuously published log."""

    releases: Tuple[Tuple[str, SimpleEventLog], ...]
    anonymized: bool = False

    def prefix_violations(self) -> List[str]:
        """Correspondence-knowledge violations between consecutive releases.

        Only meaningful for an un-anonymized series: every case of an earlier
        release must reappear later with an extended trace.  Anonymized series
        carry independent dummy ids, so nothing is checked there.
        """
        if self.anonymized:
            return []
        problems = []
        for (l1, earlier), (l2, later) in zip(self.releases, self.releases[1:]):
            for p in earlier:
                try:
                    q = later.case(p.case_id)
                except KeyError:
                    problems.append(f"{l1}->{l2}: case {p.case_id} disappeared")
                    continue
                if q.trace[: len(p.trace)] != p.trace:
                    problems.append(f"{l1}->{l2}: case {p.case_id} trace is not extended")
                if q.sensitive != p.sensitive:
                    problems.append(f"{l1}->{l2}: case {p.case_id} sensitive value changed")
        return problems


# ---------------------------------------------------------------------------
# ingestion

Source = Union[str, PathLike, bytes, IO[bytes], IO[str]]


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8-sig")
    if isinstance(source, (str, PathLike)):
        with open(source, "rb") as fh:
            return fh.read().decode("utf-8-sig")
    data = source.read()
    return data.decode("utf-8-sig") if isinstance(data, bytes) else data


def _pick(header: Sequence[str], choices: Sequence[str]) -> Optional[str]:
    for c in choices:
        if c in header:
            return c
    return None


def _parse_csv(text: str) -> List[RawEvent]:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptyInput("input has no header row") from None
    cols = {}
    for name, choices in (("case", CASE_COLUMNS), ("activity", ACTIVITY_COLUMNS), ("timestamp", TIMESTAMP_COLUMNS)):
        col = _pick(header, choices)
        if col is None:
            raise MissingColumn(name)
        cols[name] = header.index(col)
    res_col = _pick(header, RESOURCE_COLUMNS)
    res_idx = header.index(res_col) if res_col else None
    reserved = set(cols.values()) | ({res_idx} if res_idx is not None else set())

    events = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
        case_id = row[cols["case"]].strip()
        activity = row[cols["activity"]].strip()
        if not case_id:
            raise MalformedRow(line, "empty case id")
        if not activity:
            raise MalformedRow(line, "empty activity")
        raw_ts = row[cols["timestamp"]]
        try:
            ts = parse_timestamp(raw_ts)
        except ValueError:
            raise BadTimestamp(line, raw_ts) from None
        attrs = {header[i]: row[i] for i in range(len(header)) if i not in reserved}
        resource = row[res_idx] if res_idx is not None and row[res_idx] != "" else None
        events.append(RawEvent(case_id, activity, ts, resource, attrs))
    return events


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _xes_attrs(elem) -> Dict[str, str]:
    return {
        child.get("key"): child.get("value")
        for child in elem
        if _local(child.tag) not in ("event", "trace") and child.get("key") is not None
    }


def _parse_xes_lite(text: str) -> List[RawEvent]:
    if not text.strip():
        raise EmptyInput("input is empty")
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line = exc.position[0] if exc.position else 0
        raise MalformedRow(line, f"invalid XML: {exc}") from None
    events = []
    for t_idx, trace in enumerate(e for e in root.iter() if _local(e.tag) == "trace"):
        trace_attrs = _xes_attrs(trace)
        case_id = trace_attrs.pop("concept:name", None)
        if not case_id:
            raise MalformedRow(t_idx + 1, "trace without concept:name")
        for event in trace:
            if _local(event.tag) != "event":
                continue
            attrs = dict(trace_attrs)
            attrs.update(_xes_attrs(event))
            activity = attrs.pop("concept:name", None)
            raw_ts = attrs.pop("time:timestamp", None)
            if not activity:
                raise MalformedRow(t_idx + 1, f"event of case {case_id!r} has no concept:name")
            if raw_ts is None:
                raise MissingColumn("time:timestamp")
            try:
                ts = parse_timestamp(raw_ts)
            except ValueError:
                raise BadTimestamp(t_idx + 1, raw_ts) from None
            resource = attrs.pop("org:resource", None)
            events.append(RawEvent(case_id, activity, ts, resource, attrs))
    return events


def parse_raw_log(source: Source, format: str = "csv") -> List[RawEvent]:
    """Read events in file order from a CSV or minimal-XES source.

    For XES the line number reported in errors is the 1-based trace index.
    """
    text = _read_text(source)
    fmt = format.lower().replace("-", "_")
    if fmt == "csv":
        if not text.strip():
            raise EmptyInput("input is empty")
        return _parse_csv(text)
    if fmt in ("xes_lite", "xes"):
        return _parse_xes_lite(text)
    raise ValueError(f"unknown format {format!r}")


def to_simple_log(events: Sequence[RawEvent], sensitive_attr: str) -> SimpleEventLog:
    """Project events onto one simple process instance per case.

    Traces are ordered by timestamp; equal timestamps keep input order.
    Cases are emitted in order of first appearance.
    """
    per_case: Dict[str, List[Tuple[datetime, int, RawEvent]]] = {}
    for pos, ev in enumerate(events):
        per_case.setdefault(ev.case_id, []).append((ev.timestamp, pos, ev))
    instances = []
    for case_id, rows in per_case.items():
        rows.sort(key=lambda r: (r[0], r[1]))
        values = set()
        for _, _, ev in rows:
            if sensitive_attr not in ev.attributes or ev.attributes[sensitive_attr] in ("", None):
                raise MissingSensitive(case_id, sensitive_attr)
            values.add(ev.attributes[sensitive_attr])
        if len(values) > 1:
            raise InconsistentSensitive(case_id, values)
        trace = tuple(ev.activity for _, _, ev in rows)
        instances.append(SimpleProcessInstance(case_id, trace, values.pop()))
    return SimpleEventLog(instances, sensitive_attr)


def simple_log_to_events(log: SimpleEventLog) -> List[RawEvent]:
    """Expand a simple log into events with synthetic, order-preserving timestamps."""
    events = []
    for p in log:
        for i, a in enumerate(p.trace):
            events.append(RawEvent(p.case_id, a, _SYNTHETIC_EPOCH + timedelta(seconds=i), None,
                                   {log.sensitive_attr: p.sensitive}))
    return events


def write_events_csv(events: Sequence[RawEvent], out: Union[str, PathLike, IO[str]], sensitive_attr: str) -> None:
    """Write events using the ``case,activity,timestamp,<sensitive>`` schema."""
    def _emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case", "activity", "timestamp", sensitive_attr])
        for ev in events:
            w.writerow([ev.case_id, ev.activity, ev.timestamp.isoformat(timespec="seconds"),
                        ev.attributes.get(sensitive_attr, "")])

    if isinstance(out, (str, PathLike)):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            _emit(fh)
    else:
        _emit(out)


def write_simple_log(log: SimpleEventLog, out: Union[str, PathLike, IO[str]]) -> None:
    for p in log:
        _check_label(p.case_id, "case id")
        for a in p.trace:
            _check_label(a, "activity")
    write_events_csv(simple_log_to_events(log), out, log.sensitive_attr)


def read_simple_log(source: Source, sensitive_attr: Optional[str] = None) -> SimpleEventLog:
    """Read a simple log written by :func:`write_simple_log`.

    Without ``sensitive_attr`` the fourth header column is used.
    """
    text = _read_text(source)
    if sensitive_attr is None:
        header = next(csv.reader(io.StringIO(text)), None)
        if not header:
            raise EmptyInput("input has no header row")
        if len(header) < 4:
            raise MissingColumn("<sensitive>")
        sensitive_attr = header[3].strip()
    return to_simple_log(parse_raw_log(text.encode("utf-8"), "csv"), sensitive_attr)
