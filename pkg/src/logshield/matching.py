"""Background-knowledge candidates, matching sets and sensitive-value groups.

An anonymized instance matches background knowledge ``bk`` under budget ``n``
when at most ``n`` re-inserted activities can make ``bk`` a subsequence of
its trace, i.e. ``n >= |bk| - LCS(bk, trace)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CandidateExplosion
from .model import SimpleEventLog, SimpleProcessInstance, Trace
from .seqalg import lcs_len, lcs_lengths

log = logging.getLogger(__name__)

BackgroundKnowledge = Tuple[str, ...]

DEFAULT_CANDIDATE_CAP = 10_000_000


@dataclass(frozen=True)
class MatchingSet:
    bk: BackgroundKnowledge
    members: Tuple[SimpleProcessInstance, ...]
    n: int

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def case_ids(self) -> frozenset:
        return frozenset(p.case_id for p in self.members)

    def without(self, case_ids: Iterable[str]) -> "MatchingSet":
        drop = set(case_ids)
        return MatchingSet(self.bk, tuple(p for p in self.members if p.case_id not in drop), self.n)


@dataclass(frozen=True)
class Group:
    sensitive: str
    members: Tuple[SimpleProcessInstance, ...]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def matches(trace: Sequence[str], bk: Sequence[str], n: int) -> bool:
    return n >= len(bk) - lcs_len(bk, trace)


def matching_set(log: SimpleEventLog, bk: Sequence[str], n: int) -> MatchingSet:
    bk = tuple(bk)
    verdict: Dict[Trace, bool] = {}
    members = []
    for p in log:
        if p.trace not in verdict:
            verdict[p.trace] = matches(p.trace, bk, n)
        if verdict[p.trace]:
            members.append(p)
    return MatchingSet(bk, tuple(members), n)


def groups_of(ms: Union[MatchingSet, Iterable[SimpleProcessInstance]]) -> List[Group]:
    """Partition by sensitive value, ordered by value."""
    buckets: Dict[str, List[SimpleProcessInstance]] = {}
    for p in ms:
        buckets.setdefault(p.sensitive, []).append(p)
    return [Group(s, tuple(buckets[s])) for s in sorted(buckets)]


def enumerate_bk_candidates(
    source: Union[SimpleEventLog, Iterable[Sequence[str]]],
    max_len: int,
    cap: Optional[int] = DEFAULT_CANDIDATE_CAP,
    strict: bool = False,
) -> Iterator[BackgroundKnowledge]:
    """Distinct subsequences of length ``1..max_len`` occurring in some trace.

    Emitted shortest first, then lexicographically.  Beyond ``cap`` the
    stream is truncated with a warning, or :class:`CandidateExplosion` is
    raised when ``strict``.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    traces = {p.trace for p in source} if isinstance(source, SimpleEventLog) else {tuple(t) for t in source}
    seen = set()
    for t in traces:
        for sub in _distinct_subsequences(t, max_len):
            seen.add(sub)
        if cap is not None and len(seen) > cap:
            if strict:
                raise CandidateExplosion(f"more than {cap} background-knowledge candidates")
            break
    ordered = sorted(seen, key=lambda s: (len(s), s))
    if cap is not None and len(ordered) > cap:
        if strict:
            raise CandidateExplosion(f"more than {cap} background-knowledge candidates")
        log.warning("candidate stream truncated to %d of %d sequences", cap, len(ordered))
        ordered = ordered[:cap]
    return iter(ordered)


def _distinct_subsequences(trace: Trace, max_len: int) -> Iterator[BackgroundKnowledge]:
    # Leftmost embeddings via a next-occurrence table visit each distinct
    # subsequence exactly once.
    symbols = sorted(set(trace))
    nxt: List[Dict[str, int]] = [dict() for _ in range(len(trace) + 1)]
    for i in range(len(trace) - 1, -1, -1):
        nxt[i] = dict(nxt[i + 1])
        nxt[i][trace[i]] = i
    stack = [((), 0)]
    while stack:
        prefix, pos = stack.pop()
        for c in symbols:
            j = nxt[pos].get(c)
            if j is None:
                continue
            sub = prefix + (c,)
            yield sub
            if len(sub) < max_len:
                stack.append((sub, j + 1))


def all_sequences(alphabet: Iterable[str], max_len: int) -> Iterator[BackgroundKnowledge]:
    """Every sequence over ``alphabet`` of length ``1..max_len``, shortest first."""
    letters = sorted(set(alphabet))
    for length in range(1, max_len + 1):
        yield from product(letters, repeat=length)


# ---------------------------------------------------------------------------
# bulk evaluation over many candidates

class Codebook:
    """Stable activity -> integer code mapping shared by the logs of one analysis."""

    def __init__(self, activities: Iterable[str] = ()):
        self.codes: Dict[str, int] = {}
        for a in sorted(set(activities)):
            self.codes[a] = len(self.codes)

    def encode_trace(self, trace: Sequence[str]) -> np.ndarray:
        return np.array([self.codes[a] for a in trace], dtype=np.int32)

    def encode_candidates(self, candidates: Sequence[Sequence[str]]) -> Tuple[np.ndarray, np.ndarray]:
        """Padded code matrix and length vector; unknown activities get ``-2``."""
        width = max((len(c) for c in candidates), default=1)
        mat = np.full((len(candidates), max(width, 1)), -1, dtype=np.int32)
        for r, cand in enumerate(candidates):
            for i, a in enumerate(cand):
                mat[r, i] = self.codes.get(a, -2)
        lens = np.array([len(c) for c in candidates], dtype=np.int32)
        return mat, lens


class ReleaseIndex:
    """One log compressed to classes of identical ``(trace, sensitive)`` instances."""

    def __init__(self, log: SimpleEventLog, codebook: Codebook):
        self.log = log
        self.codebook = codebook
        variant_of: Dict[Trace, int] = {}
        class_of: Dict[Tuple[Trace, str], int] = {}
        members: List[List[str]] = []
        class_variant: List[int] = []
        class_sensitive: List[str] = []
        for p in log:
            v = variant_of.setdefault(p.trace, len(variant_of))
            key = (p.trace, p.sensitive)
            if key not in class_of:
                class_of[key] = len(class_of)
                members.append([])
                class_variant.append(v)
                class_sensitive.append(p.sensitive)
            members[class_of[key]].append(p.case_id)
        self.variants: List[Trace] = list(variant_of)
        self.class_keys: List[Tuple[Trace, str]] = list(class_of)
        self.class_members: List[Tuple[str, ...]] = [tuple(m) for m in members]
        self.class_variant = np.array(class_variant, dtype=np.int64)
        self.class_sensitive = np.array(class_sensitive, dtype=object)
        self.counts = np.array([len(m) for m in members], dtype=np.int64)
        self.sensitive_values = sorted(set(class_sensitive))

    def lcs_table(self, cand_matrix: np.ndarray) -> np.ndarray:
        """``(N, V)`` LCS lengths of every candidate against every variant."""
        out = np.zeros((cand_matrix.shape[0], len(self.variants)), dtype=np.int16)
        for v, trace in enumerate(self.variants):
            out[:, v] = lcs_lengths(cand_matrix, self.codebook.encode_trace(trace))
        return out

    def class_masks(self, cand_matrix: np.ndarray, cand_lens: np.ndarray, n: int) -> np.ndarray:
        """``(N, C)`` boolean: class belongs to the candidate's matching set."""
        lcs = self.lcs_table(cand_matrix)
        variant_ok = lcs >= (cand_lens[:, None] - n)
        return variant_ok[:, self.class_variant]
