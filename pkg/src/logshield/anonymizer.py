"""Suppression-based anonymization, its contract, and a validator for it.

A release ``L'`` anonymizes ``L`` under parameter ``n`` when a bijection
pairs every original instance with an anonymized one whose trace is a
subsequence missing at most ``n`` events and whose sensitive value is the
same.
"""

from __future__ import annotations

import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from os import PathLike
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import Infeasible, SizeMismatch
from .matching import Codebook, enumerate_bk_candidates
from .model import SimpleEventLog, SimpleProcessInstance, is_subsequence, read_simple_log, write_simple_log
from .seqalg import lcs_lengths

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnonymizedRelease:
    log: SimpleEventLog
    n: int
    k: Optional[int] = None
    bk_max_len: Optional[int] = None
    # original case id -> dummy id; for oracle tests only, never handed to attacks
    provenance: Optional[Dict[str, str]] = field(default=None, compare=False, repr=False)

    def sidecar(self) -> dict:
        return {"n": self.n, "k": self.k, "bk_max_len": self.bk_max_len}


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    bijection: Dict[str, str]
    violations: Tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def admissible(orig: SimpleProcessInstance, anon: SimpleProcessInstance, n: int) -> bool:
    return (
        orig.sensitive == anon.sensitive
        and len(orig.trace) - n <= len(anon.trace)
        and is_subsequence(anon.trace, orig.trace)
    )


def validate_anonymization(original: SimpleEventLog, anonymized: SimpleEventLog, n: int) -> ValidationResult:
    """Search a witness bijection by maximum bipartite matching."""
    if len(original) != len(anonymized):
        raise SizeMismatch(f"original has {len(original)} cases, anonymized has {len(anonymized)}")
    left, right = original.instances, anonymized.instances
    memo: Dict[tuple, bool] = {}
    rows, cols = [], []
    for i, p in enumerate(left):
        for j, q in enumerate(right):
            key = (p.trace, p.sensitive, q.trace, q.sensitive)
            if key not in memo:
                memo[key] = admissible(p, q, n)
            if memo[key]:
                rows.append(i)
                cols.append(j)
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(len(left), len(right)))
    match = maximum_bipartite_matching(graph, perm_type="column")
    bijection = {left[i].case_id: right[j].case_id for i, j in enumerate(match) if j >= 0}
    violations = tuple(
        f"original case {left[i].case_id} has no admissible partner" for i, j in enumerate(match) if j < 0
    )
    return ValidationResult(not violations, bijection, violations)


class _CandidateSizes:
    """Occurrence counts and matching-set sizes of a fixed candidate family over a changing log."""

    def __init__(self, candidates: List[Tuple[str, ...]], codebook: Codebook, n: int):
        self.candidates = candidates
        self.codebook = codebook
        self.n = n
        self.mat, self.lens = codebook.encode_candidates(candidates)
        self.columns: Dict[tuple, Tuple[np.ndarray, np.ndarray]] = {}
        self.occurs = np.zeros(len(candidates), dtype=np.int64)
        self.sizes = np.zeros(len(candidates), dtype=np.int64)

    def masks(self, trace: tuple) -> Tuple[np.ndarray, np.ndarray]:
        col = self.columns.get(trace)
        if col is None:
            lcs = lcs_lengths(self.mat, self.codebook.encode_trace(trace))
            col = (lcs == self.lens, lcs >= self.lens - self.n)
            self.columns[trace] = col
        return col

    def add(self, trace: tuple, sign: int = 1) -> None:
        occ, match = self.masks(trace)
        self.occurs += sign * occ
        self.sizes += sign * match


def _deletion_options(state: "_CandidateSizes", trace: tuple, r: int, k: int, freq: Counter):
    """Score every single-event deletion from ``trace``; smaller keys are better.

    Deletions that stop candidate ``r`` from occurring come first, then the
    number of undersized candidates left afterwards, the activity frequency
    and the latest position.
    """
    occ_old, match_old = state.masks(trace)
    base_occ = state.occurs - occ_old
    base_size = state.sizes - match_old
    for pos in range(len(trace)):
        occ_new, match_new = state.masks(trace[:pos] + trace[pos + 1:])
        sizes = base_size + match_new
        bad = int(np.count_nonzero((base_occ + occ_new > 0) & (sizes < k)))
        yield (bool(occ_new[r]), bad, freq[trace[pos]], -pos)


def suppress_anonymize(
    log_in: SimpleEventLog,
    k: int,
    n: int,
    bk_max_len: int,
    seed: int = 0,
    id_prefix: str = "",
) -> AnonymizedRelease:
    """Greedy suppression until every candidate still occurring in the output has a matching set of at least ``k``.

    Candidates are the subsequences of length up to ``bk_max_len``; matching
    uses parameter ``n``.  A candidate that occurs in some trace keeps it in
    its matching set whatever ``n`` events are removed, so suppression
    cannot grow or empty such a set.  Instead the undersized candidate with
    the smallest matching set is made to stop occurring: one trace containing
    it loses an event, preferring deletions that end the occurrence, then
    those leaving the fewest undersized candidates overall, then the rarest
    activity and the latest position.
    Each trace loses at most ``n`` events and never becomes empty.  Dummy
    ids are assigned in an order drawn from ``seed``; the traces produced do
    not depend on it.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < 1:
        raise ValueError("n must be >= 1")
    if k > len(log_in):
        raise Infeasible((), len(log_in), f"log has only {len(log_in)} cases")

    candidates = list(enumerate_bk_candidates(log_in, bk_max_len))
    state = _CandidateSizes(candidates, Codebook(log_in.alphabet), n)
    traces: Dict[str, tuple] = {p.case_id: p.trace for p in log_in}
    budget: Dict[str, int] = {p.case_id: n for p in log_in}
    freq: Counter = Counter(a for t in traces.values() for a in t)
    order = list(traces)
    for t in traces.values():
        state.add(t)

    suppressed = 0
    while True:
        sizes = state.sizes
        bad = np.flatnonzero((state.occurs > 0) & (sizes < k))
        if not len(bad):
            break
        # smallest set first, then shortest and lexicographically first candidate
        r = int(min(bad, key=lambda i: (sizes[i], len(candidates[i]), candidates[i])))
        bk = candidates[r]
        choice = None
        for cid in order:
            t = traces[cid]
            if budget[cid] == 0 or len(t) < 2 or not state.masks(t)[0][r]:
                continue
            move = min(_deletion_options(state, t, r, k, freq))
            if choice is None or move < choice[0]:
                choice = (move, cid)
        if choice is None:
            raise Infeasible(bk, int(sizes[r]))
        (_, _, _, negpos), cid = choice
        old = traces[cid]
        pos = -negpos
        new = old[:pos] + old[pos + 1:]
        state.add(old, -1)
        state.add(new, +1)
        freq[old[pos]] -= 1
        traces[cid] = new
        budget[cid] -= 1
        suppressed += 1

    log.info("suppressed %d events over %d cases", suppressed, len(traces))
    rng = random.Random(seed)
    dummy = list(range(1, len(order) + 1))
    rng.shuffle(dummy)
    provenance = {cid: f"{id_prefix}{d}" for cid, d in zip(order, dummy)}
    sens = {p.case_id: p.sensitive for p in log_in}
    ranked = sorted(zip(dummy, order))
    instances = [SimpleProcessInstance(provenance[cid], traces[cid], sens[cid]) for _, cid in ranked]
    return AnonymizedRelease(SimpleEventLog(instances, log_in.sensitive_attr), n, k, bk_max_len, provenance)


# ---------------------------------------------------------------------------
# files

def sidecar_path(path: Union[str, PathLike]) -> str:
    return f"{path}.json"


def write_release(release: AnonymizedRelease, path: Union[str, PathLike]) -> None:
    write_simple_log(release.log, path)
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(release.sidecar(), fh, sort_keys=True)
        fh.write("\n")


def read_release(path: Union[str, PathLike], n: Optional[int] = None) -> AnonymizedRelease:
    """Read a release; ``n`` overrides (or replaces a missing) sidecar."""
    meta = {}
    try:
        with open(sidecar_path(path), encoding="utf-8") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        if n is None:
            raise
    log_r = read_simple_log(path)
    return AnonymizedRelease(
        log_r,
        n if n is not None else int(meta["n"]),
        meta.get("k"),
        meta.get("bk_max_len"),
    )
