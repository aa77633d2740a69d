"""Two-release correspondence attacks and the anonymity indicators built on them.

Given an earlier release ``L1'`` and a later release ``L2'`` of the same
continuously collected log, an adversary holding background knowledge ``bk``
can shrink the matching sets of either release:

* F-attack (victim started before ``t1``, target ``L1'``): members of a
  ``L1'`` group that outnumber the comparable ``L2'`` group have no matching
  buddy and are excluded.
* C-attack (victim started before ``t1``, target ``L2'``): the dual, members
  of a ``L2'`` group that outnumber the comparable ``L1'`` group.
* B-attack (victim started in ``(t1, t2]``, target ``L2'``): members forced to
  be the continuation of some ``L1'`` case are excluded.

The functions operating on :class:`MatchingSet` objects work instance by
instance and suit small logs.  :class:`PairAnalyzer` computes the same
quantities for thousands of candidates at once on instance classes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import NoCandidates
from .matching import (
    BackgroundKnowledge,
    Codebook,
    Group,
    MatchingSet,
    ReleaseIndex,
    enumerate_bk_candidates,
    groups_of,
    matching_set,
)
from .model import SimpleEventLog, SimpleProcessInstance
from .seqalg import comparability_cost

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReleasePair:
    """Earlier and later anonymized release sharing the anonymization parameter ``n``.

    ``n = 0`` is accepted for exact-match analysis.
    """

    earlier: SimpleEventLog
    later: SimpleEventLog
    n: int
    earlier_label: str = "t1"
    later_label: str = "t2"

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        shared = set(self.earlier.case_ids) & set(self.later.case_ids)
        if shared:
            raise ValueError(f"releases share dummy case ids: {sorted(shared)[:5]}")


@dataclass(frozen=True)
class ComparableGroupPair:
    g1: Group
    g2: Group


@dataclass(frozen=True)
class GroupCrack:
    """Per-group crack: sizes are ``|g1|, |g2|`` for F/C and ``|G1'|, |G2'|`` for B."""

    sensitive: str
    size1: int
    size2: int
    crack: int
    target_size: int


@dataclass(frozen=True)
class CrackResult:
    size: int
    detail: Tuple[GroupCrack, ...] = ()
    # case ids of target groups cracked in full (no remaining candidate)
    fully_excluded: frozenset = frozenset()

    def __int__(self) -> int:
        return self.size


@dataclass(frozen=True)
class AttackReport:
    bk: BackgroundKnowledge
    ms1_size: int
    ms2_size: int
    f_crack: int
    c_crack: int
    b_crack: int
    per_group_detail: Tuple[Tuple[str, str, int, int, int], ...] = ()

    def to_dict(self) -> dict:
        return {
            "bk": list(self.bk),
            "ms1_size": self.ms1_size,
            "ms2_size": self.ms2_size,
            "f_crack": self.f_crack,
            "c_crack": self.c_crack,
            "b_crack": self.b_crack,
            "per_group_detail": [
                {"attack": a, "sensitive": s, "size1": x, "size2": y, "crack": c}
                for a, s, x, y, c in self.per_group_detail
            ],
        }


INDICATOR_FIELDS = ("ka1", "ka2", "fa", "ca", "ba", "fc", "cc", "bc")


@dataclass(frozen=True)
class AnonymityIndicators:
    ka1: int
    ka2: int
    fa: int
    ca: int
    ba: int
    fc: float
    cc: float
    bc: float
    argmin_bk_ka1: BackgroundKnowledge = ()
    argmin_bk_ka2: BackgroundKnowledge = ()
    argmin_bk_fa: BackgroundKnowledge = ()
    argmin_bk_ca: BackgroundKnowledge = ()
    argmin_bk_ba: BackgroundKnowledge = ()

    def to_dict(self) -> dict:
        out = {f: getattr(self, f) for f in INDICATOR_FIELDS}
        for f in ("ka1", "ka2", "fa", "ca", "ba"):
            out[f"argmin_bk_{f}"] = list(getattr(self, f"argmin_bk_{f}"))
        return out


def instances_comparable(p1: SimpleProcessInstance, p2: SimpleProcessInstance, n: int) -> bool:
    """``p1`` from the earlier release, ``p2`` from the later one."""
    return p1.sensitive == p2.sensitive and comparability_cost(p1.trace, p2.trace) <= n


class _ComparabilityCache:
    def __init__(self, n: int):
        self.n = n
        self._memo: Dict[Tuple[tuple, tuple], bool] = {}

    def __call__(self, p1: SimpleProcessInstance, p2: SimpleProcessInstance) -> bool:
        if p1.sensitive != p2.sensitive:
            return False
        key = (p1.trace, p2.trace)
        if key not in self._memo:
            self._memo[key] = comparability_cost(*key) <= self.n
        return self._memo[key]


def _groups_comparable(g1: Group, g2: Group, comp) -> bool:
    return g1.sensitive == g2.sensitive and all(comp(p1, p2) for p1 in g1 for p2 in g2)


def comparable_group_pairs(ms1: MatchingSet, ms2: MatchingSet, n: int) -> List[ComparableGroupPair]:
    comp = _ComparabilityCache(n)
    by_value = {g.sensitive: g for g in groups_of(ms2)}
    pairs = []
    for g1 in groups_of(ms1):
        g2 = by_value.get(g1.sensitive)
        if g2 is not None and _groups_comparable(g1, g2, comp):
            pairs.append(ComparableGroupPair(g1, g2))
    return pairs


def f_crack(ms1: MatchingSet, ms2: MatchingSet, n: int) -> CrackResult:
    """Members of ``ms1`` excludable by the forward attack."""
    detail = []
    for pair in comparable_group_pairs(ms1, ms2, n):
        a, b = len(pair.g1), len(pair.g2)
        detail.append(GroupCrack(pair.g1.sensitive, a, b, max(0, a - b), a))
    return CrackResult(sum(d.crack for d in detail), tuple(detail))


def c_crack(ms1: MatchingSet, ms2: MatchingSet, n: int) -> CrackResult:
    """Members of ``ms2`` excludable by the cross attack."""
    detail = []
    for pair in comparable_group_pairs(ms1, ms2, n):
        a, b = len(pair.g1), len(pair.g2)
        detail.append(GroupCrack(pair.g1.sensitive, a, b, max(0, b - a), b))
    return CrackResult(sum(d.crack for d in detail), tuple(detail))


def backward_closure(g2: Iterable[SimpleProcessInstance], pair: ReleasePair, comp=None):
    """``G1'`` (earlier instances comparable to some of ``g2``) and ``G2'`` (later
    instances comparable to some of ``G1'``)."""
    comp = comp or _ComparabilityCache(pair.n)
    g2 = list(g2)
    big1 = [p1 for p1 in pair.earlier if any(comp(p1, p2) for p2 in g2)]
    big2 = [p2 for p2 in pair.later if any(comp(p1, p2) for p1 in big1)]
    return big1, big2


def b_crack(ms2: MatchingSet, pair: ReleasePair, check: bool = False) -> CrackResult:
    """Members of ``ms2`` excludable by the backward attack.

    Per group ``g2`` the crack is ``max(0, |G1'| - |G2' minus g2|)``: the
    earlier instances need buddies, and only ``G2'`` outside ``g2`` can absorb
    them without touching the group.  With ``check`` set, groups whose
    closure is not a complete, isolated block are logged as warnings.
    """
    comp = _ComparabilityCache(pair.n)
    detail = []
    fully = set()
    for g2 in groups_of(ms2):
        big1, big2 = backward_closure(g2, pair, comp)
        group_ids = {p.case_id for p in g2}
        outside = sum(1 for p in big2 if p.case_id not in group_ids)
        # more earlier cases than later slots means no linker; cap at the group
        cs = min(len(g2), max(0, len(big1) - outside))
        detail.append(GroupCrack(g2.sensitive, len(big1), len(big2), cs, len(g2)))
        if cs and cs == len(g2):
            fully |= group_ids
        if check:
            problem = _closure_problem(big1, big2, pair, comp)
            if problem:
                log.warning("bk %s, group %s: %s", list(ms2.bk), g2.sensitive, problem)
    return CrackResult(sum(d.crack for d in detail), tuple(detail), frozenset(fully))


def _closure_problem(big1, big2, pair: ReleasePair, comp) -> Optional[str]:
    for p2 in big2:
        for p1 in big1:
            if not comp(p1, p2):
                return f"{p2.case_id} is not comparable to {p1.case_id} of G1'"
    ids1 = {p.case_id for p in big1}
    for p1 in pair.earlier:
        if p1.case_id not in ids1 and any(comp(p1, p2) for p2 in big2):
            return f"{p1.case_id} outside G1' is comparable to a member of G2'"
    return None


def closure_violations(ms2: MatchingSet, pair: ReleasePair) -> List[str]:
    """Groups of ``ms2`` whose backward closure is not a complete isolated block."""
    comp = _ComparabilityCache(pair.n)
    out = []
    for g2 in groups_of(ms2):
        big1, big2 = backward_closure(g2, pair, comp)
        problem = _closure_problem(big1, big2, pair, comp)
        if problem:
            out.append(f"group {g2.sensitive}: {problem}")
    return out


@dataclass(frozen=True)
class Preconditions:
    """Structural assumptions under which the crack formulas are exact.

    ``f``/``c``: every targeted group and its same-value counterpart are both
    non-empty and lie inside one connected block of the comparability graph
    that is complete bipartite.  ``b``: the backward closure of every group
    of the later matching set is complete and isolated.
    """

    f: bool
    c: bool
    b: bool
    notes: Tuple[str, ...] = ()

    def holds(self, attack: str) -> bool:
        return getattr(self, attack.lower())


def _components(pair: ReleasePair, comp):
    # union-find over earlier ("1", id) and later ("2", id) nodes
    parent: Dict[tuple, tuple] = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p1 in pair.earlier:
        find(("1", p1.case_id))
    for p2 in pair.later:
        find(("2", p2.case_id))
    for p1 in pair.earlier:
        for p2 in pair.later:
            if comp(p1, p2):
                a, b = find(("1", p1.case_id)), find(("2", p2.case_id))
                if a != b:
                    parent[a] = b
    return find


def formula_preconditions(pair: ReleasePair, bk: Sequence[str]) -> Preconditions:
    comp = _ComparabilityCache(pair.n)
    find = _components(pair, comp)
    ms1 = matching_set(pair.earlier, bk, pair.n)
    ms2 = matching_set(pair.later, bk, pair.n)
    g1s = {g.sensitive: g for g in groups_of(ms1)}
    g2s = {g.sensitive: g for g in groups_of(ms2)}
    notes = []

    block_ok: Dict[str, bool] = {}
    for s in sorted(set(g1s) | set(g2s)):
        g1, g2 = g1s.get(s), g2s.get(s)
        if g1 is None or g2 is None:
            block_ok[s] = False
            notes.append(f"{s}: group present in only one matching set")
            continue
        roots = {find(("1", p.case_id)) for p in g1} | {find(("2", p.case_id)) for p in g2}
        if len(roots) != 1:
            block_ok[s] = False
            notes.append(f"{s}: groups span several comparability blocks")
            continue
        root = roots.pop()
        xs = [p for p in pair.earlier if find(("1", p.case_id)) == root]
        ys = [p for p in pair.later if find(("2", p.case_id)) == root]
        complete = all(comp(p1, p2) for p1 in xs for p2 in ys)
        block_ok[s] = complete
        if not complete:
            notes.append(f"{s}: comparability block is not complete")

    f_ok = all(block_ok[s] for s in g1s)
    c_ok = all(block_ok[s] for s in g2s)
    b_problems = closure_violations(ms2, pair)
    notes.extend(b_problems)
    return Preconditions(f_ok, c_ok, not b_problems, tuple(notes))


def attack_report(pair: ReleasePair, bk: Sequence[str]) -> AttackReport:
    bk = tuple(bk)
    ms1 = matching_set(pair.earlier, bk, pair.n)
    ms2 = matching_set(pair.later, bk, pair.n)
    f = f_crack(ms1, ms2, pair.n)
    c = c_crack(ms1, ms2, pair.n)
    b = b_crack(ms2, pair)
    detail = tuple(
        [("F", d.sensitive, d.size1, d.size2, d.crack) for d in f.detail]
        + [("C", d.sensitive, d.size1, d.size2, d.crack) for d in c.detail]
        + [("B", d.sensitive, d.size1, d.size2, d.crack) for d in b.detail]
    )
    return AttackReport(bk, len(ms1), len(ms2), f.size, c.size, b.size, detail)


# ---------------------------------------------------------------------------
# bulk evaluation


@dataclass
class CandidateScores:
    """Per-candidate sizes and crack counts, aligned with ``candidates``."""

    candidates: List[BackgroundKnowledge]
    ms1: np.ndarray
    ms2: np.ndarray
    f: np.ndarray
    c: np.ndarray
    b: np.ndarray


class PairAnalyzer:
    """Evaluates crack sizes for many candidates on ``(trace, sensitive)`` classes.

    Identical instances are interchangeable in every formula, so the
    analysis runs on class counts; candidates producing the same pair of
    class masks share one evaluation.
    """

    def __init__(self, pair: ReleasePair):
        self.pair = pair
        self.codebook = Codebook(pair.earlier.alphabet | pair.later.alphabet)
        self.idx1 = ReleaseIndex(pair.earlier, self.codebook)
        self.idx2 = ReleaseIndex(pair.later, self.codebook)
        self.comp = self._class_comparability()
        self._values = sorted(set(self.idx1.sensitive_values) | set(self.idx2.sensitive_values))
        self._sens1 = {s: self.idx1.class_sensitive == s for s in self._values}
        self._sens2 = {s: self.idx2.class_sensitive == s for s in self._values}

    def _class_comparability(self) -> np.ndarray:
        i1, i2 = self.idx1, self.idx2
        cost = np.empty((len(i1.variants), len(i2.variants)), dtype=np.int32)
        for a, t1 in enumerate(i1.variants):
            for b, t2 in enumerate(i2.variants):
                cost[a, b] = comparability_cost(t1, t2)
        trace_ok = cost <= self.pair.n
        same = i1.class_sensitive[:, None] == i2.class_sensitive[None, :]
        return trace_ok[np.ix_(i1.class_variant, i2.class_variant)] & same

    def _cracks(self, m1: np.ndarray, m2: np.ndarray) -> Tuple[int, int, int, int, int]:
        cnt1, cnt2, comp = self.idx1.counts, self.idx2.counts, self.comp
        f = c = b = 0
        for s in self._values:
            g1 = m1 & self._sens1[s]
            g2 = m2 & self._sens2[s]
            has1, has2 = g1.any(), g2.any()
            if has2:
                big1 = comp[:, g2].any(axis=1)
                big2 = comp[big1].any(axis=0)
                b += min(int(cnt2[g2].sum()), max(0, int(cnt1[big1].sum()) - int(cnt2[big2 & ~g2].sum())))
            if has1 and has2 and comp[np.ix_(g1, g2)].all():
                n1, n2 = int(cnt1[g1].sum()), int(cnt2[g2].sum())
                f += max(0, n1 - n2)
                c += max(0, n2 - n1)
        return int(cnt1[m1].sum()), int(cnt2[m2].sum()), f, c, b

    def score(self, candidates: Iterable[Sequence[str]]) -> CandidateScores:
        cands = [tuple(c) for c in candidates]
        if not cands:
            empty = np.zeros(0, dtype=np.int64)
            return CandidateScores([], empty, empty, empty, empty, empty)
        mat, lens = self.codebook.encode_candidates(cands)
        masks1 = self.idx1.class_masks(mat, lens, self.pair.n)
        masks2 = self.idx2.class_masks(mat, lens, self.pair.n)
        out = np.zeros((len(cands), 5), dtype=np.int64)
        memo: Dict[bytes, Tuple[int, ...]] = {}
        for r in range(len(cands)):
            key = np.packbits(masks1[r]).tobytes() + b"|" + np.packbits(masks2[r]).tobytes()
            if key not in memo:
                memo[key] = self._cracks(masks1[r], masks2[r])
            out[r] = memo[key]
        return CandidateScores(cands, out[:, 0], out[:, 1], out[:, 2], out[:, 3], out[:, 4])


def _argmin(values: np.ndarray, valid: np.ndarray, cands: List[BackgroundKnowledge]):
    if not valid.any():
        return None, ()
    idx = np.flatnonzero(valid)
    best = idx[np.argmin(values[idx])]
    return int(values[best]), cands[best]


def ka(log: SimpleEventLog, bk_candidates: Iterable[Sequence[str]], n: int):
    """k-anonymity of one release and a minimising candidate.

    Candidates with an empty matching set carry no information about any
    case and are skipped.
    """
    cands = [tuple(c) for c in bk_candidates]
    if not cands:
        raise NoCandidates("empty candidate stream")
    index = ReleaseIndex(log, Codebook(log.alphabet))
    mat, lens = index.codebook.encode_candidates(cands)
    sizes = index.class_masks(mat, lens, n).astype(np.int64) @ index.counts
    value, bk = _argmin(sizes, sizes > 0, cands)
    if value is None:
        raise NoCandidates("no candidate matches any instance")
    return value, bk


def _poc(k: int, after: int) -> float:
    return (k - after) / k if k else 0.0


def fa_ca_ba(
    pair: ReleasePair,
    bk_candidates: Optional[Iterable[Sequence[str]]] = None,
    max_len: int = 5,
    analyzer: Optional[PairAnalyzer] = None,
) -> AnonymityIndicators:
    """KA of both releases and their F/C/B-anonymity, minimised over candidates.

    Without explicit candidates, targets of ``L1'`` (KA1, FA) are minimised
    over subsequences occurring in ``L1'`` and targets of ``L2'`` (KA2, CA,
    BA) over those occurring in ``L2'``.  An explicit stream is used for all
    indicators; candidates with an empty target matching set are skipped.
    """
    analyzer = analyzer or PairAnalyzer(pair)
    if bk_candidates is None:
        c1 = list(enumerate_bk_candidates(pair.earlier, max_len))
        c2 = list(enumerate_bk_candidates(pair.later, max_len))
        union = sorted(set(c1) | set(c2), key=lambda s: (len(s), s))
        scores = analyzer.score(union)
        pos = {c: i for i, c in enumerate(union)}
        sel1 = np.zeros(len(union), dtype=bool)
        sel1[[pos[c] for c in c1]] = True
        sel2 = np.zeros(len(union), dtype=bool)
        sel2[[pos[c] for c in c2]] = True
    else:
        scores = analyzer.score(bk_candidates)
        sel1 = sel2 = np.ones(len(scores.candidates), dtype=bool)
    if not scores.candidates:
        raise NoCandidates("empty candidate stream")

    valid1 = sel1 & (scores.ms1 > 0)
    valid2 = sel2 & (scores.ms2 > 0)
    cands = scores.candidates
    ka1, bk_ka1 = _argmin(scores.ms1, valid1, cands)
    ka2, bk_ka2 = _argmin(scores.ms2, valid2, cands)
    if ka1 is None or ka2 is None:
        raise NoCandidates("no candidate matches an instance of both releases")
    fa, bk_fa = _argmin(scores.ms1 - scores.f, valid1, cands)
    ca, bk_ca = _argmin(scores.ms2 - scores.c, valid2, cands)
    ba, bk_ba = _argmin(scores.ms2 - scores.b, valid2, cands)
    return AnonymityIndicators(
        ka1, ka2, fa, ca, ba,
        _poc(ka1, fa), _poc(ka2, ca), _poc(ka2, ba),
        bk_ka1, bk_ka2, bk_fa, bk_ca, bk_ba,
    )
