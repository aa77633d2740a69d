"""Brute-force ground truth for toy-sized release pairs.

Nothing here uses LCS/SCS shortcuts: specializations are enumerated by
explicit insertion, linkers by backtracking, and crack sizes by minimising
the excluded count over every linker.  Exponential by design; only for
validating :mod:`logshield.attacks` on small inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .attacks import ReleasePair, attack_report, instances_comparable, formula_preconditions
from .errors import LimitExceeded, NoLinker
from .model import SimpleProcessInstance, is_subsequence

FRESH = "\x00fresh"
DEFAULT_LINKER_LIMIT = 1_000_000


def case_sort_key(case_id: str):
    return (0, int(case_id), "") if case_id.isdigit() else (1, 0, case_id)


@lru_cache(maxsize=200_000)
def insertions(seq: Tuple[str, ...], k: int, alphabet: FrozenSet[str]) -> FrozenSet[Tuple[str, ...]]:
    """All sequences obtained from ``seq`` by inserting at most ``k`` symbols."""
    out = {seq}
    frontier = {seq}
    letters = sorted(alphabet)
    for _ in range(k):
        grown = set()
        for t in frontier:
            for pos in range(len(t) + 1):
                for c in letters:
                    grown.add(t[:pos] + (c,) + t[pos:])
        out |= grown
        frontier = grown
    return frozenset(out)


def _alphabet(*seqs: Sequence[str], extra: Iterable[str] = (), fresh: int = 1) -> FrozenSet[str]:
    letters = set(extra)
    for s in seqs:
        letters.update(s)
    letters.update(f"{FRESH}{i}" for i in range(fresh))
    return frozenset(letters)


def definitional_match(trace: Sequence[str], bk: Sequence[str], n: int, fresh: int = 1) -> bool:
    """Some specialization (at most ``n`` insertions) contains ``bk`` as a subsequence."""
    return _definitional_match(tuple(trace), tuple(bk), n, fresh)


@lru_cache(maxsize=500_000)
def _definitional_match(trace, bk, n, fresh) -> bool:
    alpha = _alphabet(trace, bk, fresh=fresh)
    return any(is_subsequence(bk, s) for s in insertions(trace, n, alpha))


def insertion_comparability_cost(a: Sequence[str], b: Sequence[str], max_n: int = 12) -> Optional[int]:
    """Smallest ``n'`` making ``a`` (earlier) and ``b`` (later) comparable, by search.

    Either ``a`` becomes a prefix of ``b`` grown by ``n'`` insertions, or the
    shorter sequence grown by ``n'`` insertions is a super-sequence of the
    longer one.
    """
    a, b = tuple(a), tuple(b)
    alpha = _alphabet(a, b)
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    for k in range(max_n + 1):
        if any(t[: len(a)] == a for t in insertions(b, k, alpha)):
            return k
        if any(is_subsequence(long_, s) for s in insertions(short, k, alpha)):
            return k
    return None


def buddy_admissible(
    p1: SimpleProcessInstance,
    p2: SimpleProcessInstance,
    n: int,
    alphabet: Iterable[str] = (),
    fresh: int = 1,
) -> bool:
    """Specializations of ``p1`` and ``p2`` exist with equal sensitive value and
    the first trace a prefix of the second."""
    if p1.sensitive != p2.sensitive:
        return False
    return _buddy_traces(p1.trace, p2.trace, n, _alphabet(p1.trace, p2.trace, extra=alphabet, fresh=fresh))


@lru_cache(maxsize=200_000)
def _buddy_traces(a, b, n, alpha) -> bool:
    prefixes = {t[:k] for t in insertions(b, n, alpha) for k in range(len(t) + 1)}
    return any(s in prefixes for s in insertions(a, n, alpha))


@dataclass(frozen=True)
class Linker:
    mapping: Tuple[Tuple[str, str], ...]

    def as_dict(self) -> Dict[str, str]:
        return dict(self.mapping)


def buddy_matrix(pair: ReleasePair, fresh: int = 1) -> Tuple[List[SimpleProcessInstance], List[SimpleProcessInstance], np.ndarray]:
    left = sorted(pair.earlier, key=lambda p: case_sort_key(p.case_id))
    right = sorted(pair.later, key=lambda p: case_sort_key(p.case_id))
    alpha = pair.earlier.alphabet | pair.later.alphabet
    adj = np.array(
        [[buddy_admissible(p1, p2, pair.n, alpha, fresh) for p2 in right] for p1 in left], dtype=bool
    ).reshape(len(left), len(right))
    return left, right, adj


def _linker_rows(adj: np.ndarray, limit: int) -> Iterator[Tuple[int, ...]]:
    n_left, n_right = adj.shape
    options = [np.flatnonzero(adj[i]).tolist() for i in range(n_left)]
    used = [False] * n_right
    chosen: List[int] = []
    emitted = 0

    def rec(i):
        nonlocal emitted
        if i == n_left:
            emitted += 1
            if emitted > limit:
                raise LimitExceeded(f"more than {limit} linkers")
            yield tuple(chosen)
            return
        for j in options[i]:
            if not used[j]:
                used[j] = True
                chosen.append(j)
                yield from rec(i + 1)
                chosen.pop()
                used[j] = False

    yield from rec(0)


def enumerate_linkers(pair: ReleasePair, limit: int = DEFAULT_LINKER_LIMIT) -> Iterator[Linker]:
    """Every total injective buddy-respecting map from ``L1'`` into ``L2'``.

    Enumerated in lexicographic order of case ids.  Raises :class:`NoLinker`
    when none exists and :class:`LimitExceeded` past ``limit``.
    """
    if len(pair.earlier) > len(pair.later):
        raise NoLinker("earlier release has more cases than the later one")
    left, right, adj = buddy_matrix(pair)
    found = False
    for row in _linker_rows(adj, limit):
        found = True
        yield Linker(tuple((left[i].case_id, right[j].case_id) for i, j in enumerate(row)))
    if not found:
        raise NoLinker("no total injective buddy assignment exists")


class LinkerTable:
    """All linkers of a pair as an integer array, for evaluating many queries."""

    def __init__(self, pair: ReleasePair, limit: int = DEFAULT_LINKER_LIMIT):
        if len(pair.earlier) > len(pair.later):
            raise NoLinker("earlier release has more cases than the later one")
        self.pair = pair
        self.left, self.right, self.adj = buddy_matrix(pair)
        rows = list(_linker_rows(self.adj, limit))
        if not rows:
            raise NoLinker("no total injective buddy assignment exists")
        self.rows = np.array(rows, dtype=np.int64).reshape(len(rows), len(self.left))

    def __len__(self) -> int:
        return len(self.rows)

    def match_masks(self, bk: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
        n = self.pair.n
        m1 = np.array([definitional_match(p.trace, bk, n) for p in self.left], dtype=bool)
        m2 = np.array([definitional_match(p.trace, bk, n) for p in self.right], dtype=bool)
        return m1, m2

    def crack(self, bk: Sequence[str], attack: str) -> int:
        m1, m2 = self.match_masks(bk)
        rows = self.rows
        attack = attack.upper()
        if attack == "F":
            # earlier members whose buddy falls outside the later matching set
            excluded = (m1[None, :] & ~m2[rows]).sum(axis=1)
        elif attack in ("C", "B"):
            rows_idx = np.arange(len(rows))[:, None]
            # hit[r, j]: later case j is the buddy of some earlier case under linker r
            hit = np.zeros((len(rows), len(self.right)), dtype=bool)
            hit[rows_idx, rows] = True
            if attack == "C":
                # later members with no buddy inside the earlier matching set
                # the spare last column swallows earlier cases outside ms1
                from_ms1 = np.zeros((len(rows), len(self.right) + 1), dtype=bool)
                from_ms1[rows_idx, np.where(m1[None, :], rows, len(self.right))] = True
                from_ms1 = from_ms1[:, :-1]
                excluded = (m2[None, :] & ~from_ms1).sum(axis=1)
            else:
                # later members forced to continue an earlier case
                excluded = (m2[None, :] & hit).sum(axis=1)
        else:
            raise ValueError(f"unknown attack {attack!r}")
        return int(excluded.min())

    def buddy_equals_comparability(self) -> bool:
        n = self.pair.n
        for i, p1 in enumerate(self.left):
            for j, p2 in enumerate(self.right):
                if self.adj[i, j] != instances_comparable(p1, p2, n):
                    return False
        return True


def oracle_crack(
    pair: ReleasePair,
    bk: Sequence[str],
    attack: str,
    limit: int = DEFAULT_LINKER_LIMIT,
    table: Optional[LinkerTable] = None,
) -> int:
    """Exact number of matching-set members excluded under every linker.

    F counts earlier members whose buddy misses the later matching set, C
    counts later members without a buddy in the earlier matching set, B
    counts later members that are the buddy of some earlier case.
    """
    table = table or LinkerTable(pair, limit)
    return table.crack(tuple(bk), attack)


@dataclass(frozen=True)
class Agreement:
    bk: Tuple[str, ...]
    attack: str
    engine: int
    oracle: int
    precondition: bool

    @property
    def agree(self) -> bool:
        return self.engine == self.oracle

    @property
    def acceptable(self) -> bool:
        return self.agree or not self.precondition


def compare_engine(pair: ReleasePair, bks: Iterable[Sequence[str]], limit: int = DEFAULT_LINKER_LIMIT) -> List[Agreement]:
    """Engine crack sizes next to oracle values for each bk and attack.

    ``precondition`` is true when buddy admissibility coincides with
    comparability on the pair and the structural assumptions of the crack
    formulas hold for that bk and attack.
    """
    table = LinkerTable(pair, limit)
    consistent = table.buddy_equals_comparability()
    out = []
    for bk in bks:
        bk = tuple(bk)
        report = attack_report(pair, bk)
        pre = formula_preconditions(pair, bk)
        for attack, value in (("F", report.f_crack), ("C", report.c_crack), ("B", report.b_crack)):
            out.append(Agreement(bk, attack, value, table.crack(bk, attack), consistent and pre.holds(attack)))
    return out
