"""Attacks over more than two releases.

An optimal micro attack lets every target group pick the background
release that cracks it most.  A composed attack runs a B-attack between
releases ``i < j`` and then an F- or C-attack between ``j`` and ``l`` on
what the first stage left; no other stage order is meaningful.

Crack formulas give counts, not identities.  Where a composition needs
concrete excluded cases, the first members of a group in case-id order
stand in for them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .anonymizer import AnonymizedRelease
from .attacks import ReleasePair, b_crack, comparable_group_pairs, formula_preconditions
from .errors import IllegalComposition, ReleaseIndexError
from .matching import groups_of, matching_set
from .model import SimpleEventLog

log = logging.getLogger(__name__)

ATTACKS = ("F", "C", "B")
COMPOSITIONS = ("B_then_F", "B_then_C")


class ReleaseChain:
    """Ordered anonymized releases ``L1', ..., Lm'`` sharing ``n``."""

    def __init__(self, releases: Sequence[Union[SimpleEventLog, AnonymizedRelease]], n: int,
                 labels: Optional[Sequence[str]] = None):
        logs = [r.log if isinstance(r, AnonymizedRelease) else r for r in releases]
        if len(logs) < 2:
            raise ValueError("a chain needs at least two releases")
        seen: Dict[str, int] = {}
        for idx, lg in enumerate(logs):
            for cid in lg.case_ids:
                if cid in seen:
                    raise ValueError(f"case id {cid!r} appears in releases {seen[cid]} and {idx}")
                seen[cid] = idx
        self.logs: Tuple[SimpleEventLog, ...] = tuple(logs)
        self.n = n
        self.labels = tuple(labels) if labels else tuple(f"t{i + 1}" for i in range(len(logs)))

    def __len__(self) -> int:
        return len(self.logs)

    def check_index(self, i: int) -> None:
        if not 0 <= i < len(self.logs):
            raise ReleaseIndexError(f"release index {i} outside 0..{len(self.logs) - 1}")

    def pair(self, i: int, j: int) -> ReleasePair:
        self.check_index(i)
        self.check_index(j)
        if not i < j:
            raise ReleaseIndexError(f"earlier index {i} must precede later index {j}")
        return ReleasePair(self.logs[i], self.logs[j], self.n, self.labels[i], self.labels[j])

    def backgrounds(self, target: int, attack: str) -> List[int]:
        """Background releases usable against ``target``: later ones for F, earlier ones for C and B."""
        self.check_index(target)
        if attack == "F":
            return list(range(target + 1, len(self.logs)))
        return list(range(target))


@dataclass(frozen=True)
class MicroCrack:
    size: int
    background_index: Optional[int]
    # (sensitive value, crack, background index chosen for that group)
    per_group: Tuple[Tuple[str, int, Optional[int]], ...] = ()


def _pairwise_group_cracks(chain: ReleaseChain, target: int, bg: int, bk, attack: str) -> Dict[str, int]:
    n = chain.n
    if attack == "F":
        ms1 = matching_set(chain.logs[target], bk, n)
        ms2 = matching_set(chain.logs[bg], bk, n)
        return {p.g1.sensitive: max(0, len(p.g1) - len(p.g2)) for p in comparable_group_pairs(ms1, ms2, n)}
    ms1 = matching_set(chain.logs[bg], bk, n)
    ms2 = matching_set(chain.logs[target], bk, n)
    if attack == "C":
        return {p.g2.sensitive: max(0, len(p.g2) - len(p.g1)) for p in comparable_group_pairs(ms1, ms2, n)}
    return {d.sensitive: d.crack for d in b_crack(ms2, chain.pair(bg, target)).detail}


def optimal_micro_crack(chain: ReleaseChain, target_index: int, bk: Sequence[str], attack: str) -> MicroCrack:
    """Sum over target groups of the best crack any admissible background achieves."""
    attack = attack.upper()
    if attack not in ATTACKS:
        raise ValueError(f"unknown attack {attack!r}")
    bk = tuple(bk)
    bgs = chain.backgrounds(target_index, attack)
    if not bgs:
        raise ReleaseIndexError(f"no background release for a {attack}-attack on release {target_index}")
    best: Dict[str, Tuple[int, Optional[int]]] = {}
    totals: Dict[int, int] = {}
    for bg in bgs:
        cracks = _pairwise_group_cracks(chain, target_index, bg, bk, attack)
        totals[bg] = sum(cracks.values())
        for s, cs in cracks.items():
            if s not in best or cs > best[s][0]:
                best[s] = (cs, bg)
    per_group = tuple((s, cs, bg) for s, (cs, bg) in sorted(best.items()))
    top = max(bgs, key=lambda b: (totals[b], -b))
    return MicroCrack(sum(cs for _, cs, _ in per_group), top if totals[top] else None, per_group)


@dataclass(frozen=True)
class ComposedCrack:
    size: int
    first_stage: int
    second_stage: int
    first_excluded: frozenset
    second_excluded: frozenset


def _representatives(members, count: int) -> List[str]:
    ids = sorted(p.case_id for p in members)
    return ids[:count]


def _warn_preconditions(pair: ReleasePair, bk, attack: str, stage: str) -> None:
    pre = formula_preconditions(pair, bk)
    if not pre.holds(attack):
        log.warning("%s stage (%s vs %s): crack formula assumptions fail: %s",
                    stage, pair.earlier_label, pair.later_label, "; ".join(pre.notes) or "n/a")


def composed_crack(
    chain: ReleaseChain,
    indices: Tuple[int, int, int],
    bk: Sequence[str],
    composition: str,
) -> ComposedCrack:
    """B-attack on ``(i, j)`` followed by an F- or C-attack between ``j`` and ``l``.

    The second stage sees the ``j`` matching set with the first-stage
    exclusions removed; group sizes use the reduced counts.
    """
    if composition not in COMPOSITIONS:
        raise IllegalComposition(f"{composition!r} is not a legal composition; use one of {COMPOSITIONS}")
    i, j, l = indices
    for x in indices:
        chain.check_index(x)
    if not i < j < l:
        raise ReleaseIndexError(f"indices must satisfy i < j < l, got {indices}")
    bk = tuple(bk)
    n = chain.n

    pair_ij = chain.pair(i, j)
    _warn_preconditions(pair_ij, bk, "B", "first")
    ms_j = matching_set(chain.logs[j], bk, n)
    first = b_crack(ms_j, pair_ij)
    excluded1: List[str] = []
    for g, d in zip(groups_of(ms_j), first.detail):
        excluded1 += _representatives(g, d.crack)
    reduced = ms_j.without(excluded1)

    pair_jl = chain.pair(j, l)
    second_attack = composition[-1]
    _warn_preconditions(pair_jl, bk, second_attack, "second")
    ms_l = matching_set(chain.logs[l], bk, n)
    excluded2: List[str] = []
    for p in comparable_group_pairs(reduced, ms_l, n):
        if second_attack == "F":
            excluded2 += _representatives(p.g1, max(0, len(p.g1) - len(p.g2)))
        else:
            excluded2 += _representatives(p.g2, max(0, len(p.g2) - len(p.g1)))

    e1, e2 = frozenset(excluded1), frozenset(excluded2)
    assert not (e1 & e2), "composed stages excluded the same case twice"
    return ComposedCrack(len(e1) + len(e2), len(e1), len(e2), e1, e2)


def chain_anonymity(
    chain: ReleaseChain,
    target_index: int,
    attack: str,
    bk_candidates: Iterable[Sequence[str]],
) -> Tuple[int, Tuple[str, ...]]:
    """Smallest post-attack matching-set size of ``target_index`` over candidates, with its bk."""
    best: Optional[Tuple[int, Tuple[str, ...]]] = None
    for bk in bk_candidates:
        bk = tuple(bk)
        size = len(matching_set(chain.logs[target_index], bk, chain.n))
        if size == 0:
            continue
        value = size - optimal_micro_crack(chain, target_index, bk, attack).size
        if best is None or value < best[0]:
            best = (value, bk)
    if best is None:
        raise ValueError("no candidate matches the target release")
    return best


def chain_report(chain: ReleaseChain, bk_candidates: Sequence[Sequence[str]]) -> dict:
    """Per target and attack: minimised anonymity and the chosen bk, JSON-ready."""
    cands = [tuple(c) for c in bk_candidates]
    out = []
    for t in range(len(chain)):
        for attack in ATTACKS:
            if not chain.backgrounds(t, attack):
                continue
            value, bk = chain_anonymity(chain, t, attack, cands)
            micro = optimal_micro_crack(chain, t, bk, attack)
            out.append({
                "target_index": t,
                "target_label": chain.labels[t],
                "attack": attack,
                "anonymity": value,
                "bk": list(bk),
                "crack": micro.size,
                "background_index": micro.background_index,
            })
    return {"n": chain.n, "labels": list(chain.labels), "targets": out}
