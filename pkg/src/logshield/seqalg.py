"""Sequence kernels: LCS/SCS lengths and the comparability test between traces.

Two traces ``a`` (earlier release) and ``b`` (later release) are comparable
under budget ``n`` when at most ``n`` inserted activities make them
consistent with incremental collection, either

* by inserting into ``b`` only, so that ``a`` becomes a prefix of it, or
* by growing the shorter one into a joint super-sequence of both.

The cheapest first option costs ``|a| - P`` where ``P`` is the longest prefix
of ``b`` that embeds into ``a``; whenever some LCS of ``a`` and ``b`` is a
prefix of ``b`` this equals ``|a| - LCS``.  The second option costs
``SCS - min(|a|, |b|)``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import is_subsequence


def lcs_len(a: Sequence, b: Sequence) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def scs_len(a: Sequence, b: Sequence) -> int:
    """Shortest common super-sequence length, by its own recurrence."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else 1 + min(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def embeddable_prefix_len(a: Sequence, b: Sequence) -> int:
    """Length of the longest prefix of ``b`` that is a subsequence of ``a``."""
    j = 0
    for x in a:
        if j < len(b) and x == b[j]:
            j += 1
    return j


def lcs_prefix_witness(a: Sequence, b: Sequence) -> bool:
    """True iff some longest common subsequence of ``a`` and ``b`` is a prefix of ``b``.

    Any common subsequence that is a prefix of ``b`` has length at most the
    embeddable prefix length, so the test reduces to comparing that length
    with the LCS length.
    """
    return embeddable_prefix_len(a, b) >= lcs_len(a, b)


def comparability_cost(a: Sequence, b: Sequence) -> int:
    """Minimum number of insertions making ``a`` (earlier) and ``b`` (later) comparable."""
    lcs = lcs_len(a, b)
    prefix_cost = len(a) - embeddable_prefix_len(a, b)
    joint_cost = max(len(a), len(b)) - lcs
    return min(prefix_cost, joint_cost)


def sequences_comparable(a: Sequence, b: Sequence, n: int) -> bool:
    return comparability_cost(a, b) <= n


def case_split_comparable(a: Sequence, b: Sequence, n: int) -> bool:
    """The two-branch test taken literally: the prefix branch only when an LCS prefixes ``b``.

    Kept for reference; it rejects pairs such as ``<x>`` vs ``<y, x, x>`` at
    ``n=1`` although inserting ``x`` in front of the later trace suffices.
    :func:`sequences_comparable` is the exact minimum.
    """
    lcs = lcs_len(a, b)
    if is_subsequence(tuple(b[:lcs]), a):
        return n >= len(a) - lcs
    return n >= scs_len(a, b) - min(len(a), len(b))


def lcs_lengths(candidates: np.ndarray, trace: np.ndarray) -> np.ndarray:
    """LCS length of every row of ``candidates`` against one encoded trace.

    ``candidates`` is an ``(N, L)`` integer matrix padded with ``-1``; ``trace``
    holds non-negative codes.  Padding never matches, so padded rows behave
    like their unpadded prefix.
    """
    n_rows, width = candidates.shape
    dp = np.zeros((n_rows, width + 1), dtype=np.int16)
    for sym in trace:
        hit = candidates == sym
        new = np.zeros_like(dp)
        for i in range(width):
            new[:, i + 1] = np.where(hit[:, i], dp[:, i] + 1, np.maximum(dp[:, i + 1], new[:, i]))
        dp = new
    return dp[:, width]
