import pytest

from logshield.errors import IllegalComposition, ReleaseIndexError
from logshield.model import SimpleEventLog
from logshield.multi_release import (
    ReleaseChain,
    chain_anonymity,
    chain_report,
    composed_crack,
    optimal_micro_crack,
)


def _rows(prefix, spec):
    rows = []
    for trace, sens, count in spec:
        for _ in range(count):
            rows.append((f"{prefix}{len(rows) + 1}", trace, sens))
    return SimpleEventLog.from_rows(rows, "d")


def composition_chain():
    r1 = _rows("a", [("ab", "x", 1)])
    r2 = _rows("b", [("abc", "x", 3), ("abc", "y", 1)])
    r3 = _rows("c", [("abcd", "x", 1), ("abcd", "y", 2), ("zz", "x", 1), ("zz", "y", 1)])
    return ReleaseChain([r1, r2, r3], 0)


def test_backward_then_forward():
    chain = composition_chain()
    out = composed_crack(chain, (0, 1, 2), "abc", "B_then_F")
    # the single earlier x case must continue as one of the three x cases of
    # the middle release; the two remaining x cases outnumber the one later x case
    assert (out.first_stage, out.second_stage, out.size) == (1, 1, 2)
    assert out.first_excluded == {"b1"}
    assert out.second_excluded == {"b2"}
    back = composed_crack(chain, (0, 1, 2), "abc", "B_then_C")
    assert back.first_stage == 1 and back.second_stage == 1
    assert back.second_excluded <= {"c2", "c3"}


def test_optimal_micro_mixes_backgrounds():
    r1 = _rows("a", [("a", "x", 3), ("a", "y", 3)])
    r2 = _rows("b", [("a", "x", 1), ("a", "y", 3)])
    r3 = _rows("c", [("a", "x", 3), ("a", "y", 1)])
    chain = ReleaseChain([r1, r2, r3], 0)
    best = optimal_micro_crack(chain, 0, "a", "F")
    assert best.size == 4
    assert best.per_group == (("x", 2, 1), ("y", 2, 2))
    assert best.background_index == 1
    only_third = optimal_micro_crack(ReleaseChain([r1, r3], 0), 0, "a", "F")
    assert only_third.size == 2
    assert chain_anonymity(chain, 0, "F", ["a"]) == (2, ("a",))


def test_backgrounds_and_indices():
    chain = composition_chain()
    assert chain.backgrounds(0, "F") == [1, 2]
    assert chain.backgrounds(2, "C") == [0, 1]
    assert chain.backgrounds(0, "B") == []
    with pytest.raises(ReleaseIndexError):
        optimal_micro_crack(chain, 0, "abc", "B")
    with pytest.raises(ReleaseIndexError):
        chain.pair(2, 1)
    with pytest.raises(ReleaseIndexError):
        composed_crack(chain, (0, 1, 3), "abc", "B_then_F")
    with pytest.raises(ReleaseIndexError):
        composed_crack(chain, (1, 0, 2), "abc", "B_then_F")
    with pytest.raises(IllegalComposition):
        composed_crack(chain, (0, 1, 2), "abc", "F_then_B")
    with pytest.raises(ValueError):
        optimal_micro_crack(chain, 0, "abc", "Z")


def test_chain_needs_distinct_ids():
    r = _rows("a", [("ab", "x", 1)])
    with pytest.raises(ValueError):
        ReleaseChain([r, r], 1)
    with pytest.raises(ValueError):
        ReleaseChain([r], 1)


def test_chain_report_shape():
    chain = composition_chain()
    rep = chain_report(chain, [("a",), ("a", "b", "c")])
    assert rep["labels"] == ["t1", "t2", "t3"]
    keys = [(t["target_index"], t["attack"]) for t in rep["targets"]]
    assert keys == [(0, "F"), (1, "F"), (1, "C"), (1, "B"), (2, "C"), (2, "B")]
