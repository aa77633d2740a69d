"""Module invariants as property tests (1000 derandomized examples each)."""

import json
import os
import random
import tempfile
from collections import Counter
from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, strategies as st

from logshield.anonymizer import suppress_anonymize, validate_anonymization
from logshield.attacks import (
    PairAnalyzer,
    ReleasePair,
    attack_report,
    b_crack,
    c_crack,
    f_crack,
    fa_ca_ba,
    ka,
)
from logshield.cli import main as cli_main
from logshield.errors import Infeasible, NoCandidates, NoLinker
from logshield.matching import enumerate_bk_candidates, groups_of, matching_set
from logshield.model import (
    RawEvent,
    ReleaseSeries,
    SimpleEventLog,
    SimpleProcessInstance,
    is_subsequence,
    to_simple_log,
    write_simple_log,
)
from logshield.multi_release import ReleaseChain, composed_crack, optimal_micro_crack
from logshield.oracle import LinkerTable, buddy_matrix, definitional_match, enumerate_linkers
from logshield.scenario import ScenarioSpec, run_scenario, timeframe_filter, write_rows_csv
from logshield.seqalg import lcs_len, scs_len, sequences_comparable

pytestmark = pytest.mark.invariant

LETTERS = "abc"
seqs = st.lists(st.sampled_from(LETTERS), min_size=0, max_size=5).map(tuple)
traces = st.lists(st.sampled_from(LETTERS), min_size=1, max_size=5).map(tuple)
bks = st.lists(st.sampled_from(LETTERS), min_size=1, max_size=3).map(tuple)
budgets = st.integers(0, 2)


def _log(rows, prefix):
    return SimpleEventLog([SimpleProcessInstance(f"{prefix}{i}", t, s) for i, (t, s) in enumerate(rows)], "s")


instances = st.tuples(traces, st.sampled_from("xy"))
logs = st.lists(instances, min_size=1, max_size=6).map(lambda rows: _log(rows, "c"))


@st.composite
def pairs(draw, max_later=6, n=st.integers(1, 2)):
    later = draw(st.lists(instances, min_size=1, max_size=max_later))
    earlier = draw(st.lists(instances, min_size=1, max_size=len(later)))
    return ReleasePair(_log(earlier, "a"), _log(later, "b"), draw(n))


def _candidates(pair, max_len=3):
    return sorted(set(enumerate_bk_candidates(pair.earlier, max_len)) | set(enumerate_bk_candidates(pair.later, max_len)))


# -- core model ----------------------------------------------------------------


@st.composite
def raw_logs(draw):
    n_cases = draw(st.integers(1, 6))
    events = []
    base = datetime(2024, 1, 1)
    for c in range(n_cases):
        start = draw(st.integers(0, 50))
        steps = draw(st.lists(st.tuples(st.sampled_from(LETTERS), st.integers(0, 10)), min_size=1, max_size=5))
        t = start
        s = draw(st.sampled_from("xy"))
        for a, gap in steps:
            events.append(RawEvent(str(c), a, base + timedelta(hours=t), None, {"s": s}))
            t += gap
    order = draw(st.permutations(range(len(events))))
    return [events[i] for i in order]


@given(raw_logs())
def test_to_simple_log_is_deterministic(events):
    a = to_simple_log(events, "s")
    b = to_simple_log(list(events), "s")
    assert a == b
    assert [(p.case_id, p.trace, p.sensitive) for p in a] == [(p.case_id, p.trace, p.sensitive) for p in b]


@given(raw_logs(), st.integers(1, 100), st.integers(1, 100))
def test_cumulative_releases_extend_traces(events, p, q):
    lo, hi = sorted((p, q))
    series = ReleaseSeries((
        ("lo", to_simple_log(timeframe_filter(events, lo), "s")),
        ("hi", to_simple_log(timeframe_filter(events, hi), "s")),
    ))
    assert series.prefix_violations() == []


@given(seqs, seqs)
def test_mutual_subsequence_means_equal(a, b):
    assert (is_subsequence(a, b) and is_subsequence(b, a)) == (a == b)


# -- sequence kernels ------------------------------------------------------------


@given(seqs, seqs)
def test_scs_identity(a, b):
    assert scs_len(a, b) == len(a) + len(b) - lcs_len(a, b)


@given(seqs, seqs)
def test_lcs_symmetric(a, b):
    assert lcs_len(a, b) == lcs_len(b, a)


@given(seqs, seqs, budgets)
def test_comparability_monotone_in_budget(a, b, n):
    if sequences_comparable(a, b, n):
        assert sequences_comparable(a, b, n + 1)


# -- matching --------------------------------------------------------------------


@given(traces, bks, budgets)
def test_matching_agrees_with_definition(trace, bk, n):
    log = _log([(trace, "x")], "c")
    assert (len(matching_set(log, bk, n)) == 1) == definitional_match(trace, bk, n)


@given(logs, bks, budgets)
def test_matching_monotone_in_budget(log, bk, n):
    assert matching_set(log, bk, n).case_ids <= matching_set(log, bk, n + 1).case_ids


@given(logs, bks, st.data(), budgets)
def test_matching_antimonotone_in_bk(log, bk2, data, n):
    keep = data.draw(st.lists(st.booleans(), min_size=len(bk2), max_size=len(bk2)))
    bk1 = tuple(a for a, k in zip(bk2, keep) if k) or bk2[:1]
    assert is_subsequence(bk1, bk2)
    assert matching_set(log, bk2, n).case_ids <= matching_set(log, bk1, n).case_ids


@given(logs, bks, budgets)
def test_groups_partition_matching_set(log, bk, n):
    ms = matching_set(log, bk, n)
    groups = groups_of(ms)
    ids = [p.case_id for g in groups for p in g]
    assert len(ids) == len(set(ids))
    assert set(ids) == ms.case_ids
    assert all(len(g) > 0 and len({p.sensitive for p in g}) == 1 for g in groups)


# -- attacks ---------------------------------------------------------------------


@given(pairs())
def test_cracks_bounded_by_oracle(pair):
    try:
        table = LinkerTable(pair)
    except NoLinker:
        return
    narrow = table.buddy_equals_comparability()
    for bk in _candidates(pair)[:12]:
        rep = attack_report(pair, bk)
        assert rep.f_crack <= table.crack(bk, "F")
        assert rep.c_crack <= table.crack(bk, "C")
        if narrow:
            assert rep.b_crack <= table.crack(bk, "B")


@given(pairs())
def test_crack_sizes_bounded_per_bk(pair):
    for bk in _candidates(pair):
        rep = attack_report(pair, bk)
        assert 0 <= rep.f_crack <= rep.ms1_size
        assert 0 <= rep.c_crack <= rep.ms2_size
        assert 0 <= rep.b_crack <= rep.ms2_size


@given(pairs(), bks)
def test_forward_and_cross_are_dual(pair, bk):
    ms1 = matching_set(pair.earlier, bk, pair.n)
    ms2 = matching_set(pair.later, bk, pair.n)
    f = f_crack(ms1, ms2, pair.n)
    c = c_crack(ms1, ms2, pair.n)
    assert [d.sensitive for d in f.detail] == [d.sensitive for d in c.detail]
    for df, dc in zip(f.detail, c.detail):
        assert (df.size1, df.size2) == (dc.size1, dc.size2)
        assert df.crack == max(0, dc.size1 - dc.size2)
        assert dc.crack == max(0, df.size2 - df.size1)


def _relabel(log, rng, prefix):
    ids = list(range(len(log)))
    rng.shuffle(ids)
    return SimpleEventLog([SimpleProcessInstance(f"{prefix}{i}", p.trace, p.sensitive) for i, p in zip(ids, log)], "s")


@given(pairs(), st.integers(0, 10 ** 6))
def test_cracks_ignore_dummy_ids(pair, seed):
    rng = random.Random(seed)
    other = ReleasePair(_relabel(pair.earlier, rng, "p"), _relabel(pair.later, rng, "q"), pair.n)
    for bk in _candidates(pair)[:10]:
        a, b = attack_report(pair, bk), attack_report(other, bk)
        assert (a.f_crack, a.c_crack, a.b_crack) == (b.f_crack, b.c_crack, b.b_crack)


@given(pairs())
def test_indicators_ordered_and_pocs_in_unit_interval(pair):
    try:
        ind = fa_ca_ba(pair, max_len=3)
    except NoCandidates:
        return
    assert 0 <= ind.fa <= ind.ka1
    assert 0 <= ind.ca <= ind.ka2
    assert 0 <= ind.ba <= ind.ka2
    for v in (ind.fc, ind.cc, ind.bc):
        assert 0.0 <= v <= 1.0
    assert ind.fc == pytest.approx((ind.ka1 - ind.fa) / ind.ka1)


@given(pairs())
def test_bulk_engine_matches_instance_engine(pair):
    cands = _candidates(pair)
    scores = PairAnalyzer(pair).score(cands)
    for r, bk in enumerate(cands):
        rep = attack_report(pair, bk)
        got = (scores.ms1[r], scores.ms2[r], scores.f[r], scores.c[r], scores.b[r])
        assert got == (rep.ms1_size, rep.ms2_size, rep.f_crack, rep.c_crack, rep.b_crack)


# -- oracle ----------------------------------------------------------------------


@given(pairs())
def test_oracle_equals_engine_under_preconditions(pair):
    from logshield.oracle import compare_engine

    try:
        rows = compare_engine(pair, _candidates(pair))
    except NoLinker:
        return
    for row in rows:
        if row.precondition:
            assert row.agree, row


def _count_matchings(adj):
    # independent count: dynamic programming over subsets of used later cases
    rows, cols = adj.shape
    ways = {0: 1}
    for i in range(rows):
        nxt = Counter()
        for mask, w in ways.items():
            for j in range(cols):
                if adj[i, j] and not mask >> j & 1:
                    nxt[mask | 1 << j] += w
        ways = nxt
    return sum(ways.values())


@given(pairs(max_later=6))
def test_linker_count_matches_independent_count(pair):
    _, _, adj = buddy_matrix(pair)
    expected = _count_matchings(adj)
    try:
        got = sum(1 for _ in enumerate_linkers(pair))
    except NoLinker:
        got = 0
    assert got == expected


@given(pairs(max_later=4))
def test_fresh_symbol_count_does_not_matter(pair):
    one = buddy_matrix(pair, fresh=1)[2]
    two = buddy_matrix(pair, fresh=2)[2]
    assert np.array_equal(one, two)


# -- anonymizer ------------------------------------------------------------------


anon_inputs = st.tuples(
    st.lists(st.tuples(st.lists(st.sampled_from(LETTERS), min_size=1, max_size=5).map(tuple),
                       st.sampled_from("xy")), min_size=2, max_size=8),
    st.integers(2, 3),
    st.integers(1, 2),
    st.integers(1, 3),
)


@given(anon_inputs)
def test_anonymizer_output_is_valid_and_k_anonymous(args):
    rows, k, n, max_len = args
    log = _log(rows, "o")
    try:
        rel = suppress_anonymize(log, k, n, max_len, seed=1)
    except Infeasible:
        return
    assert validate_anonymization(log, rel.log, n).ok
    value, _ = ka(rel.log, enumerate_bk_candidates(rel.log, max_len), n)
    assert value >= k


@given(anon_inputs, st.integers(0, 1000))
def test_anonymizer_seed_only_permutes_ids(args, seed):
    rows, k, n, max_len = args
    log = _log(rows, "o")
    try:
        a = suppress_anonymize(log, k, n, max_len, seed=seed)
    except Infeasible:
        return
    b = suppress_anonymize(log, k, n, max_len, seed=seed + 1)
    assert Counter((p.trace, p.sensitive) for p in a.log) == Counter((p.trace, p.sensitive) for p in b.log)
    for orig in log:
        assert a.log.case(a.provenance[orig.case_id]).trace == b.log.case(b.provenance[orig.case_id]).trace


# -- multiple releases -------------------------------------------------------------


chains = st.lists(st.lists(instances, min_size=1, max_size=5), min_size=3, max_size=3).map(
    lambda rs: ReleaseChain([_log(r, f"r{i}-") for i, r in enumerate(rs)], 1)
)


@given(chains, bks)
def test_optimal_micro_crack_dominates_pairs(chain, bk):
    for target in range(len(chain)):
        for attack in ("F", "C", "B"):
            bgs = chain.backgrounds(target, attack)
            if not bgs:
                continue
            best = optimal_micro_crack(chain, target, bk, attack).size
            for bg in bgs:
                if attack == "F":
                    rep = attack_report(chain.pair(target, bg), bk).f_crack
                elif attack == "C":
                    rep = attack_report(chain.pair(bg, target), bk).c_crack
                else:
                    rep = b_crack(matching_set(chain.logs[target], bk, chain.n), chain.pair(bg, target)).size
                assert best >= rep


@given(chains, bks, st.sampled_from(["B_then_F", "B_then_C"]))
def test_composition_extends_first_stage(chain, bk, composition):
    out = composed_crack(chain, (0, 1, 2), bk, composition)
    first = b_crack(matching_set(chain.logs[1], bk, chain.n), chain.pair(0, 1)).size
    assert out.first_stage == first
    assert out.size >= first
    assert not out.first_excluded & out.second_excluded


# -- scenario and command line -------------------------------------------------------


@given(raw_logs(), st.integers(1, 100), st.integers(1, 100))
def test_timeframe_cases_nest(events, p, q):
    lo, hi = sorted((p, q))
    small = {e.case_id for e in timeframe_filter(events, lo)}
    big = {e.case_id for e in timeframe_filter(events, hi)}
    assert small <= big


@given(raw_logs(), st.integers(0, 100))
def test_scenario_reproducible(events, seed):
    spec = ScenarioSpec("I", (60,), 2, (1,), 2, seed=seed, sensitive_attr="s")
    try:
        first = run_scenario(spec, events)
    except (Infeasible, NoCandidates):
        return
    second = run_scenario(spec, events)
    with tempfile.TemporaryDirectory() as d:
        write_rows_csv(first, os.path.join(d, "a.csv"))
        write_rows_csv(second, os.path.join(d, "b.csv"))
        with open(os.path.join(d, "a.csv"), "rb") as fa, open(os.path.join(d, "b.csv"), "rb") as fb:
            assert fa.read() == fb.read()


@given(pairs(max_later=5), st.integers(0, 100))
def test_cli_audit_reproducible_and_read_only(pair, seed):
    with tempfile.TemporaryDirectory() as d:
        r1, r2 = os.path.join(d, "r1.csv"), os.path.join(d, "r2.csv")
        write_simple_log(pair.earlier, r1)
        write_simple_log(pair.later, r2)
        before = [open(p, "rb").read() for p in (r1, r2)]
        codes = [cli_main(["audit", "--n", str(pair.n), "--bk-max-len", "2", "--out", os.path.join(d, o), r1, r2])
                 for o in ("x", "y")]
        assert codes[0] == codes[1]
        after = [open(p, "rb").read() for p in (r1, r2)]
        assert before == after
        if codes[0] == 0:
            a = open(os.path.join(d, "x", "audit.json"), "rb").read()
            b = open(os.path.join(d, "y", "audit.json"), "rb").read()
            assert a == b
            json.loads(a)
