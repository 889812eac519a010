import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import eratosthenes, ps_terms_decimal
from psprimes import experiments as ex
from psprimes.model import conjecture_main_term
from psprimes.singular_series import constants, modified_pair_table

exponents = st.floats(1.01, 1.99, allow_nan=False)


def oracle_pairs(x, c1, c2):
    """(count, {gap: count}) from a list sieve and 60-digit decimal powers."""
    ps = eratosthenes(x + 200)
    s1, s2 = set(ps_terms_decimal(c1, ps[-1])), set(ps_terms_decimal(c2, ps[-1]))
    total, gaps = 0, {}
    for p, q in zip(ps, ps[1:]):
        if p > x:
            break
        if p in s1 and q in s2:
            total += 1
            gaps[q - p] = gaps.get(q - p, 0) + 1
    return total, gaps


def cfg(x, c1, c2, **kw):
    return ex.PairExperimentConfig(x, c1, c2, **kw)


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(1, 1.5, 1.5)
    with pytest.raises(ValueError):
        cfg(100, 2.5, 1.5)
    with pytest.raises(ValueError):
        cfg(100, 1.5, 1.0)
    with pytest.raises(ValueError):
        cfg(100, 1.5, 1.5, threads=0)
    assert cfg(100.0, 1.5, 1.5).x == 100


def test_brute_force_hand_cases():
    # N^(1.5) up to 40: 1,2,5,8,11,14,18,22,27,31,36; primes 2,5,11 are followed by 3,7,13
    assert ps_terms_decimal(1.5, 40) == [1, 2, 5, 8, 11, 14, 18, 22, 27, 31, 36]
    assert ex.brute_force_count(30, 1.5, 1.5) == 0
    assert ex.brute_force_count(10, 1.5, 1.5) == 0
    assert ex.brute_force_count(2, 1.5, 1.5) == 0
    assert ex.brute_force_count(100, 1.5, 1.5) == oracle_pairs(100, 1.5, 1.5)[0]


def test_brute_force_limit():
    with pytest.raises(ValueError):
        ex.brute_force_count(10**6 + 1, 1.5, 1.5)


@pytest.mark.parametrize("x", [10, 30, 100])
def test_count_small_examples(x):
    rec = ex.count_ps_pairs(cfg(x, 1.5, 1.5))
    assert rec.count == ex.brute_force_count(x, 1.5, 1.5)


def test_count_x2_single_pair():
    # only the pair (2, 3); 2 = floor(2^1.5) but 3 is skipped by c = 1.5
    rec = ex.count_ps_pairs(cfg(2, 1.5, 1.5))
    assert rec.pi_total == 1
    assert rec.count == 0
    assert rec.main_term is None and rec.ratio is None
    # for c2 close to 1 every small integer is a member, so (2, 3) counts
    rec = ex.count_ps_pairs(cfg(2, 1.05, 1.05))
    assert rec.count == 1
    assert ex.brute_force_count(2, 1.05, 1.05) == 1


def test_count_million_frozen_oracle():
    # frozen from oracle_pairs (decimal powers, list sieve); about 3 minutes to recompute
    r = ex.run_pair_experiment(cfg(10**6, 1.2, 1.8), timing=False)
    assert r.record.count == 27
    assert r.gaps.odd_excluded == 1
    assert {g.h: g.count_h for g in r.gaps.records}[2] == 2
    assert ex.count_ps_pairs(cfg(10**6, 1.5, 1.5)).count == 1


def test_per_gap_twin_class_million():
    # h = 2 class at 10^6 for c1 = c2 = 1.05, frozen from oracle_pairs
    gaps = ex.count_per_gap(cfg(10**6, 1.05, 1.05, per_gap=True))
    assert gaps.records[0].h == 2
    assert gaps.records[0].count_h == 3837


def test_per_gap_matches_oracle_small():
    total, want = oracle_pairs(3 * 10**4, 1.1, 1.15)
    run = ex.run_pair_experiment(cfg(3 * 10**4, 1.1, 1.15), timing=False)
    got = {g.h: g.count_h for g in run.gaps.records if g.count_h}
    assert got == {h: c for h, c in want.items() if h % 2 == 0}
    assert run.record.count == total


@settings(max_examples=15)
@given(st.integers(2, 10**5), exponents, exponents)
def test_oracle_identity(x, c1, c2):
    assert ex.count_ps_pairs(cfg(x, c1, c2), timing=False).count == ex.brute_force_count(x, c1, c2)


@settings(max_examples=15)
@given(st.integers(2, 10**6), exponents, exponents, st.booleans())
def test_record_invariants_and_partition(x, c1, c2, per_gap):
    run = ex.run_pair_experiment(cfg(x, c1, c2, per_gap=per_gap), timing=False)
    rec, gaps = run.record, run.gaps
    assert 0 <= rec.count <= rec.pi_c1 <= rec.pi_total
    if rec.count > 0 and rec.ratio is not None:
        assert rec.ratio > 0
    assert gaps.total() + gaps.odd_excluded == rec.count
    assert gaps.odd_excluded in (0, 1)
    assert all(g.h % 2 == 0 and g.h <= gaps.h_cap for g in gaps.records)
    assert gaps.h_cap == int(math.log(max(x, 3)) ** 3)


@settings(max_examples=10)
@given(exponents, exponents, st.lists(st.integers(2, 2 * 10**5), min_size=2, max_size=5))
def test_monotone_in_x(c1, c2, xs):
    counts = [ex.count_ps_pairs(cfg(x, c1, c2), timing=False).count for x in sorted(xs)]
    assert counts == sorted(counts)


@pytest.mark.parametrize("c", [1.3, 1.5, 1.7])
def test_ps_prime_sanity(c):
    rec = ex.count_ps_pairs(cfg(10**7, c, 1.5), timing=False)
    v = rec.pi_c1 * math.log(1e7) / 1e7 ** (1 / c)
    assert 0.8 <= v <= 1.2


def test_deterministic_across_threads():
    reps = [ex.run_pair_experiment(cfg(3 * 10**6, 1.2, 1.4, threads=t), timing=False) for t in (1, 2, 4, 8)]
    first = reps[0]
    for r in reps[1:]:
        assert r.record == first.record
        assert r.gaps == first.gaps


def test_timing_recorded():
    rec = ex.count_ps_pairs(cfg(1000, 1.5, 1.5))
    assert rec.runtime_seconds is not None and rec.runtime_seconds >= 0
    assert set(rec.to_json_dict()) == {
        "x", "c1", "c2", "count", "pi_c1", "pi_total", "main_term", "ratio", "band",
        "runtime_seconds", "checkpoint_used",
    }


def test_gap_table_csv():
    t = ex.GapClassTable([ex.GapClassRecord(2, 3), ex.GapClassRecord(4, 0)], tail=1, h_cap=4)
    assert t.to_csv() == "h,count_h\n2,3\n4,0\ntail,1\n"
    assert t.total() == 4


def test_checkpoint_resume(tmp_path):
    path = str(tmp_path / "ck.txt")
    full = ex.run_pair_experiment(cfg(2 * 10**6, 1.3, 1.6), timing=False)
    first = ex.run_pair_experiment(cfg(2 * 10**6, 1.3, 1.6, checkpoint_path=path), timing=False)
    again = ex.run_pair_experiment(cfg(2 * 10**6, 1.3, 1.6, checkpoint_path=path), timing=False)
    assert not first.record.checkpoint_used
    assert again.record.checkpoint_used
    for r in (first, again):
        assert r.record.count == full.record.count
        assert r.gaps == full.gaps


def test_geometric_grid():
    assert ex.geometric_grid(10**5) == [100, 316, 1000, 3162, 10000, 31623, 100000]
    assert ex.geometric_grid(99) == []


def test_verify_averages_small_rows():
    rep = ex.verify_lemma_averages(10, grid=[3, 4])
    assert rep.A == constants().A
    r3 = rep.rows[0]
    assert r3.h == 3
    s0 = modified_pair_table(4)
    # prefix over t = 1, 2 and pairs over 1 <= t1 < t2 <= 2
    assert abs(r3.prefix - (s0[1] + s0[2])) < 1e-15
    assert abs(r3.prefix - (-0.6796763684)) < 1e-9
    assert r3.pairs == -1.0
    want = -1.0 + 1.5 * math.log(3) - 1.5 * rep.A
    assert abs(r3.pair_residual - want) < 1e-12
    assert abs(r3.pair_norm - want / 3**0.6) < 1e-12
    with pytest.raises(ValueError):
        ex.verify_lemma_averages(10**6 + 1)
    with pytest.raises(ValueError):
        ex.verify_lemma_averages(10)


def test_verify_averages_report_flags():
    rep = ex.verify_lemma_averages(10**3)
    assert [r.h for r in rep.rows] == [100, 316, 1000]
    assert rep.passed == (rep.prefix_ratio <= 3 and rep.pair_ratio <= 3)


def test_verify_proposition_closed_forms():
    rep = ex.verify_proposition([1e3, 1e6, 1e9], [1, 2, 4, 8])
    assert rep.checks["closed_form"]
    assert rep.checks["truncation_stable"]
    assert rep.checks["r_bounded"] and rep.checks["s_bounded"]
    assert all(a.closed_form_error <= 1e-9 for a in rep.asymptotics)
    assert len(rep.k_decay) == 2 * 4
    assert len(rep.jk_decay) == 2 * 9
    assert {d.family for d in rep.k_decay} == {"one", "conjugate"}
    assert all(k in rep.checks for k in rep.spans)
    with pytest.raises(ValueError):
        ex.verify_proposition([], [1])


def test_compare_with_conjecture_wiring():
    row = ex.compare_with_conjecture(cfg(10**5, 1.2, 1.3), timing=False)
    main = conjecture_main_term(10**5, 1.2, 1.3)
    assert row.record.main_term == main
    assert row.record.band == main / math.sqrt(math.log(1e5))
    assert row.record.ratio == row.record.count / main
    assert (row.lower, row.upper) == (main - row.record.band, main + row.record.band)
    with pytest.raises(ValueError):
        ex.compare_with_conjecture(cfg(2, 1.5, 1.5))
