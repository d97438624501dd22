from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qpdnls.combinatorics import (branch_count, check_tree, dd, ell, enumerate_A, enumerate_branches, enumerate_G,
                                  enumerate_R, factorial_sum_bound_check, factorial_sum_checks, format_tree, g_cardinality, leaf_count,
                                  m_value, p_value, parse_tree, r_cardinality, sigma, unit_indices, verify_combinatorics)
from qpdnls.errors import EnumerationTooLarge, UsageError

def trees(k):
    if k == 1:
        return st.sampled_from([0, 1])
    child = trees(k - 1)
    return st.one_of(st.just(0), st.tuples(child, child, child))

def test_branch_counts():
    assert [branch_count(k) for k in (1, 2, 3)] == [2, 9, 730]
    assert [len(enumerate_branches(k)) for k in (1, 2, 3)] == [2, 9, 730]
    assert enumerate_branches(1) == [0, 1]
    assert sum(len(enumerate_branches(k)) for k in (1, 2, 3)) == 741

def test_enumeration_budget():
    with pytest.raises(EnumerationTooLarge) as info:
        enumerate_branches(4)
    assert info.value.cardinality == 1 + 730 ** 3
    with pytest.raises(EnumerationTooLarge):
        enumerate_branches(3, budget=100)

def test_tree_statistics():
    assert sigma(0) == Fraction(1, 2) and ell(0) == 0
    assert sigma(1) == Fraction(3, 2) and ell(1) == 1
    gamma = (1, 0, 1)
    assert sigma(gamma) == Fraction(7, 2)
    assert ell(gamma) == 3
    assert dd(gamma) == 3
    assert leaf_count(gamma) == 7
    assert dd(((1, 1, 1), 0, 0)) == 5 * 4

@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3).flatmap(lambda k: st.tuples(st.just(k), trees(k))))
def test_sigma_is_ell_plus_half(case):
    k, gamma = case
    check_tree(gamma, k)
    s = sigma(gamma)
    assert isinstance(s, Fraction)
    assert s == ell(gamma) + Fraction(1, 2)
    assert (2 * s).numerator % 2 == 1

def test_tree_text_form():
    assert format_tree(((1, 0, 1), 0, 0)) == "((1,0,1),0,0)"
    assert parse_tree("((1, 0, 1), 0, 0)") == ((1, 0, 1), 0, 0)
    for bad in ("(1,0)", "2", "(1,0,1", "(1,0,1))"):
        with pytest.raises(UsageError):
            parse_tree(bad)

def test_check_tree_rejects_misplaced_leaves():
    with pytest.raises(UsageError):
        check_tree(1, 2)
    with pytest.raises(UsageError):
        check_tree((0, 0, 0), 1)
    with pytest.raises(UsageError):
        check_tree((1, 1, 1), 3)

def test_R_family_is_a_multiset():
    family = enumerate_R((1, 1, 1))
    assert family.cardinality == r_cardinality((1, 1, 1)) == 9 * 27
    assert family.lengths() == {9}
    assert family.weights() == {4}
    assert len(set(family.members)) < family.cardinality
    assert enumerate_R(1).members == unit_indices(3)

def test_p_values():
    assert p_value(0).enumeration == 1
    assert p_value(1).enumeration == 3
    value = p_value((1, 1, 1))
    assert value.enumeration == value.recursion == 324
    assert value.method == "flat"

def test_factorized_p_matches_flat():
    for gamma in enumerate_branches(3)[:40]:
        flat = p_value(gamma, flat_budget=10 ** 6)
        # every depth-2 family fits in 243 while most parents do not
        blockwise = p_value(gamma, flat_budget=243)
        assert flat.enumeration == blockwise.enumeration == flat.recursion

def test_G_families():
    for k in range(1, 6):
        family = enumerate_G(k)
        assert family.cardinality == g_cardinality(k)
        assert family.lengths() == {2 * k + 1}
        assert family.weights() == {k}
    assert g_cardinality(3) == 3 * 5 * 7

def test_A_family_and_factorial_sum():
    assert enumerate_A(2, 2).members == [(0, 2), (1, 1), (2, 0)]
    result = factorial_sum_bound_check(2, 2)
    assert (result.exact, result.bound, result.passed) == (5, 16, True)
    # N = 1 reduces to L! < 2^L
    assert factorial_sum_bound_check(1, 4) == (24, 16, False)
    assert factorial_sum_bound_check(2, 8) == (95616, 65536, False)
    failing = {(N, L) for N in range(1, 9) for L in range(1, 9) if not factorial_sum_bound_check(N, L).passed}
    assert failing == {(1, 4), (1, 5), (1, 6), (1, 7), (1, 8), (2, 8)}

def test_factorial_sum_rows_flag_failing_pairs(capsys):
    checks = factorial_sum_checks()
    assert len(checks) == 64 and all(check.passed for check in checks)
    unasserted = {check.instance for check in checks if check.lemma == "factorial_sum_unasserted"}
    assert unasserted == {"N=1 L=4", "N=1 L=5", "N=1 L=6", "N=1 L=7", "N=1 L=8", "N=2 L=8"}
    row = next(check for check in checks if check.instance == "N=2 L=8")
    assert (row.expected, row.actual) == ("<65536 (stated, fails)", "95616")
    assert "Warning:" in capsys.readouterr().out

def test_m_value():
    T = Fraction(4, 81)
    m1 = m_value(1, T)
    assert m1.full == 1 + 3 * T
    m2 = m_value(2, T)
    assert m2.full == 1 + 3 * T * m1.full ** 3
    assert m2.full <= Fraction(3, 2)
    assert m2.split <= m2.full
    assert m_value(2, Fraction(0)).full == 1
    with pytest.raises(UsageError):
        m_value(1, -1)

def test_verify_combinatorics_passes():
    checks = verify_combinatorics(max_depth=2, m_grid=10, max_g=4, max_factorial=4)
    assert checks and all(check.passed for check in checks)
    lemmas = {check.lemma for check in checks}
    assert {"branch_count", "sigma_ell", "index_length", "index_weight", "p_recursion", "g_family", "m_full",
            "m_split", "m_recursion", "factorial_sum"} <= lemmas

def test_verify_combinatorics_full_depth():
    checks = verify_combinatorics(max_depth=3)
    failures = [check for check in checks if not check.passed]
    assert failures == []
    sigma_rows = [check for check in checks if check.lemma == "sigma_ell"]
    assert len(sigma_rows) == 2 + 9 + 730
    p_rows = [check for check in checks if check.lemma == "p_recursion"]
    assert len(p_rows) == 741
    split = [check for check in checks if check.lemma == "m_split" and check.instance.startswith("k=3 ")]
    assert len(split) == 50
    assert len([check for check in checks if check.lemma == "m_recursion"]) == 100
    assert len([check for check in checks if check.lemma.startswith("factorial_sum")]) == 64
