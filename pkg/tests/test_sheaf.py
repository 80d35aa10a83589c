import pytest
from hypothesis import given, settings, strategies as st

import localcy.sheaf as sheaf
from localcy.ainf import stasheff_defect, transfer
from localcy.core import homology_splitting
from localcy.sheaf import (CechComplex, LineBundleSum, closed_form_cohomology, ext_table,
                           koszul_point_ext, koszul_v_algebra, line_bundle_cohomology,
                           local_block, local_cy_compare, minimal_endomorphism_algebra,
                           total_space_ext, cech_endomorphism_dg_algebra)


@pytest.mark.parametrize("n,d,expected", [
    (1, 2, (3, 0)),
    (1, -3, (0, 2)),
    (2, -3, (0, 0, 1)),
    (0, 0, (1,)),
    (3, -4, (0, 0, 0, 1)),
])
def test_line_bundle_cohomology_examples(n, d, expected):
    assert line_bundle_cohomology(n, d) == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(-10, 10))
def test_row_reduction_matches_monomial_count(n, d):
    assert line_bundle_cohomology(n, d) == closed_form_cohomology(n, d)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(-10, 10))
def test_serre_palindrome(n, d):
    h = line_bundle_cohomology(n, d)
    dual = line_bundle_cohomology(n, -d - n - 1)
    assert all(h[j] == dual[n - j] for j in range(n + 1))


def test_full_complex_agrees_with_blockwise_dims():
    for n, d, w in [(1, -2, 4), (1, 3, 6), (2, -3, 4), (2, 1, 4)]:
        C = CechComplex(n, d, window=w)
        S = homology_splitting(C.build())
        full = [0] * (n + 1)
        for q in S.h_degrees:
            full[q] += 1
        assert tuple(full) == C.dims()


def test_local_blocks_canonical_representatives_are_cocycles():
    for n in range(4):
        for N in (frozenset(), frozenset(range(n + 1))):
            B = local_block(n, N)
            for v in B.split.H:
                assert not B.d.apply(v)


def test_ext_examples_p1():
    G = LineBundleSum(1, (0, 1))
    assert ext_table(G, G)[0] == 4
    assert ext_table(G, LineBundleSum(1, (-2, -1)))[1] == 4


def test_ext_of_structure_sheaf():
    for n in range(4):
        O = LineBundleSum(n, (0,))
        assert ext_table(O, O).dims() == (1,) + (0,) * n


def test_beilinson_endomorphism_dimensions():
    assert minimal_endomorphism_algebra(LineBundleSum(0, (0,))).space.dim == 1
    assert minimal_endomorphism_algebra(LineBundleSum.beilinson(1)).space.dim == 4
    assert minimal_endomorphism_algebra(LineBundleSum.beilinson(2)).space.dim == 15


def test_minimal_endomorphism_rejects_higher_ext():
    with pytest.raises(ValueError):
        minimal_endomorphism_algebra(LineBundleSum(1, (0, 2)))


def test_cech_of_o_is_k():
    A = cech_endomorphism_dg_algebra(LineBundleSum(1, (0,)))
    assert A.cohomology_dims() == {0: 1}


def test_corrupted_cech_differential_is_detected(monkeypatch):
    # dropping the alternating signs breaks b1∘b1 = 0, the arity-one Stasheff relation
    orig = sheaf._delta_cell
    monkeypatch.setattr(sheaf, "_delta_cell", lambda n, I: {K: abs(s) for K, s in orig(n, I).items()})
    saved = dict(sheaf._LOCAL)
    sheaf._LOCAL.clear()
    try:
        with pytest.raises(ArithmeticError):
            cech_endomorphism_dg_algebra(LineBundleSum(2, (0, 1)), max_arity=3)
    finally:
        sheaf._LOCAL.clear()
        sheaf._LOCAL.update(saved)


def test_point_koszul_oracle():
    assert koszul_point_ext() == (1, 1)
    O = LineBundleSum(0, (0,))
    assert total_space_ext(O, O, LineBundleSum(0, (-1,))) == {0: 1, 1: 1}


def test_total_space_ext_local_p1_p2():
    assert total_space_ext(LineBundleSum.beilinson(1), LineBundleSum.beilinson(1),
                           LineBundleSum(1, (-2,))) == {0: 4, 1: 0, 2: 4}
    assert total_space_ext(LineBundleSum.beilinson(2), LineBundleSum.beilinson(2),
                           LineBundleSum(2, (-3,))) == {0: 15, 1: 0, 2: 0, 3: 15}


def test_koszul_wrong_twist_rejected():
    with pytest.raises(ValueError):
        koszul_v_algebra(LineBundleSum.beilinson(1), LineBundleSum(1, (-1,)))


def test_koszul_cohomology_matches_ext():
    for n in (0, 1, 2):
        G = LineBundleSum.beilinson(n)
        E = LineBundleSum(n, (-n - 1,))
        V = koszul_v_algebra(G, E, max_arity=3)
        ext = total_space_ext(G, G, E)
        assert {j: V.cohomology_dims().get(j, 0) for j in ext} == ext


def test_koszul_differential_preserves_aux(rng):
    V = koszul_v_algebra(LineBundleSum.beilinson(1), LineBundleSum(1, (-2,)), max_arity=3)
    for s, t, S, tw in V.hom_blocks():
        for a in sheaf.weights_in_window(1, tw, 3):
            key = (s, t, S, a, (0,))
            for k in V.d({key: 1}):
                assert V.aux(k) == V.aux(key)
                assert V.degree(k) == V.degree(key) + 1


def test_point_transfer_is_exterior_algebra():
    V = koszul_v_algebra(LineBundleSum(0, (0,)), LineBundleSum(0, (-1,)), max_arity=4)
    H = transfer(V, K_out=4, labels=V.labels()).H
    assert H.space.graded_dims() == {0: 1, 1: 1}
    eps = next(i for i, q in enumerate(H.space.degrees) if q == 1)
    assert not H.b[2].get((eps, eps))
    for n in range(1, 5):
        assert stasheff_defect(H, n) == {}


def test_local_p1_transfer_dims_and_aux():
    V = koszul_v_algebra(LineBundleSum.beilinson(1), LineBundleSum(1, (-2,)), max_arity=3)
    H = transfer(V, K_out=3, labels=V.labels()).H
    assert H.dim == 8
    assert sorted(set(H.space.aux)) == [0, 1]


def test_local_cy_point():
    r = local_cy_compare(0)
    assert r.ok
    assert r.lhs_dims == r.rhs_dims == {0: 1, 1: 1}


def test_local_cy_p1():
    r = local_cy_compare(1)
    assert r.ok, r.failure
    assert r.lhs_dims == r.rhs_dims == {0: 4, 1: 0, 2: 4}
    assert not any(r.cyclicity.values())
    assert "witness: found" in r.lines()
