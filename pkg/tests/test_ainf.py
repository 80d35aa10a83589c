import random
from fractions import Fraction

import pytest

from localcy.ainf import (AInfMorphism, AInfStructure, DefectError, DgAlgebra, check_stasheff,
                          convert_b_m, from_dg, is_quasi_isomorphism, morphism_defect,
                          stasheff_defect, transfer)
from localcy.algebras import (dual_numbers, ground_field, massey_algebra, path_algebra,
                              random_dg_algebra, truncated_polynomial, upper_triangular)
from localcy.core import ONE, GradedSpace
from localcy.sheaf import LineBundleSum, cech_endomorphism_dg_algebra, minimal_endomorphism_algebra


def test_ground_field_has_only_b2():
    A = from_dg(ground_field())
    assert set(A.b) == {2}
    assert convert_b_m(A)[2] == {(0, 0): {0: ONE}}


def test_dual_numbers_eps_squared_zero():
    A = from_dg(dual_numbers(1))
    assert (1, 1) not in A.b[2]
    check_stasheff(A)


def test_suspension_sign_on_odd_square():
    # x·x = y with |x| = 1: b2(sx, sx) = (-1)^{|x|} s(x·x) = -sy
    V = GradedSpace(("x", "y"), (1, 2))
    A = from_dg(DgAlgebra(V, {}, {(0, 0): {1: ONE}}))
    assert A.b[2] == {(0, 0): {1: Fraction(-1)}}
    assert convert_b_m(A)[2] == {(0, 0): {1: ONE}}


def test_b_m_round_trip(rng):
    for _ in range(10):
        A = from_dg(random_dg_algebra(rng), max_arity=4)
        m = convert_b_m(A)
        assert convert_b_m((A.space, m), "m->b") == A.b


def test_stasheff_n1_is_d_squared():
    A = from_dg(massey_algebra())
    assert stasheff_defect(A, 1) == {}


def test_associative_algebra_has_no_arity3_defect():
    for D in (truncated_polynomial(3), upper_triangular(3), dual_numbers(0)):
        assert stasheff_defect(from_dg(D), 3) == {}


def test_corrupted_b2_detected_at_arity3():
    A = from_dg(upper_triangular(2))
    b = {k: {kk: dict(v) for kk, v in t.items()} for k, t in A.b.items()}
    key = next(iter(sorted(b[2])))
    out = next(iter(b[2][key]))
    b[2][key][out] += 1
    bad = AInfStructure(A.space, b, A.max_arity, check=False)
    assert stasheff_defect(bad, 3)
    with pytest.raises(DefectError) as err:
        check_stasheff(bad)
    assert err.value.arity == 3


def test_identity_morphism_defect_zero():
    A = from_dg(massey_algebra(), max_arity=4)
    F = AInfMorphism.identity(A)
    for n in range(1, 5):
        assert morphism_defect(F, n) == {}
    assert is_quasi_isomorphism(F)


def test_algebra_map_is_morphism_iff_multiplicative():
    # projection k[x]/x^3 → k[x]/x^2 is multiplicative; the map x ↦ 0, 1 ↦ 1, x² ↦ x is not
    A = from_dg(truncated_polynomial(3))
    B = from_dg(truncated_polynomial(2))
    good = AInfMorphism(A, B, {1: {(0,): {0: ONE}, (1,): {1: ONE}}})
    bad = AInfMorphism(A, B, {1: {(0,): {0: ONE}, (2,): {1: ONE}}})
    assert morphism_defect(good, 2) == {}
    assert morphism_defect(bad, 2) != {}


def test_zero_map_is_not_quasi_isomorphism():
    A = from_dg(ground_field())
    assert not is_quasi_isomorphism(AInfMorphism(A, A, {1: {}}))


def test_transfer_of_minimal_is_identity():
    A = from_dg(upper_triangular(2), max_arity=4)
    H, i, p = transfer(A, K_out=4)
    assert H.space.labels == A.space.labels
    assert H.b == A.b
    assert i.component(1) == {(r,): {r: ONE} for r in range(A.dim)}
    assert all(not t for k, t in i.F.items() if k > 1)


def test_transfer_of_acyclic_is_zero():
    V = GradedSpace(("a", "b"), (0, 1))
    D = DgAlgebra(V, {0: {1: ONE}}, {})
    H = transfer(from_dg(D), K_out=3).H
    assert H.dim == 0


def test_massey_product_survives():
    H = transfer(from_dg(massey_algebra(1, 1, 1), max_arity=4), K_out=4).H
    assert H.dim == 2
    assert H.b.get(3)
    check_stasheff(H)


@pytest.mark.parametrize("seed", range(12))
def test_transfer_is_stasheff_exact(seed):
    rng = random.Random(seed)
    D = random_dg_algebra(rng)
    A = from_dg(D, max_arity=5)
    H, i, p = transfer(A, K_out=5)
    for n in range(1, 6):
        assert stasheff_defect(H, n) == {}
        assert morphism_defect(i, n) == {}
    assert is_quasi_isomorphism(i)
    assert H.is_minimal()


def test_cech_endomorphisms_of_o_on_p1():
    A = cech_endomorphism_dg_algebra(LineBundleSum(1, (0,)))
    H = transfer(A, K_out=3, labels=A.labels()).H
    assert H.space.graded_dims() == {0: 1}


def test_cech_endomorphisms_of_o_plus_o1_match_monomial_multiplication():
    G = LineBundleSum(1, (0, 1))
    A = cech_endomorphism_dg_algebra(G, max_arity=5)
    H = transfer(A, K_out=5, labels=A.labels()).H
    assert H.space.graded_dims() == {0: 4}
    assert set(k for k, t in H.b.items() if t) == {2}
    B = from_dg(minimal_endomorphism_algebra(G), max_arity=5)
    assert H.space.labels == B.space.labels
    assert H.space.degrees == B.space.degrees
    assert H.b == B.b
    for n in range(1, 6):
        assert stasheff_defect(H, n) == {}


def test_cech_endomorphisms_with_higher_ext_have_higher_products():
    # End(O ⊕ O(2)) on P¹ has Ext¹ = H¹(O(-2)); the transferred b3 is nonzero here
    G = LineBundleSum(1, (0, 2))
    A = cech_endomorphism_dg_algebra(G, max_arity=4)
    H = transfer(A, K_out=4, labels=A.labels()).H
    assert H.space.graded_dims() == {0: 5, 1: 1}
    assert H.b.get(3)
    for n in range(1, 5):
        assert stasheff_defect(H, n) == {}


def test_path_algebra_rejects_non_closed_pairs():
    with pytest.raises(ValueError):
        path_algebra([0, 0, 0], [(0, 1), (1, 2)])
