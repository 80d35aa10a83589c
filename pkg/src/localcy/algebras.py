"""Small dg-algebras used as fixtures, oracles and random test inputs."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .core import ONE, GradedSpace, inverse, vadd
from .ainf import DgAlgebra


def ground_field() -> DgAlgebra:
    V = GradedSpace(("1",), (0,))
    return DgAlgebra(V, {}, {(0, 0): {0: ONE}}, unit="1")


def dual_numbers(deg: int = 1) -> DgAlgebra:
    """k[ε]/ε² with |ε| = deg."""
    V = GradedSpace(("1", "e"), (0, deg))
    m2 = {(0, 0): {0: ONE}, (0, 1): {1: ONE}, (1, 0): {1: ONE}}
    return DgAlgebra(V, {}, m2, unit="1")


def truncated_polynomial(n: int, deg: int = 0) -> DgAlgebra:
    """k[x]/x^n, |x| = deg (deg must be even when n > 2)."""
    labels = tuple("1" if i == 0 else f"x{i}" for i in range(n))
    V = GradedSpace(labels, tuple(i * deg for i in range(n)))
    m2 = {(i, j): {i + j: ONE} for i in range(n) for j in range(n) if i + j < n}
    return DgAlgebra(V, {}, m2, unit="1")


def path_algebra(grades: Sequence[int], pairs: Sequence[Tuple[int, int]],
                 differential: Optional[Dict[Tuple[int, int], Fraction]] = None) -> DgAlgebra:
    """Graded matrix subalgebra spanned by E_ij, (i, j) ∈ pairs (closed under
    composition), |E_ij| = grades[j] - grades[i], E_ij E_jk = E_ik.

    ``differential`` gives X = Σ c E_ij of degree 1 with X² = 0; then
    d(a) = X a - (-1)^{|a|} a X.
    """
    pairs = sorted(set(pairs))
    index = {p: r for r, p in enumerate(pairs)}
    labels = tuple(f"E{i}{j}" for i, j in pairs)
    degs = tuple(grades[j] - grades[i] for i, j in pairs)
    V = GradedSpace(labels, degs)
    m2 = {}
    for (i, j) in pairs:
        for (jj, k) in pairs:
            if j == jj:
                if (i, k) not in index:
                    raise ValueError("pairs are not closed under composition")
                m2[(index[(i, j)], index[(jj, k)])] = {index[(i, k)]: ONE}
    A = DgAlgebra(V, {}, m2)
    if differential:
        X = {index[p]: Fraction(c) for p, c in differential.items() if c}
        if A.mul(X, X):
            raise ValueError("X² ≠ 0")
        m1 = {}
        for r in range(V.dim):
            e = {r: ONE}
            sign = -1 if degs[r] % 2 else 1
            img = vadd(A.mul(X, e), A.mul(e, X), -sign)
            if img:
                m1[r] = img
        A = DgAlgebra(V, m1, m2)
    return A


def upper_triangular(n: int = 2) -> DgAlgebra:
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    return path_algebra([0] * n, pairs)


def direct_product(A: DgAlgebra, B: DgAlgebra) -> DgAlgebra:
    V = GradedSpace(tuple("a." + x for x in A.space.labels) + tuple("b." + x for x in B.space.labels),
                    A.space.degrees + B.space.degrees)
    off = A.space.dim
    shift = lambda v: {j + off: c for j, c in v.items()}
    m1 = dict(A.m1)
    m1.update({i + off: shift(v) for i, v in B.m1.items()})
    m2 = dict(A.m2)
    m2.update({(i + off, j + off): shift(v) for (i, j), v in B.m2.items()})
    return DgAlgebra(V, m1, m2)


def change_basis(A: DgAlgebra, T: List[List[Fraction]]) -> DgAlgebra:
    """Structure constants in the basis f_j = Σ_i T[i][j] e_i (T degree preserving)."""
    n = A.space.dim
    Tinv = inverse(T)
    col = lambda j: {i: T[i][j] for i in range(n) if T[i][j]}
    to_new = lambda v: {r: sum(Tinv[r][i] * x for i, x in v.items())
                        for r in range(n) if any(Tinv[r][i] for i in v)}
    clean = lambda v: {k: x for k, x in v.items() if x}
    m1 = {j: clean(to_new(A.d(col(j)))) for j in range(n)}
    m2 = {(a, b): clean(to_new(A.mul(col(a), col(b)))) for a in range(n) for b in range(n)}
    return DgAlgebra(A.space, m1, m2)


def massey_algebra(p: int = 1, c1=1, c2=1) -> DgAlgebra:
    """Basis x (p), s (2p-1), y (2p), w (3p-1): x·x = y = d s, s·x = c1 w,
    x·s = c2 w, all else zero.  ⟨x, x, x⟩ is generically nonzero."""
    V = GradedSpace(("x", "s", "y", "w"), (p, 2 * p - 1, 2 * p, 3 * p - 1))
    m2 = {(0, 0): {2: ONE}, (1, 0): {3: Fraction(c1)}, (0, 1): {3: Fraction(c2)}}
    return DgAlgebra(V, {1: {2: ONE}}, m2)


def _closure(pairs):
    pairs = set(pairs)
    changed = True
    while changed:
        changed = False
        for (i, j) in list(pairs):
            for (jj, k) in list(pairs):
                if j == jj and (i, k) not in pairs:
                    pairs.add((i, k))
                    changed = True
    return pairs


def random_dg_algebra(rng: random.Random, max_dim: int = 5) -> DgAlgebra:
    """Random graded path-type dg-algebra of dimension ≤ max_dim, conjugated
    by a random degree-preserving change of basis."""
    while True:
        if rng.random() < 0.3:
            A = massey_algebra(rng.randint(-1, 2), rng.choice([-2, -1, 1, 2]),
                               rng.choice([-1, 0, 1, 3]))
            break
        nv = rng.randint(1, 3)
        grades = [rng.randint(-1, 2) for _ in range(nv)]
        if nv > 1 and rng.random() < 0.6:
            grades[1] = grades[0] + 1
        allpairs = [(i, j) for i in range(nv) for j in range(nv)]
        pairs = _closure(p for p in allpairs if rng.random() < 0.45)
        if not pairs or len(pairs) > max_dim:
            continue
        pairs = sorted(pairs)
        ones = [p for p in pairs if p[0] != p[1] and grades[p[1]] - grades[p[0]] == 1]
        X = {}
        if ones:
            for p in ones:
                if rng.random() < 0.7:
                    X[p] = Fraction(rng.choice([-2, -1, 1, 2, 3]))
        try:
            A = path_algebra(grades, pairs, X or None)
        except ValueError:
            continue
        break
    n = A.space.dim
    T = [[Fraction(0)] * n for _ in range(n)]
    for block in A.space.blocks().values():
        while True:
            for i in block:
                for j in block:
                    T[i][j] = Fraction(rng.randint(-2, 2))
            try:
                inverse(T if len(block) == n else [[T[i][j] for j in block] for i in block])
                break
            except ZeroDivisionError:
                continue
    return change_basis(A, T)
