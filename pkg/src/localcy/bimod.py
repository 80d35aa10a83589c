"""A∞-bimodules, dual bimodules, trivial extensions and cyclic pairings.

Bimodule coefficients b_{k,l} live in the index space of A ⊕ M: module
basis element r has combined index ``dim A + r``.  With that encoding the
trivial extension A(M) is literally the union of the algebra and bimodule
tables.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .core import ONE, GradedSpace, rank, vadd
from .ainf import (AInfStructure, DefectError, DgAlgebra, Table, convert_b_m, insert, by_output,
                   stasheff_defect)


def _sign(e: int) -> int:
    return -1 if e % 2 else 1


class Bimodule:
    """Coefficients ``maps[(k, l)]`` keyed by combined-index tuples."""

    def __init__(self, algebra: AInfStructure, space: GradedSpace,
                 maps: Dict[Tuple[int, int], Table], max_arity: Optional[int] = None):
        self.algebra = algebra
        self.space = space
        self.maps = {kl: {k: v for k, v in t.items() if v} for kl, t in maps.items()}
        self.maps = {kl: t for kl, t in self.maps.items() if t}
        self.max_arity = max_arity or algebra.max_arity
        self.offset = algebra.dim

    def combined_space(self) -> GradedSpace:
        """A ⊕ M with the module summand in auxiliary degree one more than M's."""
        A = self.algebra.space
        M = self.space
        labels = M.labels
        while set(A.labels) & set(labels):
            labels = tuple(x + "'" for x in labels)
        aux = tuple(t + 1 for t in M.aux) if M.aux else (1,) * M.dim
        return A.direct_sum(GradedSpace(labels, M.degrees, aux))

    def module_index(self, r: int) -> int:
        return self.offset + r

    def tables_by_arity(self) -> Dict[int, Table]:
        out: Dict[int, Table] = {}
        for (k, l), table in self.maps.items():
            out.setdefault(k + l + 1, {}).update(table)
        return out


def trivial_extension_ainf(A: AInfStructure, M: Bimodule) -> AInfStructure:
    """A ⊕ M with b = b_A on pure-A inputs, b_{k,l} on one module slot and
    zero on two or more."""
    b = {k: dict(t) for k, t in A.b.items()}
    for n, table in M.tables_by_arity().items():
        b.setdefault(n, {}).update(table)
    return AInfStructure(M.combined_space(), b, min(A.max_arity, M.max_arity))


def bimodule_relation_defect(M: Bimodule, n_left: int, n_right: int) -> Table:
    """The bimodule relation with n_left algebra inputs before the module slot
    and n_right after; returns {} iff it holds."""
    n = n_left + n_right + 1
    if n > M.max_arity:
        raise ValueError(f"arity {n} exceeds max arity {M.max_arity}")
    T = trivial_extension_ainf(M.algebra, M)
    off = M.offset
    defect = stasheff_defect(T, n)
    return {key: v for key, v in defect.items()
            if key[n_left] >= off and sum(1 for u in key if u >= off) == 1}


def check_bimodule(M: Bimodule, upto: Optional[int] = None):
    for n in range(1, (upto or M.max_arity) + 1):
        for p in range(n):
            defect = bimodule_relation_defect(M, p, n - 1 - p)
            if defect:
                raise DefectError(f"bimodule relation fails at arity ({p},{n - 1 - p})", n, min(defect))


def diagonal_bimodule(A: AInfStructure) -> Bimodule:
    off = A.dim
    maps: Dict[Tuple[int, int], Table] = {}
    for n, table in A.b.items():
        for k in range(n):
            t = maps.setdefault((k, n - 1 - k), {})
            for key, vec in table.items():
                new = key[:k] + (key[k] + off,) + key[k + 1:]
                t[new] = {j + off: c for j, c in vec.items()}
    return Bimodule(A, A.space, maps)


def dual_bimodule(M: Bimodule) -> Bimodule:
    """b*_{k,l}(a_1..a_k, m*, a_{k+1}..a_{k+l})(m') =
    -(-1)^{|m*|} m*(b_{l,k}(a_{k+1}..a_{k+l}, m', a_1..a_k)), |m*| suspended.

    Module basis of M* is the dual basis; with the evaluation pairing the
    trivial extension A(A*) is cyclic."""
    A = M.algebra
    off = M.offset
    Mstar = M.space.dual()
    maps: Dict[Tuple[int, int], Table] = {}
    for (l, k), table in M.maps.items():
        for key, vec in table.items():
            right = key[:l]
            mprime = key[l] - off
            left = key[l + 1:]
            for m, c in vec.items():
                r = m - off
                sign = -_sign(Mstar.degrees[r] - 1)
                newkey = left + (r + off,) + right
                t = maps.setdefault((k, l), {})
                vadd(t.setdefault(newkey, {}), {mprime + off: c}, sign)
    return Bimodule(A, Mstar, maps, M.max_arity)


def shift_bimodule(M: Bimodule, r: int) -> Bimodule:
    """M[r]: degree q moves to q - r; b_{k,l} picks up (-1)^{r·(|a_{k+1}|+...+|a_{k+l}|)},
    suspended degrees of the inputs after the module slot."""
    sd = M.algebra.sdeg
    maps: Dict[Tuple[int, int], Table] = {}
    for (k, l), table in M.maps.items():
        out = maps.setdefault((k, l), {})
        for key, vec in table.items():
            s = _sign(r * sum(sd(a) for a in key[k + 1:]))
            out[key] = {j: s * c for j, c in vec.items()}
    return Bimodule(M.algebra, M.space.shift(r), maps, M.max_arity)


def double_dual_isomorphism(M: Bimodule) -> Dict[int, int]:
    """Signs ε_r of the canonical isomorphism M → M**, e_r ↦ (-1)^{|e_r|} e_r**.

    The signs are verified against every coefficient; returns ``{}`` if some
    entry disagrees."""
    DD = dual_bimodule(dual_bimodule(M))
    off = M.offset
    signs = {r: _sign(M.space.degrees[r]) for r in range(M.space.dim)}
    for kl in set(M.maps) | set(DD.maps):
        mine = M.maps.get(kl, {})
        theirs = DD.maps.get(kl, {})
        for key in set(mine) | set(theirs):
            e_in = signs[key[kl[0]] - off]
            lhs = {j: c * signs[j - off] for j, c in mine.get(key, {}).items()}
            rhs = {j: c * e_in for j, c in theirs.get(key, {}).items()}
            if lhs != rhs:
                return {}
    return signs


# -- pairings ---------------------------------------------------------------

class Pairing:
    """Bilinear form on a graded space, ``matrix[(i, j)] = ⟨e_i, e_j⟩``."""

    def __init__(self, space: GradedSpace, degree: int, matrix: Dict[Tuple[int, int], Fraction],
                 trace: Optional[Dict[int, Fraction]] = None):
        self.space = space
        self.degree = degree
        self.matrix = {k: Fraction(v) for k, v in matrix.items() if v}
        self.trace = trace
        for (i, j) in self.matrix:
            if space.degrees[i] + space.degrees[j] != -degree:
                raise ValueError("pairing entry of the wrong degree")
        self._rows: Dict[int, Dict[int, Fraction]] = {}
        for (i, j), v in self.matrix.items():
            self._rows.setdefault(i, {})[j] = v

    def __call__(self, i, j) -> Fraction:
        return self.matrix.get((i, j), Fraction(0))

    def row(self, i) -> Dict[int, Fraction]:
        return self._rows.get(i, {})

    def symmetry_defect(self) -> List[Tuple[int, int]]:
        bad = []
        for (i, j), v in self.matrix.items():
            s = _sign(self.space.degrees[i] * self.space.degrees[j])
            if self(j, i) != s * v:
                bad.append((i, j))
        return bad

    def is_symmetric(self) -> bool:
        return not self.symmetry_defect()

    def dense(self) -> List[List[Fraction]]:
        n = self.space.dim
        return [[self(i, j) for j in range(n)] for i in range(n)]

    def is_nondegenerate(self) -> bool:
        return rank(self.dense()) == self.space.dim if self.space.dim else True

    def cohomology_rank(self, split) -> int:
        """Rank of the induced form on cocycle representatives."""
        H = split.H
        M = [[sum(x * y * self(i, j) for i, x in u.items() for j, y in v.items()) for v in H]
             for u in H]
        return rank(M) if M else 0

    def is_cohomologically_nondegenerate(self, A) -> bool:
        split = A.splitting()
        return self.cohomology_rank(split) == len(split.H)


def dg_trivial_extension_with_pairing(A: DgAlgebra) -> Tuple[DgAlgebra, Pairing]:
    """A(A*) with m·m' = 0 and the invariant graded-symmetric pairing.

    With ⟨a, φ⟩ = φ(a) and ⟨φ, a⟩ = (-1)^{|a||φ|} φ(a), invariance
    ⟨xy, z⟩ = ⟨x, yz⟩ forces
        (b·φ)(a) = φ(ab),
        (φ·b)(a) = (-1)^{|a|(|φ|+|b|) + |φ|(|b|+|a|)} φ(ba),
        (dφ)(a)  = (-1)^{|φ|} φ(da).
    """
    V = A.space
    n = V.dim
    Vs = V.dual()
    W = V.direct_sum(Vs)
    deg = V.degrees
    dstar = lambda r: -deg[r]
    m1 = {i: dict(v) for i, v in A.m1.items()}
    # (dφ_r)(a) = (-1)^{|φ_r|} φ_r(da): coefficient of φ_a is that value
    for a, img in A.m1.items():
        for r, c in img.items():
            vadd(m1.setdefault(n + r, {}), {n + a: _sign(dstar(r)) * c})
    m2 = {k: dict(v) for k, v in A.m2.items()}
    for (a, b), img in A.m2.items():
        for r, c in img.items():
            # b·φ_r has value c at a  (φ_r(ab))
            vadd(m2.setdefault((b, n + r), {}), {n + a: c})
            # (φ_r·a)(b) = ± φ_r(ab), the second rule with the roles of a, b swapped
            s = _sign(deg[b] * (dstar(r) + deg[a]) + dstar(r) * (deg[a] + deg[b]))
            vadd(m2.setdefault((n + r, a), {}), {n + b: s * c})
    pairing = {}
    for a in range(n):
        pairing[(a, n + a)] = ONE
        pairing[(n + a, a)] = Fraction(_sign(deg[a] * dstar(a)))
    trace = None
    if A.unit is not None:
        u = V.index(A.unit)
        trace = {n + u: ONE}
    D = DgAlgebra(W, m1, m2)
    return D, Pairing(W, 0, pairing, trace)


def cyclicity_defect(A: AInfStructure, P: Pairing, n: int) -> Dict[tuple, Fraction]:
    """(m_n(a_0..a_{n-1}), a_n) - (-1)^{n + |a_0|(|a_1|+...+|a_n|)} (m_n(a_1..a_n), a_0)
    over basis tuples; {} iff cyclic at arity n."""
    if n > A.max_arity:
        raise ValueError(f"arity {n} exceeds max arity {A.max_arity}")
    deg = A.space.degrees
    m = convert_b_m(A).get(n, {})
    out: Dict[tuple, Fraction] = {}
    for key, vec in m.items():
        for j, c in vec.items():
            for last, p in P.row(j).items():
                t = key + (last,)
                out[t] = out.get(t, 0) + c * p
                # same term seen from the rotated tuple (last, key...)
                rot = (last,) + key
                s = _sign(n + deg[last] * sum(deg[i] for i in key))
                out[rot] = out.get(rot, 0) - s * c * p
    return {k: v for k, v in out.items() if v}


def canonical_pairing(A: AInfStructure, T: AInfStructure) -> Pairing:
    """Evaluation pairing on T = A ⊕ A*[r] (combined indices):
    ⟨e_a, e_a*⟩ = 1 and ⟨e_a*, e_a⟩ = (-1)^{|e_a||e_a*|}."""
    n = A.dim
    deg = T.space.degrees
    matrix = {}
    for a in range(n):
        matrix[(a, n + a)] = ONE
        matrix[(n + a, a)] = Fraction(_sign(deg[a] * deg[n + a]))
    d = deg[0] + deg[n] if n else 0
    return Pairing(T.space, -d, matrix)


# -- recognition --------------------------------------------------------------

class Recognition:
    """Outcome of recognize_trivial_extension.  ``witness`` maps each basis
    index of A' to its image vector in the trivial extension ``target``."""

    def __init__(self, ok: bool, failure: Optional[str] = None, witness=None, target=None,
                 shift: Optional[int] = None):
        self.ok = ok
        self.failure = failure
        self.witness = witness
        self.target = target
        self.shift = shift

    def __bool__(self):
        return self.ok

    def __repr__(self):
        return f"Recognition(ok={self.ok}, failure={self.failure!r})"


def restrict(A: AInfStructure, indices: Sequence[int]) -> AInfStructure:
    """Structure on the span of ``indices``; raises if it is not closed."""
    pos = {x: r for r, x in enumerate(indices)}
    V = A.space
    aux = tuple(V.aux[x] for x in indices) if V.aux else None
    W = GradedSpace(tuple(V.labels[x] for x in indices), tuple(V.degrees[x] for x in indices), aux)
    b: Dict[int, Table] = {}
    for k, table in A.b.items():
        for key, vec in table.items():
            if all(x in pos for x in key):
                if any(j not in pos for j in vec):
                    raise ValueError(f"span of the given indices is not closed under b_{k}")
                b.setdefault(k, {})[tuple(pos[x] for x in key)] = {pos[j]: c for j, c in vec.items()}
    return AInfStructure(W, b, A.max_arity)


def transport(A: AInfStructure, psi: Dict[int, Dict[int, Fraction]],
              psi_inv: Dict[int, Dict[int, Fraction]], space: GradedSpace) -> Dict[int, Table]:
    """Tables of Ψ∘b∘(Ψ^{-1})^{⊗k} for a degree-zero linear isomorphism Ψ.

    ``psi[x]`` is the image of e_x; ``psi_inv[y]`` the preimage of e_y."""
    inv_rows: Dict[int, Dict[int, Fraction]] = {}
    for y, vec in psi_inv.items():
        for x, c in vec.items():
            inv_rows.setdefault(x, {})[y] = c
    out: Dict[int, Table] = {}
    for k, table in A.b.items():
        acc: Table = {}
        for key, vec in table.items():
            image: Dict[int, Fraction] = {}
            for j, c in vec.items():
                vadd(image, psi.get(j, {}), c)
            if not image:
                continue
            partial = [((), ONE)]
            for x in key:
                partial = [(t + (y,), c * e) for t, c in partial for y, e in inv_rows.get(x, {}).items()]
            for t, c in partial:
                vadd(acc.setdefault(t, {}), image, c)
        out[k] = {t: v for t, v in acc.items() if v}
    return out


def recognize_trivial_extension(Aprime: AInfStructure, A_sub: AInfStructure, P: Pairing,
                                embedding: Optional[Sequence[int]] = None,
                                complement: Optional[Sequence[int]] = None,
                                upto: Optional[int] = None) -> Recognition:
    """Decide whether A' = A_sub ⊕ I is the trivial extension A_sub(A_sub*[-d]).

    ``embedding[a]`` is the A' index of the a-th basis vector of A_sub
    (default: the first dim A_sub indices); I is spanned by ``complement``
    (default: the remaining indices).  Raises ValueError when P is degenerate
    or the splitting is not aux-graded; otherwise returns a Recognition whose
    failure string names the first identity that breaks.
    """
    K = min(upto or Aprime.max_arity, Aprime.max_arity)
    n_sub = A_sub.dim
    emb = list(embedding) if embedding is not None else list(range(n_sub))
    rest = [x for x in range(Aprime.dim) if x not in set(emb)]
    I = list(complement) if complement is not None else rest
    if sorted(emb + I) != list(range(Aprime.dim)):
        raise ValueError("embedding and complement do not split A'")
    if not P.is_nondegenerate():
        raise ValueError("pairing is degenerate")
    V = Aprime.space
    if V.aux and any(V.aux):
        if any(V.aux[x] != 0 for x in emb) or any(V.aux[x] != 1 for x in I):
            raise ValueError("splitting is not aux-graded (A_sub in aux 0, I in aux 1)")
        for (i, j) in P.matrix:
            if V.aux[i] + V.aux[j] != 1:
                return Recognition(False, f"pairing has nonzero aux degree at {V.labels[i]},{V.labels[j]}")
    fail = lambda msg: Recognition(False, msg)
    if not Aprime.is_minimal():
        return fail("A' is not minimal: b_1 ≠ 0")
    if P.symmetry_defect():
        i, j = P.symmetry_defect()[0]
        return fail(f"pairing symmetry fails at ({V.labels[i]}, {V.labels[j]})")
    for k in range(1, K + 1):
        cd = cyclicity_defect(Aprime, P, k)
        if cd:
            key = min(cd)
            return fail(f"cyclicity fails at arity {k} on ({', '.join(V.labels[x] for x in key)})")
    sub = set(emb)
    iso = set(I)
    for (i, j) in P.matrix:
        if (i in sub and j in sub) or (i in iso and j in iso):
            return fail(f"isotropy fails: ⟨{V.labels[i]}, {V.labels[j]}⟩ ≠ 0")
    for k, table in Aprime.b.items():
        for key, vec in table.items():
            c = sum(1 for x in key if x in iso)
            if c >= 2:
                return fail(f"b_{k} nonzero on two or more I inputs at ({', '.join(V.labels[x] for x in key)})")
            wrong = [j for j in vec if (j in iso) != (c == 1)]
            if wrong:
                return fail(f"b_{k} leaves its stratum at ({', '.join(V.labels[x] for x in key)})")
    restricted = restrict(Aprime, emb)
    mine = {k: t for k, t in restricted.b.items() if t}
    theirs = {k: t for k, t in A_sub.b.items() if t and k <= restricted.max_arity}
    if mine != theirs:
        return fail("A_sub is not the restriction of A' to the embedded span")
    # pairing isomorphism I → A_sub*[-d]
    degs = {(V.degrees[i] + V.degrees[j]) for (i, j) in P.matrix}
    if len(degs) > 1:
        return fail("pairing is not homogeneous")
    d = degs.pop() if degs else 0
    M = shift_bimodule(dual_bimodule(diagonal_bimodule(A_sub)), -d)
    T = trivial_extension_ainf(A_sub, M)
    psi: Dict[int, Dict[int, Fraction]] = {x: {a: ONE} for a, x in enumerate(emb)}
    for u in I:
        psi[u] = {n_sub + a: P(x, u) for a, x in enumerate(emb) if P(x, u)}
    dense = [[psi[x].get(y, Fraction(0)) for x in range(Aprime.dim)] for y in range(T.dim)]
    from .core import inverse
    try:
        inv = inverse(dense)
    except ZeroDivisionError:
        return fail("pairing does not identify I with A_sub*")
    psi_inv = {y: {x: inv[x][y] for x in range(Aprime.dim) if inv[x][y]} for y in range(T.dim)}
    moved = transport(Aprime, psi, psi_inv, T.space)
    for k in range(1, K + 1):
        a = moved.get(k, {})
        b = {key: v for key, v in T.b.get(k, {}).items() if v}
        if a != b:
            key = min(set(a) ^ set(b) or {key for key in a if a[key] != b.get(key)})
            labels = ', '.join(T.space.labels[x] for x in key)
            return fail(f"b_{k} differs from the dual bimodule structure at ({labels})")
    return Recognition(True, None, psi, T, -d)
