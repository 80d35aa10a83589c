"""A∞-structures in bar (suspended) form.

A structure on a graded space A is stored as coefficient tables
``b[k] = {(i1, ..., ik): {j: c}}`` meaning
b_k(s e_i1 ⊗ ... ⊗ s e_ik) = Σ c s e_j, every b_k of degree +1 on the
suspended degrees |s e_i| = |e_i| - 1.  A table whose values are vectors in
another algebra (keys may be arbitrary hashables) is how morphism components
F_k are stored as well.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .core import (ONE, GradedMap, GradedSpace, GradingError, Splitting, homology_splitting,
                   rank, vadd, vscale)

Table = Dict[tuple, dict]

DEFAULT_ARITY = 8


class DefectError(ValueError):
    """A structure failed one of its defining identities."""

    def __init__(self, message, arity=None, key=None):
        super().__init__(message)
        self.arity = arity
        self.key = key


# -- sparse multilinear machinery -------------------------------------------

def by_output(table: Table) -> Dict[object, List[Tuple[tuple, Fraction]]]:
    out: Dict[object, List[Tuple[tuple, Fraction]]] = {}
    for key, vec in table.items():
        for j, c in vec.items():
            out.setdefault(j, []).append((key, c))
    return out


def insert(outer: Table, inner_by_out, sdeg, inner_degree: int = 1,
           acc: Optional[Table] = None, positions=None) -> Table:
    """Σ_i outer(id^i ⊗ inner ⊗ id^k) with the Koszul sign of passing ``inner``
    over the first i inputs.  ``positions`` restricts the insertion slots."""
    acc = {} if acc is None else acc
    for key, vec in outer.items():
        passed = 0
        for i, u in enumerate(key):
            if positions is None or i in positions:
                for ikey, c in inner_by_out.get(u, ()):
                    sign = -1 if (inner_degree * passed) % 2 else 1
                    new = key[:i] + ikey + key[i + 1:]
                    vadd(acc.setdefault(new, {}), vec, sign * c)
            passed += sdeg(u)
    return {k: v for k, v in acc.items() if v}


def _trie(table: Table) -> dict:
    root: dict = {}
    for key, vec in table.items():
        node = root
        for u in key[:-1]:
            node = node.setdefault(u, {})
        node[key[-1]] = vec
    return root


def apply_table(trie: dict, vecs: Sequence[dict]) -> dict:
    """Evaluate a multilinear coefficient table (in trie form) on vectors."""
    out: dict = {}

    def walk(node, depth, coef):
        vec = vecs[depth]
        last = depth == len(vecs) - 1
        if len(vec) < len(node):
            items = ((u, x) for u, x in vec.items() if u in node)
        else:
            items = ((u, vec[u]) for u in node if u in vec)
        for u, x in items:
            if last:
                vadd(out, node[u], coef * x)
            else:
                walk(node[u], depth + 1, coef * x)

    if trie:
        walk(trie, 0, ONE)
    return out


def compositions(n: int, k: int):
    """Ordered k-tuples of positive integers summing to n."""
    if k == 1:
        yield (n,)
        return
    for first in range(1, n - k + 2):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


def tensor_combos(tables: Dict[int, Table], parts: Sequence[int]):
    """Iterate (concatenated key, [vectors]) over products of table entries."""
    pools = [list(tables.get(p, {}).items()) for p in parts]
    if any(not pool for pool in pools):
        return
    for combo in itertools.product(*pools):
        key = tuple(itertools.chain.from_iterable(c[0] for c in combo))
        yield key, [c[1] for c in combo]


# -- structures -------------------------------------------------------------

class AInfStructure:
    """Suspended A∞-structure coefficients on a finite graded space."""

    def __init__(self, space: GradedSpace, b: Dict[int, Table], max_arity: Optional[int] = None,
                 truncated: bool = False, check: bool = True):
        self.space = space
        self.b: Dict[int, Table] = {}
        for k, table in b.items():
            clean = {tuple(key): {j: Fraction(c) for j, c in vec.items() if c}
                     for key, vec in table.items()}
            clean = {key: vec for key, vec in clean.items() if vec}
            if clean:
                self.b[int(k)] = clean
        self.max_arity = max_arity if max_arity is not None else max(self.b, default=2)
        self.max_arity = max(self.max_arity, 1)
        self.truncated = truncated
        self._tries: Dict[int, dict] = {}
        if check:
            self._check_degrees()

    def _check_degrees(self):
        for k, table in self.b.items():
            if k < 1:
                raise GradingError("b_0 is not allowed (curved structures are out of scope)")
            if k > self.max_arity:
                raise GradingError(f"b_{k} exceeds max arity {self.max_arity}")
            for key, vec in table.items():
                if len(key) != k:
                    raise GradingError(f"b_{k} entry with {len(key)} inputs")
                din = sum(self.sdeg(i) for i in key)
                for j in vec:
                    if self.sdeg(j) != din + 1:
                        raise GradingError(f"b_{k}{key}->{j} is not of degree +1")

    # bar-side degrees
    def sdeg(self, i) -> int:
        return self.space.degrees[i] - 1

    def aux(self, i) -> int:
        return self.space.aux_degree(i)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def aux_flag(self) -> bool:
        if self.space.aux is None:
            return False
        return all(self.aux(j) == sum(self.aux(i) for i in key)
                   for table in self.b.values() for key, vec in table.items() for j in vec)

    def table(self, k: int) -> Table:
        return self.b.get(k, {})

    @property
    def product_arities(self) -> Tuple[int, ...]:
        return tuple(k for k in sorted(self.b) if k >= 2 and self.b[k])

    def bk(self, k: int, vecs: Sequence[dict]) -> dict:
        if k not in self.b:
            return {}
        if k not in self._tries:
            self._tries[k] = _trie(self.b[k])
        return apply_table(self._tries[k], vecs)

    def b1_map(self) -> GradedMap:
        entries = {}
        for (i,), vec in self.table(1).items():
            for j, c in vec.items():
                entries[(j, i)] = c
        return GradedMap(self.space, self.space, 1, entries, check=False)

    def is_minimal(self) -> bool:
        return not self.b.get(1)

    def splitting(self) -> Splitting:
        if getattr(self, "_split", None) is None:
            self._split = homology_splitting(self.b1_map())
        return self._split

    def with_max_arity(self, K: int) -> "AInfStructure":
        return AInfStructure(self.space, {k: t for k, t in self.b.items() if k <= K}, K,
                             check=False)

    def __eq__(self, other):
        return (isinstance(other, AInfStructure) and self.space == other.space
                and self.b == other.b)

    def __repr__(self):
        arities = {k: len(t) for k, t in sorted(self.b.items())}
        return f"AInfStructure(dim={self.dim}, K={self.max_arity}, entries={arities})"


@dataclass
class DgAlgebra:
    """Unsuspended dg-algebra: ``m1[i]`` and ``m2[(i, j)]`` are sparse vectors."""

    space: GradedSpace
    m1: Dict[int, dict] = field(default_factory=dict)
    m2: Dict[Tuple[int, int], dict] = field(default_factory=dict)
    unit: Optional[str] = None

    def __post_init__(self):
        self.m1 = {i: {j: Fraction(c) for j, c in v.items() if c} for i, v in self.m1.items()}
        self.m1 = {i: v for i, v in self.m1.items() if v}
        self.m2 = {tuple(k): {j: Fraction(c) for j, c in v.items() if c} for k, v in self.m2.items()}
        self.m2 = {k: v for k, v in self.m2.items() if v}

    def deg(self, i) -> int:
        return self.space.degrees[i]

    def d(self, vec: dict) -> dict:
        out: dict = {}
        for i, x in vec.items():
            if i in self.m1:
                vadd(out, self.m1[i], x)
        return out

    def mul(self, u: dict, v: dict) -> dict:
        out: dict = {}
        for i, x in u.items():
            for j, y in v.items():
                prod = self.m2.get((i, j))
                if prod:
                    vadd(out, prod, x * y)
        return out

    def axiom_defects(self) -> Dict[str, list]:
        """Basis tuples where d² = 0, Leibniz or associativity fail."""
        n = self.space.dim
        bad: Dict[str, list] = {"grading": [], "d2": [], "leibniz": [], "assoc": []}
        for i, v in self.m1.items():
            if any(self.deg(j) != self.deg(i) + 1 for j in v):
                bad["grading"].append((i,))
        for (i, j), v in self.m2.items():
            if any(self.deg(r) != self.deg(i) + self.deg(j) for r in v):
                bad["grading"].append((i, j))
        for i in range(n):
            if self.d(self.d({i: ONE})):
                bad["d2"].append((i,))
        for i in range(n):
            for j in range(n):
                ei, ej = {i: ONE}, {j: ONE}
                lhs = self.d(self.mul(ei, ej))
                sign = -1 if self.deg(i) % 2 else 1
                rhs = vadd(self.mul(self.d(ei), ej), self.mul(ei, self.d(ej)), sign)
                if vadd(dict(lhs), rhs, -1):
                    bad["leibniz"].append((i, j))
                for k in range(n):
                    ek = {k: ONE}
                    if vadd(self.mul(self.mul(ei, ej), ek), self.mul(ei, self.mul(ej, ek)), -1):
                        bad["assoc"].append((i, j, k))
        return {k: v for k, v in bad.items() if v}

    def check(self):
        bad = self.axiom_defects()
        if bad:
            kind, where = next(iter(bad.items()))
            raise DefectError(f"dg-algebra axiom '{kind}' fails at {where[0]}")


# -- m/b translation --------------------------------------------------------

def suspension_sign(degs: Sequence[int]) -> int:
    """Sign of s^{⊗k} on a1 ⊗ ... ⊗ ak: (-1)^{Σ (k - r)|a_r|}."""
    k = len(degs)
    e = sum((k - 1 - r) * d for r, d in enumerate(degs))
    return -1 if e % 2 else 1


def convert_b_m(A, direction: str = "b->m") -> Dict[int, Table]:
    """Translate between suspended b_k and unsuspended m_k = s^{-1} b_k s^{⊗k}.

    ``A`` is an :class:`AInfStructure` (for ``"b->m"``) or a pair
    ``(space, m_tables)`` (for ``"m->b"``).  The map is an involution up to
    direction since the sign only depends on input degrees.
    """
    if direction == "b->m":
        space, tables = A.space, A.b
    elif direction == "m->b":
        space, tables = A
    else:
        raise ValueError("direction must be 'b->m' or 'm->b'")
    out: Dict[int, Table] = {}
    for k, table in tables.items():
        out[k] = {key: vscale(vec, suspension_sign([space.degrees[i] for i in key]))
                  for key, vec in table.items()}
    return out


def from_m(space: GradedSpace, m: Dict[int, Table], max_arity=None) -> AInfStructure:
    return AInfStructure(space, convert_b_m((space, m), "m->b"), max_arity)


def from_dg(D: DgAlgebra, check: bool = True, max_arity: int = DEFAULT_ARITY) -> AInfStructure:
    if check:
        D.check()
    m = {1: {(i,): v for i, v in D.m1.items()}, 2: dict(D.m2)}
    return from_m(D.space, m, max_arity)


# -- defects ----------------------------------------------------------------

def stasheff_defect(A: AInfStructure, n: int) -> Table:
    """Σ_{i+j+k=n} b_{n-j+1}(id^i ⊗ b_j ⊗ id^k) as a sparse table; {} iff zero."""
    if n > A.max_arity:
        raise ValueError(f"arity {n} exceeds the structure's max arity {A.max_arity}")
    acc: Table = {}
    for j in range(1, n + 1):
        outer = A.table(n - j + 1)
        inner = A.table(j)
        if outer and inner:
            insert(outer, by_output(inner), A.sdeg, 1, acc)
    return {k: v for k, v in acc.items() if v}


def check_stasheff(A: AInfStructure, upto: Optional[int] = None):
    """Raise :class:`DefectError` naming the first failing arity."""
    for n in range(1, (upto or A.max_arity) + 1):
        defect = stasheff_defect(A, n)
        if defect:
            key = min(defect)
            labels = [A.space.labels[i] for i in key]
            raise DefectError(f"Stasheff relation fails at arity {n} on {labels}", n, key)


class AInfMorphism:
    """Components F_k: (sA)^{⊗k} → sA' of degree 0, as tables."""

    def __init__(self, source, target, F: Dict[int, Table], partial: bool = False):
        self.source = source
        self.target = target
        self.F = {k: {kk: v for kk, v in t.items() if v} for k, t in F.items()}
        self.partial = partial

    @property
    def max_arity(self) -> int:
        return max(self.F, default=1)

    def component(self, k) -> Table:
        return self.F.get(k, {})

    @classmethod
    def identity(cls, A: AInfStructure) -> "AInfMorphism":
        return cls(A, A, {1: {(i,): {i: ONE} for i in range(A.dim)}})


def morphism_defect(F: AInfMorphism, n: int) -> Table:
    """Σ F(id ⊗ b^A ⊗ id) - Σ b^{A'}_r(F_{i1} ⊗ ... ⊗ F_{ir}) at arity n."""
    A, B = F.source, F.target
    if n > A.max_arity or n > B.max_arity:
        raise ValueError(f"arity {n} exceeds available structure data")
    acc: Table = {}
    for j in range(1, n + 1):
        outer = F.component(n - j + 1)
        inner = A.table(j)
        if outer and inner:
            insert(outer, by_output(inner), A.sdeg, 1, acc)
    for r in range(1, n + 1):
        if r > B.max_arity:
            break
        for parts in compositions(n, r):
            for key, vecs in tensor_combos(F.F, parts):
                out = B.bk(r, vecs)
                if out:
                    vadd(acc.setdefault(key, {}), out, -1)
    return {k: v for k, v in acc.items() if v}


# -- homotopy transfer ------------------------------------------------------

@dataclass
class TransferResult:
    H: AInfStructure
    i: AInfMorphism
    p: AInfMorphism
    splitting: object

    def __iter__(self):
        return iter((self.H, self.i, self.p))


def _homology_labels(A, split) -> List[str]:
    labels = []
    used = set()
    for j, v in enumerate(split.H):
        lab = None
        if len(v) == 1:
            (i, c), = v.items()
            if c == 1 and hasattr(A, "space"):
                lab = A.space.labels[i]
        if lab is None or lab in used:
            lab = f"h{j}"
        used.add(lab)
        labels.append(lab)
    return labels


def transfer(A, K_out: int = DEFAULT_ARITY, labels=None) -> TransferResult:
    """Minimal model of ``A`` with the inclusion morphism i: H → A.

    Recursion with λ_1 = i_1:
        β_n = Σ_{k≥2} b_k ∘ Σ_{n_1+...+n_k=n} λ_{n_1} ⊗ ... ⊗ λ_{n_k}
        b'_n = p_1 β_n,   λ_n = -h β_n.
    ``A`` needs ``splitting()``, ``bk`` and ``max_arity``; any chain algebra
    with lazily evaluated products works.
    """
    if K_out < 2:
        raise ValueError("K_out must be at least 2")
    split = A.splitting()
    labels = labels or _homology_labels(A, split)
    Hspace = split.homology_space(labels)
    lam: Dict[int, Table] = {1: {(j,): dict(v) for j, v in enumerate(split.H)}}
    bprime: Dict[int, Table] = {}
    truncated = False
    kmax = A.max_arity
    # backends may list the arities k ≥ 2 where b_k can be nonzero
    arities = sorted(k for k in getattr(A, "product_arities", range(2, kmax + 1)) if 2 <= k <= kmax)
    for n in range(2, K_out + 2):
        beta: Table = {}
        for k in arities:
            if k > n:
                break
            for parts in compositions(n, k):
                for key, vecs in tensor_combos(lam, parts):
                    out = A.bk(k, vecs)
                    if out:
                        vadd(beta.setdefault(key, {}), out)
        if n == K_out + 1:
            truncated = any(split.project(v) for v in beta.values())
            break
        bprime[n] = {}
        lam[n] = {}
        for key, vec in beta.items():
            if not vec:
                continue
            proj = split.project(vec)
            if proj:
                bprime[n][key] = proj
            hv = split.homotopy(vec)
            if hv:
                lam[n][key] = vscale(hv, -1)
    H = AInfStructure(Hspace, bprime, K_out, truncated=truncated)
    i = AInfMorphism(H, A, lam)
    p1 = {}
    if hasattr(A, "dim"):
        for r in range(A.dim):
            proj = split.project({r: ONE})
            if proj:
                p1[(r,)] = proj
    p = AInfMorphism(A, H, {1: p1}, partial=True)
    return TransferResult(H, i, p, split)


def is_quasi_isomorphism(F: AInfMorphism) -> bool:
    """F_1 induces an isomorphism on b_1-cohomology."""
    A, B = F.source, F.target
    sa, sb = A.splitting(), B.splitting()
    if len(sa.H) != len(sb.H):
        return False
    F1 = F.component(1)
    trie = _trie(F1) if F1 else {}
    rows = []
    for v in sa.H:
        img = apply_table(trie, [v]) if trie else {}
        coords = sb.project(img)
        rows.append([coords.get(j, 0) for j in range(len(sb.H))])
    return rank(rows) == len(sb.H) if rows else True
