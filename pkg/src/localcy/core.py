"""Exact graded linear algebra over the rationals.

Vectors are sparse dicts ``{basis index: Fraction}`` with zero entries
removed.  Maps carry their graded spaces so degree bookkeeping never
lives in the labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Vector = Dict[int, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


class GradingError(ValueError):
    pass


def koszul_sign(deg_a: int, deg_b: int) -> int:
    return -1 if (deg_a * deg_b) % 2 else 1


# -- sparse vectors ---------------------------------------------------------

def vadd(acc: dict, other: dict, scale=1) -> dict:
    """Accumulate ``scale * other`` into ``acc`` in place; drops zeros."""
    for key, value in other.items():
        new = acc.get(key, 0) + scale * value
        if new:
            acc[key] = new
        else:
            acc.pop(key, None)
    return acc


def vscale(v: dict, c) -> dict:
    if not c:
        return {}
    return {k: c * x for k, x in v.items()}


def vclean(v: dict) -> dict:
    return {k: x for k, x in v.items() if x}


# -- graded spaces ----------------------------------------------------------

@dataclass(frozen=True)
class GradedSpace:
    labels: Tuple[str, ...]
    degrees: Tuple[int, ...]
    aux: Optional[Tuple[int, ...]] = None
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        if len(set(labels)) != len(labels):
            raise ValueError("basis labels must be unique")
        if len(self.degrees) != len(labels):
            raise ValueError("degree map must cover every label")
        if self.aux is not None:
            aux = tuple(int(a) for a in self.aux)
            if len(aux) != len(labels):
                raise ValueError("aux degree map must cover every label")
            object.__setattr__(self, "aux", aux)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @classmethod
    def from_pairs(cls, pairs, aux=None) -> "GradedSpace":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), aux)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        return self._index[label]

    def degree(self, i: int) -> int:
        return self.degrees[i]

    def aux_degree(self, i: int) -> int:
        return 0 if self.aux is None else self.aux[i]

    def suspend(self) -> "GradedSpace":
        return suspend(self)

    def shift(self, r: int) -> "GradedSpace":
        """``V[r]``: degree-q elements move to degree ``q - r``."""
        return GradedSpace(self.labels, tuple(d - r for d in self.degrees), self.aux)

    def dual(self, suffix: str = "*") -> "GradedSpace":
        aux = None if self.aux is None else tuple(-a for a in self.aux)
        return GradedSpace(tuple(lab + suffix for lab in self.labels),
                           tuple(-d for d in self.degrees), aux)

    def direct_sum(self, other: "GradedSpace") -> "GradedSpace":
        aux = None
        if self.aux is not None or other.aux is not None:
            aux = tuple(self.aux or (0,) * self.dim) + tuple(other.aux or (0,) * other.dim)
        return GradedSpace(self.labels + other.labels, self.degrees + other.degrees, aux)

    def with_aux(self, aux) -> "GradedSpace":
        return GradedSpace(self.labels, self.degrees, None if aux is None else tuple(aux))

    def graded_dims(self) -> Dict[int, int]:
        out: Dict[int, int] = {}
        for d in self.degrees:
            out[d] = out.get(d, 0) + 1
        return dict(sorted(out.items()))

    def blocks(self) -> Dict[Tuple[int, int], List[int]]:
        """Basis indices grouped by (degree, aux degree)."""
        out: Dict[Tuple[int, int], List[int]] = {}
        for i in range(self.dim):
            out.setdefault((self.degrees[i], self.aux_degree(i)), []).append(i)
        return out


def suspend(V: GradedSpace) -> GradedSpace:
    return GradedSpace(V.labels, tuple(d - 1 for d in V.degrees), V.aux)


def tensor_space(spaces: Sequence[GradedSpace]) -> GradedSpace:
    """Tensor product with lexicographically ordered basis, labels joined by '|'."""
    labels = [""]
    degrees = [0]
    auxes = [0]
    has_aux = any(S.aux is not None for S in spaces)
    for S in spaces:
        labels = [a + ("|" if a else "") + b for a in labels for b in S.labels]
        degrees = [d + e for d in degrees for e in S.degrees]
        auxes = [x + S.aux_degree(j) for x in auxes for j in range(S.dim)]
    if not spaces:
        labels = ["()"]
    return GradedSpace(tuple(labels), tuple(degrees), tuple(auxes) if has_aux else None)


# -- graded maps ------------------------------------------------------------

class GradedMap:
    """A homogeneous linear map stored as sparse ``{(row, col): value}``."""

    def __init__(self, source: GradedSpace, target: GradedSpace, degree: int,
                 entries=None, aux_degree: Optional[int] = None, check: bool = True):
        self.source = source
        self.target = target
        self.degree = degree
        self.aux_degree = aux_degree
        self.entries: Dict[Tuple[int, int], Fraction] = {
            k: Fraction(v) for k, v in (entries or {}).items() if v}
        if check:
            self._check()

    def _check(self):
        for (r, c) in self.entries:
            if self.target.degrees[r] != self.source.degrees[c] + self.degree:
                raise GradingError(
                    f"entry ({self.target.labels[r]}, {self.source.labels[c]}) "
                    f"violates degree {self.degree}")
            if self.aux_degree is not None and (
                    self.target.aux_degree(r) != self.source.aux_degree(c) + self.aux_degree):
                raise GradingError("entry violates aux degree")

    @classmethod
    def identity(cls, V: GradedSpace) -> "GradedMap":
        return cls(V, V, 0, {(i, i): ONE for i in range(V.dim)}, aux_degree=0, check=False)

    @classmethod
    def zero(cls, source, target, degree=0) -> "GradedMap":
        return cls(source, target, degree, {}, check=False)

    def columns(self) -> Dict[int, Vector]:
        cols: Dict[int, Vector] = {}
        for (r, c), v in self.entries.items():
            cols.setdefault(c, {})[r] = v
        return cols

    def apply(self, vec: dict) -> Vector:
        cols = self.columns()
        out: Vector = {}
        for c, x in vec.items():
            if c in cols:
                vadd(out, cols[c], x)
        return out

    def compose(self, other: "GradedMap") -> "GradedMap":
        """``self ∘ other``."""
        if other.target != self.source:
            raise ValueError("space mismatch in composition")
        cols = other.columns()
        mine = self.columns()
        entries: Dict[Tuple[int, int], Fraction] = {}
        for c, col in cols.items():
            acc: Vector = {}
            for mid, x in col.items():
                if mid in mine:
                    vadd(acc, mine[mid], x)
            for r, v in acc.items():
                entries[(r, c)] = v
        aux = None
        if self.aux_degree is not None and other.aux_degree is not None:
            aux = self.aux_degree + other.aux_degree
        return GradedMap(other.source, self.target, self.degree + other.degree, entries,
                         aux_degree=aux, check=False)

    def __matmul__(self, other):
        return self.compose(other)

    def _combine(self, other, sign):
        if (self.source, self.target) != (other.source, other.target):
            raise ValueError("space mismatch")
        entries = dict(self.entries)
        vadd(entries, other.entries, sign)
        return GradedMap(self.source, self.target, self.degree, entries, check=False)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def scale(self, c) -> "GradedMap":
        return GradedMap(self.source, self.target, self.degree, vscale(self.entries, Fraction(c)),
                         aux_degree=self.aux_degree, check=False)

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other):
        return (isinstance(other, GradedMap) and self.source == other.source
                and self.target == other.target and self.entries == other.entries)

    def dense(self) -> List[List[Fraction]]:
        M = [[ZERO] * self.source.dim for _ in range(self.target.dim)]
        for (r, c), v in self.entries.items():
            M[r][c] = v
        return M

    def rank(self) -> int:
        return rank(self.dense())

    def respects_aux(self, t: int = 0) -> bool:
        return all(self.target.aux_degree(r) == self.source.aux_degree(c) + t
                   for (r, c) in self.entries)

    def __repr__(self):
        return f"GradedMap({self.source.dim}->{self.target.dim}, deg={self.degree}, nnz={len(self.entries)})"


def tensor_map(maps: Sequence[GradedMap]) -> GradedMap:
    """Tensor product of graded maps with the Koszul rule

    (f ⊗ g)(x ⊗ y) = (-1)^{|g||x|} f(x) ⊗ g(y), extended associatively.
    """
    sources = [f.source for f in maps]
    targets = [f.target for f in maps]
    S = tensor_space(sources)
    T = tensor_space(targets)
    cols = [f.columns() for f in maps]
    entries: Dict[Tuple[int, int], Fraction] = {}
    # basis index of a tensor is the mixed-radix number of its factors
    def flat(idx, spaces):
        n = 0
        for i, V in zip(idx, spaces):
            n = n * V.dim + i
        return n

    import itertools
    for src in itertools.product(*[range(V.dim) for V in sources]):
        sign = 1
        for a, f in enumerate(maps):
            passed = sum(sources[b].degrees[src[b]] for b in range(a))
            if (f.degree * passed) % 2:
                sign = -sign
        parts = [cols[a].get(src[a], {}) for a in range(len(maps))]
        if any(not p for p in parts):
            continue
        for combo in itertools.product(*[list(p.items()) for p in parts]):
            val = Fraction(sign)
            for _, x in combo:
                val *= x
            r = flat([c[0] for c in combo], targets)
            entries[(r, flat(src, sources))] = entries.get((r, flat(src, sources)), 0) + val
    return GradedMap(S, T, sum(f.degree for f in maps), entries, check=False)


# -- dense exact linear algebra --------------------------------------------

def rref(M: List[List[Fraction]]) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form; pivots chosen leftmost column, topmost row."""
    A = [[Fraction(x) for x in row] for row in M]
    if not A:
        return A, []
    nrows, ncols = len(A), len(A[0])
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        piv = next((i for i in range(r, nrows) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(nrows):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
    return A, pivots


def rank(M) -> int:
    if not M or not M[0]:
        return 0
    return len(rref(M)[1])


def nullspace(M: List[List[Fraction]], ncols: Optional[int] = None) -> List[List[Fraction]]:
    """Basis of the kernel; one vector per free column, free entry set to 1."""
    if not M:
        n = ncols or 0
        return [[ONE if i == j else ZERO for i in range(n)] for j in range(n)]
    R, pivots = rref(M)
    n = len(M[0])
    basis = []
    for free in range(n):
        if free in pivots:
            continue
        v = [ZERO] * n
        v[free] = ONE
        for row, pc in enumerate(pivots):
            v[pc] = -R[row][free]
        basis.append(v)
    return basis


def inverse(M: List[List[Fraction]]) -> List[List[Fraction]]:
    n = len(M)
    aug = [list(map(Fraction, row)) + [ONE if i == j else ZERO for j in range(n)]
           for i, row in enumerate(M)]
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in R]


def solve(M: List[List[Fraction]], b: List[Fraction]) -> Optional[List[Fraction]]:
    """One solution of ``M x = b`` (free variables zero) or None."""
    if not M:
        return [] if not any(b) else None
    n = len(M[0])
    aug = [list(map(Fraction, row)) + [Fraction(y)] for row, y in zip(M, b)]
    R, pivots = rref(aug)
    if n in pivots:
        return None
    x = [ZERO] * n
    for row, pc in enumerate(pivots):
        x[pc] = R[row][n]
    return x


# -- cohomology splittings --------------------------------------------------

class Splitting:
    """A decomposition V = H ⊕ B ⊕ D with B = im d and d: D → B invertible.

    ``H`` holds cocycle representatives, ``D`` is a set of basis vectors and
    ``B`` their images.  ``homotopy`` is (d|_D)^{-1} on B, zero on H ⊕ D.
    """

    def __init__(self, space: GradedSpace, H: List[Vector], B: List[Vector], D: List[Vector],
                 h_degrees: List[int], h_aux: List[int]):
        self.space = space
        self.H = H
        self.B = B
        self.D = D
        self.h_degrees = h_degrees
        self.h_aux = h_aux
        # coordinates of every basis vector w.r.t. H ∪ B ∪ D, blockwise
        self._coords: Dict[int, Tuple[Vector, Vector]] = {}
        self._build_coords()

    def _build_coords(self):
        cols = [("H", j, v) for j, v in enumerate(self.H)] + \
               [("B", j, v) for j, v in enumerate(self.B)] + \
               [("D", j, v) for j, v in enumerate(self.D)]
        blocks: Dict[Tuple[int, int], List[int]] = self.space.blocks()
        for key, idxs in blocks.items():
            idx_set = set(idxs)
            members = [c for c in cols if next(iter(c[2])) in idx_set]
            pos = {i: r for r, i in enumerate(idxs)}
            if len(members) != len(idxs):
                raise ArithmeticError("splitting does not span the block")
            M = [[ZERO] * len(members) for _ in idxs]
            for c, (_, _, v) in enumerate(members):
                for i, x in v.items():
                    M[pos[i]][c] = x
            Minv = inverse(M)
            for i in idxs:
                hpart: Vector = {}
                bpart: Vector = {}
                for c, (kind, j, _) in enumerate(members):
                    x = Minv[c][pos[i]]
                    if not x:
                        continue
                    if kind == "H":
                        hpart[j] = x
                    elif kind == "B":
                        bpart[j] = x
                self._coords[i] = (hpart, bpart)

    @property
    def dims(self) -> Tuple[int, int, int]:
        return len(self.H), len(self.B), len(self.D)

    def project(self, v: dict) -> Vector:
        out: Vector = {}
        for i, x in v.items():
            vadd(out, self._coords[i][0], x)
        return out

    def include(self, coords: dict) -> Vector:
        out: Vector = {}
        for j, x in coords.items():
            vadd(out, self.H[j], x)
        return out

    def homotopy(self, v: dict) -> Vector:
        out: Vector = {}
        for i, x in v.items():
            for j, y in self._coords[i][1].items():
                vadd(out, self.D[j], x * y)
        return out

    def homology_space(self, labels=None) -> GradedSpace:
        labels = labels or [f"h{j}" for j in range(len(self.H))]
        aux = tuple(self.h_aux) if self.space.aux is not None else None
        return GradedSpace(tuple(labels), tuple(self.h_degrees), aux)

    def h_map(self) -> GradedMap:
        entries = {}
        for i in range(self.space.dim):
            for r, x in self.homotopy({i: ONE}).items():
                entries[(r, i)] = x
        return GradedMap(self.space, self.space, -1, entries, check=False)

    def p_map(self, Hspace: GradedSpace) -> GradedMap:
        entries = {}
        for i in range(self.space.dim):
            for r, x in self._coords[i][0].items():
                entries[(r, i)] = x
        return GradedMap(self.space, Hspace, 0, entries, check=False)

    def i_map(self, Hspace: GradedSpace) -> GradedMap:
        entries = {}
        for j, v in enumerate(self.H):
            for r, x in v.items():
                entries[(r, j)] = x
        return GradedMap(Hspace, self.space, 0, entries, check=False)


def homology_splitting(d: GradedMap) -> Splitting:
    """Split a degree +1 square-zero endomorphism blockwise by (degree, aux).

    Columns are scanned in stored basis order; a column whose image is
    independent of earlier images joins D.  Cocycle representatives come from
    the reduced kernel basis, kept greedily when independent of B.
    """
    V = d.source
    if d.target != V or d.degree != 1:
        raise GradingError("differential must be a degree +1 endomorphism")
    if not (d @ d).is_zero():
        raise ArithmeticError("d∘d ≠ 0")
    if V.aux is not None and not d.respects_aux(0):
        raise GradingError("differential does not preserve the aux grading")
    cols = d.columns()
    blocks = V.blocks()
    H: List[Vector] = []
    B: List[Vector] = []
    D: List[Vector] = []
    hdeg: List[int] = []
    haux: List[int] = []
    for key in sorted(blocks):
        idxs = blocks[key]
        deg, aux = key
        target = blocks.get((deg + 1, aux), [])
        tpos = {i: r for r, i in enumerate(target)}
        # D: greedy independent images
        echelon: List[List[Fraction]] = []
        for i in idxs:
            img = cols.get(i, {})
            if not img:
                continue
            row = [ZERO] * len(target)
            for r, x in img.items():
                row[tpos[r]] = x
            if rank(echelon + [row]) > len(echelon):
                echelon.append(row)
                D.append({i: ONE})
        # kernel of d restricted to this block
        M = [[ZERO] * len(idxs) for _ in target]
        for c, i in enumerate(idxs):
            for r, x in cols.get(i, {}).items():
                M[tpos[r]][c] = x
        kernel = nullspace(M, len(idxs)) if target else nullspace([], len(idxs))
        # B in this block: images of D-columns from the block below
        below = blocks.get((deg - 1, aux), [])
        below_set = set(below)
        Bhere = [cols[next(iter(dv))] for dv in D if next(iter(dv)) in below_set]
        B.extend(Bhere)
        pos = {i: r for r, i in enumerate(idxs)}
        span = []
        for bv in Bhere:
            row = [ZERO] * len(idxs)
            for r, x in bv.items():
                row[pos[r]] = x
            span.append(row)
        for kv in kernel:
            if rank(span + [kv]) > len(span):
                span.append(kv)
                H.append({idxs[c]: x for c, x in enumerate(kv) if x})
                hdeg.append(deg)
                haux.append(aux)
    return Splitting(V, H, B, D, hdeg, haux)
