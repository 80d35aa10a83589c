"""Formal noncommutative calculus on truncated completed tensor algebras.

A word is a tuple of letters; letter ``(0, i)`` is the generator x^i and
``(1, i)`` is dx^i.  Series in T̂V are dicts {word: Fraction} whose words use
only x-letters; forms use both.  Everything is truncated at order N, the
number of letters in a word.

Generators carry the suspended grading: for an A∞-structure on A with basis
e_i, |x^i| = -(|e_i| - 1) and |dx^i| = |x^i| + 1.  Koszul signs always use
these degrees.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .core import ONE, GradedSpace, inverse, rank, solve, vadd
from .ainf import AInfStructure, transfer

Word = Tuple[Tuple[int, int], ...]
Series = Dict[Word, Fraction]


def _sign(e: int) -> int:
    return -1 if e % 2 else 1


class FormalContext:
    """Generators x^0..x^{n-1} with degrees and optional aux degrees,
    truncated at order N."""

    def __init__(self, degrees: Sequence[int], N: int, aux: Optional[Sequence[int]] = None,
                 labels: Optional[Sequence[str]] = None):
        if N < 2:
            raise ValueError("truncation order must be at least 2")
        self.degrees = tuple(degrees)
        self.N = N
        self.aux = tuple(aux) if aux is not None else (0,) * len(self.degrees)
        self.labels = tuple(labels) if labels is not None else tuple(f"x{i}" for i in range(len(self.degrees)))
        self._canon: Dict[Word, Optional[Tuple[Word, int]]] = {}

    @classmethod
    def from_space(cls, V: GradedSpace, N: int) -> "FormalContext":
        aux = tuple(-t for t in V.aux) if V.aux else None
        return cls(tuple(1 - q for q in V.degrees), N, aux, V.labels)

    @property
    def dim(self) -> int:
        return len(self.degrees)

    def letter_degree(self, letter) -> int:
        return self.degrees[letter[1]] + letter[0]

    def word_degree(self, word: Word) -> int:
        return sum(self.degrees[i] + t for t, i in word)

    def word_aux(self, word: Word) -> int:
        return sum(self.aux[i] for _, i in word)

    def x(self, i: int) -> Series:
        return {((0, i),): ONE}

    def truncate(self, vec: dict) -> dict:
        return {w: c for w, c in vec.items() if c and len(w) <= self.N}

    def canon(self, word: Word) -> Optional[Tuple[Word, int]]:
        """Canonical cyclic representative and sign, or None if the word is
        zero in DR (it equals its own rotation with sign -1)."""
        hit = self._canon.get(word, False)
        if hit is not False:
            return hit
        n = len(word)
        has_d = any(t for t, _ in word)
        degs = [self.letter_degree(l) for l in word]
        total = sum(degs)
        best = None
        signs = set()
        prefix = 0
        for r in range(max(n, 1)):
            rot = word[r:] + word[:r]
            s = _sign(prefix * (total - prefix))
            if r < n:
                prefix += degs[r]
            if has_d and rot[-1][0] != 1:
                continue
            if best is None or rot < best:
                best, signs = rot, {s}
            elif rot == best:
                signs.add(s)
        out = None if len(signs) > 1 else (best, signs.pop())
        self._canon[word] = out
        return out


# -- tensor-algebra helpers -----------------------------------------------------

def mul(ctx: FormalContext, a: dict, b: dict) -> dict:
    out: dict = {}
    N = ctx.N
    for u, x in a.items():
        for v, y in b.items():
            if len(u) + len(v) <= N:
                w = u + v
                out[w] = out.get(w, 0) + x * y
    return {w: c for w, c in out.items() if c}


def derivation(ctx: FormalContext, vec: dict, letter_image, degree: int) -> dict:
    """Apply the derivation of the given degree determined by letter_image
    (letter -> dict of words) to a dict of (non-cyclic) words."""
    out: dict = {}
    N = ctx.N
    for word, c in vec.items():
        prefix_deg = 0
        for r, letter in enumerate(word):
            img = letter_image(letter)
            if img:
                s = _sign(degree * prefix_deg) * c
                head, tail = word[:r], word[r + 1:]
                for w, e in img.items():
                    new = head + w + tail
                    if len(new) <= N:
                        out[new] = out.get(new, 0) + s * e
            prefix_deg += ctx.letter_degree(letter)
    return {w: c for w, c in out.items() if c}


def substitute(ctx: FormalContext, vec: dict, letter_image) -> dict:
    """Apply the degree-zero algebra map determined by letter_image."""
    out: dict = {}
    for word, c in vec.items():
        acc = {(): Fraction(c)}
        for letter in word:
            acc = mul(ctx, acc, letter_image(letter))
            if not acc:
                break
        vadd(out, acc)
    return out


def d_series(ctx: FormalContext, vec: dict) -> dict:
    """The de Rham d on non-cyclic words: x ↦ dx, dx ↦ 0, degree 1."""
    return derivation(ctx, vec, lambda l: {((1, l[1]),): ONE} if l[0] == 0 else None, 1)


def orders(vec: dict) -> Dict[int, dict]:
    out: Dict[int, dict] = {}
    for w, c in vec.items():
        out.setdefault(len(w), {})[w] = c
    return out


# -- de Rham elements -----------------------------------------------------------

class DeRhamElement:
    """Element of DR^p stored on canonical cyclic words."""

    def __init__(self, ctx: FormalContext, p: int, terms: Optional[dict] = None, canonical: bool = False):
        self.ctx = ctx
        self.p = p
        if canonical:
            self.terms = {w: Fraction(c) for w, c in (terms or {}).items() if c}
        else:
            self.terms = {}
            self._absorb(terms or {}, 1)

    def _absorb(self, words: dict, scale):
        ctx = self.ctx
        t = self.terms
        for w, c in words.items():
            if not c or len(w) > ctx.N:
                continue
            if sum(l[0] for l in w) != self.p:
                raise ValueError(f"word {w} is not a {self.p}-form")
            hit = ctx.canon(w)
            if hit is None:
                continue
            cw, s = hit
            v = t.get(cw, 0) + s * c * scale
            if v:
                t[cw] = Fraction(v)
            else:
                t.pop(cw, None)

    @classmethod
    def from_words(cls, ctx, p, words) -> "DeRhamElement":
        return cls(ctx, p, words)

    def __add__(self, other):
        out = DeRhamElement(self.ctx, self.p, self.terms, canonical=True)
        for w, c in other.terms.items():
            v = out.terms.get(w, 0) + c
            if v:
                out.terms[w] = v
            else:
                out.terms.pop(w, None)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "DeRhamElement":
        return DeRhamElement(self.ctx, self.p, {w: v * c for w, v in self.terms.items()}, canonical=True)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, DeRhamElement) and self.p == other.p and self.terms == other.terms

    def order_component(self, o: int) -> "DeRhamElement":
        return DeRhamElement(self.ctx, self.p, {w: c for w, c in self.terms.items() if len(w) == o},
                             canonical=True)

    def orders(self) -> List[int]:
        return sorted({len(w) for w in self.terms})

    def truncate(self, N: int) -> "DeRhamElement":
        return DeRhamElement(self.ctx, self.p, {w: c for w, c in self.terms.items() if len(w) <= N},
                             canonical=True)

    def degrees(self) -> set:
        return {self.ctx.word_degree(w) for w in self.terms}

    def aux_degrees(self) -> set:
        return {self.ctx.word_aux(w) for w in self.terms}

    def __repr__(self):
        ctx = self.ctx
        def show(w):
            return "".join(("d" if t else "") + ctx.labels[i] + " " for t, i in w).strip() or "1"
        body = " + ".join(f"{c}·[{show(w)}]" for w, c in sorted(self.terms.items()))
        return f"DR{self.p}({body or '0'})"


def d_de_rham(alpha: DeRhamElement) -> DeRhamElement:
    if alpha.p > 2:
        raise ValueError("d is implemented on forms of degree ≤ 2")
    return DeRhamElement(alpha.ctx, alpha.p + 1, d_series(alpha.ctx, alpha.terms))


# -- vector fields ----------------------------------------------------------------

class VectorField:
    """Continuous derivation X of T̂V given on generators: X(x^i) = images[i]."""

    def __init__(self, ctx: FormalContext, images: Dict[int, Series], degree: int):
        self.ctx = ctx
        self.degree = degree
        self.images = {i: ctx.truncate(v) for i, v in images.items()}
        self.images = {i: v for i, v in self.images.items() if v}
        for i, v in self.images.items():
            for w in v:
                if any(t for t, _ in w):
                    raise ValueError("vector field images must be series")
                if ctx.word_degree(w) != ctx.degrees[i] + degree:
                    raise ValueError(f"X(x^{i}) has a term of the wrong degree")

    def __call__(self, vec: dict) -> dict:
        return derivation(self.ctx, vec, self._letter, self.degree)

    def _letter(self, letter):
        return self.images.get(letter[1]) if letter[0] == 0 else None

    def component(self, l: int) -> "VectorField":
        return VectorField(self.ctx, {i: {w: c for w, c in v.items() if len(w) == l}
                                      for i, v in self.images.items()}, self.degree)

    @property
    def vanishes_at_zero(self) -> bool:
        return all(len(w) > 0 for v in self.images.values() for w in v)

    def aux_degrees(self) -> set:
        ctx = self.ctx
        return {ctx.word_aux(w) - ctx.aux[i] for i, v in self.images.items() for w in v}

    def is_zero(self) -> bool:
        return not self.images

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.degree == other.degree and self.images == other.images

    def __add__(self, other):
        imgs = {i: dict(v) for i, v in self.images.items()}
        for i, v in other.images.items():
            vadd(imgs.setdefault(i, {}), v)
        return VectorField(self.ctx, imgs, self.degree)

    def scale(self, c) -> "VectorField":
        return VectorField(self.ctx, {i: {w: x * c for w, x in v.items()} for i, v in self.images.items()},
                           self.degree)

    def __repr__(self):
        return f"VectorField(degree={self.degree}, images={self.images})"


def bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y] = XY - (-1)^{|X||Y|} YX."""
    ctx = X.ctx
    s = _sign(X.degree * Y.degree)
    imgs = {}
    for i in range(ctx.dim):
        v = X(Y.images.get(i, {}))
        vadd(v, Y(X.images.get(i, {})), -s)
        if v:
            imgs[i] = v
    return VectorField(ctx, imgs, X.degree + Y.degree)


def euler_field(ctx: FormalContext) -> VectorField:
    return VectorField(ctx, {i: ctx.x(i) for i in range(ctx.dim)}, 0)


def contract(X: VectorField, alpha: DeRhamElement) -> DeRhamElement:
    """i_X: derivation of degree |X| - 1 with i_X(x) = 0, i_X(dx) = X(x)."""
    if alpha.p == 0:
        return DeRhamElement(alpha.ctx, 0)
    img = lambda l: X.images.get(l[1]) if l[0] == 1 else None
    return DeRhamElement(alpha.ctx, alpha.p - 1, derivation(alpha.ctx, alpha.terms, img, X.degree - 1))


def lie_derivative(X: VectorField, alpha: DeRhamElement) -> DeRhamElement:
    """L_X = [i_X, d] = i_X d + (-1)^{|X|} d i_X: L_X(x) = X(x),
    L_X(dx) = (-1)^{|X|} d(X(x))."""
    ctx = alpha.ctx
    s = _sign(X.degree)
    cache: Dict[int, dict] = {}

    def img(l):
        t, i = l
        if t == 0:
            return X.images.get(i)
        if i not in cache:
            cache[i] = {w: s * c for w, c in d_series(ctx, X.images.get(i, {})).items()}
        return cache[i]
    return DeRhamElement(ctx, alpha.p, derivation(ctx, alpha.terms, img, X.degree))


def poincare_primitive(alpha: DeRhamElement) -> DeRhamElement:
    """β with dβ = α for closed α without order-0 terms: β = Σ_o i_E(α_o)/o."""
    if alpha.p == 0:
        raise ValueError("0-forms have no primitive")
    if alpha.p <= 2 and not d_de_rham(alpha).is_zero():
        raise ValueError("form is not closed")
    E = euler_field(alpha.ctx)
    out = DeRhamElement(alpha.ctx, alpha.p - 1)
    for o in alpha.orders():
        if o == 0:
            raise ValueError("order-0 term has zero Euler eigenvalue")
        out = out + contract(E, alpha.order_component(o)).scale(Fraction(1, o))
    return out


# -- constant two-forms and pairings ---------------------------------------------

def pairing_to_two_form(ctx: FormalContext, matrix: Dict[Tuple[int, int], Fraction]) -> DeRhamElement:
    """ω = ½ Σ ⟨e_i, e_j⟩ dx^i dx^j, so that the case table below returns ⟨,⟩."""
    half = Fraction(1, 2)
    return DeRhamElement(ctx, 2, {((1, i), (1, j)): half * c for (i, j), c in matrix.items() if c})


def trace_two_form(ctx: FormalContext, D, trace: Dict[int, Fraction]) -> DeRhamElement:
    """Two-form of the trace pairing tr(e_i e_j) of a dg-algebra D."""
    matrix = {}
    for (i, j), v in D.m2.items():
        t = sum(c * trace.get(k, 0) for k, c in v.items())
        if t:
            matrix[(i, j)] = t
    return pairing_to_two_form(ctx, matrix)


def two_form_to_pairing(omega: DeRhamElement) -> Dict[Tuple[int, int], Fraction]:
    """Case table on the constant part a_{ij} dx^i dx^j (i ≤ j):
    ⟨x_i,x_j⟩ = a_ij (i<j), 2a_ii (i=j), (-1)^{|x_i||x_j|} a_ji (i>j)."""
    ctx = omega.ctx
    out = {}
    for w, c in omega.order_component(2).terms.items():
        (_, i), (_, j) = w
        if i == j:
            out[(i, i)] = 2 * c
        else:
            out[(i, j)] = c
            out[(j, i)] = _sign(ctx.letter_degree((1, i)) * ctx.letter_degree((1, j))) * c
    return out


def _form_matrix(omega: DeRhamElement) -> List[List[Fraction]]:
    P = two_form_to_pairing(omega)
    n = omega.ctx.dim
    return [[P.get((i, j), Fraction(0)) for j in range(n)] for i in range(n)]


def is_symplectic(omega: DeRhamElement) -> bool:
    if omega.p != 2:
        raise ValueError("not a two-form")
    if not d_de_rham(omega).is_zero():
        return False
    n = omega.ctx.dim
    return n == 0 or rank(_form_matrix(omega)) == n


def solve_contraction(omega0: DeRhamElement, alpha: DeRhamElement) -> VectorField:
    """X with i_X ω₀ = α for constant symplectic ω₀.

    One-forms are canonically w·dx^b with w an x-word, and i_X ω₀ pairs the
    coefficients X^i_w with ω₀, so the system splits by w."""
    ctx = omega0.ctx
    if omega0.orders() not in ([], [2]):
        raise ValueError("ω₀ must be constant")
    n = ctx.dim
    if n and rank(_form_matrix(omega0)) != n:
        raise ValueError("ω₀ is degenerate")
    if alpha.is_zero():
        return VectorField(ctx, {}, 0)
    degs = alpha.degrees()
    if len(degs) != 1:
        raise ValueError("α must be homogeneous")
    om_deg = omega0.degrees().pop() if omega0.terms else 0
    Xdeg = degs.pop() - om_deg + 1
    by_word: Dict[Word, Dict[int, Fraction]] = {}
    for w, c in alpha.terms.items():
        by_word.setdefault(w[:-1], {})[w[-1][1]] = c
    images: Dict[int, Series] = {}
    for w, rhs in by_word.items():
        cols = [i for i in range(n) if ctx.degrees[i] + Xdeg == ctx.word_degree(w)]
        rows = sorted({b for i in cols for b in range(n)})
        M = [[Fraction(0)] * len(cols) for _ in rows]
        for ci, i in enumerate(cols):
            img = contract(VectorField(ctx, {i: {w: ONE}}, Xdeg), omega0)
            for ww, c in img.terms.items():
                if ww[:-1] != w:
                    raise AssertionError("contraction mixed x-words")
                M[rows.index(ww[-1][1])][ci] = c
        sol = solve(M, [rhs.get(b, Fraction(0)) for b in rows])
        if sol is None:
            raise ValueError(f"i_X ω₀ = α has no solution on word {w}")
        for ci, i in enumerate(cols):
            if sol[ci]:
                images.setdefault(i, {})[w] = sol[ci]
    return VectorField(ctx, images, Xdeg)


# -- diffeomorphisms ---------------------------------------------------------------

class Diffeomorphism:
    """Degree-zero algebra automorphism of T̂V, φ(x^i) = images[i]."""

    def __init__(self, ctx: FormalContext, images: Dict[int, Series]):
        self.ctx = ctx
        self.images = {i: ctx.truncate(images.get(i, {})) for i in range(ctx.dim)}
        for i, v in self.images.items():
            for w in v:
                if ctx.word_degree(w) != ctx.degrees[i]:
                    raise ValueError("diffeomorphism must have degree zero")
        if ctx.dim:
            try:
                inverse(self.linear())
            except ZeroDivisionError:
                raise ValueError("φ₁ is not invertible") from None

    @classmethod
    def identity(cls, ctx) -> "Diffeomorphism":
        return cls(ctx, {i: ctx.x(i) for i in range(ctx.dim)})

    def linear(self) -> List[List[Fraction]]:
        n = self.ctx.dim
        return [[self.images[j].get(((0, i),), Fraction(0)) for j in range(n)] for i in range(n)]

    def component(self, l: int) -> Dict[int, Series]:
        return {i: {w: c for w, c in v.items() if len(w) == l} for i, v in self.images.items()}

    def __call__(self, vec: dict) -> dict:
        """Apply φ as an algebra map to series or to non-cyclic forms."""
        cache: Dict[Tuple[int, int], dict] = {}

        def img(l):
            if l not in cache:
                t, i = l
                cache[l] = self.images[i] if t == 0 else d_series(self.ctx, self.images[i])
            return cache[l]
        return substitute(self.ctx, vec, img)

    def then(self, other: "Diffeomorphism") -> "Diffeomorphism":
        """x ↦ other(self(x)); pulling back by the result equals pulling back
        by self and then by other."""
        return Diffeomorphism(self.ctx, {i: other(v) for i, v in self.images.items()})

    def inverse(self) -> "Diffeomorphism":
        return _series_inverse(self)

    def aux_degrees(self) -> set:
        ctx = self.ctx
        return {ctx.word_aux(w) - ctx.aux[i] for i, v in self.images.items() for w in v}

    def is_identity(self) -> bool:
        return all(v == {((0, i),): ONE} for i, v in self.images.items())

    def __eq__(self, other):
        return isinstance(other, Diffeomorphism) and self.images == other.images


def _series_inverse(phi: Diffeomorphism) -> Diffeomorphism:
    """ψ with ψ(φ(x)) = x: ψ = L^{-1}(x - (φ - φ₁)∘ψ), iterated N times."""
    ctx = phi.ctx
    n = ctx.dim
    if n == 0:
        return Diffeomorphism(ctx, {})
    L = phi.linear()
    Linv = inverse(L)
    # φ(ψ(x^i)) = x^i reads Σ_j L[j][i] ψ(x^j) + Σ_{|w|≥2} φ(x^i)_w ψ(w) = x^i
    higher = {i: {w: c for w, c in v.items() if len(w) >= 2} for i, v in phi.images.items()}
    psi = {r: {((0, i),): Linv[i][r] for i in range(n) if Linv[i][r]} for r in range(n)}
    for _ in range(ctx.N):
        sub = lambda l: psi[l[1]]
        rhs = {}
        for i in range(n):
            v = {((0, i),): ONE}
            vadd(v, substitute(ctx, higher[i], sub), -1)
            rhs[i] = v
        psi = {}
        for j in range(n):
            acc: dict = {}
            for i in range(n):
                if Linv[i][j]:
                    vadd(acc, rhs[i], Linv[i][j])
            psi[j] = acc
    return Diffeomorphism(ctx, psi)


def pullback(phi: Diffeomorphism, alpha: DeRhamElement) -> DeRhamElement:
    return DeRhamElement(alpha.ctx, alpha.p, phi(alpha.terms))


def verify_pullback(phi: Diffeomorphism, omega: DeRhamElement, target: DeRhamElement) -> bool:
    """Independent check that φ*ω = target modulo order > N.

    Expands each word of ω letter by letter with its own d and product code,
    then compares canonical forms."""
    ctx = omega.ctx
    N = ctx.N

    def dvec(v):
        out = {}
        for w, c in v.items():
            for r in range(len(w)):
                s = _sign(sum(ctx.degrees[i] for _, i in w[:r]))
                nw = w[:r] + ((1, w[r][1]),) + w[r + 1:]
                out[nw] = out.get(nw, 0) + s * c
        return out

    images = {}
    for i in range(ctx.dim):
        images[(0, i)] = phi.images[i]
        images[(1, i)] = dvec(phi.images[i])
    total: dict = {}
    for w, c in omega.terms.items():
        partial = [((), Fraction(c))]
        for letter in w:
            nxt = []
            for pw, pc in partial:
                for iw, ic in images[letter].items():
                    if len(pw) + len(iw) <= N:
                        nxt.append((pw + iw, pc * ic))
            partial = nxt
        for pw, pc in partial:
            total[pw] = total.get(pw, 0) + pc
    return DeRhamElement(ctx, omega.p, total) == target.truncate(N)


def conjugate(phi: Diffeomorphism, m: VectorField, phi_inv: Optional[Diffeomorphism] = None) -> VectorField:
    """φ∘m∘φ^{-1}, the field m' with φ*(L_m ω) = L_{m'}(φ*ω)."""
    psi = phi_inv or phi.inverse()
    return VectorField(m.ctx, {i: phi(m(psi.images[i])) for i in range(m.ctx.dim)}, m.degree)


class DarbouxResult:
    def __init__(self, phi, omega, m=None, steps=None):
        self.phi = phi
        self.omega = omega
        self.m = m
        self.steps = steps or []

    def __iter__(self):
        yield self.phi
        yield self.omega


def darboux_normalize(omega: DeRhamElement, m: Optional[VectorField] = None) -> DarbouxResult:
    """Diffeomorphism φ with φ*ω = ω₀ modulo order > N.

    Order by order: α = i_E ω_o / o, i_X ω₀ = α, φ_step(x) = x - X(x)."""
    ctx = omega.ctx
    if omega.p != 2:
        raise ValueError("not a two-form")
    if not is_symplectic(omega):
        raise ValueError("ω is not symplectic")
    omega0 = omega.order_component(2)
    if any(o < 2 for o in omega.orders()):
        raise ValueError("ω has terms of order < 2")
    E = euler_field(ctx)
    phi = Diffeomorphism.identity(ctx)
    cur = omega
    steps = []
    for o in range(3, ctx.N + 1):
        w_o = cur.order_component(o)
        if w_o.is_zero():
            continue
        alpha = contract(E, w_o).scale(Fraction(1, o))
        X = solve_contraction(omega0, alpha)
        if not lie_derivative(X, omega0).truncate(o) == w_o:
            raise AssertionError(f"L_X ω₀ ≠ ω_{o} after solving i_X ω₀ = α")
        step = Diffeomorphism(ctx, {i: vadd(ctx.x(i), X.images.get(i, {}), -1) for i in range(ctx.dim)})
        cur = pullback(step, cur)
        phi = phi.then(step)
        steps.append(X)
    if cur != omega0:
        raise AssertionError("Darboux iteration did not reach ω₀")
    if not verify_pullback(phi, omega, omega0):
        raise AssertionError("independent pullback check failed")
    m_new = conjugate(phi, m) if m is not None else None
    return DarbouxResult(phi, omega0, m_new, steps)


# -- A∞-structures as vector fields ---------------------------------------------------

def ainf_vectorfield_bridge(A: AInfStructure, N: Optional[int] = None) -> VectorField:
    """m(x^k) = Σ_l Σ_J b_l[J][k] x^J (the transpose of each b_l)."""
    ctx = FormalContext.from_space(A.space, N or A.max_arity)
    images: Dict[int, Series] = {}
    for l, table in A.b.items():
        if l > ctx.N:
            continue
        for key, vec in table.items():
            w = tuple((0, j) for j in key)
            for k, c in vec.items():
                images.setdefault(k, {})[w] = images.get(k, {}).get(w, 0) + c
    return VectorField(ctx, images, 1)


def vectorfield_to_ainf(m: VectorField, space: GradedSpace, max_arity: Optional[int] = None) -> AInfStructure:
    K = max_arity or m.ctx.N
    b: Dict[int, dict] = {}
    for k, v in m.images.items():
        for w, c in v.items():
            if 1 <= len(w) <= K:
                key = tuple(i for _, i in w)
                b.setdefault(len(w), {}).setdefault(key, {})[k] = c
    return AInfStructure(space, b, K, check=False)


def square(m: VectorField) -> VectorField:
    """m∘m on generators; [m, m] = 2 m² for odd m."""
    return VectorField(m.ctx, {i: m(v) for i, v in m.images.items()}, 2 * m.degree)


def cyclicity_bridge_defect(m: VectorField, omega: DeRhamElement) -> DeRhamElement:
    if omega.orders() not in ([], [2]):
        raise ValueError("ω must be constant")
    return lie_derivative(m, omega)


def pullback_along_morphism(F, omega: DeRhamElement, ctx_H: FormalContext) -> DeRhamElement:
    """Pull a form on T̂(sA)^∨ back along the algebra map dual to an
    A∞-morphism F: H → A, x_A^k ↦ Σ_n Σ_J (F_n)[J][k] y^J."""
    images: Dict[int, Series] = {}
    for n, table in F.F.items():
        if n > ctx_H.N:
            continue
        for key, vec in table.items():
            w = tuple((0, j) for j in key)
            for k, c in vec.items():
                images.setdefault(k, {})[w] = images.get(k, {}).get(w, 0) + c
    cache = {}

    def img(l):
        if l not in cache:
            t, i = l
            v = images.get(i, {})
            cache[l] = v if t == 0 else d_series(ctx_H, v)
        return cache[l]
    return DeRhamElement(ctx_H, omega.p, substitute(ctx_H, omega.terms, img))


class SymplecticModel:
    def __init__(self, structure, pairing, phi, transfer_result, omega_H):
        self.structure = structure
        self.pairing = pairing
        self.phi = phi
        self.transfer = transfer_result
        self.omega_H = omega_H

    def __iter__(self):
        yield self.structure
        yield self.pairing


def symplectic_minimal_model(A: AInfStructure, omega, K: Optional[int] = None,
                             labels=None) -> SymplecticModel:
    """Transfer, pull ω back to H, Darboux-normalize and conjugate.

    ``omega`` is a constant-order DeRhamElement or a bimod Pairing on A."""
    from .bimod import Pairing, cyclicity_defect
    K = K or A.max_arity
    if callable(omega) and not isinstance(omega, (Pairing, DeRhamElement)):
        return _chain_symplectic_model(A, omega, K, labels)
    if isinstance(omega, Pairing):
        P = omega
        ctx_A = FormalContext.from_space(A.space, K)
        omega = pairing_to_two_form(ctx_A, P.matrix)
    split = A.splitting()
    Pm = two_form_to_pairing(omega)
    Hmat = [[sum(x * y * Pm.get((i, j), 0) for i, x in u.items() for j, y in v.items()) for v in split.H]
            for u in split.H]
    if split.H and rank(Hmat) != len(split.H):
        raise ValueError("pairing is degenerate on cohomology")
    T = transfer(A, K_out=K, labels=labels)
    H = T.H
    ctx_H = FormalContext.from_space(H.space, K)
    omega_H = pullback_along_morphism(T.i, omega, ctx_H)
    if not d_de_rham(omega_H).is_zero():
        raise AssertionError("pulled-back form is not closed")
    m_H = ainf_vectorfield_bridge(H, K)
    D = darboux_normalize(omega_H, m_H)
    H2 = vectorfield_to_ainf(D.m, H.space, K)
    P_out = Pairing(H.space, _pairing_degree(H.space, two_form_to_pairing(D.omega)),
                    two_form_to_pairing(D.omega))
    for n in range(1, K + 1):
        if cyclicity_defect(H2, P_out, n):
            raise ValueError(f"form is not m-constant on cohomology (arity {n})")
    return SymplecticModel(H2, P_out, D.phi, T, omega_H)


def chain_pullback(F, fn, ctx_H: FormalContext) -> DeRhamElement:
    """ω_H = ½ Σ_{J,L} ⟨λ_J, λ_L⟩ d(y^J) d(y^L) for a constant form given by a
    bilinear function ``fn`` on chain vectors and the components λ of F."""
    comps = []
    for n, table in sorted(F.F.items()):
        if n > ctx_H.N:
            continue
        for key, vec in table.items():
            comps.append((key, vec, d_series(ctx_H, {tuple((0, j) for j in key): ONE})))
    half = Fraction(1, 2)
    terms: dict = {}
    for J, u, du in comps:
        for L, v, dv in comps:
            if len(J) + len(L) > ctx_H.N:
                continue
            c = fn(u, v)
            if c:
                vadd(terms, mul(ctx_H, du, dv), half * c)
    return DeRhamElement(ctx_H, 2, terms)


def _chain_symplectic_model(A, fn, K: int, labels) -> SymplecticModel:
    """Variant for chain algebras known only through products and a pairing function."""
    from .bimod import Pairing, cyclicity_defect
    split = A.splitting()
    Hmat = [[fn(u, v) for v in split.H] for u in split.H]
    if split.H and rank(Hmat) != len(split.H):
        raise ValueError("pairing is degenerate on cohomology")
    T = transfer(A, K_out=K, labels=labels)
    H = T.H
    ctx_H = FormalContext.from_space(H.space, K)
    omega_H = chain_pullback(T.i, fn, ctx_H)
    if not d_de_rham(omega_H).is_zero():
        raise AssertionError("pulled-back form is not closed")
    D = darboux_normalize(omega_H, ainf_vectorfield_bridge(H, K))
    H2 = vectorfield_to_ainf(D.m, H.space, K)
    Pm = two_form_to_pairing(D.omega)
    P_out = Pairing(H.space, _pairing_degree(H.space, Pm), Pm)
    for n in range(1, K + 1):
        if cyclicity_defect(H2, P_out, n):
            raise ValueError(f"form is not m-constant on cohomology (arity {n})")
    return SymplecticModel(H2, P_out, D.phi, T, omega_H)


def _pairing_degree(V: GradedSpace, matrix) -> int:
    degs = {V.degrees[i] + V.degrees[j] for (i, j) in matrix}
    if len(degs) > 1:
        raise ValueError("pairing is not homogeneous")
    return -degs.pop() if degs else 0
