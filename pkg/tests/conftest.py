"""Shared random generators for the test suite."""

import itertools
import random
from fractions import Fraction

import pytest

from localcy.ainf import AInfStructure, from_dg, transfer
from localcy.algebras import random_dg_algebra
from localcy.ncsym import (DeRhamElement, FormalContext, VectorField, d_de_rham,
                           pairing_to_two_form)


def random_minimal(rng, K=5):
    """Minimal model of a random dg-algebra with nonzero cohomology."""
    while True:
        D = random_dg_algebra(rng)
        H = transfer(from_dg(D, max_arity=K), K_out=K).H
        if H.dim:
            return H


def random_words(rng, ctx, p, nterms, maxlen, minlen=1):
    out = {}
    for _ in range(nterms):
        L = rng.randint(max(p, minlen), maxlen)
        pos = rng.sample(range(L), p)
        w = tuple((1 if r in pos else 0, rng.randrange(ctx.dim)) for r in range(L))
        out[w] = out.get(w, 0) + Fraction(rng.randint(-3, 3))
    return out


def random_form(rng, ctx, p, nterms=4, maxlen=3, minlen=1):
    return DeRhamElement(ctx, p, random_words(rng, ctx, p, nterms, maxlen, minlen))


def random_field(rng, ctx, degree, maxlen=2, tries=3, minlen=1):
    imgs = {}
    for i in range(ctx.dim):
        for _ in range(tries):
            L = rng.randint(minlen, maxlen)
            w = tuple((0, rng.randrange(ctx.dim)) for _ in range(L))
            if ctx.word_degree(w) == ctx.degrees[i] + degree:
                imgs.setdefault(i, {})[w] = imgs.get(i, {}).get(w, 0) + Fraction(rng.choice([-2, -1, 1, 3]))
    return VectorField(ctx, imgs, degree)


def random_symplectic_context(rng, N=6, graded=False):
    """2–4 generators paired off (x, y) with |dx| + |dy| fixed, plus the
    constant form ω₀ = Σ ± dx dy.  Returns (ctx, ω₀)."""
    npairs = rng.randint(1, 2)
    degs, aux, matrix = [], [], {}
    total = rng.choice([0, 1, 2]) if not graded else 2
    for r in range(npairs):
        a = rng.randint(-1, 1)
        b = total - 2 - a   # |dx| + |dy| = total
        t = rng.randint(0, 1) if graded else 0
        i, j = len(degs), len(degs) + 1
        degs += [a, b]
        aux += [t, -t + (1 if graded else 0)]
        c = Fraction(rng.choice([1, 2, -1]))
        matrix[(i, j)] = c
        # dx dy and its rotation agree up to (-1)^{|dx||dy|}
        matrix[(j, i)] = c * (-1) ** ((a + 1) * (b + 1))
    ctx = FormalContext(degs, N, aux if graded else None)
    return ctx, pairing_to_two_form(ctx, matrix)


def exact_perturbation(rng, ctx, omega0, nterms=3, maxlen=4):
    """ω₀ + dβ with β a homogeneous one-form of order ≥ 3 of the same degree
    (and aux degree) as the primitive of ω₀."""
    target = None
    for w in omega0.terms:
        target = (ctx.word_degree(w), ctx.word_aux(w))
        break
    for _ in range(100):
        terms = {}
        for _ in range(200):
            if len(terms) >= nterms:
                break
            L = rng.randint(3, maxlen)
            pos = rng.randrange(L)
            w = tuple((1 if r == pos else 0, rng.randrange(ctx.dim)) for r in range(L))
            if (ctx.word_degree(w) + 1, ctx.word_aux(w)) == target:
                terms[w] = Fraction(rng.choice([-2, -1, 1, 2]))
        d_beta = d_de_rham(DeRhamElement(ctx, 1, terms))
        if not d_beta.is_zero():
            return omega0 + d_beta
    return None


def random_darboux_case(rng, N=6, graded=False):
    """(ctx, ω₀, ω) with ω - ω₀ a nonzero exact form of order ≥ 3."""
    while True:
        ctx, omega0 = random_symplectic_context(rng, N, graded)
        omega = exact_perturbation(rng, ctx, omega0)
        if omega is not None:
            return ctx, omega0, omega


def _sign(e):
    return -1 if e % 2 else 1


def pairing_identity_failures(D, P):
    """Basis triples where ⟨xy, z⟩ = (-1)^{|x|(|y|+|z|)} ⟨yz, x⟩ or
    ⟨dx, y⟩ = (-1)^{|x||y|+1} ⟨dy, x⟩ fails."""
    n = D.space.dim
    deg = D.space.degrees
    pv = lambda u, v: sum((x * y * P(i, j) for i, x in u.items() for j, y in v.items()), Fraction(0))
    e = lambda i: {i: Fraction(1)}
    bad = []
    for x, y, z in itertools.product(range(n), repeat=3):
        lhs = pv(D.mul(e(x), e(y)), e(z))
        rhs = _sign(deg[x] * (deg[y] + deg[z])) * pv(D.mul(e(y), e(z)), e(x))
        if lhs != rhs:
            bad.append(("product", x, y, z))
    for x, y in itertools.product(range(n), repeat=2):
        if pv(D.d(e(x)), e(y)) != _sign(deg[x] * deg[y] + 1) * pv(D.d(e(y)), e(x)):
            bad.append(("differential", x, y))
    return bad


@pytest.fixture
def rng():
    return random.Random(20261016)


# acceptance lines, printed once at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
