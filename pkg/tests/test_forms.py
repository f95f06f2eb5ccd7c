from __future__ import annotations

import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from folia.classify import in_model_E
from folia.fields import cyclotomic
from folia.forms import (
    BivariatePoly,
    FormalOneForm,
    OneForm2,
    ProjectiveTriple,
    TruncationError,
    compose_gauges,
    exact_form,
    gauge_scale,
    gauge_shift,
    gauge_transform,
    invariant_form_search,
    line_scale,
    omega,
    preserves,
    pullback,
    triple_check,
)
from folia.germ_group import GermDiffeo, exp_field, make_v
from folia.series_core import PowerSeries

from support import gaussian, random_tangent

Q = cyclotomic(1)
N = 16


def lin(a, f=Q, n=N):
    return GermDiffeo.linear(a, f, n)


def model(a, k, lam, f=Q, n=N, t=1):
    return GermDiffeo(exp_field(make_v(k, lam, f, n), t).series * a)


# one-variable forms -------------------------------------------------------------


def test_log_form_invariance():
    w = omega(0, 1, Q, 10)  # dz/z + dz/z: a logarithmic form
    assert w.pole_order == 1 and w.residue() == Q(2)
    assert pullback(lin(5, Q, 12), omega(0, 0, Q, 10)).agrees(omega(0, 0, Q, 10), 10)


@pytest.mark.parametrize("k,lam,t", [(1, 0, 1), (1, 2, 3), (2, 3, Fraction(1, 2)), (3, -1, 2)])
def test_flow_preserves_model_form(k, lam, t):
    w = omega(k, lam, Q, N)
    p = pullback(model(1, k, lam, t=t), w)
    assert p.trunc == N - 2 - k
    assert p.agrees(w, p.trunc)


def test_A_k_line():
    for k in (1, 2, 3):
        b = 2
        # z / (1 - b z^k)^{1/k}
        u = PowerSeries.from_dict(Q, {0: 1, k: -b}, N - 1).power(Fraction(-1, k))
        f = GermDiffeo(PowerSeries(Q, [0] + list(u.coeffs)))
        w = omega(k, 0, Q, N)
        assert preserves(f, w)
        F = cyclotomic(8)
        a = F.zeta(8)
        assert line_scale(GermDiffeo.linear(a, F, N), k) == a ** (-k)


def test_pullback_needs_enough_order():
    with pytest.raises(TruncationError):
        pullback(GermDiffeo(PowerSeries(Q, [0, 1, 1])), omega(4, 0, Q, 3))


def test_form_json_and_readouts():
    w = FormalOneForm.from_terms(Q, {-3: 2, -1: 5, 2: 1}, 4)
    assert w.pole_order == 3 and w.leading() == Q(2) and w.residue() == Q(5)
    assert w.to_json()["pole"] == 3


def test_symmetry_characterization_random():
    f = cyclotomic(12)
    rng = random.Random(11)
    for _ in range(12):
        k = rng.randint(1, 3)
        lam = gaussian(f, rng)
        n = N + k + 2
        g = model(f.zeta(k, rng.randrange(k)), k, lam, f, n, t=rng.randint(1, 3))
        w = omega(k, lam, f, N)
        assert preserves(g, w) and in_model_E(g, k, lam)
        h = random_tangent(f, rng, n, k + 1)
        bad = g @ h
        assert preserves(bad, w) == in_model_E(bad, k, lam) == False  # noqa: E712


# invariant form search --------------------------------------------------------------


def test_search_examples():
    assert invariant_form_search([lin(2), lin(3)]).kind == "logarithmic"
    e = model(1, 2, 3)
    r = invariant_form_search([e, GermDiffeo(e.series * -1)])
    assert (r.kind, r.k, r.lam) == ("k_lambda", 2, Q(3))
    moeb = GermDiffeo(PowerSeries(Q, [0] + [1] * N))
    r = invariant_form_search([moeb, lin(2)])
    assert (r.kind, r.k) == ("line", 1)


def test_search_none():
    gens = [exp_field(make_v(1, 0, Q, N)), exp_field(make_v(2, 0, Q, N))]
    assert invariant_form_search(gens).kind == "none_at_order_N"


def test_search_conjugation_equivariant():
    e = model(1, 2, 3)
    gens = [e, GermDiffeo(e.series * -1)]
    base = invariant_form_search(gens)
    phi = GermDiffeo(PowerSeries.from_dict(Q, {1: 1, 2: 1, 4: -2}, N))
    moved = invariant_form_search([phi.inverse() @ g @ phi for g in gens])
    assert (moved.kind, moved.k, moved.lam) == (base.kind, base.k, base.lam)
    transported = pullback(phi, base.form)
    top = min(moved.form.trunc, transported.trunc)
    assert moved.form.agrees(transported, top)


# bivariate triples ------------------------------------------------------------------

x, y = sp.symbols("x y")


def to_sympy(p: BivariatePoly):
    return sum(sp.Rational(str(c.rational())) * x ** i * y ** j for (i, j), c in p.terms.items())


def oracle_residuals(t: ProjectiveTriple):
    """dw0 - w0^w1, dw1 - 2 w0^w2, dw2 - w1^w2 by sympy, as dx^dy coefficients."""
    w = [(to_sympy(f.a), to_sympy(f.b)) for f in (t.w0, t.w1, t.w2)]
    d = lambda a, b: sp.diff(b, x) - sp.diff(a, y)
    wedge = lambda u, v: u[0] * v[1] - u[1] * v[0]
    return [
        sp.expand(d(*w[0]) - wedge(w[0], w[1])),
        sp.expand(d(*w[1]) - 2 * wedge(w[0], w[2])),
        sp.expand(d(*w[2]) - wedge(w[1], w[2])),
    ]


def rand_poly(rng, degree, const=None):
    terms = {(i, j): rng.randint(-3, 3) for i in range(degree + 1) for j in range(degree + 1 - i)}
    if const is not None:
        terms[(0, 0)] = const
    return BivariatePoly(Q, terms)


def rand_form(rng, degree):
    return OneForm2(rand_poly(rng, degree), rand_poly(rng, degree))


def integrable(rng):
    H = rand_poly(rng, 3)
    dH = exact_form(H)
    zero = BivariatePoly(Q)
    return ProjectiveTriple(dH, OneForm2(zero, zero), dH.scale(H.compose_univariate([rng.randint(-2, 2) for _ in range(3)])))


def test_triple_examples():
    X, Y, zero = BivariatePoly.x(Q), BivariatePoly.y(Q), BivariatePoly(Q)
    one = BivariatePoly.const(Q, 1)
    dy, dx = OneForm2(zero, one), OneForm2(one, zero)
    phi = Y * Y * 3 + Y - 2
    assert triple_check(ProjectiveTriple(dy, OneForm2(zero, zero), dy.scale(phi))).ok
    rep = triple_check(ProjectiveTriple(dy, dx, OneForm2(zero, zero)))
    r0, r1, r2 = rep.residuals
    # -(dy ^ dx) = dx ^ dy
    assert r0 == one and r1.is_zero() and r2.is_zero()
    assert not rep.ok


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_triple_residuals_match_oracle(seed):
    rng = random.Random(seed)
    t = ProjectiveTriple(rand_form(rng, 3), rand_form(rng, 2), rand_form(rng, 2))
    ours = [to_sympy(r) for r in triple_check(t).residuals]
    assert [sp.expand(a - b) for a, b in zip(ours, oracle_residuals(t))] == [0, 0, 0]


def test_gauge_identity():
    rng = random.Random(1)
    t = ProjectiveTriple(rand_form(rng, 2), rand_form(rng, 2), rand_form(rng, 2))
    s = gauge_transform(t, BivariatePoly.const(Q, 1), BivariatePoly(Q), 8)
    for a, b in zip((s.w0, s.w1, s.w2), (t.w0, t.w1, t.w2)):
        assert a.a == b.a and a.b == b.b


def test_gauge_scale_example():
    X, Y, zero = BivariatePoly.x(Q), BivariatePoly.y(Q), BivariatePoly(Q)
    one = BivariatePoly.const(Q, 1)
    dy = OneForm2(zero, one)
    t = ProjectiveTriple(dy, OneForm2(zero, zero), dy.scale(Y))
    prec = 6
    s = gauge_scale(t, one + X, prec)
    inv = BivariatePoly(Q, {(n, 0): (-1) ** n for n in range(prec + 1)})  # 1/(1+x)
    assert s.w0.a.is_zero() and s.w0.b == one + X
    assert s.w1.a == -inv and s.w1.b.is_zero()
    assert s.w2.a.is_zero() and s.w2.b == Y * inv
    assert triple_check(s).ok


def test_gauge_rejects_non_unit():
    rng = random.Random(2)
    with pytest.raises(ValueError):
        gauge_scale(integrable(rng), BivariatePoly.x(Q), 6)


def test_gauge_preserves_integrability():
    rng = random.Random(3)
    for _ in range(10):
        t = integrable(rng)
        s = gauge_transform(t, rand_poly(rng, 2, const=2), rand_poly(rng, 2), 8)
        rep = triple_check(s)
        assert rep.ok and rep.certified_degree >= 6


def test_gauge_composition():
    rng = random.Random(4)
    prec = 7
    for _ in range(5):
        t = ProjectiveTriple(rand_form(rng, 2), rand_form(rng, 2), rand_form(rng, 2))
        f1, g1 = rand_poly(rng, 2, const=1), rand_poly(rng, 2)
        f2, g2 = rand_poly(rng, 2, const=-1), rand_poly(rng, 2)
        two_step = gauge_transform(gauge_transform(t, f1, g1, prec), f2, g2, prec)
        f, g = compose_gauges(f1, g1, f2, g2, prec)
        one_step = gauge_transform(t, f, g, prec)
        for a, b in zip((two_step.w0, two_step.w1, two_step.w2), (one_step.w0, one_step.w1, one_step.w2)):
            top = min(a.a.prec, b.a.prec, a.b.prec, b.b.prec) - 1
            assert a.a.truncate(top) == b.a.truncate(top) and a.b.truncate(top) == b.b.truncate(top)


def test_gauge_shift_is_exact():
    rng = random.Random(5)
    t = integrable(rng)
    s = gauge_shift(t, rand_poly(rng, 3))
    assert triple_check(s).ok and s.w0 == t.w0


def test_triple_json():
    rng = random.Random(6)
    t = integrable(rng)
    u = ProjectiveTriple.from_json(t.to_json(), Q)
    assert triple_check(u).ok and u.w2.b == t.w2.b
