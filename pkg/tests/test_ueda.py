from __future__ import annotations

import random

import pytest
import sympy as sp

from folia.cech import (
    UnitaryLocalSystem,
    canonical_complex,
    coboundary,
    cohomology,
    random_system,
    system_from_holonomy,
)
from folia.fields import cyclotomic
from folia.forms import omega, preserves
from folia.germ_group import GermDiffeo, exp_field, make_v
from folia.samples import genus2_seed, torus_seed
from folia.series_core import PowerSeries
from folia.ueda import (
    INFINITE,
    ConstructionError,
    LogAffineFailure,
    LogAffineSystem,
    TransitionError,
    TransitionSystem,
    closed_form_obstruction,
    compute_ueda,
    construct_formal_foliation,
    extend_order,
    log_affine_construct,
    log_affine_model,
    retroactive_coefficient,
    retroactive_correction,
    triangle_obstruction,
    ueda_seed,
    universal_part,
    validate,
)

from support import foliated_system


def torus_h1():
    c = canonical_complex(1)
    L = UnitaryLocalSystem.trivial(c)
    return c, L, L.field, cohomology(c, L, L.field).h1


def tangent_changes(T, rng, n):
    f = T.field
    return [GermDiffeo(PowerSeries.from_dict(f, {1: 1, 2: rng.randint(-3, 3), 3: rng.randint(-3, 3)}, n))
            for _ in T.complex.vertices]


# validation -----------------------------------------------------------------


def test_linear_system_is_valid_through_trunc():
    c = canonical_complex(2)
    L = system_from_holonomy(c, 3, (1, 0, 2, 1))
    T = TransitionSystem.linear(c, L, 9, cyclotomic(3))
    rep = validate(T)
    assert rep.order_valid == 9 and rep.foliated and rep.failing_triangle is None


def test_single_edge_perturbation_breaks_order_three():
    c, L, f, _ = torus_h1()
    bump = [f.zero] * len(c.edges)
    bump[0] = f.one
    from folia.cech import TwistedCochain

    T = TransitionSystem.from_coefficients(c, L, {3: TwistedCochain(1, tuple(bump))}, 6, f)
    rep = validate(T)
    assert rep.order_valid == 2
    assert rep.failing_triangle is not None and c.edges[0][0] in rep.failing_triangle


def test_non_inverse_pair_names_the_edge():
    c, L, f, _ = torus_h1()
    germs = {e: GermDiffeo.identity(f, 5) for e in c.edges}
    i, j = c.edges[2]
    germs[(j, i)] = GermDiffeo(PowerSeries(f, [0, 1, 1], 5))
    with pytest.raises(TransitionError, match=rf"\({j}, {i}\)"):
        TransitionSystem.from_germs(c, germs)


def test_json_round_trip():
    T = genus2_seed()
    back = TransitionSystem.from_json(T.to_json())
    assert back.agrees(T, T.trunc) and back.nu == T.nu


# Ueda type and class --------------------------------------------------------


def test_linear_system_has_infinite_type():
    c, L, f, _ = torus_h1()
    u = compute_ueda(TransitionSystem.linear(c, L, 8, f))
    assert u.utype == INFINITE and not u.finite


def test_coboundary_seed_linearizes():
    c, L, f, _ = torus_h1()
    rng = random.Random(3)
    from folia.cech import TwistedCochain

    h = TwistedCochain(0, tuple(f(rng.randint(-3, 3)) for _ in c.vertices))
    T = ueda_seed(c, L, 1, coboundary(c, L, h, f), 7, f)
    assert compute_ueda(T).utype == INFINITE


def test_torus_seed_type_and_class():
    T = torus_seed(6)
    u = compute_ueda(T)
    assert u.utype == 1
    f = T.field
    _, _, _, h1 = torus_h1()
    assert u.class_coords == h1.coordinates(T.coefficient(2))
    assert any(not x.is_zero() for x in u.class_coords)


@pytest.mark.parametrize("seed", range(4))
def test_ueda_class_invariant_under_coordinate_change(seed):
    rng = random.Random(seed)
    T = genus2_seed(8, seed)
    u = compute_ueda(T)
    T2 = T.transform(tangent_changes(T, rng, T.trunc))
    assert validate(T2).order_valid == T.order_valid
    u2 = compute_ueda(T2)
    assert u2.utype == 2 and u2.same_line(u)


def test_model_group_germs_have_type_at_least_k():
    f = cyclotomic(12)
    c = canonical_complex(2)
    rng = random.Random(5)
    from folia.ueda import random_cocycle

    for k in (1, 2, 3):
        L = random_system(c, k, rng) if k > 1 else UnitaryLocalSystem.trivial(c)
        s = random_cocycle(c, UnitaryLocalSystem.trivial(c), f, rng)
        lam = f(2)
        v = make_v(k, lam, f, 12)
        germs = {(i, j): GermDiffeo(exp_field(v, x).series * L.weight(i, j, f))
                 for (i, j), x in zip(c.edges, s.values)}
        T = TransitionSystem.from_germs(c, germs)
        assert T.system.power(k).is_trivial()
        w = omega(k, lam, f, 8)
        assert all(preserves(g, w) for g in germs.values())
        u = compute_ueda(T)
        assert u.utype == INFINITE or u.utype >= k


# obstructions ---------------------------------------------------------------


@pytest.mark.parametrize("nu,mu", [(2, 3), (3, 4), (3, 5)])
def test_obstruction_vanishes_below_twice_nu(nu, mu):
    T = foliated_system(nu, mu, 10 * nu + mu)
    assert triangle_obstruction(T, mu).cochain.is_zero()
    assert closed_form_obstruction(T, mu, nu).is_zero()


@pytest.mark.parametrize("nu", [1, 2])
def test_obstruction_at_twice_nu_is_cup_square(nu):
    for s in range(5):
        T = foliated_system(nu, 2 * nu, 7 * s + nu)
        assert triangle_obstruction(T, 2 * nu).cochain == closed_form_obstruction(T, 2 * nu, nu)


@pytest.mark.parametrize("nu,mu", [(1, 3), (1, 4), (1, 5), (2, 5), (2, 6), (2, 7)])
def test_corrected_closed_form_matches_direct(nu, mu):
    for s in range(6):
        T = foliated_system(nu, mu, 100 * nu + 10 * mu + s)
        assert triangle_obstruction(T, mu).cochain == closed_form_obstruction(T, mu, nu)


def test_obstruction_is_a_cocycle():
    for s in range(5):
        T = foliated_system(1, 3, s, genus=1)
        ob = triangle_obstruction(T, 3)
        assert ob.order == 4 and ob.mu == 3
        assert coboundary(T.complex, ob.system, ob.cochain, T.field).is_zero()


def test_obstruction_beyond_validity_is_rejected():
    T = torus_seed(6)
    with pytest.raises(TransitionError):
        triangle_obstruction(T, T.order_valid + 1)


def _sympy_universal(T, tri, mu, lo, hi):
    """Integer polynomial for the universal part, evaluated in the field."""
    y, u = sp.symbols("y u")  # u = 1/t keeps every exponent nonnegative
    aij = {m: sp.Symbol(f"p{m}") for m in range(lo, hi + 1)}
    ajk = {l: sp.Symbol(f"q{l}") for l in range(lo, hi + 1)}
    inner = 1 + sum(aij[m] * y ** (m - 1) for m in aij)
    # t psi^l with psi = u y inner
    expr = sp.expand(sum(ajk[l] * u ** (l - 1) * y ** l * inner ** l for l in ajk))
    coeff = sp.expand(-expr.coeff(y, mu + 1))
    i, j, k = tri
    ei = T.complex.edge_index
    f = T.field
    vals = {u: T.t(i, j).inverse()}
    for m in aij:
        vals[aij[m]] = T.coefficient(m).values[ei[(i, j)]]
        vals[ajk[m]] = T.coefficient(m).values[ei[(j, k)]]
    syms = list(vals)
    total = f.zero
    for monom, c in sp.Poly(coeff, *syms).terms():
        term = f(int(c))
        for s, e in zip(syms, monom):
            term = term * vals[s] ** e
        total = total + term
    return total


@pytest.mark.parametrize("nu,mu", [(1, 3), (1, 4), (2, 5)])
def test_universal_part_against_sympy(nu, mu):
    T = foliated_system(nu, mu, 31 * mu + nu)
    lo, hi = nu + 1, mu - nu
    ours = universal_part(T, mu, lo, hi)
    for n, tri in enumerate(T.complex.triangles):
        assert ours.values[n] == _sympy_universal(T, tri, mu, lo, hi)


# extension and retroactive steps --------------------------------------------


def test_extension_with_nontrivial_system_always_succeeds():
    for s in range(4):
        T = foliated_system(1, 4, 50 + s)
        ext = extend_order(T)
        assert ext.ok and ext.order == 5
        assert ext.system.order_valid >= 5 and ext.system.agrees(T, 4)


def test_torus_obstruction_at_order_four():
    T = torus_seed(6)
    ext = extend_order(T)
    assert ext.ok and ext.order == 3
    ext2 = extend_order(ext.system)
    assert not ext2.ok and ext2.order == 4 and ext2.system is None
    assert any(not x.is_zero() for x in ext2.class_coords)


def test_extension_refuses_a_complete_system():
    c, L, f, _ = torus_h1()
    with pytest.raises(TransitionError):
        extend_order(TransitionSystem.linear(c, L, 4, f))


def test_retroactive_coefficient_values():
    assert retroactive_coefficient(1, 3) == -1
    assert retroactive_coefficient(2, 5) == -1
    assert retroactive_coefficient(1, 4) == -2


def test_retroactive_correction_kills_the_class():
    T = extend_order(torus_seed(6)).system
    mu = T.order_valid
    ret = retroactive_correction(T, 1)
    assert ret.order == mu + 1 and ret.modified_order == mu
    assert triangle_obstruction(ret.modified, mu).is_trivial_class()
    assert ret.system.order_valid >= mu + 1
    assert ret.system.agrees(T, mu - 1)


def test_retroactive_with_shifted_coefficient_fails():
    T = extend_order(torus_seed(6)).system
    nu, mu = 1, T.order_valid
    with pytest.raises(ConstructionError):
        retroactive_correction(T, nu, coefficient=2 * nu - mu - 1)


def test_retroactive_needs_large_mu():
    T = foliated_system(2, 4, 3)
    with pytest.raises(ConstructionError):
        retroactive_correction(T, 2)


# the constructor ------------------------------------------------------------


@pytest.mark.parametrize("seed,nu", [(torus_seed, 1), (genus2_seed, 2)])
def test_construct_reaches_target(seed, nu):
    S = seed()
    u = compute_ueda(S)
    run = construct_formal_foliation(S, 9, nu)
    assert validate(run.system).order_valid == 9
    assert run.system.agrees(S.with_trunc(9), nu + 1)
    assert compute_ueda(run.system).same_line(u)
    for mu, inp, out in run.retroactive:
        assert out.agrees(inp, mu - nu)
    orders = [e["order"] for e in run.log]
    assert orders == sorted(set(orders)) and orders[0] == S.order_valid + 1 and orders[-1] <= 9


def test_construct_on_torus_uses_retroactive_steps():
    run = construct_formal_foliation(torus_seed(), 7, 1)
    actions = {e["order"]: e["action"] for e in run.log}
    assert actions[3] == "extend" and actions[4] == "retroactive"


def test_construct_coboundary_seed_without_nu():
    c, L, f, _ = torus_h1()
    h = TwistedCochain_zero_plus(c, f)
    T = ueda_seed(c, L, 1, coboundary(c, L, h, f), 5, f).with_nu(None)
    with pytest.raises(ConstructionError):
        construct_formal_foliation(T, 8)


def TwistedCochain_zero_plus(c, f):
    from folia.cech import TwistedCochain

    return TwistedCochain(0, tuple(f(v) for v in range(c.n_vertices)))


def test_construct_declared_nu_mismatch():
    with pytest.raises(ConstructionError, match="declared nu = 2"):
        construct_formal_foliation(torus_seed(), 8, 2)


def test_construct_infers_nu():
    run = construct_formal_foliation(torus_seed().with_nu(None), 6)
    assert run.nu == 1 and run.system.order_valid == 6


# log-affine normalization ---------------------------------------------------


@pytest.mark.parametrize("nu,lam0", [(1, 0), (1, 2), (2, 5), (1, "1/3")])
def test_log_affine_model_recovers_lambda(nu, lam0):
    c, L, f, h1 = torus_h1()
    a = h1.reps[0] + h1.reps[1].scale(f(3))
    T = log_affine_model(c, a, nu, lam0, 10)
    assert T.order_valid == 10
    res = log_affine_construct(T, nu)
    assert isinstance(res, LogAffineSystem)
    assert res.lam == f(lam0) and res.a == a
    assert all(x.is_zero() for x in res.coefficients)


def test_log_affine_after_coordinate_change():
    c, L, f, h1 = torus_h1()
    a = h1.reps[0] + h1.reps[1].scale(f(3))
    T = log_affine_model(c, a, 1, 2, 10)
    rng = random.Random(3)
    res = log_affine_construct(T.transform(tangent_changes(T, rng, 10)), 1)
    assert isinstance(res, LogAffineSystem) and res.lam == f(2)


def test_log_affine_of_constructed_torus_system():
    # the constructor's primitive choices keep the relation classes on the
    # line of [a] through order 7 only; the failure carries its witness
    run = construct_formal_foliation(torus_seed(), 10, 1)
    res = log_affine_construct(run.system, 1)
    assert isinstance(res, LogAffineFailure)
    assert res.order == 8 and res.steps[-1] == {"order": 8, "action": "fail"}
    assert all(s["action"] != "fail" for s in res.steps[:-1])
    assert res.a_coords == [res.lam.field.one, res.lam.field(2)]


def test_log_affine_zero_coefficients_give_zero_lambda():
    c, L, f, h1 = torus_h1()
    T = log_affine_model(c, h1.reps[0], 1, 0, 8)
    res = log_affine_construct(T, 1)
    assert res.lam == f.zero and res.steps == []


def _quadratic_seed(a, b, n=8):
    c, L, f, _ = torus_h1()
    germs = {}
    for e, x, y in zip(c.edges, a.values, b.values):
        den = PowerSeries.from_dict(f, {0: 1, 1: x, 2: y}, n - 1).reciprocal()
        germs[e] = GermDiffeo(PowerSeries.from_dict(f, {j + 1: den[j] for j in range(n)}, n))
    return TransitionSystem.from_germs(c, germs)


def test_log_affine_failure_for_independent_quadratic_term():
    _, _, f, h1 = torus_h1()
    T = _quadratic_seed(h1.reps[0], h1.reps[1])
    res = log_affine_construct(T, 1)
    assert isinstance(res, LogAffineFailure)
    assert res.order == 1
    assert res.to_json()["ok"] is False


def test_log_affine_succeeds_for_proportional_quadratic_term():
    _, _, f, h1 = torus_h1()
    T = _quadratic_seed(h1.reps[0], h1.reps[0].scale(f(2)))
    res = log_affine_construct(T, 1)
    assert isinstance(res, LogAffineSystem)


def test_log_affine_rejects_twisted_system():
    with pytest.raises(TransitionError):
        log_affine_construct(genus2_seed(), 1)
