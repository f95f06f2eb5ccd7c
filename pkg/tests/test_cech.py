from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from folia.cech import (
    ComplexError,
    NotCocycleError,
    NotFlatError,
    SurfaceComplex,
    TwistedCochain,
    UnitaryLocalSystem,
    batch_dimensions,
    canonical_complex,
    coboundary,
    cohomology,
    cohomology_dimensions,
    cup_product,
    evaluate_fundamental,
    local_system_power,
    pairing_matrix,
    random_system,
    solve_coboundary,
    system_from_holonomy,
    systems_of_order,
)
from folia.fields import cyclotomic
from folia.linalg import rank

from support import gaussian

TORUS = canonical_complex(1)
GENUS2 = canonical_complex(2)


def random_cochain(c, degree, f, rng):
    size = (c.n_vertices, len(c.edges), len(c.triangles))[degree]
    return TwistedCochain(degree, tuple(gaussian(f, rng) for _ in range(size)))


def matrix_rank(f, M):
    return rank(f, [{j: x for j, x in enumerate(row) if not x.is_zero()} for row in M])


# complexes -------------------------------------------------------------------


def test_shipped_complexes():
    assert (TORUS.n_vertices, len(TORUS.edges), len(TORUS.triangles), TORUS.euler) == (7, 21, 14, 0)
    assert GENUS2.euler == -2 and GENUS2.genus == 2
    for c in (TORUS, GENUS2):
        c.validate()
        for e in c.edges:
            assert sum(set(e) <= set(t) for t in c.triangles) == 2
    with pytest.raises(ComplexError):
        canonical_complex(3)


def test_complex_json_and_validation():
    assert SurfaceComplex.from_json(GENUS2.to_json()) == GENUS2
    broken = {"vertices": 7, "triangles": [list(t) for t in TORUS.oriented[:-1]]}
    with pytest.raises(ComplexError):
        SurfaceComplex.from_json(broken)


# local systems -----------------------------------------------------------------


def test_local_system_powers():
    L = system_from_holonomy(GENUS2, 3, (1, 2, 0, 1))
    assert local_system_power(L, 0).is_trivial()
    assert local_system_power(L, 1) == L
    assert local_system_power(L, 3).is_trivial()
    assert not local_system_power(L, 2).is_trivial()
    assert L.order() == 3


def test_flatness_enforced():
    exps = [0] * len(TORUS.edges)
    exps[0] = 1
    with pytest.raises(NotFlatError):
        UnitaryLocalSystem(TORUS, 3, tuple(exps)).check_flat()


def test_holonomy_round_trip():
    rng = random.Random(2)
    for _ in range(10):
        L = random_system(GENUS2, 6, rng)
        assert system_from_holonomy(GENUS2, 6, L.holonomy()).holonomy() == L.holonomy()
        assert UnitaryLocalSystem.from_json(GENUS2, L.to_json()) == L


# cohomology ---------------------------------------------------------------------


def test_cohomology_examples():
    assert cohomology(TORUS, UnitaryLocalSystem.trivial(TORUS)).dims == (1, 2, 1)
    L5 = system_from_holonomy(GENUS2, 5, (1, 0, 2, 3))
    assert cohomology(GENUS2, L5).dims == (0, 2, 0)
    assert cohomology(TORUS, system_from_holonomy(TORUS, 2, (1, 0))).dims == (0, 0, 0)
    assert cohomology(GENUS2, UnitaryLocalSystem.trivial(GENUS2)).dims == (1, 4, 1)


def test_modular_certificate_agrees_with_exact():
    rng = random.Random(3)
    systems = [random_system(GENUS2, rng.randint(2, 8), rng) for _ in range(8)]
    systems.append(UnitaryLocalSystem.trivial(GENUS2))
    for L, rep in zip(systems, batch_dimensions(GENUS2, systems)):
        assert rep.dims == cohomology(GENUS2, L).dims
    assert cohomology_dimensions(GENUS2, systems[-1]).method == "exact"
    assert cohomology_dimensions(GENUS2, systems[0]).method == "modular-certificate"


@pytest.mark.parametrize("m", [2, 3, 4])
def test_exact_dimensions_small_orders(m):
    for L in list(systems_of_order(TORUS, m)):
        assert cohomology(TORUS, L).dims == (0, 0, 0)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10**6))
def test_delta_squared_vanishes(m, seed):
    rng = random.Random(seed)
    f = cyclotomic(m)
    for c in (TORUS, GENUS2):
        L = random_system(c, m, rng) if m > 1 else UnitaryLocalSystem.trivial(c)
        x = random_cochain(c, 0, f, rng)
        assert coboundary(c, L, coboundary(c, L, x, f), f).is_zero()


# coboundary solver ----------------------------------------------------------------


def test_solve_coboundary_round_trip():
    rng = random.Random(4)
    f = cyclotomic(5)
    L = system_from_holonomy(GENUS2, 5, (1, 0, 2, 3))
    for degree in (0, 1):
        x = random_cochain(GENUS2, degree, f, rng)
        z = coboundary(GENUS2, L, x, f)
        res = solve_coboundary(GENUS2, L, z, f)
        assert res.ok
        assert coboundary(GENUS2, L, res.primitive, f) == z


def test_solve_coboundary_reports_class():
    L = UnitaryLocalSystem.trivial(TORUS)
    f = L.field
    h1 = cohomology(TORUS, L, f).h1
    res = solve_coboundary(TORUS, L, h1.reps[0], f)
    assert not res.ok and res.coords == [f(1), f(0)]
    # the orientation cochain pairs to the number of triangles with [Y]
    top = TwistedCochain(2, tuple(f(TORUS.orientation[t]) for t in TORUS.triangles))
    assert evaluate_fundamental(TORUS, L, top, f) == f(14)
    assert not solve_coboundary(TORUS, L, top, f).ok


def test_degree_two_always_solvable_for_nontrivial():
    rng = random.Random(5)
    for m in (2, 3, 4, 6):
        L = random_system(TORUS, m, rng)
        f = cyclotomic(m)
        z = random_cochain(TORUS, 2, f, rng)
        res = solve_coboundary(TORUS, L, z, f)
        assert res.ok and coboundary(TORUS, L, res.primitive, f) == z


def test_solve_coboundary_rejects_non_cocycle():
    L = UnitaryLocalSystem.trivial(TORUS)
    f = L.field
    x = TwistedCochain(1, tuple(f(1) if n == 0 else f(0) for n in range(len(TORUS.edges))))
    with pytest.raises(NotCocycleError):
        solve_coboundary(TORUS, L, x, f)


# cup products ----------------------------------------------------------------------


def test_torus_intersection_form():
    L = UnitaryLocalSystem.trivial(TORUS)
    f = L.field
    M = pairing_matrix(TORUS, L, L, f)
    assert M[0][0].is_zero() and M[1][1].is_zero()
    assert M[0][1] == -M[1][0] and not M[0][1].is_zero()


def test_self_cup_vanishes():
    L = UnitaryLocalSystem.trivial(GENUS2)
    f = L.field
    rng = random.Random(6)
    h1 = cohomology(GENUS2, L, f).h1
    for _ in range(5):
        u = h1.reps[0].scale(gaussian(f, rng))
        for r in h1.reps[1:]:
            u = u + r.scale(gaussian(f, rng))
        assert cup_product(GENUS2, L, u, L, u, f).is_zero()


def test_genus2_order5_pairing():
    L = system_from_holonomy(GENUS2, 5, (1, 0, 2, 3))
    f = cyclotomic(5)
    M = pairing_matrix(GENUS2, L.power(-1), L, f)
    assert len(M) == 2 and matrix_rank(f, M) == 2


def test_cup_antisymmetry():
    rng = random.Random(7)
    for _ in range(6):
        m = rng.randint(2, 8)
        f = cyclotomic(m)
        L = random_system(GENUS2, m, rng)
        A, B = L.power(-1), L
        ha, hb = cohomology(GENUS2, A, f).h1, cohomology(GENUS2, B, f).h1
        for u in ha.reps:
            for v in hb.reps:
                assert cup_product(GENUS2, A, u, B, v, f) == -cup_product(GENUS2, B, v, A, u, f)


def test_cup_vanishes_on_coboundaries():
    rng = random.Random(8)
    f = cyclotomic(4)
    L = random_system(GENUS2, 4, rng)
    h = cohomology(GENUS2, L, f).h1
    db = coboundary(GENUS2, L.power(-1), random_cochain(GENUS2, 0, f, rng), f)
    for v in h.reps:
        assert cup_product(GENUS2, L.power(-1), db, L, v, f).is_zero()


def test_dual_systems_required():
    L = system_from_holonomy(GENUS2, 5, (1, 0, 2, 3))
    f = cyclotomic(5)
    u = cohomology(GENUS2, L, f).h1.reps[0]
    with pytest.raises(ValueError):
        cup_product(GENUS2, L, u, L, u, f)


def test_fundamental_class_of_coboundary_vanishes():
    L = UnitaryLocalSystem.trivial(TORUS)
    f = L.field
    rng = random.Random(9)
    z = coboundary(TORUS, L, random_cochain(TORUS, 1, f, rng), f)
    assert evaluate_fundamental(TORUS, L, z, f).is_zero()
