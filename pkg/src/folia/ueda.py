"""Transition systems over a triangulated surface, Ueda classes, and the
order-by-order construction of foliated transition data.

For each sorted edge i < j the relation

    t_ij y_j - y_i = P_ij(y_i),    P_ij(y) = sum_{l >= 2} a_ij^(l) y^l

expresses the coordinate y_j through y_i on the overlap.  The germ phi_ij
with y_i = phi_ij(y_j) is the compositional inverse of
psi_ij(y) = (y + P_ij(y)) / t_ij.  The linear parts t_ij are a flat unitary
local system and the order-l coefficients a^(l) form a 1-cochain with values
in the power t^{-(l-1)} of it.

For a triangle i < j < k the defect

    D_ijk(y) = P_ij(y) + t_ij P_jk(psi_ij(y)) - P_ik(y)

vanishes identically exactly when phi_ij o phi_jk = phi_ik.  If it vanishes
through order mu, its coefficient at order mu + 1 is (d a^(mu+1))_ijk plus a
universal expression in the lower coefficients.  The obstruction cochain is
(d a^(mu+1)) - D^(mu+1), the contribution of the lower coefficients with the
sign flipped; its values live in t^{-mu}.  Only constant coefficients occur:
overlaps of vertex stars are contractible, so a locally constant coefficient
is one number per edge.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .cech import (
    NotFlatError,
    SurfaceComplex,
    TwistedCochain,
    UnitaryLocalSystem,
    canonical_complex,
    coboundary,
    cohomology,
    cup_cochain,
    evaluate_fundamental,
    solve_coboundary,
)
from .fields import Coefficient, CyclotomicField, Field, cyclotomic, field_from_label
from .germ_group import BackendError, GermDiffeo
from .series_core import PowerSeries

INFINITE = "infinity_at_order_N"


class TransitionError(ValueError):
    """Malformed transition data; the message names the edge or triangle."""


class ConstructionError(RuntimeError):
    """A construction step could not be carried out; `witness` is JSON-ready."""

    def __init__(self, message: str, witness: dict | None = None):
        super().__init__(message)
        self.witness = witness or {}


# ---------------------------------------------------------------------------
# complexes by reference


def complex_to_json(c: SurfaceComplex) -> dict:
    g = c.genus
    if g in (1, 2) and c == canonical_complex(g):
        return {"genus": g}
    return c.to_json()


def complex_from_json(obj: dict) -> SurfaceComplex:
    if "genus" in obj:
        return canonical_complex(int(obj["genus"]))
    return SurfaceComplex.from_json(obj)


def _exact_field(field: Field) -> CyclotomicField:
    if not isinstance(field, CyclotomicField):
        raise BackendError("transition systems need an exact cyclotomic field")
    return field


# ---------------------------------------------------------------------------
# transition systems


@dataclass(frozen=True, eq=False)
class TransitionSystem:
    complex: SurfaceComplex
    system: UnitaryLocalSystem
    field: Field
    relations: tuple  # PowerSeries P_ij per sorted edge, aligned with complex.edges
    nu: int | None = None  # declared Ueda type, if any

    def __post_init__(self):
        c = self.complex
        f = _exact_field(self.field)
        if f.m % self.system.m:
            raise TransitionError(f"{f.label} lacks the roots of unity of order {self.system.m}")
        if len(self.relations) != len(c.edges):
            raise TransitionError("one relation per edge is required")
        n = self.relations[0].trunc
        for e, p in zip(c.edges, self.relations):
            if p.trunc != n:
                raise TransitionError(f"edge {e}: trunc {p.trunc} differs from {n}")
            if not (p[0].is_zero() and p[1].is_zero()):
                raise TransitionError(f"edge {e}: relation must start at order 2")
        try:
            self.system.check_flat()
        except NotFlatError as exc:
            raise TransitionError(str(exc)) from None

    # construction -------------------------------------------------------

    @classmethod
    def from_coefficients(cls, c: SurfaceComplex, L: UnitaryLocalSystem, coeffs: dict[int, TwistedCochain],
                          trunc: int, field: Field | None = None, nu: int | None = None) -> "TransitionSystem":
        f = field or L.field
        rel = []
        for n in range(len(c.edges)):
            cs = [f.zero] * (trunc + 1)
            for l, a in coeffs.items():
                if l <= trunc:
                    cs[l] = f(a.values[n])
            rel.append(PowerSeries._raw(f, cs))
        return cls(c, L, f, tuple(rel), nu)

    @classmethod
    def linear(cls, c: SurfaceComplex, L: UnitaryLocalSystem, trunc: int, field: Field | None = None) -> "TransitionSystem":
        return cls.from_coefficients(c, L, {}, trunc, field)

    @classmethod
    def from_germs(cls, c: SurfaceComplex, germs: dict, nu: int | None = None) -> "TransitionSystem":
        """From germs phi_ij (y_i = phi_ij(y_j)) keyed by oriented edges.

        Each edge needs at least one orientation; when both are given they
        must be mutually inverse through the trunc order.
        """
        sorted_germs = []
        for i, j in c.edges:
            g, h = germs.get((i, j)), germs.get((j, i))
            if g is None and h is None:
                raise TransitionError(f"edge {(i, j)}: no germ given")
            if g is not None and h is not None:
                if not (g @ h).is_identity() or not (h @ g).is_identity():
                    raise TransitionError(f"edge {(j, i)}: germ is not the inverse of the germ on {(i, j)}")
            sorted_germs.append(g if g is not None else h.inverse())
        f = _exact_field(sorted_germs[0].field)
        n = min(g.trunc for g in sorted_germs)
        exps = []
        for e, g in zip(c.edges, sorted_germs):
            x = f.root_exponent(g.multiplier)
            if x is None:
                raise TransitionError(f"edge {e}: linear part {g.multiplier} is not a root of unity in {f.label}")
            exps.append(x)
        m = f.m
        d = m
        for x in exps:
            d = math.gcd(d, x)
        L = UnitaryLocalSystem(c, m // d, tuple(x // d for x in exps))
        rel = []
        for (i, j), g in zip(c.edges, sorted_germs):
            psi = g.truncate(n).inverse().series
            t = L.weight(i, j, f)
            rel.append(psi * t - PowerSeries.z(f, n))
        return cls(c, L, f, tuple(rel), nu)

    # access -------------------------------------------------------------

    @property
    def trunc(self) -> int:
        return self.relations[0].trunc

    def t(self, i: int, j: int) -> Coefficient:
        return self.system.weight(i, j, self.field)

    def relation(self, i: int, j: int) -> PowerSeries:
        if i > j:
            raise ValueError("relations are stored on sorted edges")
        return self.relations[self.complex.edge_index[(i, j)]]

    def coefficient(self, l: int) -> TwistedCochain:
        """The order-l coefficients a^(l) as a 1-cochain (values in t^{-(l-1)})."""
        return TwistedCochain(1, tuple(p[l] if l <= p.trunc else self.field.zero for p in self.relations))

    def coefficient_system(self, l: int) -> UnitaryLocalSystem:
        return self.system.power(-(l - 1))

    def with_coefficient(self, l: int, a: TwistedCochain, add: bool = False) -> "TransitionSystem":
        rel = []
        for p, v in zip(self.relations, a.values):
            cs = list(p.coeffs)
            cs[l] = cs[l] + v if add else self.field(v)
            rel.append(PowerSeries._raw(self.field, cs))
        return TransitionSystem(self.complex, self.system, self.field, tuple(rel), self.nu)

    def with_trunc(self, n: int) -> "TransitionSystem":
        """Truncate, or pad with zero coefficients."""
        f = self.field
        rel = []
        for p in self.relations:
            cs = list(p.coeffs[: n + 1]) + [f.zero] * max(0, n - p.trunc)
            rel.append(PowerSeries._raw(f, cs))
        return TransitionSystem(self.complex, self.system, f, tuple(rel), self.nu)

    def with_nu(self, nu: int | None) -> "TransitionSystem":
        return TransitionSystem(self.complex, self.system, self.field, self.relations, nu)

    @cached_property
    def psi(self) -> tuple:
        f = self.field
        z = PowerSeries.z(f, self.trunc)
        out = []
        for (i, j), p in zip(self.complex.edges, self.relations):
            out.append((z + p) * self.t(i, j).inverse())
        return tuple(out)

    def germ(self, i: int, j: int) -> GermDiffeo:
        """phi_ij with y_i = phi_ij(y_j)."""
        if i < j:
            return GermDiffeo(self.psi[self.complex.edge_index[(i, j)]]).inverse()
        return GermDiffeo(self.psi[self.complex.edge_index[(j, i)]])

    @cached_property
    def defects(self) -> tuple:
        """D_ijk per sorted triangle, aligned with complex.triangles."""
        ei = self.complex.edge_index
        rel = self.relations
        out = []
        for i, j, k in self.complex.triangles:
            pij, pjk, pik = rel[ei[(i, j)]], rel[ei[(j, k)]], rel[ei[(i, k)]]
            out.append(pij + pjk.compose(self.psi[ei[(i, j)]]) * self.t(i, j) - pik)
        return tuple(out)

    def defect_cochain(self, l: int) -> TwistedCochain:
        return TwistedCochain(2, tuple(d[l] for d in self.defects))

    @cached_property
    def order_valid(self) -> int:
        mu = self.trunc
        for d in self.defects:
            v = d.valuation()
            if v is not None:
                mu = min(mu, v - 1)
        return mu

    def transform(self, changes: Sequence[GermDiffeo]) -> "TransitionSystem":
        """New coordinates z_i with y_i = changes[i](z_i)."""
        c = self.complex
        n = self.trunc
        inv = [g.truncate(n).inverse() for g in changes]
        germs = {}
        for i, j in c.edges:
            germs[(i, j)] = inv[i] @ self.germ(i, j) @ changes[j].truncate(n)
        return TransitionSystem.from_germs(c, germs, self.nu)

    def agrees(self, other: "TransitionSystem", n: int) -> bool:
        """Same relations (hence same germs) through order n."""
        return all(p.agrees(q, n) for p, q in zip(self.relations, other.relations))

    # serialization ------------------------------------------------------

    def to_json(self) -> dict:
        edges = []
        for i, j in self.complex.edges:
            edges.append({"edge": [i, j], "germ": self.germ(i, j).to_json()})
        out = {
            "kind": "transition_system",
            "complex": complex_to_json(self.complex),
            "field": self.field.label,
            "order": self.trunc,
            "local_system": self.system.to_json(),
            "edges": edges,
        }
        if self.nu is not None:
            out["nu"] = self.nu
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "TransitionSystem":
        c = complex_from_json(obj["complex"])
        f = field_from_label(obj.get("field", "cyclotomic:1"))
        germs = {}
        for item in obj["edges"]:
            i, j = (int(v) for v in item["edge"])
            if (i, j) in germs:
                raise TransitionError(f"edge {(i, j)}: given twice")
            germs[(i, j)] = GermDiffeo.from_json(item["germ"], f)
        for i, j in germs:
            if (min(i, j), max(i, j)) not in c.edge_index:
                raise TransitionError(f"edge {(i, j)}: not an edge of the complex")
        nu = obj.get("nu")
        T = cls.from_germs(c, germs, None if nu is None else int(nu))
        if "order" in obj and int(obj["order"]) < T.trunc:
            T = T.with_trunc(int(obj["order"]))
        return T


def ueda_seed(c: SurfaceComplex, L: UnitaryLocalSystem, nu: int, a: TwistedCochain, trunc: int,
              field: Field | None = None) -> TransitionSystem:
    """Relations P_ij = a_ij y^{nu+1}; a must be a cocycle in t^{-nu}."""
    f = field or L.field
    da = coboundary(c, L.power(-nu), a, f)
    if not da.is_zero():
        raise TransitionError("seed coefficients are not a cocycle")
    return TransitionSystem.from_coefficients(c, L, {nu + 1: a}, trunc, f, nu)


def random_cocycle(c: SurfaceComplex, L: UnitaryLocalSystem, field: Field, rng: random.Random,
                   bound: int = 3, classes: bool = True) -> TwistedCochain:
    """d(h) plus (optionally) a combination of the H^1 basis, small random entries."""
    def coef():
        return field(rng.randint(-bound, bound)) + field(rng.randint(-bound, bound)) * field.i()

    h = TwistedCochain(0, tuple(coef() for _ in c.vertices))
    z = coboundary(c, L, h, field)
    if classes:
        for r in cohomology(c, L, field).h1.reps:
            z = z + r.scale(coef())
    return z


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    order_valid: int
    trunc: int
    failing_triangle: tuple | None = None

    @property
    def foliated(self) -> bool:
        return self.order_valid >= self.trunc

    def to_json(self) -> dict:
        out = {"order_valid": self.order_valid, "trunc": self.trunc}
        if self.failing_triangle is not None:
            out["failing_triangle"] = list(self.failing_triangle)
        return out


def validate(T: TransitionSystem) -> ValidationReport:
    """Checks flatness and relation shape, and finds the order of validity."""
    T.system.check_flat()
    mu = T.order_valid
    bad = None
    if mu < T.trunc:
        for t, d in zip(T.complex.triangles, T.defects):
            if not d[mu + 1].is_zero():
                bad = t
                break
    return ValidationReport(mu, T.trunc, bad)


# ---------------------------------------------------------------------------
# Ueda type and class


@dataclass
class UedaClass:
    utype: int | str  # k, or INFINITE when linearizable through the checked order
    class_coords: list
    order_checked: int
    cocycle: TwistedCochain | None = None
    system: UnitaryLocalSystem | None = None  # t^{-k}

    @property
    def finite(self) -> bool:
        return self.utype != INFINITE

    def same_line(self, other: "UedaClass") -> bool:
        """Equal type and proportional class coordinates."""
        if self.utype != other.utype or len(self.class_coords) != len(other.class_coords):
            return False
        if not self.finite:
            return True
        return _proportional(other.class_coords, self.class_coords) is not None

    def to_json(self) -> dict:
        return {
            "utype": self.utype,
            "class": [x.to_json() for x in self.class_coords],
            "order_checked": self.order_checked,
        }


def _proportional(v: Sequence[Coefficient], w: Sequence[Coefficient]):
    """kappa with v = kappa w (w nonzero), or None."""
    piv = next((r for r, x in enumerate(w) if not x.is_zero()), None)
    if piv is None:
        return None
    kappa = v[piv] / w[piv]
    if all(a == kappa * b for a, b in zip(v, w)):
        return kappa
    return None


def _monomial_changes(T: TransitionSystem, h: TwistedCochain, l: int) -> list[GermDiffeo]:
    """y_i = z_i + h_i z_i^l."""
    f, n = T.field, T.trunc
    return [GermDiffeo(PowerSeries.from_dict(f, {1: 1, l: h.values[i]}, n)) for i in T.complex.vertices]


def compute_ueda(T: TransitionSystem) -> UedaClass:
    """Linearize order by order; the first unsolvable order k+1 gives utype k.

    At order l the relations are linear below l, so a^(l) is a cocycle in
    t^{-(l-1)}; when it equals d(h), the change y_i = z_i + h_i z_i^l
    removes it (it shifts a^(l) by -d(h)).
    """
    c, f = T.complex, T.field
    top = T.order_valid
    cur = T
    for l in range(2, top + 1):
        a = cur.coefficient(l)
        if a.is_zero():
            continue
        Ls = cur.coefficient_system(l)
        res = solve_coboundary(c, Ls, a, f)
        if not res.ok:
            return UedaClass(l - 1, res.coords, top, a, Ls)
        cur = cur.transform(_monomial_changes(cur, res.primitive, l))
    return UedaClass(INFINITE, [], top)


# ---------------------------------------------------------------------------
# obstructions


@dataclass
class ObstructionCocycle:
    order: int  # mu + 1
    system: UnitaryLocalSystem  # t^{-mu}
    cochain: TwistedCochain
    field: Field

    @property
    def mu(self) -> int:
        return self.order - 1

    def class_coords(self) -> list:
        c = self.system.complex
        return cohomology(c, self.system, self.field).h2.coordinates(self.cochain)

    def is_trivial_class(self) -> bool:
        return all(x.is_zero() for x in self.class_coords())

    def to_json(self) -> dict:
        return {"order": self.order, "cochain": self.cochain.to_json(),
                "class": [x.to_json() for x in self.class_coords()]}


def triangle_obstruction(T: TransitionSystem, mu: int | None = None) -> ObstructionCocycle:
    """The order-(mu+1) obstruction of a system valid through mu."""
    valid = T.order_valid
    if mu is None:
        mu = valid
    if mu > valid:
        raise TransitionError(f"system is valid only through order {valid}, not {mu}")
    if mu >= T.trunc:
        raise TransitionError(f"order {mu + 1} is beyond the trunc order {T.trunc}")
    c, f = T.complex, T.field
    Ls = T.system.power(-mu)
    da = coboundary(c, Ls, T.coefficient(mu + 1), f)
    ob = da - T.defect_cochain(mu + 1)
    # every 2-cochain on a surface is a cocycle (there are no 3-simplices)
    assert coboundary(c, Ls, ob, f).degree == 3
    return ObstructionCocycle(mu + 1, Ls, ob, f)


def _compositions(total: int, parts: Sequence[int], count_limit: int):
    """Multisets of `parts` summing to `total` with at most count_limit items,
    as dicts part -> multiplicity."""
    parts = sorted(parts)

    def rec(idx, remaining, used):
        if remaining == 0:
            yield {}
            return
        if idx == len(parts) or used == count_limit:
            return
        p = parts[idx]
        for r in range(0, min(remaining // p, count_limit - used) + 1):
            for rest in rec(idx + 1, remaining - r * p, used + r):
                if r:
                    yield {p: r, **rest}
                else:
                    yield rest

    yield from rec(0, total, 0)


def universal_part(T: TransitionSystem, mu: int, lo: int, hi: int) -> TwistedCochain:
    """Order-(mu+1) obstruction built from the coefficients a^(l), lo <= l <= hi, only.

    Direct multinomial expansion of t_ij sum_l a_jk^(l) psi_ij(y)^l with
    psi_ij(y) = t_ij^{-1} y (1 + sum_m a_ij^(m) y^{m-1}), negated; independent
    of series composition.
    """
    c, f = T.complex, T.field
    ei = c.edge_index
    coef = {l: T.coefficient(l).values for l in range(lo, hi + 1)}
    out = []
    for i, j, k in c.triangles:
        t = T.t(i, j)
        tinv = t.inverse()
        aij = {m: coef[m][ei[(i, j)]] for m in coef}
        ajk = {l: coef[l][ei[(j, k)]] for l in coef}
        total = f.zero
        for l in range(lo, hi + 1):
            if ajk[l].is_zero():
                continue
            need = mu + 1 - l
            if need <= 0:
                continue
            # [y^need] (1 + sum_m a_ij^(m) y^{m-1})^l
            s = f.zero
            for comp in _compositions(need, [m - 1 for m in coef], l):
                r = sum(comp.values())
                mult = math.factorial(l) // math.factorial(l - r)
                term = f.one
                for p, cnt in comp.items():
                    mult //= math.factorial(cnt)
                    term = term * aij[p + 1] ** cnt
                s = s + term * mult
            total = total + ajk[l] * tinv ** (l - 1) * s
        out.append(-total)
    return TwistedCochain(2, tuple(out))


def closed_form_obstruction(T: TransitionSystem, mu: int, nu: int,
                            second_coefficient: int | None = None) -> TwistedCochain:
    """Closed formula for the order-(mu+1) obstruction of a type-nu system.

    mu < 2 nu: zero.  mu = 2 nu: -(nu+1) a_ij t_ij^{-nu} a_jk with a = a^(nu+1).
    mu >= 2 nu + 1: the universal part in a^(l), nu+1 <= l <= mu-nu, plus

        (nu - mu - 1) a_ij^(nu+1) t_ij^{-(mu-nu)} a_jk^(mu-nu+1)
        + s a_ij^(mu-nu+1) t_ij^{-nu} a_jk^(nu+1)

    where s = second_coefficient, by default -(nu+1) (the value a direct
    expansion produces).
    """
    c, f = T.complex, T.field
    F = len(c.triangles)
    if mu < 2 * nu:
        return TwistedCochain.zero(2, F, f)
    a = T.coefficient(nu + 1)
    if mu == 2 * nu:
        return cup_cochain(c, a, T.system.power(-nu), a, f).scale(f(-(nu + 1)))
    s = -(nu + 1) if second_coefficient is None else second_coefficient
    b = T.coefficient(mu - nu + 1)
    univ = universal_part(T, mu, nu + 1, mu - nu)
    first = cup_cochain(c, a, T.system.power(-(mu - nu)), b, f).scale(f(nu - mu - 1))
    second = cup_cochain(c, b, T.system.power(-nu), a, f).scale(f(s))
    return univ + first + second


# ---------------------------------------------------------------------------
# extension steps


@dataclass
class ExtensionResult:
    ok: bool
    order: int  # the order that was (or could not be) made valid
    system: TransitionSystem | None
    obstruction: ObstructionCocycle
    class_coords: list
    primitive: TwistedCochain | None = None

    def to_json(self) -> dict:
        out = {"ok": self.ok, "order": self.order, "class": [x.to_json() for x in self.class_coords]}
        if self.primitive is not None:
            out["coefficients"] = self.primitive.to_json()
        return out


def extend_order(T: TransitionSystem) -> ExtensionResult:
    """Make the system valid through one more order, or return the obstruction.

    The new order-(mu+1) coefficients are a primitive p of the obstruction
    cochain (d p = obstruction), which is exactly the triangle condition at
    that order.  Primitives differ by cocycles; the rest of that freedom is
    the coordinate change y_i = z_i - H_i z_i^{mu+1}, which adds d(H).
    """
    mu = T.order_valid
    if mu >= T.trunc:
        raise TransitionError(f"system is already valid through its trunc order {T.trunc}")
    ob = triangle_obstruction(T, mu)
    res = solve_coboundary(T.complex, ob.system, ob.cochain, T.field)
    if not res.ok:
        return ExtensionResult(False, mu + 1, None, ob, res.coords)
    new = T.with_coefficient(mu + 1, res.primitive)
    if new.order_valid < mu + 1:
        raise ConstructionError(f"extension at order {mu + 1} failed to close the triangle condition")
    zero = [T.field.zero] * len(cohomology(T.complex, ob.system, T.field).h2.reps)
    return ExtensionResult(True, mu + 1, new, ob, zero, res.primitive)


def retroactive_coefficient(nu: int, mu: int) -> int:
    """Factor c with [new obstruction] = [old] + c [a^(nu+1)] cup [alpha]."""
    return 2 * nu - mu


@dataclass
class RetroactiveResult:
    system: TransitionSystem  # valid through mu + 1
    modified: TransitionSystem  # valid through mu, zero obstruction class
    order: int  # mu + 1
    modified_order: int  # mu - nu + 1
    alpha: TwistedCochain
    alpha_coords: list
    functional: list
    coefficient: int
    extension: ExtensionResult

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "modified_order": self.modified_order,
            "alpha_coords": [x.to_json() for x in self.alpha_coords],
            "pairing_functional": [x.to_json() for x in self.functional],
            "coefficient": self.coefficient,
            "coefficients": self.extension.primitive.to_json(),
        }


def retroactive_correction(T: TransitionSystem, nu: int | None = None,
                           coefficient: int | None = None) -> RetroactiveResult:
    """Kill a nonzero obstruction class in a trivial t^{-mu} by changing
    a^(mu-nu+1) by a cocycle alpha in t^{-(mu-nu)}, then extend.

    Orders through mu stay valid: alpha is a cocycle and the first product
    it enters is with a^(nu+1), at order mu + 1.  The class then moves by
    (2 nu - mu) [a^(nu+1)] cup [alpha]; alpha solves that linear equation
    against the pairing functional on the H^1 basis (first nonzero pivot,
    other coordinates zero).
    """
    c, f = T.complex, T.field
    nu = nu if nu is not None else T.nu
    if nu is None:
        u = compute_ueda(T)
        if not u.finite:
            raise ConstructionError("retroactive correction needs a finite Ueda type")
        nu = u.utype
    mu = T.order_valid
    if mu < 2 * nu + 1:
        raise ConstructionError(f"retroactive correction needs mu >= 2 nu + 1 (mu = {mu}, nu = {nu})")
    Lmu = T.system.power(-mu)
    if not Lmu.is_trivial():
        raise ConstructionError(f"t^{-mu} is a nontrivial system; the obstruction class vanishes")
    ob = triangle_obstruction(T, mu)
    target = evaluate_fundamental(c, Lmu, ob.cochain, f)
    if target.is_zero():
        raise ConstructionError("obstruction class is already zero")
    kappa = retroactive_coefficient(nu, mu) if coefficient is None else coefficient
    a = T.coefficient(nu + 1)
    La, Lb = T.system.power(-nu), T.system.power(-(mu - nu))
    reps = cohomology(c, Lb, f).h1.reps
    functional = [evaluate_fundamental(c, Lmu, cup_cochain(c, a, Lb, r, f), f) for r in reps]
    piv = next((r for r, x in enumerate(functional) if not x.is_zero()), None)
    if piv is None:
        raise ConstructionError("the cup pairing against a^(nu+1) vanishes on H^1")
    x = -target / (functional[piv] * kappa)
    coords = [f.zero] * len(reps)
    coords[piv] = x
    alpha = reps[piv].scale(x)
    l = mu - nu + 1
    modified = T.with_coefficient(l, alpha, add=True)
    if modified.order_valid < mu:
        raise ConstructionError("the cocycle change broke validity below the obstruction order")
    ob2 = triangle_obstruction(modified, mu)
    if not evaluate_fundamental(c, Lmu, ob2.cochain, f).is_zero():
        raise ConstructionError(f"obstruction class at order {mu + 1} survives the correction")
    ext = extend_order(modified)
    if not ext.ok:
        raise ConstructionError(f"extension at order {mu + 1} failed after the correction")
    return RetroactiveResult(ext.system, modified, mu + 1, l, alpha, coords, functional, kappa, ext)


# ---------------------------------------------------------------------------
# the constructor


@dataclass
class ConstructionRun:
    system: TransitionSystem
    nu: int
    seed_class: UedaClass
    log: list = dc_field(default_factory=list)
    retroactive: list = dc_field(default_factory=list)  # (mu, input, output) per retroactive step

    def to_json(self) -> dict:
        return {
            "nu": self.nu,
            "order": self.system.trunc,
            "order_valid": self.system.order_valid,
            "seed_ueda": self.seed_class.to_json(),
            "log": self.log,
        }


def construct_formal_foliation(seed: TransitionSystem, N: int, nu: int | None = None) -> ConstructionRun:
    """Extend a seed order by order to a system valid through N.

    Plain extensions are used whenever the obstruction class vanishes; a
    nonzero class (only possible for mu >= 2 nu + 1 with t^{-mu} trivial)
    triggers a retroactive correction at order mu - nu + 1.
    """
    declared = nu if nu is not None else seed.nu
    uc = compute_ueda(seed)
    if declared is None:
        if not uc.finite:
            raise ConstructionError("seed has no finite Ueda type and no declared nu")
        declared = uc.utype
    if uc.finite and uc.utype != declared:
        raise ConstructionError(f"declared nu = {declared} but the seed has Ueda type {uc.utype}")
    T = seed.with_nu(declared).with_trunc(N)
    run = ConstructionRun(T, declared, uc)
    while T.order_valid < N:
        mu = T.order_valid
        ext = extend_order(T)
        if ext.ok:
            run.log.append({"order": mu + 1, "action": "extend", **ext.to_json()})
            T = ext.system
            continue
        if not uc.finite:
            raise ConstructionError(f"obstruction at order {mu + 1} with a trivial seed class", ext.to_json())
        try:
            ret = retroactive_correction(T, declared)
        except ConstructionError as exc:
            raise ConstructionError(str(exc), ext.to_json()) from None
        if not ret.system.agrees(T, mu - declared):
            raise ConstructionError("retroactive step changed the system below order mu - nu + 1")
        entry = {"order": mu + 1, "action": "retroactive",
                 "class": [x.to_json() for x in ext.class_coords], **ret.to_json()}
        run.log.append(entry)
        run.retroactive.append((mu, T, ret.system))
        T = ret.system
    run.system = T
    return run


# ---------------------------------------------------------------------------
# log-affine relations


def relation_series(phi: GermDiffeo, nu: int, lam) -> PowerSeries:
    """phi(y)^{-nu} - y^{-nu} + lam log(phi(y)/y) as a series in y.

    Needs phi = y + O(y^{nu+1}); the result is known through order trunc - 1 - nu.
    """
    f = phi.field
    u = phi.series.shift(-1)
    if not u[0].is_one() or any(not u[j].is_zero() for j in range(1, min(nu, u.trunc + 1))):
        raise TransitionError("germ is not tangent to the identity to the needed order")
    w = u.power(-nu) - 1
    first = w.shift(-nu)
    second = (u - 1).log1p().truncate(first.trunc) * f(lam)
    return first + second


def relation_coefficients(T: TransitionSystem, nu: int, lam) -> list[TwistedCochain]:
    """Per order n, the cochain of y_j^n coefficients of the log-affine relation on sorted edges."""
    rels = [relation_series(T.germ(i, j), nu, lam) for i, j in T.complex.edges]
    top = rels[0].trunc
    return [TwistedCochain(1, tuple(r[n] for r in rels)) for n in range(top + 1)]


@dataclass
class LogAffineSystem:
    nu: int
    lam: Coefficient
    a: TwistedCochain
    coefficients: list  # orders 1..order, all zero on success
    order: int
    system: TransitionSystem
    steps: list = dc_field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "ok": True,
            "nu": self.nu,
            "lambda": self.lam.to_json(),
            "a": self.a.to_json(),
            "order": self.order,
            "steps": self.steps,
        }


@dataclass
class LogAffineFailure:
    order: int
    class_coords: list
    a_coords: list
    lam: Coefficient
    order_valid: int
    steps: list = dc_field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "ok": False,
            "order": self.order,
            "class": [x.to_json() for x in self.class_coords],
            "a_class": [x.to_json() for x in self.a_coords],
            "lambda": self.lam.to_json(),
            "order_valid": self.order_valid,
            "steps": self.steps,
        }


def _times_z(u: PowerSeries) -> PowerSeries:
    """y u(y), keeping every known coefficient (trunc rises by one)."""
    return PowerSeries._raw(u.field, [u.field.zero] + list(u.coeffs))


def log_affine_construct(T: TransitionSystem, nu: int = 1) -> LogAffineSystem | LogAffineFailure:
    """Normalize a trivial-coefficient system so that

        1/y_i^nu - 1/y_j^nu + lam log(y_i/y_j) = a_ij

    through the trunc order, or report the first order whose class is not a
    multiple of [a].  At order n a component kappa [a] is removed by
    lam += nu kappa (n = nu) or by z_i = y_i - kappa/(n - nu) y_i^{n+1}; the
    remaining coboundary a_ij^(n) = A_i - A_j by 1/z_i^nu = 1/y_i^nu - A_i y_i^n.
    """
    c, f = T.complex, T.field
    if any(e for e in T.system.exps):
        raise TransitionError("log-affine normalization needs trivial linear parts t_ij = 1")
    L1 = T.system
    h1 = cohomology(c, L1, f).h1
    coeffs = relation_coefficients(T, nu, 0)
    a = coeffs[0]
    if not coboundary(c, L1, a, f).is_zero():
        raise TransitionError("the order-0 relation coefficients are not a cocycle")
    a_coords = h1.coordinates(a)
    if all(x.is_zero() for x in a_coords):
        raise TransitionError("the order-0 relation class is trivial")
    lam = f.zero
    steps: list = []
    # a relation coefficient at order n is a cocycle once the germs are
    # consistent through order n + nu + 1
    top = min(len(coeffs) - 1, T.order_valid - nu - 1)
    if top < 1:
        raise TransitionError(f"system is valid only through order {T.order_valid}")
    n_tr = T.trunc
    cur = T
    for n in range(1, top + 1):
        b = relation_coefficients(cur, nu, lam)[n]
        if b.is_zero():
            continue
        b_coords = h1.coordinates(b)
        kappa = _proportional(b_coords, a_coords)
        if kappa is None:
            steps.append({"order": n, "action": "fail"})
            return LogAffineFailure(n, b_coords, a_coords, lam, T.order_valid, steps)
        if not kappa.is_zero():
            if n == nu:
                lam = lam + kappa * nu
                steps.append({"order": n, "action": "lambda", "kappa": kappa.to_json()})
            else:
                k2 = kappa / (n - nu)
                fwd = PowerSeries.from_dict(f, {1: 1, n + 1: -k2}, n_tr)
                back = GermDiffeo(fwd).inverse()
                cur = cur.transform([back] * c.n_vertices)
                steps.append({"order": n, "action": "rescale", "kappa": kappa.to_json()})
            b = relation_coefficients(cur, nu, lam)[n]
        res = solve_coboundary(c, L1, b, f)
        if not res.ok:
            raise ConstructionError(f"order {n}: residual class after the line step")
        # d(h) = h_j - h_i = b, so A = -h
        A = [-x for x in res.primitive.values]
        backs = []
        for i in c.vertices:
            # z = y (1 - A_i y^{n+nu})^{-1/nu}
            inner = PowerSeries.from_dict(f, {0: 1, n + nu: -A[i]}, n_tr - 1).power(Fraction(-1, nu))
            backs.append(GermDiffeo(_times_z(inner)).inverse())
        cur = cur.transform(backs)
        steps.append({"order": n, "action": "coboundary", "A": [x.to_json() for x in A]})
        check = relation_coefficients(cur, nu, lam)
        if any(not check[m].is_zero() for m in range(1, n + 1)):
            raise ConstructionError(f"order {n}: relation coefficients did not vanish")
    final = relation_coefficients(cur, nu, lam)
    return LogAffineSystem(nu, lam, final[0], final[1:], top, cur, steps)


def log_affine_model(c: SurfaceComplex, a: TwistedCochain, nu: int, lam0, trunc: int,
                     field: Field | None = None) -> TransitionSystem:
    """Germs y_i = Phi^{-1}(Phi(y_j) + a_ij), Phi(y) = y^{-nu} + lam0 log y.

    Writing y_i = y u(y): u = (1 + a y^nu - lam0 y^nu log u)^{-1/nu}.
    """
    f = field or cyclotomic(1)
    L = UnitaryLocalSystem.trivial(c)
    if not coboundary(c, L, a, f).is_zero():
        raise TransitionError("a is not a cocycle")
    lam0 = f(lam0)
    n = trunc - 1
    germs = {}
    for (i, j), aij in zip(c.edges, a.values):
        u = PowerSeries.one(f, n)
        ynu = PowerSeries.monomial(f, nu, n)
        for _ in range(n + 1):
            inner = ynu * aij - ynu * (u - 1).log1p() * lam0 + 1
            u = inner.power(Fraction(-1, nu))
        germs[(i, j)] = GermDiffeo(_times_z(u))
    return TransitionSystem.from_germs(c, germs)
