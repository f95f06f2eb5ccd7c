"""Formal meromorphic 1-forms in one variable and bivariate projective triples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .fields import Coefficient, Field, cyclotomic
from .germ_group import GermDiffeo
from .series_core import LaurentSeries, PowerSeries, SeriesError


class TruncationError(SeriesError):
    """Not enough trusted coefficients to resolve the requested quantity."""


class FormalOneForm:
    """w(z) dz with w a Laurent series; the residue is the z^-1 coefficient."""

    __slots__ = ("laurent",)

    def __init__(self, laurent: LaurentSeries):
        self.laurent = laurent

    @classmethod
    def from_terms(cls, field: Field, terms: dict[int, object], trunc: int) -> "FormalOneForm":
        m = max(0, -min(terms)) if terms else 0
        cs = [field.zero] * (m + trunc + 1)
        for j, c in terms.items():
            if j <= trunc:
                cs[j + m] = field(c)
        return cls(LaurentSeries(field, m, cs))

    @property
    def field(self) -> Field:
        return self.laurent.field

    @property
    def pole_order(self) -> int:
        return self.laurent.pole_order

    @property
    def trunc(self) -> int:
        return self.laurent.trunc

    def residue(self) -> Coefficient:
        return self.laurent.residue()

    def leading(self) -> Coefficient:
        return self.laurent.coeffs[0]

    def __getitem__(self, j: int) -> Coefficient:
        return self.laurent[j]

    def __mul__(self, c) -> "FormalOneForm":
        return FormalOneForm(self.laurent * c)

    __rmul__ = __mul__

    def agrees(self, other: "FormalOneForm", n: int | None = None) -> bool:
        """Coefficientwise equality from the deepest pole through z^n."""
        if n is None:
            n = min(self.trunc, other.trunc)
        lo = -max(self.pole_order, other.pole_order)
        return all(self[j] == other[j] for j in range(lo, n + 1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FormalOneForm):
            return NotImplemented
        return self.trunc == other.trunc and self.agrees(other)

    __hash__ = None

    def to_json(self) -> dict:
        return {"pole": self.pole_order, "field": self.field.label, "trunc": self.trunc,
                "coeffs": [c.to_json() for c in self.laurent.coeffs]}

    def __repr__(self) -> str:
        return "Form" + repr(self.laurent)[len("LaurentSeries"):] + " dz"


def omega(k: int, lam, field: Field | None = None, trunc: int = 16) -> FormalOneForm:
    """dz/z^{k+1} + lam dz/z."""
    field = field or cyclotomic(1)
    terms = {-(k + 1): 1}
    lam = field(lam)
    terms[-1] = terms.get(-1, field.zero) + lam if k == 0 else lam
    return FormalOneForm.from_terms(field, terms, trunc)


def pullback(f: GermDiffeo, w: FormalOneForm) -> FormalOneForm:
    """f^* (w dz) = w(f) f' dz.

    With pole order m, f known through z^N and w through z^M, the result is
    known through z^{min(M, N-1-m)}.
    """
    m = w.pole_order
    field = f.field
    n = f.trunc
    top = min(w.trunc, n - 1 - m)
    if top < 0:
        raise TruncationError(f"germ trunc {n} cannot resolve a pole of order {m}")
    width = top + m  # coefficients z^0..z^width of the regular factor
    # w = z^{-m} W(z) and f = a z u(z), so f^* w = a^{-m} z^{-m} u^{-m} W(f) f'
    W = PowerSeries._raw(field, w.laurent.coeffs[: width + 1])
    fw = PowerSeries._raw(field, f.series.coeffs[: width + 1])
    df = PowerSeries._raw(field, f.series.derivative().coeffs[: width + 1])
    prod = W.compose(fw) * df
    if m:
        a = f[1]
        u = PowerSeries._raw(field, [c / a for c in f.series.coeffs[1 : width + 2]])
        prod = prod * u.power(-m) * (a ** (-m))
    return FormalOneForm(LaurentSeries(field, m, list(prod.coeffs)))


def preserves(f: GermDiffeo, w: FormalOneForm) -> bool:
    """f^* w = w through the certified order of the pullback."""
    p = pullback(f, w)
    return p.agrees(w, p.trunc)


def line_scale(f: GermDiffeo, k: int) -> Coefficient | None:
    """c with f^*(dz/z^{k+1}) = c dz/z^{k+1} to order, else None."""
    w = omega(k, 0, f.field, f.trunc)
    p = pullback(f, w)
    c = p[-(k + 1)]
    return c if p.agrees(w * c, p.trunc) else None


# ---------------------------------------------------------------------------
# invariant form search


@dataclass(frozen=True)
class InvariantForm:
    kind: str  # "logarithmic" | "k_lambda" | "line" | "none_at_order_N"
    k: int | None = None
    lam: Coefficient | None = None
    form: FormalOneForm | None = None
    certified_order: int = 0

    def to_json(self) -> dict:
        out = {"kind": self.kind, "certified_order": self.certified_order}
        if self.k is not None:
            out["k"] = self.k
        if self.lam is not None:
            out["lambda"] = self.lam.to_json()
        if self.form is not None:
            out["form"] = self.form.to_json()
        return out


def _raw_form(field: Field, pole: int, terms: dict[int, Coefficient], top: int) -> FormalOneForm:
    cs = [field.zero] * (pole + top + 1)
    for j, c in terms.items():
        if -pole <= j <= top:
            cs[j + pole] = c
    lf = LaurentSeries.__new__(LaurentSeries)
    lf.field, lf.pole_order, lf.coeffs = field, pole, tuple(cs)
    return FormalOneForm(lf)


def invariant_form_search(gens: Sequence[GermDiffeo], max_k: int | None = None) -> InvariantForm:
    """Strongest structure preserved by all generators, in their coordinates.

    Priority: a logarithmic form dz/z + holomorphic, then a form with pole k+1
    normalized to leading coefficient 1 (smallest k), then a line
    C dz/z^{k+1} + (holomorphic corrections allowed to scale), else none.
    """
    if not gens:
        raise ValueError("empty generator list")
    field = gens[0].field
    n = min(g.trunc for g in gens)
    if max_k is None:
        max_k = max(1, (n - 2) // 2)
    terms, top = _solve_form(gens, 0)
    if terms is not None:
        return InvariantForm("logarithmic", 0, None, _raw_form(field, 1, terms, top), top)
    for k in range(1, max_k + 1):
        terms, top = _solve_form(gens, k)
        if terms is not None:
            lam = terms.get(-1, field.zero)
            return InvariantForm("k_lambda", k, lam, _raw_form(field, k + 1, terms, top), top)
    for k in range(1, max_k + 1):
        res = _solve_line(gens, k)
        if res is not None:
            form, top = res
            return InvariantForm("line", k, None, form, top)
    return InvariantForm("none_at_order_N", certified_order=n)


def _pullback_matrix(g: GermDiffeo, pole: int, top: int) -> dict[int, list[Coefficient]]:
    """Columns j -> coefficients (e = -pole..top) of g^*(z^j dz) - z^j dz.

    g^*(z^j dz) = z^j (a u)^j g' with g = a z u, so the images come from
    successive products by a u.
    """
    field = g.field
    width = top + pole
    if g.trunc < width + 1:
        raise TruncationError("germ trunc too small for the requested pole")
    au = PowerSeries._raw(field, g.series.coeffs[1 : width + 2])
    dg = PowerSeries._raw(field, g.series.derivative().coeffs[: width + 1])
    P = au.reciprocal() ** pole * dg
    out = {}
    for j in range(-pole, top + 1):
        col = []
        for e in range(-pole, top + 1):
            c = P[e - j] if e >= j else field.zero
            if e == j:
                c = c - field.one
            col.append(c)
        out[j] = col
        if j < top:
            P = P * au
    return out


def _determined_top(field: Field, cols: list, unknowns: list[int], top: int) -> int:
    """Largest order through which the truncated system fixes every coefficient.

    Free directions of the truncated linear system sit at the top (their
    first equation lies beyond the truncation); the solver pins them to zero,
    so the answer is certified only below the lowest free coefficient.
    """
    from .linalg import kernel, sparse

    free = set()
    for vec in kernel(field, [sparse(c) for c in cols]):
        free.update(vec)
    if not free:
        return top
    return min(unknowns[i] for i in free) - 1


def _solve_form(gens: Sequence[GermDiffeo], k: int):
    """Invariant w = z^{-(k+1)} + sum_{j>-(k+1)} c_j z^j, all generators."""
    from .linalg import solve_affine

    field = gens[0].field
    pole = k + 1
    n = min(g.trunc for g in gens)
    top = n - 1 - pole
    if top < -1:
        return None, top
    unknowns = list(range(-pole + 1, top + 1))
    cols = [[] for _ in unknowns]
    rhs = []
    for g in gens:
        mat = _pullback_matrix(g, pole, top)
        for idx, j in enumerate(unknowns):
            cols[idx].extend(mat[j])
        rhs.extend(-c for c in mat[-pole])
    sol = solve_affine(field, cols, rhs)
    if sol is None:
        return None, top
    top = _determined_top(field, cols, unknowns, top)
    terms = {-pole: field.one}
    terms.update({j: c for j, c in zip(unknowns, sol) if j <= top})
    return terms, top


def _solve_line(gens: Sequence[GermDiffeo], k: int):
    """A form w = z^{-(k+1)} + ... with g^* w = c_g w for every generator.

    The scalar c_g equals a_g^{-k} (compare leading terms), which makes the
    condition linear in the remaining coefficients.
    """
    from .linalg import solve_affine

    field = gens[0].field
    pole = k + 1
    n = min(g.trunc for g in gens)
    top = n - 1 - pole
    if top < -1:
        return None
    unknowns = list(range(-pole + 1, top + 1))
    cols = [[] for _ in unknowns]
    rhs = []
    for g in gens:
        c = g[1] ** (-k)
        mat = _pullback_matrix(g, pole, top)
        # g^*(z^j) - c z^j = mat[j] + (1 - c) e_j
        for idx, j in enumerate(unknowns):
            col = list(mat[j])
            col[j + pole] = col[j + pole] + (field.one - c)
            cols[idx].extend(col)
        lead = list(mat[-pole])
        lead[0] = lead[0] + (field.one - c)
        rhs.extend(-x for x in lead)
    sol = solve_affine(field, cols, rhs)
    if sol is None:
        return None
    top = _determined_top(field, cols, unknowns, top)
    terms = {-pole: field.one}
    terms.update({j: c for j, c in zip(unknowns, sol) if j <= top})
    return _raw_form(field, pole, terms, top), top


# ---------------------------------------------------------------------------
# bivariate algebra for projective triples

INF = math.inf


class BivariatePoly:
    """sum c_{ij} x^i y^j, trusted for total degree <= prec (inf when exact)."""

    __slots__ = ("field", "terms", "prec")

    def __init__(self, field: Field, terms: dict[tuple[int, int], object] | None = None, prec=INF):
        self.field = field
        self.prec = prec
        self.terms = {}
        for (i, j), c in (terms or {}).items():
            if i + j <= prec:
                c = field(c)
                if not c.is_zero():
                    self.terms[(i, j)] = c

    @classmethod
    def const(cls, field: Field, c) -> "BivariatePoly":
        return cls(field, {(0, 0): c})

    @classmethod
    def x(cls, field: Field) -> "BivariatePoly":
        return cls(field, {(1, 0): 1})

    @classmethod
    def y(cls, field: Field) -> "BivariatePoly":
        return cls(field, {(0, 1): 1})

    def _wrap(self, terms, prec) -> "BivariatePoly":
        p = BivariatePoly.__new__(BivariatePoly)
        p.field = self.field
        p.prec = prec
        p.terms = {k: v for k, v in terms.items() if k[0] + k[1] <= prec and not v.is_zero()}
        return p

    def _lift(self, other) -> "BivariatePoly":
        if isinstance(other, BivariatePoly):
            return other
        return BivariatePoly.const(self.field, other)

    def __add__(self, other) -> "BivariatePoly":
        other = self._lift(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return self._wrap(out, min(self.prec, other.prec))

    __radd__ = __add__

    def __neg__(self) -> "BivariatePoly":
        return self._wrap({k: -v for k, v in self.terms.items()}, self.prec)

    def __sub__(self, other) -> "BivariatePoly":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "BivariatePoly":
        return self._lift(other) - self

    def __mul__(self, other) -> "BivariatePoly":
        if not isinstance(other, BivariatePoly):
            c = self.field(other)
            return self._wrap({k: v * c for k, v in self.terms.items()}, self.prec)
        prec = min(self.prec, other.prec)
        out: dict = {}
        for (i1, j1), a in self.terms.items():
            for (i2, j2), b in other.terms.items():
                key = (i1 + i2, j1 + j2)
                if key[0] + key[1] > prec:
                    continue
                out[key] = out[key] + a * b if key in out else a * b
        return self._wrap(out, prec)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "BivariatePoly":
        out = BivariatePoly.const(self.field, 1)
        for _ in range(e):
            out = out * self
        return out

    def truncate(self, prec) -> "BivariatePoly":
        return self._wrap(self.terms, min(prec, self.prec))

    def dx(self) -> "BivariatePoly":
        return self._wrap({(i - 1, j): c * i for (i, j), c in self.terms.items() if i}, self.prec - 1)

    def dy(self) -> "BivariatePoly":
        return self._wrap({(i, j - 1): c * j for (i, j), c in self.terms.items() if j}, self.prec - 1)

    def unit_inverse(self, prec: int) -> "BivariatePoly":
        """1/p through total degree prec; p(0,0) must be nonzero."""
        c0 = self.terms.get((0, 0))
        if c0 is None:
            raise ValueError("not a unit: zero constant term")
        p = self.truncate(prec)
        c0inv = c0.inverse()
        rest = (p - c0) * c0inv  # no constant term
        # 1/(c0 (1 + r)) = c0^{-1} sum (-r)^n, r has order >= 1
        out = BivariatePoly(self.field, {(0, 0): 1}, prec)
        term = BivariatePoly(self.field, {(0, 0): 1}, prec)
        for _ in range(prec):
            term = -(term * rest)
            if not term.terms:
                break
            out = out + term
        return out * c0inv

    def compose_univariate(self, coeffs: Sequence) -> "BivariatePoly":
        """phi(self) for phi(t) = sum coeffs[n] t^n."""
        out = BivariatePoly(self.field, {}, self.prec)
        for c in reversed(list(coeffs)):
            out = out * self + c
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def max_degree(self) -> int:
        return max((i + j for i, j in self.terms), default=-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BivariatePoly):
            return NotImplemented
        prec = min(self.prec, other.prec)
        return (self - other).truncate(prec).is_zero()

    __hash__ = None

    def to_json(self) -> dict:
        return {
            "prec": None if self.prec == INF else self.prec,
            "terms": [[i, j, c.to_json()] for (i, j), c in sorted(self.terms.items())],
        }

    @classmethod
    def from_json(cls, obj, field: Field) -> "BivariatePoly":
        prec = obj.get("prec")
        return cls(field, {(i, j): field.coeff_from_json(c) for i, j, c in obj["terms"]}, INF if prec is None else prec)

    def __repr__(self) -> str:
        body = " + ".join(f"({c})x^{i}y^{j}" for (i, j), c in sorted(self.terms.items())) or "0"
        return f"Poly({body}; prec={self.prec})"


@dataclass(frozen=True)
class OneForm2:
    """A dx + B dy."""

    a: BivariatePoly
    b: BivariatePoly

    def __add__(self, other: "OneForm2") -> "OneForm2":
        return OneForm2(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "OneForm2") -> "OneForm2":
        return OneForm2(self.a - other.a, self.b - other.b)

    def scale(self, p: BivariatePoly) -> "OneForm2":
        return OneForm2(self.a * p, self.b * p)

    def d(self) -> BivariatePoly:
        """Coefficient of dx^dy in the exterior derivative."""
        return self.b.dx() - self.a.dy()

    def wedge(self, other: "OneForm2") -> BivariatePoly:
        return self.a * other.b - self.b * other.a

    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def to_json(self) -> dict:
        return {"dx": self.a.to_json(), "dy": self.b.to_json()}

    @classmethod
    def from_json(cls, obj: dict, field: Field) -> "OneForm2":
        return cls(BivariatePoly.from_json(obj["dx"], field), BivariatePoly.from_json(obj["dy"], field))


def exact_form(p: BivariatePoly) -> OneForm2:
    return OneForm2(p.dx(), p.dy())


@dataclass(frozen=True)
class ProjectiveTriple:
    w0: OneForm2
    w1: OneForm2
    w2: OneForm2

    def to_json(self) -> dict:
        return {"omega0": self.w0.to_json(), "omega1": self.w1.to_json(), "omega2": self.w2.to_json()}

    @classmethod
    def from_json(cls, obj: dict, field: Field) -> "ProjectiveTriple":
        return cls(*(OneForm2.from_json(obj[k], field) for k in ("omega0", "omega1", "omega2")))


@dataclass(frozen=True)
class TripleReport:
    residuals: tuple[BivariatePoly, BivariatePoly, BivariatePoly]

    @property
    def ok(self) -> bool:
        return all(r.is_zero() for r in self.residuals)

    @property
    def certified_degree(self):
        return min(r.prec for r in self.residuals)

    def to_json(self) -> dict:
        return {
            "integrable": self.ok,
            "certified_degree": None if self.certified_degree == INF else self.certified_degree,
            "residuals": [r.to_json() for r in self.residuals],
        }


def triple_check(t: ProjectiveTriple) -> TripleReport:
    """Residuals dw0 - w0^w1, dw1 - 2 w0^w2, dw2 - w1^w2 (dx^dy coefficients)."""
    r0 = t.w0.d() - t.w0.wedge(t.w1)
    r1 = t.w1.d() - t.w0.wedge(t.w2) * 2
    r2 = t.w2.d() - t.w1.wedge(t.w2)
    return TripleReport((r0, r1, r2))


def gauge_scale(t: ProjectiveTriple, f: BivariatePoly, prec: int) -> ProjectiveTriple:
    """(f w0, w1 - df/f, w2/f) with 1/f expanded through degree prec."""
    finv = f.unit_inverse(prec)
    df = exact_form(f)
    w0 = t.w0.scale(f)
    return ProjectiveTriple(
        OneForm2(w0.a.truncate(prec), w0.b.truncate(prec)),
        t.w1 - df.scale(finv),
        t.w2.scale(finv),
    )


def gauge_shift(t: ProjectiveTriple, g: BivariatePoly) -> ProjectiveTriple:
    """(w0, w1 + 2 g w0, w2 + g w1 + g^2 w0 - dg)."""
    two_g = g * 2
    return ProjectiveTriple(
        t.w0,
        t.w1 + t.w0.scale(two_g),
        t.w2 + t.w1.scale(g) + t.w0.scale(g * g) - exact_form(g),
    )


def gauge_transform(t: ProjectiveTriple, f: BivariatePoly, g: BivariatePoly, prec: int) -> ProjectiveTriple:
    """Scale by the unit f, then shift by g."""
    return gauge_shift(gauge_scale(t, f, prec), g.truncate(prec))


def compose_gauges(f1: BivariatePoly, g1: BivariatePoly, f2: BivariatePoly, g2: BivariatePoly, prec: int):
    """(f, g) with gauge(f, g) = gauge(f2, g2) after gauge(f1, g1)."""
    return (f1 * f2).truncate(prec), (g2 + g1 * f2.unit_inverse(prec)).truncate(prec)
