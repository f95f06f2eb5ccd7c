"""Truncated formal diffeomorphisms of (C, 0) and vector-field germs."""

from __future__ import annotations

from typing import Sequence

from .fields import BigFloatField, Coefficient, Field, cyclotomic
from .series_core import PowerSeries, SeriesError

NOT_TANGENT = "not_tangent"
IDENTITY_TO_ORDER_N = "identity_to_order_N"


class BackendError(ValueError):
    """The requested computation leaves the exact coefficient field."""


class GermDiffeo:
    """A germ f(z) = a z + ... known through z^N."""

    __slots__ = ("series",)

    def __init__(self, series: PowerSeries):
        if series.trunc < 1:
            raise SeriesError("a germ needs trunc order >= 1")
        if not series[0].is_zero():
            raise SeriesError("a germ must fix 0")
        if series[1].is_zero():
            raise SeriesError("a germ needs a nonzero linear coefficient")
        self.series = series

    @classmethod
    def from_coeffs(cls, coeffs: Sequence, field: Field | None = None, trunc: int | None = None) -> "GermDiffeo":
        return cls(PowerSeries(field or cyclotomic(1), list(coeffs), trunc))

    @classmethod
    def identity(cls, field: Field, trunc: int) -> "GermDiffeo":
        return cls(PowerSeries.z(field, trunc))

    @classmethod
    def linear(cls, a, field: Field, trunc: int) -> "GermDiffeo":
        return cls(PowerSeries.monomial(field, 1, trunc, a))

    @property
    def field(self) -> Field:
        return self.series.field

    @property
    def trunc(self) -> int:
        return self.series.trunc

    @property
    def multiplier(self) -> Coefficient:
        return self.series[1]

    def __getitem__(self, j: int) -> Coefficient:
        return self.series[j]

    def compose(self, other: "GermDiffeo") -> "GermDiffeo":
        return GermDiffeo(self.series.compose(other.series))

    def __matmul__(self, other: "GermDiffeo") -> "GermDiffeo":
        return self.compose(other)

    def inverse(self) -> "GermDiffeo":
        return GermDiffeo(self.series.comp_inverse())

    def iterate(self, n: int) -> "GermDiffeo":
        """n-fold composite (negative n iterates the inverse)."""
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        result = GermDiffeo.identity(self.field, self.trunc)
        while n:
            if n & 1:
                result = result @ base
            n >>= 1
            if n:
                base = base @ base
        return result

    def truncate(self, n: int) -> "GermDiffeo":
        return GermDiffeo(self.series.truncate(n))

    def is_identity(self) -> bool:
        return tangency_order(self) == IDENTITY_TO_ORDER_N

    def __eq__(self, other) -> bool:
        if not isinstance(other, GermDiffeo):
            return NotImplemented
        return self.series == other.series

    __hash__ = None

    def __repr__(self) -> str:
        return "Germ" + repr(self.series)[len("PowerSeries"):]

    def to_json(self) -> dict:
        return {"kind": "germ", **self.series.to_json()}

    @classmethod
    def from_json(cls, obj: dict, field: Field | None = None) -> "GermDiffeo":
        return cls(PowerSeries.from_json(obj, field))


class VectorFieldGerm:
    """The field v(z) d/dz with v(0) = 0."""

    __slots__ = ("series",)

    def __init__(self, series: PowerSeries):
        if not series[0].is_zero():
            raise SeriesError("a vector-field germ must vanish at 0")
        self.series = series

    @property
    def field(self) -> Field:
        return self.series.field

    @property
    def trunc(self) -> int:
        return self.series.trunc

    def __getitem__(self, j: int) -> Coefficient:
        return self.series[j]

    def __add__(self, other: "VectorFieldGerm") -> "VectorFieldGerm":
        return VectorFieldGerm(self.series + other.series)

    def __mul__(self, c) -> "VectorFieldGerm":
        return VectorFieldGerm(self.series * c)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorFieldGerm):
            return NotImplemented
        return self.series == other.series

    __hash__ = None

    def apply(self, g: PowerSeries) -> PowerSeries:
        """Lie derivative v . g' at full trunc (valid when v(0) = 0)."""
        f = self.field
        n = min(self.trunc, g.trunc)
        dg = g.truncate(n).derivative()
        dg = PowerSeries._raw(f, list(dg.coeffs) + [f.zero])
        return self.series.truncate(n) * dg

    def __repr__(self) -> str:
        return "Field" + repr(self.series)[len("PowerSeries"):]

    def to_json(self) -> dict:
        return {"kind": "field", **self.series.to_json()}

    @classmethod
    def from_json(cls, obj: dict, field: Field | None = None) -> "VectorFieldGerm":
        return cls(PowerSeries.from_json(obj, field))


class JetElement:
    """The k-jet (a_1, ..., a_k) of a germ."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs: Sequence[Coefficient]):
        if len(coeffs) != order or coeffs[0].is_zero():
            raise ValueError("a k-jet needs k coefficients with nonzero linear part")
        self.order = order
        self.coeffs = tuple(coeffs)

    @classmethod
    def of(cls, f: GermDiffeo, k: int) -> "JetElement":
        return cls(k, [f[j] for j in range(1, k + 1)])


# ---------------------------------------------------------------------------


def germ_compose(f: GermDiffeo, g: GermDiffeo) -> GermDiffeo:
    return f @ g


def germ_inverse(f: GermDiffeo) -> GermDiffeo:
    return f.inverse()


def tangency_order(f: GermDiffeo) -> int | str:
    """Largest k with f = z + o(z^k) at the truncation."""
    if not f[1].is_one():
        return NOT_TANGENT
    for j in range(2, f.trunc + 1):
        if not f[j].is_zero():
            return j - 1
    return IDENTITY_TO_ORDER_N


def commutator(f: GermDiffeo, g: GermDiffeo) -> GermDiffeo:
    return f @ g @ f.inverse() @ g.inverse()


def make_v(k: int, lam, field: Field | None = None, trunc: int = 16) -> VectorFieldGerm:
    """z^{k+1} / (1 + lam z^k) expanded through z^trunc."""
    if k < 1:
        raise ValueError("k must be positive")
    field = field or cyclotomic(1)
    lam = field(lam)
    cs = [field.zero] * (trunc + 1)
    c = field.one
    j = k + 1
    while j <= trunc:
        cs[j] = c
        c = -(c * lam)
        j += k
    return VectorFieldGerm(PowerSeries._raw(field, cs))


def exp_field(v: VectorFieldGerm, t=1) -> GermDiffeo:
    """Time-t flow of dz/dt = v(z), through the trunc of v."""
    field = v.field
    t = field(t)
    n = v.trunc
    rho = v[1] if n >= 1 else field.zero
    if rho.is_zero():
        # Lie series sum t^m/m! D^m(z); D raises the valuation, so it terminates
        term = PowerSeries.z(field, n)
        total = term
        m = 0
        while True:
            m += 1
            term = v.apply(term) * (t / m)
            if term.is_zero():
                break
            total = total + term
        return GermDiffeo(total)
    if not isinstance(field, BigFloatField):
        raise BackendError("flow of a field with nonzero linear part needs the bigfloat backend")
    return _flow_hyperbolic(v, t)


def _flow_hyperbolic(v: VectorFieldGerm, t) -> GermDiffeo:
    # phi commutes with the flow: v(phi) = phi' v, with phi'(0) = exp(t rho)
    field = v.field
    ctx = field.ctx
    n = v.trunc
    rho = v[1]
    a = field(ctx.exp((t * rho).v))
    cs = [field.zero, a] + [field.zero] * (n - 1)
    for m in range(2, n + 1):
        phi = PowerSeries._raw(field, cs)
        dphi = PowerSeries._raw(field, list(phi.derivative().coeffs) + [field.zero])
        resid = v.series.compose(phi) - dphi * v.series
        cs[m] = resid[m] / (rho * (m - 1))
    return GermDiffeo(PowerSeries._raw(field, cs))


def log_germ(f: GermDiffeo) -> VectorFieldGerm:
    """The unique formal v with exp_field(v, 1) = f through the trunc."""
    k = tangency_order(f)
    field = f.field
    n = f.trunc
    if k == NOT_TANGENT:
        raise ValueError("log_germ needs a germ tangent to the identity")
    if k == IDENTITY_TO_ORDER_N:
        return VectorFieldGerm(PowerSeries.zero(field, n))
    cs = [field.zero] * (n + 1)
    for j in range(k + 1, min(2 * k + 1, n + 1)):
        cs[j] = f[j]
    # [exp v]_m = v_m + (terms in v_j, j <= m - k): fix k coefficients per pass
    m = 2 * k + 1
    while m <= n:
        g = exp_field(VectorFieldGerm(PowerSeries._raw(field, cs)), 1)
        top = min(m + k - 1, n)
        for j in range(m, top + 1):
            cs[j] = cs[j] - (g[j] - f[j])
        m = top + 1
    return VectorFieldGerm(PowerSeries._raw(field, cs))


def jet_adjoint_linear(lam: Coefficient, k: int, a: Coefficient) -> Coefficient:
    """Action of a jet with linear part lam on the kernel coordinate a at order k+1."""
    return lam ** (-k) * a


def jet_adjoint_tangent(a_nu1, nu: int, k: int, b: Sequence) -> list:
    """Action of g = x + a_{nu+1} x^{nu+1} + ... on (b_{k+1}, ..., b_{k+nu+1}).

    The last slot picks up (nu - k) a_{nu+1} times the first entry; the other
    entries are fixed.  A vector of nu + 2 entries is read as
    (b_k, b_{k+1}, ..., b_{k+nu+1}), so the coupling is to b_k itself.
    """
    b = list(b)
    if len(b) not in (nu + 1, nu + 2):
        raise ValueError("the vector must have nu + 1 or nu + 2 entries")
    b[-1] = b[-1] + (nu - k) * a_nu1 * b[0]
    return b
