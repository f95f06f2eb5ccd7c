"""Truncated power and Laurent series in one variable.

A series with trunc ``N`` carries coefficients of z^0..z^N, all of them trusted.
Binary operations return the minimum trunc of their inputs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Sequence

from gmpy2 import mpq

from .fields import (
    BigFloatField,
    Coefficient,
    CyclotomicField,
    Field,
    FieldMismatch,
    cyclotomic,
    field_from_label,
)


class SeriesError(ValueError):
    pass


def _same_field(a: Field, b: Field) -> Field:
    if a is b or a == b:
        return a
    raise FieldMismatch(f"backend mismatch: {a.label} vs {b.label}")


class PowerSeries:
    """Immutable truncated series sum_{j<=N} c_j z^j."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: Field, coeffs: Sequence, trunc: int | None = None):
        cs = [field(c) for c in coeffs]
        if trunc is None:
            trunc = len(cs) - 1
        if trunc < 0:
            raise SeriesError("trunc order must be non-negative")
        if len(cs) <= trunc:
            cs += [field.zero] * (trunc + 1 - len(cs))
        self.field = field
        self.coeffs = tuple(cs[: trunc + 1])

    @classmethod
    def _raw(cls, field: Field, coeffs) -> "PowerSeries":
        s = object.__new__(cls)
        s.field = field
        s.coeffs = tuple(coeffs)
        return s

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls, field: Field, trunc: int) -> "PowerSeries":
        return cls._raw(field, [field.zero] * (trunc + 1))

    @classmethod
    def one(cls, field: Field, trunc: int) -> "PowerSeries":
        return cls.monomial(field, 0, trunc)

    @classmethod
    def z(cls, field: Field, trunc: int) -> "PowerSeries":
        return cls.monomial(field, 1, trunc)

    @classmethod
    def monomial(cls, field: Field, j: int, trunc: int, c=1) -> "PowerSeries":
        cs = [field.zero] * (trunc + 1)
        if j <= trunc:
            cs[j] = field(c)
        return cls._raw(field, cs)

    @classmethod
    def from_dict(cls, field: Field, terms: dict[int, object], trunc: int) -> "PowerSeries":
        cs = [field.zero] * (trunc + 1)
        for j, c in terms.items():
            if j <= trunc:
                cs[j] = field(c)
        return cls._raw(field, cs)

    # basic access -------------------------------------------------------

    @property
    def trunc(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, j: int) -> Coefficient:
        if j < 0:
            return self.field.zero
        if j > self.trunc:
            raise IndexError(f"coefficient z^{j} beyond trunc order {self.trunc}")
        return self.coeffs[j]

    def __len__(self) -> int:
        return len(self.coeffs)

    def valuation(self) -> int | None:
        """Index of the first nonzero coefficient, None if zero to trunc."""
        for j, c in enumerate(self.coeffs):
            if not c.is_zero():
                return j
        return None

    def is_zero(self) -> bool:
        return self.valuation() is None

    def truncate(self, n: int) -> "PowerSeries":
        if n > self.trunc:
            raise SeriesError(f"cannot raise trunc from {self.trunc} to {n}")
        return PowerSeries._raw(self.field, self.coeffs[: n + 1])

    def change_field(self, field: Field) -> "PowerSeries":
        return PowerSeries._raw(field, [field(c) for c in self.coeffs])

    def __eq__(self, other) -> bool:
        if not isinstance(other, PowerSeries):
            return NotImplemented
        if self.trunc != other.trunc:
            return False
        return all(a == b for a, b in zip(self.coeffs, other.coeffs))

    def agrees(self, other: "PowerSeries", n: int | None = None) -> bool:
        """Coefficientwise equality through z^n (default: common trunc)."""
        if n is None:
            n = min(self.trunc, other.trunc)
        return all(self[j] == other[j] for j in range(n + 1))

    __hash__ = None

    def __repr__(self) -> str:
        terms = []
        for j, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            terms.append(f"({c})*z^{j}" if j else f"({c})")
        body = " + ".join(terms) if terms else "0"
        return f"PowerSeries[{self.field.label}]({body} + O(z^{self.trunc + 1}))"

    # ring ---------------------------------------------------------------

    def _check(self, other: "PowerSeries") -> int:
        _same_field(self.field, other.field)
        return min(self.trunc, other.trunc)

    def __add__(self, other):
        if not isinstance(other, PowerSeries):
            return self + PowerSeries.monomial(self.field, 0, self.trunc, other)
        n = self._check(other)
        return PowerSeries._raw(self.field, [self.coeffs[j] + other.coeffs[j] for j in range(n + 1)])

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, PowerSeries):
            return self - PowerSeries.monomial(self.field, 0, self.trunc, other)
        n = self._check(other)
        return PowerSeries._raw(self.field, [self.coeffs[j] - other.coeffs[j] for j in range(n + 1)])

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return PowerSeries._raw(self.field, [-c for c in self.coeffs])

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            c = self.field(other)
            return PowerSeries._raw(self.field, [x * c for x in self.coeffs])
        n = self._check(other)
        return PowerSeries._raw(self.field, self.field.series_mul(self.coeffs, other.coeffs, n))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PowerSeries):
            return self * other.reciprocal()
        c = self.field(other).inverse()
        return self * c

    def __pow__(self, e: int) -> "PowerSeries":
        if e < 0:
            return self.reciprocal() ** (-e)
        result = PowerSeries.one(self.field, self.trunc)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def shift(self, m: int) -> "PowerSeries":
        """Multiply by z^m (m may be negative when the low terms vanish).

        Positive m keeps the trunc; negative m lowers it by |m|.
        """
        f = self.field
        if m >= 0:
            cs = [f.zero] * m + list(self.coeffs[: self.trunc + 1 - m])
            return PowerSeries._raw(f, cs)
        m = -m
        if any(not c.is_zero() for c in self.coeffs[:m]):
            raise SeriesError("division by z^m with nonzero low terms")
        return PowerSeries._raw(f, self.coeffs[m:])

    # calculus and composition ------------------------------------------

    def derivative(self) -> "PowerSeries":
        if self.trunc == 0:
            return PowerSeries.zero(self.field, 0)
        return PowerSeries._raw(self.field, [self.coeffs[j] * j for j in range(1, self.trunc + 1)])

    def integral(self) -> "PowerSeries":
        """Antiderivative with zero constant; trunc rises by 1."""
        f = self.field
        return PowerSeries._raw(f, [f.zero] + [c / (j + 1) for j, c in enumerate(self.coeffs)])

    def reciprocal(self) -> "PowerSeries":
        a0 = self.coeffs[0]
        if a0.is_zero():
            raise SeriesError("reciprocal needs a nonzero constant term")
        inv0 = a0.inverse()
        g = [inv0]
        a = self.coeffs
        for m in range(1, self.trunc + 1):
            s = a[1] * g[m - 1]
            for i in range(2, m + 1):
                if not a[i].is_zero():
                    s = s + a[i] * g[m - i]
            g.append(-(s * inv0))
        return PowerSeries._raw(self.field, g)

    def compose(self, inner: "PowerSeries") -> "PowerSeries":
        """outer(inner(z)); requires inner(0) = 0."""
        if not inner.coeffs[0].is_zero():
            raise SeriesError("inner series must vanish at 0")
        _same_field(self.field, inner.field)
        n = min(self.trunc, inner.trunc)
        f = self.field
        # Horner: acc = c_n; acc = c_j + inner*acc.  After the step at depth j
        # only coefficients through z^(n-j) can still influence the result.
        acc = PowerSeries._raw(f, [self.coeffs[n]])
        for j in range(n - 1, -1, -1):
            width = n - j
            prod = f.series_mul(list(inner.coeffs[: width + 1]), list(acc.coeffs) + [f.zero] * (width + 1 - len(acc.coeffs)), width)
            prod[0] = prod[0] + self.coeffs[j]
            acc = PowerSeries._raw(f, prod)
        return acc

    def __call__(self, inner: "PowerSeries") -> "PowerSeries":
        return self.compose(inner)

    def comp_inverse(self) -> "PowerSeries":
        """g with f(g(z)) = z = g(f(z)) through the trunc order."""
        if not self.coeffs[0].is_zero():
            raise SeriesError("series must vanish at 0 to be inverted")
        if self.trunc < 1 or self.coeffs[1].is_zero():
            raise SeriesError("zero linear coefficient")
        f = self.field
        n = self.trunc
        a1inv = self.coeffs[1].inverse()
        g = PowerSeries._raw(f, [f.zero, a1inv])
        prec = 1
        # Newton: g <- g - (f(g) - z) / f'(g), doubling the correct order.
        # The error has valuation >= 2, so dividing it by z first keeps the
        # full trunc through the division.
        while prec < n:
            prec = min(2 * prec, n)
            fp = self.truncate(prec)
            gp = PowerSeries._raw(f, list(g.coeffs) + [f.zero] * (prec + 1 - len(g.coeffs)))
            err = (fp.compose(gp) - PowerSeries.z(f, prec)).shift(-1)
            dfg = fp.derivative().compose(gp.truncate(prec - 1))
            step = err * dfg.reciprocal()
            g = gp - PowerSeries._raw(f, [f.zero] + list(step.coeffs))
        return g.truncate(n)

    # special functions (all require the appropriate constant term) -------

    def exp(self) -> "PowerSeries":
        """exp of a series with zero constant term."""
        if not self.coeffs[0].is_zero():
            raise SeriesError("exp needs a zero constant term")
        f = self.field
        n = self.trunc
        # g' = f' g
        g = [f.one]
        a = self.coeffs
        for m in range(1, n + 1):
            s = f.zero
            for i in range(1, m + 1):
                if not a[i].is_zero():
                    s = s + a[i] * g[m - i] * i
            g.append(s / m)
        return PowerSeries._raw(f, g)

    def log1p(self) -> "PowerSeries":
        """log(1 + f) for f with zero constant term."""
        if not self.coeffs[0].is_zero():
            raise SeriesError("log1p needs a zero constant term")
        one_plus = self + 1
        d = self.derivative() * one_plus.truncate(self.trunc - 1).reciprocal() if self.trunc else None
        if d is None:
            return PowerSeries.zero(self.field, 0)
        return d.integral()

    def power(self, alpha) -> "PowerSeries":
        """f^alpha for f(0) = 1 and rational (or field) exponent alpha."""
        f = self.field
        if not self.coeffs[0].is_one():
            raise SeriesError("power needs constant term 1")
        al = f(alpha) if not isinstance(alpha, (int, Fraction)) else f(mpq(alpha) if isinstance(alpha, int) else mpq(alpha.numerator, alpha.denominator))
        a = self.coeffs
        n = self.trunc
        g = [f.one]
        # m g_m = sum_{i=1}^m ((alpha+1) i - m) a_i g_{m-i}
        for m in range(1, n + 1):
            s = f.zero
            for i in range(1, m + 1):
                if not a[i].is_zero():
                    s = s + ((al + 1) * i - m) * a[i] * g[m - i]
            g.append(s / m)
        return PowerSeries._raw(f, g)

    # serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {"field": self.field.label, "trunc": self.trunc, "coeffs": [c.to_json() for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj: dict, field: Field | None = None) -> "PowerSeries":
        field = field or field_from_label(obj["field"])
        cs = [field.coeff_from_json(c) for c in obj["coeffs"]]
        return cls._raw(field, cs + [field.zero] * (obj.get("trunc", len(cs) - 1) + 1 - len(cs)))


class LaurentSeries:
    """sum_{j=-m}^{N} c_j z^j with c_{-m} != 0 when m > 0."""

    __slots__ = ("field", "pole_order", "coeffs")

    def __init__(self, field: Field, pole_order: int, coeffs: Sequence):
        cs = [field(c) for c in coeffs]
        m = pole_order
        while m > 0 and cs and cs[0].is_zero():
            cs.pop(0)
            m -= 1
        if len(cs) < m + 1:
            raise SeriesError("Laurent series needs coefficients through z^0")
        self.field = field
        self.pole_order = m
        self.coeffs = tuple(cs)

    @property
    def trunc(self) -> int:
        return len(self.coeffs) - 1 - self.pole_order

    def __getitem__(self, j: int) -> Coefficient:
        i = j + self.pole_order
        if i < 0:
            return self.field.zero
        if j > self.trunc:
            raise IndexError(f"coefficient z^{j} beyond trunc order {self.trunc}")
        return self.coeffs[i]

    @classmethod
    def from_series(cls, field: Field, s: PowerSeries, shift: int) -> "LaurentSeries":
        """z^shift * s, shift possibly negative."""
        if shift >= 0:
            return cls(field, 0, [field.zero] * shift + list(s.coeffs))
        return cls(field, -shift, s.coeffs)

    def regular_part(self) -> PowerSeries:
        return PowerSeries._raw(self.field, self.coeffs[self.pole_order :])

    def residue(self) -> Coefficient:
        return self[-1]

    def __mul__(self, other):
        if isinstance(other, LaurentSeries):
            width = min(len(self.coeffs), len(other.coeffs)) - 1
            prod = self.field.series_mul(list(self.coeffs), list(other.coeffs), width)
            return LaurentSeries(self.field, self.pole_order + other.pole_order, prod)
        c = self.field(other)
        return LaurentSeries(self.field, self.pole_order, [x * c for x in self.coeffs])

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self.pole_order == other.pole_order and len(self.coeffs) == len(other.coeffs) and all(
            a == b for a, b in zip(self.coeffs, other.coeffs)
        )

    __hash__ = None

    def to_json(self) -> dict:
        return {"field": self.field.label, "pole_order": self.pole_order, "trunc": self.trunc, "coeffs": [c.to_json() for c in self.coeffs]}

    def __repr__(self) -> str:
        terms = [f"({c})*z^{j - self.pole_order}" for j, c in enumerate(self.coeffs) if not c.is_zero()]
        return f"LaurentSeries[{self.field.label}]({' + '.join(terms) or '0'} + O(z^{self.trunc + 1}))"


# functional interface -------------------------------------------------------


def ps_ring(a: PowerSeries, b: PowerSeries, op: str) -> PowerSeries:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown ring operation {op!r}")


def ps_compose(outer: PowerSeries, inner: PowerSeries) -> PowerSeries:
    return outer.compose(inner)


def ps_comp_inverse(f: PowerSeries) -> PowerSeries:
    return f.comp_inverse()


def ps_derivative(f: PowerSeries) -> PowerSeries:
    return f.derivative()


def ps_reciprocal(f: PowerSeries) -> PowerSeries:
    return f.reciprocal()


def series(coeffs: Iterable, field: Field | None = None, trunc: int | None = None) -> PowerSeries:
    """Convenience constructor; defaults to the rational field Q(i)."""
    return PowerSeries(field or cyclotomic(1), list(coeffs), trunc)
