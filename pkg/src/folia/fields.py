"""Coefficient fields.

Two backends share one element protocol:

* ``CyclotomicField(n)``: exact arithmetic in Q(zeta_M) with M = lcm(n, 4), so the
  Gaussian unit i is always available.  Elements are rational vectors in the power
  basis of zeta_M modulo the M-th cyclotomic polynomial.
* ``BigFloatField(p)``: complex numbers with p-bit mantissas (mpmath); equality is
  ``|x - y| <= eps`` with a per-field tolerance.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import gmpy2
import mpmath
from gmpy2 import mpq

DEFAULT_EPS = "1e-30"
DEFAULT_PREC = 256


class FieldMismatch(TypeError):
    pass


def _to_mpq(x) -> mpq:
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return mpq(Fraction(x))
    return mpq(x)


def cyclotomic_polynomial(n: int) -> list[int]:
    """Integer coefficients (low degree first) of the n-th cyclotomic polynomial."""
    poly = [-1] + [0] * (n - 1) + [1]  # x^n - 1
    for d in range(1, n):
        if n % d == 0:
            poly = _poly_exact_div(poly, cyclotomic_polynomial(d))
    return poly


def _poly_exact_div(num: list[int], den: list[int]) -> list[int]:
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    lead = den[-1]
    for i in range(len(out) - 1, -1, -1):
        q, r = divmod(num[i + len(den) - 1], lead)
        assert r == 0
        out[i] = q
        for j, c in enumerate(den):
            num[i + j] -= q * c
    assert not any(num[: len(den) - 1])
    return out


# ---------------------------------------------------------------------------
# exact backend


class CyclotomicField:
    """Q(zeta_M), M = lcm(n, 4); ``label`` keeps the requested n."""

    exact = True

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("conductor must be positive")
        self.n = n
        self.m = n * 4 // math.gcd(n, 4)
        self.phi = cyclotomic_polynomial(self.m)
        self.degree = len(self.phi) - 1
        d = self.degree
        self._zero_vec = (mpq(0),) * d
        # zeta^e for 0 <= e < m, reduced
        powers = []
        vec = [mpq(0)] * d
        vec[0] = mpq(1)
        for _ in range(self.m):
            powers.append(tuple(vec))
            vec = list(self._reduce([mpq(0)] + list(vec)))
        self._powers = powers
        self._pow_index = {p: e for e, p in enumerate(powers)}
        self.zero = CycElement(self, self._zero_vec)
        self.one = CycElement(self, powers[0])

    @property
    def label(self) -> str:
        return f"cyclotomic:{self.n}"

    def __repr__(self) -> str:
        return f"CyclotomicField({self.n})"

    def _reduce(self, acc: list) -> tuple:
        """Reduce an unreduced coefficient list (any length) modulo Phi_M."""
        d = self.degree
        phi = self.phi
        acc = list(acc)
        for e in range(len(acc) - 1, d - 1, -1):
            c = acc[e]
            if c:
                acc[e] = 0
                base = e - d
                for i in range(d):
                    if phi[i]:
                        acc[base + i] -= c * phi[i]
        if len(acc) < d:
            acc = acc + [mpq(0)] * (d - len(acc))
        return tuple(mpq(x) for x in acc[:d])

    def __call__(self, x) -> "CycElement":
        if isinstance(x, CycElement):
            if x.field is self:
                return x
            return self.embed(x)
        if isinstance(x, BigFloatElement):
            raise FieldMismatch("cannot coerce a bigfloat into an exact field")
        v = [mpq(0)] * self.degree
        v[0] = _to_mpq(x)
        return CycElement(self, tuple(v))

    def from_vector(self, vec: Iterable) -> "CycElement":
        v = [_to_mpq(x) for x in vec]
        if len(v) > self.degree:
            return CycElement(self, self._reduce(v))
        v += [mpq(0)] * (self.degree - len(v))
        return CycElement(self, tuple(v))

    def zeta(self, order: int, power: int = 1) -> "CycElement":
        """The root of unity exp(2 pi i power / order); order must divide M."""
        if self.m % order:
            raise ValueError(f"zeta_{order} is not in {self.label} (M={self.m})")
        e = (power * (self.m // order)) % self.m
        return CycElement(self, self._powers[e])

    def i(self) -> "CycElement":
        return self.zeta(4)

    def root_exponent(self, x: "CycElement") -> int | None:
        """e with x = zeta_M^e, or None when x is not a root of unity."""
        return self._pow_index.get(x.c)

    def embed(self, x: "CycElement") -> "CycElement":
        src = x.field
        if self.m % src.m:
            raise FieldMismatch(f"{src.label} does not embed in {self.label}")
        step = self.m // src.m
        acc = [mpq(0)] * self.degree
        for e, c in enumerate(x.c):
            if c:
                p = self._powers[(e * step) % self.m]
                for i, pc in enumerate(p):
                    if pc:
                        acc[i] += c * pc
        return CycElement(self, tuple(acc))

    def key(self):
        return ("cyclotomic", self.m)

    def __eq__(self, other) -> bool:
        return isinstance(other, CyclotomicField) and other.m == self.m

    def __hash__(self) -> int:
        return hash(self.key())

    def coeff_from_json(self, obj) -> "CycElement":
        if isinstance(obj, (int, str)):
            return self(obj)
        return self.from_vector(obj)

    # series kernel: truncated product of coefficient lists
    def series_mul(self, a: list, b: list, n: int) -> list:
        d = self.degree
        av = [x.c for x in a[: n + 1]]
        bv = [x.c for x in b[: n + 1]]
        anz = [(i, [(p, v) for p, v in enumerate(c) if v]) for i, c in enumerate(av)]
        anz = [(i, nz) for i, nz in anz if nz]
        bnz = [[(q, v) for q, v in enumerate(c) if v] for c in bv]
        width = 2 * d - 1
        out = []
        for m in range(n + 1):
            acc = [0] * width
            hit = False
            for i, nz in anz:
                if i > m:
                    break
                j = m - i
                if j >= len(bnz):
                    continue
                bz = bnz[j]
                if not bz:
                    continue
                hit = True
                for p, x in nz:
                    for q, y in bz:
                        acc[p + q] += x * y
            if hit:
                out.append(CycElement(self, self._reduce(acc)))
            else:
                out.append(self.zero)
        return out


class CycElement:
    __slots__ = ("field", "c")

    def __init__(self, field: CyclotomicField, c: tuple):
        self.field = field
        self.c = c

    def _coerce(self, other) -> "CycElement | None":
        if isinstance(other, CycElement):
            if other.field is self.field or other.field.m == self.field.m:
                return other
            raise FieldMismatch(f"{self.field.label} vs {other.field.label}")
        if isinstance(other, (int, Fraction)) or type(other) is type(mpq(0)):
            return self.field(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return CycElement(self.field, tuple(x + y for x, y in zip(self.c, o.c)))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return CycElement(self.field, tuple(x - y for x, y in zip(self.c, o.c)))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return CycElement(self.field, tuple(-x for x in self.c))

    def __mul__(self, other):
        if isinstance(other, int) or type(other) is type(mpq(0)):
            return CycElement(self.field, tuple(x * other for x in self.c))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = self.field.degree
        acc = [0] * (2 * d - 1)
        for p, x in enumerate(self.c):
            if x:
                for q, y in enumerate(o.c):
                    if y:
                        acc[p + q] += x * y
        return CycElement(self.field, self.field._reduce(acc))

    __rmul__ = __mul__

    def inverse(self) -> "CycElement":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        if not any(self.c[1:]):
            return CycElement(self.field, (1 / self.c[0],) + self.c[1:])
        # extended Euclid in Q[x] against Phi_M
        u = _poly_xgcd_inverse([mpq(x) for x in self.c], [mpq(x) for x in self.field.phi])
        return self.field.from_vector(u)

    def __truediv__(self, other):
        if isinstance(other, int) or type(other) is type(mpq(0)) or isinstance(other, Fraction):
            q = _to_mpq(other)
            return CycElement(self.field, tuple(x / q for x in self.c))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.field.one
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        try:
            o = self._coerce(other)
        except FieldMismatch:
            return False
        if o is None:
            return NotImplemented
        return self.c == o.c

    def __hash__(self) -> int:
        return hash(self.c)

    def is_zero(self) -> bool:
        return not any(self.c)

    def is_one(self) -> bool:
        return self.c == self.field.one.c

    def __bool__(self) -> bool:
        return not self.is_zero()

    def rational(self) -> mpq | None:
        """The rational value when the element lies in Q."""
        if any(self.c[1:]):
            return None
        return self.c[0]

    def conj(self) -> "CycElement":
        # complex conjugation sends zeta to zeta^{-1}
        f = self.field
        acc = [mpq(0)] * f.degree
        for e, c in enumerate(self.c):
            if c:
                for i, pc in enumerate(f._powers[(-e) % f.m]):
                    if pc:
                        acc[i] += c * pc
        return CycElement(f, tuple(acc))

    def __complex__(self) -> complex:
        m = self.field.m
        return sum(
            (float(c) * complex(math.cos(2 * math.pi * e / m), math.sin(2 * math.pi * e / m)) for e, c in enumerate(self.c) if c),
            0j,
        )

    def to_json(self) -> list[str]:
        return [str(x) for x in self.c]

    def __repr__(self) -> str:
        return f"Cyc({self})"

    def __str__(self) -> str:
        terms = []
        for e, c in enumerate(self.c):
            if not c:
                continue
            if e == 0:
                terms.append(str(c))
            else:
                z = "z" if e == 1 else f"z^{e}"
                terms.append(z if c == 1 else f"-{z}" if c == -1 else f"{c}*{z}")
        return " + ".join(terms) if terms else "0"


def _poly_trim(p: list) -> list:
    while p and not p[-1]:
        p.pop()
    return p


def _poly_divmod(a: list, b: list):
    a = list(a)
    q = [mpq(0)] * max(len(a) - len(b) + 1, 1)
    lead = b[-1]
    for i in range(len(a) - len(b), -1, -1):
        c = a[i + len(b) - 1] / lead
        q[i] = c
        if c:
            for j, bc in enumerate(b):
                a[i + j] -= c * bc
    return _poly_trim(q), _poly_trim(a[: len(b) - 1])


def _poly_sub(a: list, b: list) -> list:
    n = max(len(a), len(b))
    return _poly_trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def _poly_mul(a: list, b: list) -> list:
    if not a or not b:
        return []
    out = [mpq(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_xgcd_inverse(a: list, m: list) -> list:
    """u with a*u = 1 mod m (m irreducible)."""
    r0, r1 = _poly_trim(list(m)), _poly_trim(list(a))
    s0, s1 = [], [mpq(1)]
    while len(r1) > 1:
        q, r = _poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1))
    c = r1[0]
    return [x / c for x in s1]


# ---------------------------------------------------------------------------
# multiprecision backend


class BigFloatField:
    exact = False

    def __init__(self, prec: int = DEFAULT_PREC, eps=DEFAULT_EPS):
        self.prec = prec
        self.ctx = mpmath.MPContext()
        self.ctx.prec = prec
        self.eps = self.ctx.mpf(eps)
        self.zero = BigFloatElement(self, self.ctx.mpc(0))
        self.one = BigFloatElement(self, self.ctx.mpc(1))
        self.degree = 1

    @property
    def label(self) -> str:
        return f"bigfloat:{self.prec}"

    def __repr__(self) -> str:
        return f"BigFloatField({self.prec})"

    def key(self):
        return ("bigfloat", self.prec, str(self.eps))

    def __eq__(self, other) -> bool:
        return isinstance(other, BigFloatField) and other.key() == self.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __call__(self, x) -> "BigFloatElement":
        ctx = self.ctx
        if isinstance(x, BigFloatElement):
            return x if x.field is self else BigFloatElement(self, ctx.mpc(x.v))
        if isinstance(x, CycElement):
            m = x.field.m
            v = ctx.mpc(0)
            for e, c in enumerate(x.c):
                if c:
                    v += ctx.mpf(c.numerator) / c.denominator * ctx.expjpi(ctx.mpf(2 * e) / m)
            return BigFloatElement(self, v)
        if isinstance(x, Fraction) or type(x) is type(mpq(0)):
            return BigFloatElement(self, ctx.mpc(ctx.mpf(int(x.numerator)) / int(x.denominator)))
        if isinstance(x, str):
            return BigFloatElement(self, ctx.mpc(ctx.mpf(x)))
        return BigFloatElement(self, ctx.mpc(x))

    def from_parts(self, re, im) -> "BigFloatElement":
        return BigFloatElement(self, self.ctx.mpc(self.ctx.mpf(re), self.ctx.mpf(im)))

    def zeta(self, order: int, power: int = 1) -> "BigFloatElement":
        ctx = self.ctx
        return BigFloatElement(self, ctx.expjpi(ctx.mpf(2 * power) / order))

    def i(self) -> "BigFloatElement":
        return BigFloatElement(self, self.ctx.mpc(0, 1))

    def coeff_from_json(self, obj) -> "BigFloatElement":
        if isinstance(obj, (list, tuple)):
            return self.from_parts(obj[0], obj[1])
        return self(obj)

    def series_mul(self, a: list, b: list, n: int) -> list:
        av = [x.v for x in a[: n + 1]]
        bv = [x.v for x in b[: n + 1]]
        out = []
        zero = self.ctx.mpc(0)
        for m in range(n + 1):
            s = zero
            for i in range(max(0, m - len(bv) + 1), min(m, len(av) - 1) + 1):
                s += av[i] * bv[m - i]
            out.append(BigFloatElement(self, s))
        return out


class BigFloatElement:
    __slots__ = ("field", "v")

    def __init__(self, field: BigFloatField, v):
        self.field = field
        self.v = v

    def _coerce(self, other):
        if isinstance(other, BigFloatElement):
            return other
        if isinstance(other, CycElement):
            raise FieldMismatch("mixing exact and bigfloat coefficients")
        if isinstance(other, (int, Fraction, float, complex)) or type(other) is type(mpq(0)):
            return self.field(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return BigFloatElement(self.field, self.v + o.v)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return BigFloatElement(self.field, self.v - o.v)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return BigFloatElement(self.field, o.v - self.v)

    def __neg__(self):
        return BigFloatElement(self.field, -self.v)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return BigFloatElement(self.field, self.v * o.v)

    __rmul__ = __mul__

    def inverse(self):
        if self.v == 0:
            raise ZeroDivisionError("inverse of zero")
        return BigFloatElement(self.field, 1 / self.v)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return BigFloatElement(self.field, self.v / o.v)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return BigFloatElement(self.field, o.v / self.v)

    def __pow__(self, e: int):
        return BigFloatElement(self.field, self.v**e)

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return abs(self.v - o.v) <= self.field.eps

    __hash__ = None  # tolerance equality is not transitive

    def is_zero(self) -> bool:
        return abs(self.v) <= self.field.eps

    def is_one(self) -> bool:
        return abs(self.v - 1) <= self.field.eps

    def __bool__(self) -> bool:
        return not self.is_zero()

    def rational(self):
        return None

    def conj(self):
        return BigFloatElement(self.field, self.field.ctx.conj(self.v))

    def __abs__(self):
        return abs(self.v)

    def __complex__(self) -> complex:
        return complex(self.v)

    def to_json(self) -> list[str]:
        ctx = self.field.ctx
        digits = int(self.field.prec * 0.30103) + 2
        return [ctx.nstr(self.v.real, digits), ctx.nstr(self.v.imag, digits)]

    def __repr__(self) -> str:
        return f"BigFloat({self.field.ctx.nstr(self.v, 20)})"

    __str__ = __repr__


Coefficient = CycElement | BigFloatElement
Field = CyclotomicField | BigFloatField


# ---------------------------------------------------------------------------
# construction, labels, helpers


@lru_cache(maxsize=None)
def cyclotomic(n: int = 1) -> CyclotomicField:
    return CyclotomicField(n)


@lru_cache(maxsize=None)
def bigfloat(prec: int = DEFAULT_PREC, eps: str = DEFAULT_EPS) -> BigFloatField:
    return BigFloatField(prec, eps)


def field_from_label(label: str) -> Field:
    kind, _, arg = label.partition(":")
    if kind == "cyclotomic":
        return cyclotomic(int(arg) if arg else 1)
    if kind == "bigfloat":
        return bigfloat(int(arg) if arg else DEFAULT_PREC)
    raise ValueError(f"unknown field label {label!r}")


def common_field(a: Field, b: Field) -> Field:
    if a == b:
        return a
    if isinstance(a, CyclotomicField) and isinstance(b, CyclotomicField):
        return cyclotomic(math.lcm(a.n, b.n))
    if isinstance(a, BigFloatField):
        return a
    return b


def root_of_unity_order(x: Coefficient, bound: int = 1000) -> int | None:
    """Multiplicative order of x when x is a root of unity, else None."""
    f = x.field
    if isinstance(f, CyclotomicField):
        e = f.root_exponent(x)
        if e is None:
            return None
        return f.m // math.gcd(e, f.m)
    if abs(abs(x.v) - 1) > f.eps:
        return None
    p = x
    for q in range(1, bound + 1):
        if p.is_one():
            return q
        p = p * x
    return None


def rational_root(x: Coefficient, k: int) -> Coefficient | None:
    """An exact k-th root of x lying in the field, when one is found.

    Exact case: rational x with a rational k-th root, or k-th roots obtained by
    dividing out a root of unity.  Bigfloat: principal root.
    """
    f = x.field
    if isinstance(f, BigFloatField):
        return BigFloatElement(f, f.ctx.root(x.v, k))
    r = x.rational()
    if r is not None and r != 0:
        sign = 1
        if r < 0:
            if k % 2 == 0:
                # -1 = zeta_{2k}^k; zeta_{2k} lies in the field when 2k | M
                if f.m % (2 * k):
                    return None
                sign_root = f.zeta(2 * k)
                r = -r
                num, ok1 = gmpy2.iroot(gmpy2.mpz(r.numerator), k)
                den, ok2 = gmpy2.iroot(gmpy2.mpz(r.denominator), k)
                if ok1 and ok2:
                    return sign_root * f(mpq(num, den))
                return None
            sign = -1
            r = -r
        num, ok1 = gmpy2.iroot(gmpy2.mpz(r.numerator), k)
        den, ok2 = gmpy2.iroot(gmpy2.mpz(r.denominator), k)
        if ok1 and ok2:
            return f(sign * mpq(num, den))
        return None
    # x = zeta_M^e * r with rational r > 0: need k*e' = e mod M
    for e in range(f.m):
        r = (x * f.zeta(f.m, -e)).rational()
        if r is None or r <= 0:
            continue
        rr = rational_root(f(r), k)
        g = math.gcd(k, f.m)
        if rr is None or e % g:
            return None
        kk, mm = k // g, f.m // g
        e1 = (e // g) * pow(kk, -1, mm) % mm
        return rr * f.zeta(f.m, e1)
    return None
