"""Linear algebra over the coefficient fields, plus a modular rank certificate."""

from __future__ import annotations

from typing import Hashable, Iterable, Sequence

import numpy as np

from .fields import BigFloatField, Coefficient, Field

Vector = dict  # sparse: index -> Coefficient (nonzero entries only)


def _is_zero(c: Coefficient) -> bool:
    return c.is_zero()


def sparse(vals: Sequence[Coefficient]) -> Vector:
    return {i: c for i, c in enumerate(vals) if not c.is_zero()}


def axpy(y: Vector, a: Coefficient, x: Vector) -> None:
    """y += a x in place, dropping zeros."""
    for k, v in x.items():
        if k in y:
            s = y[k] + a * v
            if s.is_zero():
                del y[k]
            else:
                y[k] = s
        else:
            s = a * v
            if not s.is_zero():
                y[k] = s


def _combo_axpy(y: dict, a: Coefficient, x: dict) -> None:
    for k, v in x.items():
        y[k] = y[k] + a * v if k in y else a * v


class Echelon:
    """Incremental row echelon basis with provenance.

    Each stored vector is a known combination of the inputs that were added.
    Adding a dependent input returns the combination that vanishes, so the
    class also produces kernel vectors.
    """

    def __init__(self, field: Field):
        self.field = field
        self.rows: list[tuple[Hashable, Vector, dict]] = []  # (pivot, vector, combo)
        self.pivots: set = set()

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, v: Vector) -> tuple[Vector, dict]:
        """(residual, combo) with v = residual + sum combo[g] input_g."""
        v = dict(v)
        combo: dict = {}
        for p, b, c in self.rows:
            x = v.get(p)
            if x is not None:
                axpy(v, -x, b)
                _combo_axpy(combo, x, c)
        return v, combo

    def _pick_pivot(self, v: Vector):
        if isinstance(self.field, BigFloatField):
            return max(v, key=lambda k: abs(v[k]))
        return min(v, key=_key_order)

    def add(self, v: Vector, tag: Hashable) -> dict | None:
        """Insert input `tag`; returns None when independent, else the
        dependency combo (a kernel vector, including tag with coefficient 1)."""
        res, combo = self.reduce(v)
        combo = {k: -c for k, c in combo.items() if not c.is_zero()}
        combo[tag] = combo.get(tag, self.field.zero) + self.field.one
        if not res:
            return combo
        p = self._pick_pivot(res)
        inv = res[p].inverse()
        res = {k: c * inv for k, c in res.items()}
        combo = {k: c * inv for k, c in combo.items()}
        self.rows.append((p, res, combo))
        self.pivots.add(p)
        return None

    def solve(self, v: Vector) -> dict | None:
        """Coefficients on the inputs summing to v, or None outside the span."""
        res, combo = self.reduce(v)
        if res:
            return None
        return {k: c for k, c in combo.items() if not c.is_zero()}


def _key_order(k):
    return k if isinstance(k, (int, tuple)) else str(k)


def solve_affine(field: Field, cols: Sequence[Sequence[Coefficient]], rhs: Sequence[Coefficient]) -> list | None:
    """x with sum_c x_c cols[c] = rhs; free variables are set to zero."""
    ech = Echelon(field)
    for c, col in enumerate(cols):
        ech.add(sparse(col), c)
    sol = ech.solve(sparse(rhs))
    if sol is None:
        return None
    return [sol.get(c, field.zero) for c in range(len(cols))]


def rank(field: Field, rows: Iterable[Vector]) -> int:
    ech = Echelon(field)
    for i, r in enumerate(rows):
        ech.add(r, i)
    return len(ech)


def kernel(field: Field, cols: Sequence[Vector]) -> list[dict]:
    """Basis of {x : sum x_c cols[c] = 0}, each as a sparse dict over column indices."""
    ech = Echelon(field)
    out = []
    for c, col in enumerate(cols):
        dep = ech.add(col, c)
        if dep is not None:
            out.append(dep)
    return out


# ---------------------------------------------------------------------------
# modular certificate


def prime_for_order(m: int, start: int = 1 << 20) -> int:
    """The smallest prime p > start with p = 1 mod m."""
    p = start - start % m + 1
    while p <= start or not _is_prime(p):
        p += m
    return p


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def root_of_unity_mod(m: int, p: int) -> int:
    """An element of exact multiplicative order m in F_p (requires m | p - 1)."""
    assert (p - 1) % m == 0
    primes = [q for q in range(2, m + 1) if m % q == 0 and _is_prime(q)]
    for g in range(2, p):
        z = pow(g, (p - 1) // m, p)
        if all(pow(z, m // q, p) != 1 for q in primes):
            return z
    raise ValueError("no root of unity found")


def modular_rank(mat: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over F_p (entries already reduced)."""
    a = np.array(mat, dtype=np.int64) % p
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        inv = pow(int(a[r, c]), p - 2, p)
        a[r] = (a[r] * inv) % p
        col = a[:, c].copy()
        col[r] = 0
        nzr = np.nonzero(col)[0]
        if nzr.size:
            a[nzr] = (a[nzr] - np.outer(col[nzr], a[r])) % p
        r += 1
    return r
