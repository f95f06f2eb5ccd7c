"""Normal forms of germs and classification of finitely generated groups.

Every verdict is certified only through the truncation order of its inputs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

from gmpy2 import mpq

from .fields import BigFloatField, Coefficient, Field, rational_root, root_of_unity_order
from .forms import line_scale, omega, preserves
from .germ_group import (
    IDENTITY_TO_ORDER_N,
    NOT_TANGENT,
    GermDiffeo,
    commutator,
    exp_field,
    make_v,
    tangency_order,
)
from .series_core import LaurentSeries, PowerSeries

ROOT_ORDER_BOUND = 64


class NormalFormError(ArithmeticError):
    pass


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sparse conjugation by z + c z^j


def _compose_binomial(g: Sequence[Coefficient], c: Coefficient, j: int, n: int, field: Field) -> list:
    """Coefficients of g(z + c z^j) through z^n."""
    out = [field.zero] * (n + 1)
    cpow = [field.one]
    for i, gi in enumerate(g[: n + 1]):
        if gi.is_zero():
            continue
        r = 0
        binom = 1
        e = i
        while e <= n:
            while len(cpow) <= r:
                cpow.append(cpow[-1] * c)
            out[e] = out[e] + gi * cpow[r] * binom
            r += 1
            binom = binom * (i - r + 1) // r
            e = i + r * (j - 1)
            if binom == 0:
                break
    return out


def _conjugate_step(g: PowerSeries, c: Coefficient, j: int) -> PowerSeries:
    """h^{-1} o g o h for h = z + c z^j (j >= 2)."""
    field = g.field
    n = g.trunc
    F = PowerSeries._raw(field, _compose_binomial(g.coeffs, c, j, n, field))
    # h^{-1}(w) = sum_r (-c)^r C(rj, r)/(r(j-1)+1) w^{1+r(j-1)}
    total = F
    power = F
    step = F ** (j - 1)
    r = 1
    while 1 + r * (j - 1) <= n:
        power = power * step
        d = (-c) ** r * mpq(math.comb(r * j, r), r * (j - 1) + 1)
        total = total + power * d
        r += 1
    return total


def _compose_with_h(phi: PowerSeries, c: Coefficient, j: int) -> PowerSeries:
    return PowerSeries._raw(phi.field, _compose_binomial(phi.coeffs, c, j, phi.trunc, phi.field))


def _scale_conj(g: PowerSeries, beta: Coefficient) -> PowerSeries:
    """g(beta z)/beta."""
    cs = []
    b = beta.field.one
    for m, c in enumerate(g.coeffs):
        cs.append(c * b if m else c)
        if m >= 1:
            b = b * beta
    # coefficient m is scaled by beta^(m-1)
    return PowerSeries._raw(g.field, cs)


def _scale_arg(phi: PowerSeries, beta: Coefficient) -> PowerSeries:
    """phi(beta z)."""
    cs = []
    b = beta.field.one
    for c in phi.coeffs:
        cs.append(c * b)
        b = b * beta
    return PowerSeries._raw(phi.field, cs)


# ---------------------------------------------------------------------------
# element normal form


@dataclass
class ElementNormalForm:
    kind: str  # "linearizable" | "resonant"
    a: Coefficient
    conjugator: GermDiffeo
    certified_order: int
    k: int | None = None
    lam: Coefficient | None = None  # None when 2k+1 exceeds the truncation
    scale: Coefficient | None = None  # s in a*exp(s v_{k, s lam}); 1 once normalized
    finite_order: int | None = None
    reduced: GermDiffeo | None = None  # conjugator^-1 o f o conjugator

    def model(self) -> GermDiffeo:
        """The model germ that `reduced` equals through the certified order."""
        field = self.a.field
        n = self.certified_order
        if self.kind == "linearizable":
            return GermDiffeo.linear(self.a, field, n)
        lam = self.lam if self.lam is not None else field.zero
        s = self.scale
        flow = exp_field(make_v(self.k, s * lam, field, n), s)
        return GermDiffeo(flow.series * self.a)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "a": self.a.to_json(), "certified_order": self.certified_order,
               "conjugator": self.conjugator.to_json()}
        if self.kind == "resonant":
            out["k"] = self.k
            out["lambda"] = None if self.lam is None else self.lam.to_json()
            out["scale"] = self.scale.to_json()
        if self.finite_order is not None:
            out["finite_order"] = self.finite_order
        return out


def _is_one(x: Coefficient) -> bool:
    return x.is_one()


def normal_form_element(f: GermDiffeo, normalize: bool = True) -> ElementNormalForm:
    """Normal form a z (linearizable) or a exp(s v_{k, s lam}) (resonant).

    With normalize=True the scale s is brought to 1 by a homothety whenever
    the needed k-th root lies in the coefficient field.  The invariants
    (a, k, lam) do not depend on that choice.
    """
    field = f.field
    n = f.trunc
    a = f[1]
    q = root_of_unity_order(a, ROOT_ORDER_BOUND)
    ident = PowerSeries.z(field, n)
    if q is None:
        g, phi = _kill(f.series, ident, a, n, resonant=None)
        return ElementNormalForm("linearizable", a, GermDiffeo(phi), n, reduced=GermDiffeo(g))
    fq = f.iterate(q)
    t = tangency_order(fq)
    if t == IDENTITY_TO_ORDER_N:
        # finite order: phi = (1/q) sum a^{-j} f^j satisfies phi o f = a phi
        acc = PowerSeries.zero(field, n)
        fj = GermDiffeo.identity(field, n)
        ainv = a.inverse()
        w = field.one
        for _ in range(q):
            acc = acc + fj.series * w
            fj = f @ fj
            w = w * ainv
        phi = GermDiffeo(acc * field(mpq(1, q)))
        conj = phi.inverse()
        return ElementNormalForm("linearizable", a, conj, n, finite_order=q,
                                 reduced=GermDiffeo.linear(a, field, n))
    k = t
    if k % q:
        raise NormalFormError(f"tangency order {k} of the {q}-th iterate is not a multiple of {q}")
    return _resonant(f, a, q, k, normalize)


def _kill(g: PowerSeries, phi: PowerSeries, a: Coefficient, n: int, resonant) -> tuple[PowerSeries, PowerSeries]:
    """Remove every coefficient 2..n of g by conjugation (all non-resonant)."""
    for m in range(2, n + 1):
        gm = g[m]
        if gm.is_zero():
            continue
        den = a - a ** m
        if den.is_zero():
            raise NormalFormError(f"unexpected resonance at order {m}")
        c = -(gm / den)
        g = _conjugate_step(g, c, m)
        phi = _compose_with_h(phi, c, m)
        if not g[m].is_zero():
            raise NormalFormError(f"failed to kill order {m}")
    return g, phi


def _resonant(f: GermDiffeo, a: Coefficient, q: int, k: int, normalize: bool) -> ElementNormalForm:
    field = f.field
    n = f.trunc
    g = f.series
    phi = PowerSeries.z(field, n)
    s = None
    lam = None
    model = None  # coefficient list of a exp(s v_{k, s lam}) once lam is known

    def target(m: int) -> Coefficient:
        if model is not None:
            return model[m]
        return field.zero  # only orders below 2k+1 are consulted before lam is known

    for m in range(2, n + 1):
        res = (m - 1) % q == 0
        if not res:
            gm = g[m]
            if not gm.is_zero():
                c = -(gm / (a - a ** m))
                g = _conjugate_step(g, c, m)
                phi = _compose_with_h(phi, c, m)
            continue
        if m < k + 1:
            if not g[m].is_zero():
                raise NormalFormError(f"resonant order {m} below k+1 did not vanish")
            continue
        if m == k + 1:
            s = g[m] / a
            if s.is_zero():
                raise NormalFormError("vanishing leading resonant coefficient")
            if normalize and not s.is_one():
                beta = rational_root(s.inverse(), k)
                if beta is not None:
                    g = _scale_conj(g, beta)
                    phi = _scale_arg(phi, beta)
                    s = g[m] / a
            continue
        if m == 2 * k + 1:
            lam = field(Fraction(k + 1, 2)) - g[m] / (a * s * s)
            flow = exp_field(make_v(k, s * lam, field, n), s)
            model = [c * a for c in flow.series.coeffs]
            continue
        j = m - k
        diff = g[m] - target(m)
        if not diff.is_zero():
            c = -(diff / (a * s * (k + 1 - j)))
            g = _conjugate_step(g, c, j)
            phi = _compose_with_h(phi, c, j)
            if not (g[m] - target(m)).is_zero():
                raise NormalFormError(f"failed to normalize resonant order {m}")
    nf = ElementNormalForm("resonant", a, GermDiffeo(phi), n, k=k, lam=lam, scale=s, reduced=GermDiffeo(g))
    if not nf.reduced.series.agrees(nf.model().series):
        raise NormalFormError("reduced germ differs from the model")
    return nf


def in_model_E(f: GermDiffeo, k: int, lam) -> bool:
    """f = a exp(t v_{k,lam}) with a^k = 1, in the given coordinate."""
    field = f.field
    lam = field(lam)
    nf = normal_form_element(f, normalize=False)
    if nf.kind == "linearizable":
        exact_linear = all(f[m].is_zero() for m in range(2, f.trunc + 1))
        return exact_linear and (nf.a ** k).is_one()
    if nf.k != k or not nf.conjugator.is_identity():
        return False
    if nf.lam is None:
        return True
    return nf.scale * nf.lam == lam


def centralizer_check(h: GermDiffeo, g: GermDiffeo) -> bool:
    return commutator(h, g).is_identity()


# ---------------------------------------------------------------------------
# group analysis

Word = tuple[int, ...]  # letters +i / -i for generator i-1 and its inverse


def word_to_json(w: Word) -> list[int]:
    return list(w)


def _reduced_words(r: int, max_len: int) -> list[Word]:
    letters = [i for i in range(1, r + 1)] + [-i for i in range(1, r + 1)]
    out: list[Word] = []
    layer: list[Word] = [()]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for x in letters:
                if w and w[-1] == -x:
                    continue
                nxt.append(w + (x,))
        out.extend(nxt)
        layer = nxt
    return out


def _random_words(r: int, count: int, max_len: int, seed: int) -> list[Word]:
    rng = random.Random(seed)
    letters = [i for i in range(1, r + 1)] + [-i for i in range(1, r + 1)]
    out = []
    for _ in range(count):
        length = rng.randint(1, max_len)
        w: list[int] = []
        while len(w) < length:
            x = rng.choice(letters)
            if w and w[-1] == -x:
                continue
            w.append(x)
        out.append(tuple(w))
    return out


class WordEvaluator:
    """Evaluates words in the generators with prefix caching."""

    def __init__(self, gens: Sequence[GermDiffeo]):
        self.gens = list(gens)
        self.inv = [g.inverse() for g in gens]
        field = gens[0].field
        n = min(g.trunc for g in gens)
        self.cache: dict[Word, GermDiffeo] = {(): GermDiffeo.identity(field, n)}

    def letter(self, x: int) -> GermDiffeo:
        return self.gens[x - 1] if x > 0 else self.inv[-x - 1]

    def __call__(self, w: Word) -> GermDiffeo:
        w = tuple(w)
        hit = self.cache.get(w)
        if hit is not None:
            return hit
        val = self(w[:-1]) @ self.letter(w[-1])
        self.cache[w] = val
        return val


def commutator_word(u: Word, v: Word) -> Word:
    inv = lambda w: tuple(-x for x in reversed(w))
    return u + v + inv(u) + inv(v)


def verify_commutator_chain(gens: Sequence[GermDiffeo], witness: dict) -> bool:
    """Recompute a nonsolvability witness: strictly increasing nontrivial
    tangency orders reaching the claimed final order."""
    ev = WordEvaluator(gens)
    elems = [ev(tuple(w)) for w in witness["base"]]
    orders = [tangency_order(e) for e in elems]
    if not all(isinstance(o, int) for o in orders) or orders[0] == orders[1]:
        return False
    for i, j in witness["chain"]:
        elems.append(commutator(elems[i], elems[j]))
        orders.append(tangency_order(elems[-1]))
    if orders != witness["orders"]:
        return False
    tail = orders[2:]
    if not tail or not all(isinstance(o, int) for o in tail):
        return False
    return all(b > a for a, b in zip(tail, tail[1:])) and tail[-1] >= witness["target"]


@dataclass
class GroupVerdict:
    verdict: str  # abelian | solvable_model | nonsolvable_witness | linearizable | finite_linear | undetermined_at_order_N
    model: str | None  # "L", "L_Q", "E", "A" or None
    certified_order: int
    k: int | None = None
    lam: Coefficient | None = None
    conjugator: GermDiffeo | None = None
    evidence: dict = dc_field(default_factory=dict)

    @property
    def model_label(self) -> str | None:
        if self.model == "E":
            return f"E({self.k},{self.lam})"
        if self.model == "A":
            return f"A({self.k})"
        return self.model

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "model": self.model, "certified_order": self.certified_order,
               "evidence": self.evidence}
        if self.k is not None:
            out["k"] = self.k
        if self.lam is not None:
            out["lambda"] = self.lam.to_json()
        if self.conjugator is not None:
            out["conjugator"] = self.conjugator.to_json()
        return out


def group_analyze(gens: Sequence[GermDiffeo], seed: int = 0, word_len: int = 4,
                  random_count: int = 50, random_len: int = 8) -> GroupVerdict:
    if not gens:
        raise ValueError("empty generator list")
    n = min(g.trunc for g in gens)
    r = len(gens)
    ev = WordEvaluator(gens)
    letters = [(i,) for i in range(1, r + 1)]

    abelian = all(
        commutator(gens[i], gens[j]).is_identity() for i in range(r) for j in range(i + 1, r)
    )
    evidence: dict = {"abelian": abelian}

    words = _reduced_words(r, word_len) + _random_words(r, random_count, random_len, seed)

    # sample of G1 = elements tangent to the identity
    sample: list[tuple[Word, GermDiffeo]] = []
    finite_all = True
    seen: set = set()

    def consider(w: Word):
        nonlocal finite_all
        if w in seen:
            return
        seen.add(w)
        e = ev(w)
        a = e[1]
        if a.is_one():
            sample.append((w, e))
            if not e.is_identity():
                finite_all = False
            return
        q = root_of_unity_order(a, ROOT_ORDER_BOUND)
        if q is None:
            finite_all = False
            return
        wq = w * q
        eq = ev(wq) if len(wq) <= 4 * random_len else e.iterate(q)
        ev.cache[wq] = eq
        sample.append((wq, eq))
        if not eq.is_identity():
            finite_all = False

    for w in letters + words:
        consider(w)
    for i in range(r):
        for j in range(i + 1, r):
            cw = commutator_word(letters[i], letters[j])
            if cw not in seen:
                seen.add(cw)
                sample.append((cw, ev(cw)))

    nontrivial = [(w, e, tangency_order(e)) for w, e in sample if not e.is_identity()]
    evidence["g1_sample_size"] = len(sample)
    evidence["g1_nontrivial"] = len(nontrivial)

    if not nontrivial:
        model = "L_Q" if finite_all else "L"
        verdict = "abelian" if abelian else ("finite_linear" if finite_all else "linearizable")
        return GroupVerdict(verdict, model, n, evidence=evidence)

    orders = sorted({t for _, _, t in nontrivial})
    evidence["g1_tangency_orders"] = orders
    if len(orders) >= 2:
        wit = _commutator_chain(gens, nontrivial, n)
        if wit is not None:
            return GroupVerdict("nonsolvable_witness", None, n, evidence={**evidence, "witness": wit})
        return GroupVerdict("undetermined_at_order_N", None, n, evidence=evidence)

    # distinguished element: first of minimal tangency order
    w_d, d, k_d = min(nontrivial, key=lambda item: item[2])
    evidence["distinguished"] = word_to_json(w_d)
    nf = normal_form_element(d)
    if nf.lam is None:
        return GroupVerdict("abelian" if abelian else "undetermined_at_order_N", None, n, evidence=evidence)
    phi = nf.conjugator
    phi_inv = phi.inverse()
    images = [phi_inv @ g @ phi for g in gens]
    k = nf.k
    mu = nf.scale * nf.lam
    w = omega(k, mu, d.field, n)
    if all(preserves(h, w) for h in images):
        return GroupVerdict("abelian" if abelian else "solvable_model", "E", n, k=k, lam=mu,
                            conjugator=phi, evidence=evidence)
    if mu.is_zero() and all(line_scale(h, k) is not None for h in images):
        return GroupVerdict("abelian" if abelian else "solvable_model", "A", n, k=k,
                            conjugator=phi, evidence=evidence)
    return GroupVerdict("abelian" if abelian else "undetermined_at_order_N", None, n, evidence=evidence)


def _commutator_chain(gens, nontrivial, n: int) -> dict | None:
    by_order: dict[int, tuple[Word, GermDiffeo]] = {}
    for w, e, t in nontrivial:
        by_order.setdefault(t, (w, e))
    orders = sorted(by_order)
    p, q = orders[0], orders[1]
    base = [by_order[p], by_order[q]]
    elems = [base[0][1], base[1][1]]
    ords = [p, q]
    chain = []
    cur = 1
    target = n - 1
    while ords[cur] < target:
        best = None
        for b in (0, 1):
            if ords[b] == ords[cur]:
                continue
            c = commutator(elems[cur], elems[b])
            t = tangency_order(c)
            if isinstance(t, int) and t > ords[cur] and (best is None or t < best[1]):
                best = (b, t, c)
        if best is None:
            return None
        b, t, c = best
        chain.append([cur, b])
        elems.append(c)
        ords.append(t)
        cur = len(elems) - 1
    if not chain:
        # the base element already reaches the target; still record one commutator
        c = commutator(elems[1], elems[0])
        t = tangency_order(c)
        if not isinstance(t, int):
            return None
        chain.append([1, 0])
        ords.append(t)
    wit = {"base": [word_to_json(base[0][0]), word_to_json(base[1][0])], "chain": chain,
           "orders": ords, "target": target}
    return wit if verify_commutator_chain(gens, wit) else None


# ---------------------------------------------------------------------------
# conjugation into a model


@dataclass
class ModelConjugation:
    model: str
    conjugator: GermDiffeo
    images: list[GermDiffeo]
    k: int | None = None
    lam: Coefficient | None = None

    def to_json(self) -> dict:
        out = {"model": self.model, "conjugator": self.conjugator.to_json(),
               "images": [g.to_json() for g in self.images]}
        if self.k is not None:
            out["k"] = self.k
        if self.lam is not None:
            out["lambda"] = self.lam.to_json()
        return out


def _enumerate_finite(gens: Sequence[GermDiffeo], limit: int = 512) -> list[GermDiffeo]:
    field = gens[0].field
    n = min(g.trunc for g in gens)
    elems = [GermDiffeo.identity(field, n)]
    frontier = list(elems)
    while frontier:
        nxt = []
        for e in frontier:
            for g in gens:
                h = g @ e
                if not any(h == x for x in elems):
                    elems.append(h)
                    nxt.append(h)
                    if len(elems) > limit:
                        raise ModelError("finite group enumeration exceeded its limit")
        frontier = nxt
    return elems


def conjugate_into_model(gens: Sequence[GermDiffeo], seed: int = 0) -> ModelConjugation:
    verdict = group_analyze(gens, seed=seed)
    if verdict.model is None:
        raise ModelError(f"no model: verdict {verdict.verdict}")
    field = gens[0].field
    n = verdict.certified_order
    if verdict.model in ("L", "L_Q"):
        phi = None
        for g in gens:
            if root_of_unity_order(g[1], ROOT_ORDER_BOUND) is None:
                phi = normal_form_element(g).conjugator
                break
        if phi is None:
            elems = _enumerate_finite(gens)
            acc = PowerSeries.zero(field, n)
            for e in elems:
                acc = acc + e.series * e[1].inverse()
            avg = GermDiffeo(acc * field(mpq(1, len(elems))))
            phi = avg.inverse()
        phi_inv = phi.inverse()
        images = [phi_inv @ g @ phi for g in gens]
        for h in images:
            if not all(h[m].is_zero() for m in range(2, n + 1)):
                raise ModelError("conjugated generator is not linear at the truncation")
        return ModelConjugation(verdict.model, phi, images)
    phi = verdict.conjugator
    phi_inv = phi.inverse()
    images = [phi_inv @ g @ phi for g in gens]
    if verdict.model == "E":
        w = omega(verdict.k, verdict.lam, field, n)
        if not all(preserves(h, w) for h in images):
            raise ModelError("image does not preserve the model form")
    else:
        if not all(line_scale(h, verdict.k) is not None for h in images):
            raise ModelError("image does not preserve the model line")
    return ModelConjugation(verdict.model, phi, images, verdict.k, verdict.lam)


# ---------------------------------------------------------------------------
# translation cocycle


def translation_cocycle(g: GermDiffeo, nu: int, lam) -> LaurentSeries:
    """F(g) = 1/g^nu - 1/z^nu + lam log(g/z); a power series through z^{N-1-nu}."""
    field = g.field
    n = g.trunc
    t = tangency_order(g)
    if t == NOT_TANGENT or (isinstance(t, int) and t < nu):
        raise ValueError(f"germ must be tangent to the identity at order {nu}")
    lam = field(lam)
    u = PowerSeries._raw(field, g.series.coeffs[1:]) - 1  # g/z - 1, through z^{n-1}
    top = n - 1 - nu
    if top < 0:
        raise ValueError("truncation too small for the requested nu")
    inv_pow = (u + 1).power(-nu) - 1  # valuation >= nu
    main = inv_pow.shift(-nu).truncate(top)
    if not lam.is_zero():
        main = main + u.log1p().truncate(top) * lam
    return LaurentSeries(field, 0, list(main.coeffs))


@dataclass(frozen=True)
class TranslationCocycleClasses:
    a: Coefficient
    b: Coefficient
    c: Coefficient
    a_k: dict

    def to_json(self) -> dict:
        return {"a": self.a.to_json(), "b": self.b.to_json(), "c": self.c.to_json(),
                "a_k": {str(k): v.to_json() for k, v in self.a_k.items()}}


def cocycle_classes(g: GermDiffeo, nu: int = 1, lam=0, ks: Sequence[int] = ()) -> TranslationCocycleClasses:
    F = translation_cocycle(g, nu, lam)
    return TranslationCocycleClasses(-F[0], F[1], F[2], {k: F[k] for k in ks})
