"""Shared builders for the test suite."""

from __future__ import annotations

import random

from folia.cech import canonical_complex, random_system
from folia.fields import cyclotomic
from folia.germ_group import GermDiffeo
from folia.series_core import PowerSeries
from folia.ueda import extend_order, random_cocycle, ueda_seed


def gaussian(f, rng: random.Random, bound: int = 3):
    return f(rng.randint(-bound, bound)) + f(rng.randint(-bound, bound)) * f.i()


def random_tangent(f, rng: random.Random, n: int, order: int = 1, bound: int = 3) -> GermDiffeo:
    """z + c z^{order+1} + ... with c != 0 and small Gaussian-integer coefficients."""
    terms = {1: 1}
    lead = gaussian(f, rng, bound)
    while lead.is_zero():
        lead = gaussian(f, rng, bound)
    terms[order + 1] = lead
    for j in range(order + 2, n + 1):
        terms[j] = gaussian(f, rng, bound)
    return GermDiffeo(PowerSeries.from_dict(f, terms, n))


def foliated_system(nu: int, mu: int, seed: int, genus: int = 2):
    """A random system valid through mu with a random type-nu seed.

    Each order nu+2..mu gets an extra random cocycle on top of the
    extension, so every coefficient up to mu is generic.
    """
    rng = random.Random(seed)
    c = canonical_complex(genus)
    f = cyclotomic(8)
    L = random_system(c, 8, rng)
    T = ueda_seed(c, L, nu, random_cocycle(c, L.power(-nu), f, rng), mu + 1, f)
    for l in range(nu + 2, mu + 1):
        if T.order_valid < l:
            ext = extend_order(T)
            assert ext.ok and ext.order == l
            T = ext.system
        T = T.with_coefficient(l, random_cocycle(c, L.power(-(l - 1)), f, rng), add=True)
        assert T.order_valid >= l
    return T
