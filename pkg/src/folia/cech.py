"""Twisted simplicial cohomology of triangulated closed oriented surfaces.

Cochains are indexed by sorted simplices with respect to the vertex order
0 < 1 < ... < V-1.  A rank-one unitary local system assigns to each edge
i < j a root of unity w_ij = zeta_m^{e_ij}; the coboundaries are

    (dh)_ij  = w_ij h_j - h_i
    (da)_ijk = a_ij + w_ij a_jk - a_ik

so a value on a simplex lives in the fiber over its first vertex.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .fields import Coefficient, CyclotomicField, Field, cyclotomic
from .linalg import Echelon, modular_rank, prime_for_order, root_of_unity_mod

Edge = tuple[int, int]
Tri = tuple[int, int, int]


class ComplexError(ValueError):
    pass


class NotFlatError(ValueError):
    pass


class NotCocycleError(ValueError):
    def __init__(self, simplex, value):
        super().__init__(f"not a cocycle: nonzero coboundary on {simplex}")
        self.simplex = simplex
        self.value = value


# ---------------------------------------------------------------------------
# complexes


def _perm_sign(t: Sequence[int]) -> int:
    a, b, c = t
    inv = (a > b) + (a > c) + (b > c)
    return -1 if inv % 2 else 1


@dataclass(frozen=True)
class SurfaceComplex:
    """Oriented triangles on vertices 0..n-1 (the vertex order is the integer order)."""

    n_vertices: int
    oriented: tuple[tuple[int, int, int], ...]

    @cached_property
    def triangles(self) -> tuple[Tri, ...]:
        return tuple(sorted(tuple(sorted(t)) for t in self.oriented))

    @cached_property
    def orientation(self) -> dict[Tri, int]:
        """+1 when the sorted triangle agrees with the given orientation."""
        return {tuple(sorted(t)): _perm_sign(t) for t in self.oriented}

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        es = set()
        for i, j, k in self.triangles:
            es.update({(i, j), (j, k), (i, k)})
        return tuple(sorted(es))

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {e: n for n, e in enumerate(self.edges)}

    @cached_property
    def tri_index(self) -> dict[Tri, int]:
        return {t: n for n, t in enumerate(self.triangles)}

    @property
    def vertices(self) -> range:
        return range(self.n_vertices)

    @property
    def euler(self) -> int:
        return self.n_vertices - len(self.edges) + len(self.triangles)

    @property
    def genus(self) -> int:
        return (2 - self.euler) // 2

    def validate(self) -> None:
        directed: dict[Edge, int] = {}
        for t in self.oriented:
            if len(set(t)) != 3 or not all(0 <= v < self.n_vertices for v in t):
                raise ComplexError(f"bad triangle {t}")
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                directed[e] = directed.get(e, 0) + 1
        if len(set(self.triangles)) != len(self.triangles):
            raise ComplexError("repeated triangle")
        for (i, j), c in directed.items():
            if c != 1 or directed.get((j, i)) != 1:
                raise ComplexError(f"edge {(i, j)} is not bordered by two oppositely oriented triangles")
        # vertex links must be single cycles
        for v in self.vertices:
            link = {}
            for t in self.oriented:
                if v in t:
                    r = t.index(v)
                    a, b = t[(r + 1) % 3], t[(r + 2) % 3]
                    link[a] = b
            if not link:
                raise ComplexError(f"isolated vertex {v}")
            start = next(iter(link))
            cur, steps = link[start], 1
            while cur != start:
                cur = link[cur]
                steps += 1
            if steps != len(link):
                raise ComplexError(f"link of vertex {v} is not a circle")
        # connectedness
        adj = {v: set() for v in self.vertices}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        seen, stack = {0}, [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != self.n_vertices:
            raise ComplexError("complex is not connected")
        if self.euler % 2:
            raise ComplexError("odd Euler characteristic")

    def to_json(self) -> dict:
        return {"vertices": self.n_vertices, "triangles": [list(t) for t in self.oriented]}

    @classmethod
    def from_json(cls, obj: dict) -> "SurfaceComplex":
        c = cls(int(obj["vertices"]), tuple(tuple(int(v) for v in t) for t in obj["triangles"]))
        c.validate()
        return c


# minimal 7-vertex torus
_TORUS = (
    (0, 1, 3), (1, 2, 4), (2, 3, 5), (3, 4, 6), (4, 5, 0), (5, 6, 1), (6, 0, 2),
    (0, 3, 2), (1, 4, 3), (2, 5, 4), (3, 6, 5), (4, 0, 6), (5, 1, 0), (6, 2, 1),
)

# connected sum of two copies of the torus above along one triangle
_GENUS2 = (
    (1, 2, 4), (2, 3, 5), (3, 4, 6), (4, 5, 0), (5, 6, 1), (6, 0, 2), (0, 3, 2),
    (1, 4, 3), (2, 5, 4), (3, 6, 5), (4, 0, 6), (5, 1, 0), (6, 2, 1),
    (1, 8, 7), (7, 9, 3), (3, 10, 8), (8, 0, 9), (9, 1, 10), (10, 7, 0), (0, 7, 3),
    (1, 3, 8), (7, 8, 9), (3, 9, 10), (8, 10, 0), (9, 0, 1), (10, 1, 7),
)


def canonical_complex(genus: int) -> SurfaceComplex:
    if genus == 1:
        c = SurfaceComplex(7, _TORUS)
    elif genus == 2:
        c = SurfaceComplex(11, _GENUS2)
    else:
        raise ComplexError(f"no shipped complex of genus {genus}")
    c.validate()
    return c


# ---------------------------------------------------------------------------
# local systems


@dataclass(frozen=True)
class UnitaryLocalSystem:
    """Edge weights zeta_m^{e_ij} on the sorted edges of a complex."""

    complex: SurfaceComplex
    m: int
    exps: tuple[int, ...]  # aligned with complex.edges

    def __post_init__(self):
        if len(self.exps) != len(self.complex.edges):
            raise ValueError("one exponent per edge is required")
        object.__setattr__(self, "exps", tuple(e % self.m for e in self.exps))

    @classmethod
    def trivial(cls, c: SurfaceComplex, m: int = 1) -> "UnitaryLocalSystem":
        return cls(c, m, (0,) * len(c.edges))

    @cached_property
    def field(self) -> CyclotomicField:
        return cyclotomic(self.m)

    def exponent(self, i: int, j: int) -> int:
        if i < j:
            return self.exps[self.complex.edge_index[(i, j)]]
        return (-self.exps[self.complex.edge_index[(j, i)]]) % self.m

    def weight(self, i: int, j: int, field: Field | None = None) -> Coefficient:
        f = field or self.field
        return f.zeta(self.m, self.exponent(i, j))

    def check_flat(self) -> None:
        for i, j, k in self.complex.triangles:
            if (self.exponent(i, j) + self.exponent(j, k) - self.exponent(i, k)) % self.m:
                raise NotFlatError(f"holonomy around {(i, j, k)} is nontrivial")

    def is_trivial(self) -> bool:
        """Trivial as a local system (flat gauge-equivalent to all-ones weights)."""
        return self.order() == 1

    def order(self) -> int:
        """Order of the holonomy character."""
        hol = self.holonomy()
        g = self.m
        for h in hol:
            g = math.gcd(g, h)
        return self.m // g

    def holonomy(self) -> tuple[int, ...]:
        """Exponents on the free edges of the tree-cotree decomposition."""
        tc = tree_cotree(self.complex)
        # gauge to make tree edges trivial, then read off free edges
        pot = _tree_potential(self.complex, tc.tree, self)
        out = []
        for i, j in tc.free:
            out.append((self.exponent(i, j) - pot[j] + pot[i]) % self.m)
        return tuple(out)

    def power(self, k: int) -> "UnitaryLocalSystem":
        return UnitaryLocalSystem(self.complex, self.m, tuple(e * k for e in self.exps))

    def tensor(self, other: "UnitaryLocalSystem") -> "UnitaryLocalSystem":
        m = math.lcm(self.m, other.m)
        a, b = m // self.m, m // other.m
        return UnitaryLocalSystem(self.complex, m, tuple(x * a + y * b for x, y in zip(self.exps, other.exps)))

    def with_modulus(self, m: int) -> "UnitaryLocalSystem":
        if m % self.m:
            raise ValueError("new modulus must be a multiple")
        return UnitaryLocalSystem(self.complex, m, tuple(e * (m // self.m) for e in self.exps))

    def to_json(self) -> dict:
        return {"order": self.m, "edges": [[list(e), x] for e, x in zip(self.complex.edges, self.exps)]}

    @classmethod
    def from_json(cls, c: SurfaceComplex, obj: dict) -> "UnitaryLocalSystem":
        m = int(obj["order"])
        exps = [0] * len(c.edges)
        for (i, j), x in obj["edges"]:
            if i < j:
                exps[c.edge_index[(i, j)]] = int(x)
            else:
                exps[c.edge_index[(j, i)]] = -int(x)
        L = cls(c, m, tuple(exps))
        L.check_flat()
        return L


def local_system_power(L: UnitaryLocalSystem, k: int) -> UnitaryLocalSystem:
    return L.power(k)


@dataclass(frozen=True)
class TreeCotree:
    tree: tuple[Edge, ...]
    cotree: tuple[Edge, ...]
    free: tuple[Edge, ...]


_TC_CACHE: dict = {}


def tree_cotree(c: SurfaceComplex) -> TreeCotree:
    hit = _TC_CACHE.get(c)
    if hit is not None:
        return hit
    # BFS spanning tree from vertex 0
    adj = {v: [] for v in c.vertices}
    for i, j in c.edges:
        adj[i].append(j)
        adj[j].append(i)
    tree = []
    seen = {0}
    queue = [0]
    while queue:
        v = queue.pop(0)
        for w in sorted(adj[v]):
            if w not in seen:
                seen.add(w)
                queue.append(w)
                tree.append((min(v, w), max(v, w)))
    tset = set(tree)
    # dual spanning tree through edges outside the tree
    tri_of_edge: dict[Edge, list[Tri]] = {}
    for t in c.triangles:
        i, j, k = t
        for e in ((i, j), (j, k), (i, k)):
            tri_of_edge.setdefault(e, []).append(t)
    cotree = []
    seen_t = {c.triangles[0]}
    queue_t = [c.triangles[0]]
    while queue_t:
        t = queue_t.pop(0)
        i, j, k = t
        for e in ((i, j), (j, k), (i, k)):
            if e in tset:
                continue
            for u in tri_of_edge[e]:
                if u not in seen_t:
                    seen_t.add(u)
                    queue_t.append(u)
                    cotree.append(e)
    cset = set(cotree)
    free = tuple(e for e in c.edges if e not in tset and e not in cset)
    if len(free) != 2 * c.genus:
        raise ComplexError("tree-cotree decomposition failed")
    tc = TreeCotree(tuple(tree), tuple(cotree), free)
    _TC_CACHE[c] = tc
    return tc


def _tree_potential(c: SurfaceComplex, tree, L: UnitaryLocalSystem) -> dict[int, int]:
    """p with e_ij = p_j - p_i along tree edges (p_0 = 0)."""
    pot = {0: 0}
    adj: dict[int, list[int]] = {}
    for i, j in tree:
        adj.setdefault(i, []).append(j)
        adj.setdefault(j, []).append(i)
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj.get(v, []):
            if w not in pot:
                pot[w] = (pot[v] + L.exponent(v, w)) % L.m
                stack.append(w)
    return pot


def system_from_holonomy(c: SurfaceComplex, m: int, hol: Sequence[int]) -> UnitaryLocalSystem:
    """The flat system with trivial tree edges and the given free-edge exponents."""
    tc = tree_cotree(c)
    if len(hol) != len(tc.free):
        raise ValueError(f"need {len(tc.free)} holonomy exponents")
    known: dict[Edge, int] = {e: 0 for e in tc.tree}
    known.update({e: h % m for e, h in zip(tc.free, hol)})
    unknown = set(tc.cotree)
    while unknown:
        progress = False
        for i, j, k in c.triangles:
            es = [(i, j), (j, k), (i, k)]
            miss = [e for e in es if e in unknown]
            if len(miss) != 1:
                continue
            e = miss[0]
            eij = known.get((i, j))
            ejk = known.get((j, k))
            eik = known.get((i, k))
            # e_ij + e_jk - e_ik = 0
            if e == (i, j):
                known[e] = (eik - ejk) % m
            elif e == (j, k):
                known[e] = (eik - eij) % m
            else:
                known[e] = (eij + ejk) % m
            unknown.discard(e)
            progress = True
        if not progress:
            raise ComplexError("could not propagate flatness through the cotree")
    L = UnitaryLocalSystem(c, m, tuple(known[e] for e in c.edges))
    L.check_flat()
    return L


def systems_of_order(c: SurfaceComplex, m: int) -> Iterable[UnitaryLocalSystem]:
    """All flat systems (one per character) whose holonomy has exact order m."""
    g2 = 2 * c.genus
    for hol in product(range(m), repeat=g2):
        g = m
        for h in hol:
            g = math.gcd(g, h)
        if g == 1:
            yield system_from_holonomy(c, m, hol)


def random_system(c: SurfaceComplex, m: int, rng: random.Random, gauge: bool = True) -> UnitaryLocalSystem:
    """A random flat system of exact order m, optionally gauge-scrambled."""
    g2 = 2 * c.genus
    while True:
        hol = [rng.randrange(m) for _ in range(g2)]
        g = m
        for h in hol:
            g = math.gcd(g, h)
        if g == 1:
            break
    L = system_from_holonomy(c, m, hol)
    if gauge:
        p = [rng.randrange(m) for _ in c.vertices]
        L = UnitaryLocalSystem(c, m, tuple(e + p[j] - p[i] for e, (i, j) in zip(L.exps, c.edges)))
    return L


# ---------------------------------------------------------------------------
# cochains


@dataclass(frozen=True)
class TwistedCochain:
    degree: int
    values: tuple  # aligned with vertices / edges / triangles

    def __add__(self, other: "TwistedCochain") -> "TwistedCochain":
        return TwistedCochain(self.degree, tuple(a + b for a, b in zip(self.values, other.values)))

    def __sub__(self, other: "TwistedCochain") -> "TwistedCochain":
        return TwistedCochain(self.degree, tuple(a - b for a, b in zip(self.values, other.values)))

    def scale(self, c) -> "TwistedCochain":
        return TwistedCochain(self.degree, tuple(a * c for a in self.values))

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.values)

    def sparse(self) -> dict:
        return {i: v for i, v in enumerate(self.values) if not v.is_zero()}

    @classmethod
    def from_sparse(cls, degree: int, size: int, vec: dict, field: Field) -> "TwistedCochain":
        return cls(degree, tuple(vec.get(i, field.zero) for i in range(size)))

    @classmethod
    def zero(cls, degree: int, size: int, field: Field) -> "TwistedCochain":
        return cls(degree, (field.zero,) * size)

    def __eq__(self, other) -> bool:
        return isinstance(other, TwistedCochain) and self.degree == other.degree and all(
            a == b for a, b in zip(self.values, other.values))

    __hash__ = None

    def to_json(self) -> dict:
        return {"degree": self.degree, "values": [v.to_json() for v in self.values]}


def coboundary(c: SurfaceComplex, L: UnitaryLocalSystem, x: TwistedCochain, field: Field | None = None) -> TwistedCochain:
    f = field or L.field
    if x.degree == 0:
        h = x.values
        return TwistedCochain(1, tuple(L.weight(i, j, f) * h[j] - h[i] for i, j in c.edges))
    if x.degree == 1:
        a = x.values
        ei = c.edge_index
        out = []
        for i, j, k in c.triangles:
            out.append(a[ei[(i, j)]] + L.weight(i, j, f) * a[ei[(j, k)]] - a[ei[(i, k)]])
        return TwistedCochain(2, tuple(out))
    return TwistedCochain(3, ())


def _delta0_columns(c: SurfaceComplex, L: UnitaryLocalSystem, f: Field) -> list[dict]:
    cols: list[dict] = [dict() for _ in c.vertices]
    for n, (i, j) in enumerate(c.edges):
        cols[i][n] = cols[i].get(n, f.zero) - f.one
        cols[j][n] = cols[j].get(n, f.zero) + L.weight(i, j, f)
    return cols


def _delta1_columns(c: SurfaceComplex, L: UnitaryLocalSystem, f: Field) -> list[dict]:
    ei = c.edge_index
    cols: list[dict] = [dict() for _ in c.edges]
    for n, (i, j, k) in enumerate(c.triangles):
        for e, coef in (((i, j), f.one), ((j, k), L.weight(i, j, f)), ((i, k), -f.one)):
            col = cols[ei[e]]
            s = col.get(n, f.zero) + coef
            if s.is_zero():
                col.pop(n, None)
            else:
                col[n] = s
    return cols


@dataclass
class CohomologyBasis:
    degree: int
    reps: list[TwistedCochain]
    echelon: Echelon = dc_field(repr=False)
    rep_tags: list = dc_field(default_factory=list)
    size: int = 0
    field: Field | None = None

    @property
    def dimension(self) -> int:
        return len(self.reps)

    def coordinates(self, z: TwistedCochain) -> list[Coefficient]:
        """Class coordinates of a cocycle in this basis."""
        combo = self.echelon.solve(z.sparse())
        if combo is None:
            raise NotCocycleError(None, None)
        return [combo.get(t, self.field.zero) for t in self.rep_tags]

    def decompose(self, z: TwistedCochain) -> tuple[list[Coefficient], dict]:
        """(coordinates, primitive-combo) with z = d(prim) + sum coord_r rep_r."""
        combo = self.echelon.solve(z.sparse())
        if combo is None:
            raise NotCocycleError(None, None)
        coords = [combo.get(t, self.field.zero) for t in self.rep_tags]
        prim = {t[1]: v for t, v in combo.items() if t[0] == "b"}
        return coords, prim

    def to_json(self) -> dict:
        return {"degree": self.degree, "dimension": self.dimension, "reps": [r.to_json() for r in self.reps]}


@dataclass
class Cohomology:
    complex: SurfaceComplex
    system: UnitaryLocalSystem
    field: Field
    h0: CohomologyBasis
    h1: CohomologyBasis
    h2: CohomologyBasis

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.h0.dimension, self.h1.dimension, self.h2.dimension)

    def __iter__(self):
        return iter((self.h0, self.h1, self.h2))

    def to_json(self) -> dict:
        return {"h": list(self.dims), "bases": [b.to_json() for b in self]}


_COH_CACHE: dict = {}


def cohomology(c: SurfaceComplex, L: UnitaryLocalSystem, field: Field | None = None) -> Cohomology:
    """Exact bases of H^0, H^1, H^2 by incremental elimination."""
    f = field or L.field
    key = (c, L, f.key())
    hit = _COH_CACHE.get(key)
    if hit is not None:
        return hit
    L.check_flat()
    V, E, F = c.n_vertices, len(c.edges), len(c.triangles)
    d0 = _delta0_columns(c, L, f)
    d1 = _delta1_columns(c, L, f)
    # H^0 = ker d0
    ech0 = Echelon(f)
    h0reps = []
    for v, col in enumerate(d0):
        dep = ech0.add(col, v)
        if dep is not None:
            h0reps.append(TwistedCochain.from_sparse(0, V, dep, f))
    h0 = CohomologyBasis(0, h0reps, Echelon(f), [], V, f)
    # Z^1 = ker d1
    ech1 = Echelon(f)
    z1 = []
    for e, col in enumerate(d1):
        dep = ech1.add(col, e)
        if dep is not None:
            z1.append(dep)
    # H^1: coboundaries first, then cocycles
    e1 = Echelon(f)
    for v, col in enumerate(d0):
        e1.add(col, ("b", v))
    h1reps, h1tags = [], []
    for r, z in enumerate(z1):
        if e1.add(z, ("z", r)) is None:
            h1reps.append(TwistedCochain.from_sparse(1, E, z, f))
            h1tags.append(("z", r))
    h1 = CohomologyBasis(1, h1reps, e1, h1tags, E, f)
    # H^2 = C^2 / B^2
    e2 = Echelon(f)
    for e, col in enumerate(d1):
        e2.add(col, ("b", e))
    h2reps, h2tags = [], []
    for t in range(F):
        if e2.add({t: f.one}, ("t", t)) is None:
            h2reps.append(TwistedCochain.from_sparse(2, F, {t: f.one}, f))
            h2tags.append(("t", t))
    h2 = CohomologyBasis(2, h2reps, e2, h2tags, F, f)
    out = Cohomology(c, L, f, h0, h1, h2)
    if len(_COH_CACHE) > 256:
        _COH_CACHE.clear()
    _COH_CACHE[key] = out
    return out


@dataclass
class CoboundaryResult:
    ok: bool
    primitive: TwistedCochain | None = None
    coords: list | None = None

    def to_json(self) -> dict:
        if self.ok:
            return {"solvable": True, "primitive": self.primitive.to_json()}
        return {"solvable": False, "class": [c.to_json() for c in self.coords]}


def solve_coboundary(c: SurfaceComplex, L: UnitaryLocalSystem, z: TwistedCochain,
                     field: Field | None = None) -> CoboundaryResult:
    f = field or L.field
    if z.degree not in (1, 2):
        raise ValueError("degree must be 1 or 2")
    if z.degree == 1:
        dz = coboundary(c, L, z, f)
        for t, v in zip(c.triangles, dz.values):
            if not v.is_zero():
                raise NotCocycleError(t, v)
    coh = cohomology(c, L, f)
    basis = coh.h1 if z.degree == 1 else coh.h2
    coords, prim = basis.decompose(z)
    if any(not x.is_zero() for x in coords):
        return CoboundaryResult(False, coords=coords)
    size = c.n_vertices if z.degree == 1 else len(c.edges)
    p = TwistedCochain.from_sparse(z.degree - 1, size, prim, f)
    return CoboundaryResult(True, primitive=p)


# ---------------------------------------------------------------------------
# cup product


def flat_section(c: SurfaceComplex, L: UnitaryLocalSystem, field: Field | None = None) -> list[Coefficient]:
    """s with w_ij s_j = s_i and s_0 = 1; raises when the system is nontrivial."""
    f = field or L.field
    s: dict[int, Coefficient] = {0: f.one}
    stack = [0]
    adj: dict[int, list[int]] = {v: [] for v in c.vertices}
    for i, j in c.edges:
        adj[i].append(j)
        adj[j].append(i)
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in s:
                # s_w = w_{wv} s_v
                s[w] = L.weight(w, v, f) * s[v]
                stack.append(w)
    for i, j in c.edges:
        if not (L.weight(i, j, f) * s[j] - s[i]).is_zero():
            raise ValueError("coefficient systems are not dual: no flat section")
    return [s[v] for v in c.vertices]


def cup_cochain(c: SurfaceComplex, u: TwistedCochain, Lv: UnitaryLocalSystem, v: TwistedCochain,
                field: Field) -> TwistedCochain:
    """(u cup v)_ijk = u_ij w^{(v)}_ij v_jk."""
    ei = c.edge_index
    out = []
    for i, j, k in c.triangles:
        out.append(u.values[ei[(i, j)]] * Lv.weight(i, j, field) * v.values[ei[(j, k)]])
    return TwistedCochain(2, tuple(out))


def evaluate_fundamental(c: SurfaceComplex, L: UnitaryLocalSystem, x: TwistedCochain, field: Field) -> Coefficient:
    """<x, [Y]> for a 2-cochain with values in a trivializable system."""
    s = flat_section(c, L, field)
    total = field.zero
    for t, val in zip(c.triangles, x.values):
        if not val.is_zero():
            term = val / s[t[0]]
            total = total + (term if c.orientation[t] > 0 else -term)
    return total


def cup_product(c: SurfaceComplex, La: UnitaryLocalSystem, u: TwistedCochain, Lb: UnitaryLocalSystem,
                v: TwistedCochain, field: Field | None = None) -> Coefficient:
    f = field or cyclotomic(math.lcm(La.m, Lb.m))
    return evaluate_fundamental(c, La.tensor(Lb), cup_cochain(c, u, Lb, v, f), f)


def pairing_matrix(c: SurfaceComplex, La: UnitaryLocalSystem, Lb: UnitaryLocalSystem,
                   field: Field | None = None) -> list[list[Coefficient]]:
    f = field or cyclotomic(math.lcm(La.m, Lb.m))
    ha = cohomology(c, La, f).h1
    hb = cohomology(c, Lb, f).h1
    return [[cup_product(c, La, u, Lb, v, f) for v in hb.reps] for u in ha.reps]


# ---------------------------------------------------------------------------
# dimensions with a modular certificate


@dataclass(frozen=True)
class DimensionReport:
    dims: tuple[int, int, int]
    method: str  # "modular-certificate" | "exact"
    prime: int | None = None


def _int_matrices(c: SurfaceComplex, exps: np.ndarray, m: int, p: int, z: int):
    """delta0 (E x V) and delta1 (F x E) over F_p for a batch of exponent rows."""
    B = exps.shape[0]
    V, E, F = c.n_vertices, len(c.edges), len(c.triangles)
    table = np.array([pow(z, e, p) for e in range(m)], dtype=np.int64)
    w = table[exps % m]  # (B, E)
    d0 = np.zeros((B, E, V), dtype=np.int64)
    for n, (i, j) in enumerate(c.edges):
        d0[:, n, i] = p - 1
        d0[:, n, j] = w[:, n]
    d1 = np.zeros((B, F, E), dtype=np.int64)
    ei = c.edge_index
    for n, (i, j, k) in enumerate(c.triangles):
        d1[:, n, ei[(i, j)]] = 1
        d1[:, n, ei[(j, k)]] = w[:, ei[(i, j)]]
        d1[:, n, ei[(i, k)]] = p - 1
    return d0, d1


def batch_rank_mod(a: np.ndarray, p: int) -> np.ndarray:
    """Ranks over F_p of a batch of matrices (B, R, C), no row swaps."""
    a = a % p
    B, R, C = a.shape
    used = np.zeros((B, R), dtype=bool)
    rank = np.zeros(B, dtype=np.int64)
    ar = np.arange(B)
    for col in range(C):
        cand = (a[:, :, col] != 0) & ~used
        has = cand.any(axis=1)
        if not has.any():
            continue
        piv = cand.argmax(axis=1)
        prow = a[ar, piv]  # (B, C)
        pv = prow[:, col]
        inv = np.array([pow(int(x), p - 2, p) if h else 0 for x, h in zip(pv, has)], dtype=np.int64)
        prow = (prow * inv[:, None]) % p
        factor = a[:, :, col].copy()
        factor[ar, piv] = 0
        factor[~has] = 0
        a = (a - (factor[:, :, None] * prow[:, None, :]) % p) % p
        used[ar[has], piv[has]] = True
        rank += has
    return rank


def _certificate_prime(m: int) -> tuple[int, int]:
    p = prime_for_order(math.lcm(m, 840), 1 << 29)
    return p, root_of_unity_mod(m, p)


def cohomology_dimensions(c: SurfaceComplex, L: UnitaryLocalSystem) -> DimensionReport:
    """Dimensions of H^0, H^1, H^2.

    A full-rank reduction modulo a prime p = 1 (mod m), with zeta_m sent to an
    element of exact order m, certifies the exact ranks (reduction cannot
    raise a rank).  Otherwise the exact elimination decides.
    """
    return batch_dimensions(c, [L])[0]


def batch_dimensions(c: SurfaceComplex, systems: Sequence[UnitaryLocalSystem]) -> list[DimensionReport]:
    V, E, F = c.n_vertices, len(c.edges), len(c.triangles)
    out: list[DimensionReport | None] = [None] * len(systems)
    by_m: dict[int, list[int]] = {}
    for idx, L in enumerate(systems):
        L.check_flat()
        by_m.setdefault(L.m, []).append(idx)
    for m, idxs in by_m.items():
        p, z = _certificate_prime(m)
        exps = np.array([systems[i].exps for i in idxs], dtype=np.int64)
        d0, d1 = _int_matrices(c, exps, m, p, z)
        r0 = batch_rank_mod(d0, p)
        r1 = batch_rank_mod(d1, p)
        for t, i in enumerate(idxs):
            if r0[t] == V and r1[t] == F:
                out[i] = DimensionReport((0, E - V - F, 0), "modular-certificate", p)
            else:
                out[i] = DimensionReport(cohomology(c, systems[i]).dims, "exact")
    return out  # type: ignore[return-value]
