"""Example inputs for the command-line tool.

    python3 -m folia.samples DIR
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

from .cech import UnitaryLocalSystem, canonical_complex, cohomology, system_from_holonomy
from .fields import cyclotomic
from .germ_group import GermDiffeo, exp_field, make_v
from .series_core import PowerSeries
from .ueda import log_affine_model, random_cocycle, ueda_seed


def torus_seed(trunc: int = 4):
    """t = 1 on the torus, nu = 1, a^(2) = rep_0 + 2 rep_1 (a nontrivial class)."""
    c = canonical_complex(1)
    L = UnitaryLocalSystem.trivial(c)
    f = L.field
    h1 = cohomology(c, L, f).h1
    a = h1.reps[0] + h1.reps[1].scale(f(2))
    return ueda_seed(c, L, 1, a, trunc, f)


def genus2_seed(trunc: int = 6, seed: int = 0):
    """Genus 2, t of order 3, nu = 2, a random cocycle with nonzero class."""
    c = canonical_complex(2)
    L = system_from_holonomy(c, 3, (1, 0, 2, 1))
    f = cyclotomic(3)
    rng = random.Random(seed)
    while True:
        a = random_cocycle(c, L.power(-2), f, rng)
        if any(not x.is_zero() for x in cohomology(c, L.power(-2), f).h1.coordinates(a)):
            return ueda_seed(c, L, 2, a, trunc, f)


def samples() -> dict[str, dict]:
    f = cyclotomic(1)
    n = 16
    z_over = GermDiffeo(PowerSeries(f, [0] + [1] * n))  # z / (1 - z)
    e1 = exp_field(make_v(1, 0, f, n))
    e2 = exp_field(make_v(2, 0, f, n))
    c = canonical_complex(1)
    h1 = cohomology(c, UnitaryLocalSystem.trivial(c), f).h1
    a = h1.reps[0] + h1.reps[1].scale(f(3))
    return {
        "germ_parabolic.json": {"germ": z_over.to_json()},
        "germ_linear.json": {"germ": GermDiffeo(PowerSeries(f, [0, 2, 1], n)).to_json()},
        "group_nonsolvable.json": {"generators": [e1.to_json(), e2.to_json()]},
        "group_linear.json": {"generators": [GermDiffeo.linear(2, f, n).to_json(), GermDiffeo.linear(3, f, n).to_json()]},
        "cohomology_genus2_order5.json": {"complex": {"genus": 2}, "local_system": {"order": 5, "holonomy": [1, 0, 2, 3]}},
        "cohomology_torus_trivial.json": {"complex": {"genus": 1}, "local_system": {"order": 1, "holonomy": [0, 0]}},
        "seed_torus_nu1.json": {**torus_seed().to_json(), "nu": 1},
        "seed_genus2_nu2.json": {**genus2_seed().to_json(), "nu": 2},
        "log_affine_torus.json": {**log_affine_model(c, a, 1, 2, 10, f).to_json(), "nu": 1},
        "forms_e23.json": {"generators": [exp_field(make_v(2, 3, f, n)).to_json()], "form": {"k": 2, "lambda": 3}},
    }


def write_samples(directory: str | Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for name, obj in samples().items():
        p = d / name
        p.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")
        out.append(p)
    return out


if __name__ == "__main__":
    for p in write_samples(sys.argv[1] if len(sys.argv) > 1 else "samples"):
        print(p)
