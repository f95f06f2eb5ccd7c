"""Command-line front end: JSON in, versioned JSON report out.

Exit codes: 0 when a verdict or result is produced, 2 for a mathematical
failure that comes with a witness, 1 for input or usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any, Sequence

from .cech import UnitaryLocalSystem, cohomology, cohomology_dimensions, system_from_holonomy
from .classify import group_analyze, in_model_E, normal_form_element
from .fields import CyclotomicField, Field, common_field, cyclotomic, field_from_label
from .forms import ProjectiveTriple, invariant_form_search, omega, preserves, triple_check
from .germ_group import GermDiffeo
from .series_core import PowerSeries, SeriesError
from .ueda import (
    ConstructionError,
    LogAffineFailure,
    TransitionError,
    TransitionSystem,
    complex_from_json,
    compute_ueda,
    construct_formal_foliation,
    log_affine_construct,
    validate,
)

SCHEMA = "folia/1"
COMMANDS = ("classify-germ", "group-analyze", "cohomology", "ueda", "construct", "log-affine", "forms-check")


class InputError(ValueError):
    pass


class MathFailure(Exception):
    def __init__(self, report: dict):
        super().__init__(report.get("error", "mathematical failure"))
        self.report = report


# ---------------------------------------------------------------------------
# input helpers


def _need(obj: Any, key: str, where: str):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected a JSON object")
    if key not in obj:
        raise InputError(f"{where}: missing field '{key}'")
    return obj[key]


def _field_for(obj: dict, backend: Field | None) -> Field:
    if backend is not None:
        return backend
    label = obj.get("field", "cyclotomic:1") if isinstance(obj, dict) else "cyclotomic:1"
    try:
        return field_from_label(label)
    except ValueError as exc:
        raise InputError(f"field: {exc}") from None


def _germ(obj: dict, where: str, backend: Field | None, order: int, field: Field | None = None) -> GermDiffeo:
    coeffs = _need(obj, "coeffs", where)
    if not isinstance(coeffs, list):
        raise InputError(f"{where}.coeffs: expected a list")
    f = field or _field_for(obj, backend)
    try:
        cs = [f.coeff_from_json(c) for c in coeffs]
        trunc = int(obj.get("trunc", len(cs) - 1))
        g = GermDiffeo(PowerSeries(f, cs, trunc))
    except (SeriesError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"{where}: {exc}") from None
    return g.truncate(min(order, g.trunc))


def _germ_list(obj: dict, key: str, backend: Field | None, order: int) -> list[GermDiffeo]:
    items = _need(obj, key, "input")
    if not isinstance(items, list) or not items:
        raise InputError(f"input.{key}: expected a nonempty list of germs")
    field = backend
    if field is None:
        field = _field_for(items[0], None)
        for it in items[1:]:
            field = common_field(field, _field_for(it, None))
    return [_germ(it, f"input.{key}[{n}]", backend, order, field) for n, it in enumerate(items)]


def _local_system(c, obj: dict) -> UnitaryLocalSystem:
    if "holonomy" in obj:
        return system_from_holonomy(c, int(_need(obj, "order", "local_system")), [int(h) for h in obj["holonomy"]])
    _need(obj, "edges", "local_system")
    _need(obj, "order", "local_system")
    return UnitaryLocalSystem.from_json(c, obj)


def _transition_system(obj: dict, backend: Field | None) -> TransitionSystem:
    _need(obj, "complex", "input")
    _need(obj, "edges", "input")
    if backend is not None:
        obj = {**obj, "field": backend.label}
    try:
        return TransitionSystem.from_json(obj)
    except (KeyError, TypeError) as exc:
        raise InputError(f"input: malformed transition system ({exc})") from None


# ---------------------------------------------------------------------------
# output helpers


def _simplify(x: Any) -> Any:
    """Exact coefficients that are rational print as numbers or 'p/q' strings."""
    if isinstance(x, dict):
        return {k: _simplify(v) for k, v in x.items()}
    if isinstance(x, list):
        if x and all(isinstance(s, str) for s in x):
            try:
                vals = [Fraction(s) for s in x]
            except ValueError:
                return x
            if all(v == 0 for v in vals[1:]) and all("." not in s and "e" not in s for s in x):
                v = vals[0]
                return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
            return x
        return [_simplify(v) for v in x]
    return x


# ---------------------------------------------------------------------------
# commands


def cmd_classify_germ(obj: dict, args) -> dict:
    g = _germ(obj.get("germ", obj), "input.germ", args.backend, args.order)
    nf = normal_form_element(g, normalize=bool(obj.get("normalize", True)))
    out = nf.to_json()
    if args.brief:
        out.pop("conjugator", None)
    return out


def cmd_group_analyze(obj: dict, args) -> dict:
    gens = _germ_list(obj, "generators", args.backend, args.order)
    return group_analyze(gens, seed=args.seed).to_json()


def cmd_cohomology(obj: dict, args) -> dict:
    c = complex_from_json(_need(obj, "complex", "input"))
    L = _local_system(c, _need(obj, "local_system", "input"))
    rep = cohomology_dimensions(c, L)
    out = {"h": list(rep.dims), "method": rep.method, "genus": c.genus, "system_order": L.order()}
    if rep.prime is not None:
        out["prime"] = rep.prime
    if obj.get("bases"):
        out["bases"] = cohomology(c, L).to_json()["bases"]
    return out


def cmd_ueda(obj: dict, args) -> dict:
    T = _transition_system(obj, args.backend)
    return {"validate": validate(T).to_json(), "ueda": compute_ueda(T).to_json()}


def cmd_construct(obj: dict, args) -> dict:
    T = _transition_system(obj, args.backend)
    try:
        run = construct_formal_foliation(T, args.order, T.nu)
    except ConstructionError as exc:
        raise MathFailure({"ok": False, "error": str(exc), **getattr(exc, "witness", {})}) from None
    out = {"ok": True, **run.to_json()}
    if obj.get("emit_system"):
        out["system"] = run.system.to_json()
    return out


def cmd_log_affine(obj: dict, args) -> dict:
    T = _transition_system(obj, args.backend)
    nu = int(obj.get("nu", 1))
    res = log_affine_construct(T, nu)
    if isinstance(res, LogAffineFailure):
        raise MathFailure({"error": f"relation class at order {res.order} is not a multiple of [a]", **res.to_json()})
    return res.to_json()


def cmd_forms_check(obj: dict, args) -> dict:
    if "triple" in obj:
        f = _field_for(obj, args.backend)
        try:
            t = ProjectiveTriple.from_json(obj["triple"], f)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"input.triple: {exc}") from None
        return triple_check(t).to_json()
    gens = _germ_list(obj, "generators", args.backend, args.order)
    if "form" in obj:
        req = obj["form"]
        k = int(_need(req, "k", "input.form"))
        f = gens[0].field
        lam = f.coeff_from_json(req.get("lambda", 0))
        w = omega(k, lam, f, args.order)
        rows = [{"preserves": preserves(g, w), "in_model": in_model_E(g, k, lam)} for g in gens]
        return {"k": k, "lambda": lam.to_json(), "generators": rows,
                "all_preserve": all(r["preserves"] for r in rows)}
    return invariant_form_search(gens).to_json()


HANDLERS = {
    "classify-germ": cmd_classify_germ,
    "group-analyze": cmd_group_analyze,
    "cohomology": cmd_cohomology,
    "ueda": cmd_ueda,
    "construct": cmd_construct,
    "log-affine": cmd_log_affine,
    "forms-check": cmd_forms_check,
}


# ---------------------------------------------------------------------------


def _backend(label: str | None) -> Field | None:
    if label is None:
        return None
    try:
        return field_from_label(label)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="folia", description="Exact formal germ, cohomology and foliation computations.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("input", help="JSON input file, or - for standard input")
        s.add_argument("--order", type=int, default=16, help="truncation / target order N (default 16)")
        s.add_argument("--backend", type=_backend, default=None,
                       help="cyclotomic:n or bigfloat:p (default: the field named in the input)")
        s.add_argument("--seed", type=int, default=0)
        fmt = s.add_mutually_exclusive_group()
        fmt.add_argument("--json", dest="pretty", action="store_false")
        fmt.add_argument("--pretty", dest="pretty", action="store_true")
        if name == "classify-germ":
            s.add_argument("--brief", action="store_true", help="omit the conjugator")
        s.set_defaults(pretty=False, brief=False)
    return p


def _emit(report: dict, pretty: bool, stream) -> None:
    text = json.dumps(_simplify(report), sort_keys=True, indent=2 if pretty else None,
                      separators=None if pretty else (",", ":"))
    stream.write(text + "\n")


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    base = {"schema": SCHEMA, "command": args.command}
    try:
        if args.order < 1:
            raise InputError("--order must be positive")
        text = sys.stdin.read() if args.input == "-" else open(args.input, encoding="utf-8").read()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"input is not valid JSON: {exc}") from None
        report = HANDLERS[args.command](obj, args)
    except MathFailure as exc:
        _emit({**base, "status": "failure", **exc.report}, args.pretty, stdout)
        return 2
    except (InputError, TransitionError, OSError, ValueError) as exc:
        _emit({**base, "status": "error", "error": str(exc)}, args.pretty, stdout)
        print(f"folia: {exc}", file=stderr)
        return 1
    _emit({**base, "status": "ok", **report}, args.pretty, stdout)
    return 0


def main() -> None:
    sys.exit(run())
