"""Batch command line interface; every command reads and writes JSON.

Exit codes: 0 success, 1 malformed input, 2 validation failure,
3 resource or budget exhaustion.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any, Callable

from . import apx
from .engine import (
    BudgetExhausted,
    back_and_forth,
    build_generic_chain,
    check_limit_criteria,
    dK_upper,
    partial_iso_defect,
)
from .extq import StructuralError, format_extq, validate_metric
from .sampling import rng_for
from .serialize import (
    SchemaError,
    _need,
    _rational,
    apx_from_json,
    apx_to_json,
    q,
    structure_from_json,
    witness_to_json,
)
from .structures import PointedObject, SearchBudgetExceeded, get_category

EXIT_OK, EXIT_INPUT, EXIT_INVALID, EXIT_RESOURCE = 0, 1, 2, 3


class InputError(Exception):
    """Unreadable or malformed input; reported with exit code 1."""


class Invalid(Exception):
    """Well-formed input that fails a precondition; reported with exit code 2."""


def load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None


def _parse(fn: Callable, data: Any, path: str):
    try:
        return fn(data, path)
    except SchemaError as e:
        raise InputError(str(e)) from None


def _frac(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {s!r}") from None


# --- apx -------------------------------------------------------------------------


def cmd_apx_validate(args):
    phi = _parse(apx_from_json, load_json(args.file), args.file)
    metric = {
        "source": [str(v) for v in validate_metric(phi.source)],
        "target": [str(v) for v in validate_metric(phi.target)],
    }
    kat = [list(v) for v in apx.katetov_violations(phi)]
    ok = not kat and not metric["source"] and not metric["target"]
    return {"valid": ok, "katetov_violations": kat, "metric_violations": metric}, EXIT_OK if ok else EXIT_INVALID


def _valid_apx(path: str, data=None, where="$"):
    """Parse an approximate isometry, raising Invalid unless it satisfies the Katetov conditions."""
    phi = _parse(apx_from_json, load_json(path) if data is None else data, f"{path}:{where}")
    if not apx.validate_apx(phi):
        raise Invalid(f"{path}:{where} is not an approximate isometry (run 'apx validate')")
    return phi


def _space_label(path, role, space):
    return f"{role} of {path} (points {', '.join(space.points)})"


def cmd_apx_compose(args):
    phi = _parse(apx_from_json, load_json(args.first), args.first)
    psi = _parse(apx_from_json, load_json(args.second), args.second)
    if phi.target != psi.source:
        raise InputError("middle space mismatch: " + _space_label(args.first, "target", phi.target)
                         + " differs from " + _space_label(args.second, "source", psi.source))
    return apx_to_json(apx.compose(psi, phi)), EXIT_OK


def cmd_apx_amalgamate(args):
    phi = _valid_apx(args.file)
    try:
        w = apx.amalgamate(phi)
    except apx.NoFiniteAmalgam as e:
        return {"error": str(e)}, EXIT_INVALID
    return {"witness": witness_to_json(w), "realizes": apx.check_realization(w, phi)}, EXIT_OK


def cmd_apx_totality(args):
    phi = _valid_apx(args.file)
    star, maxmin = apx.totality_defect_star(phi), apx.totality_defect_maxmin(phi)
    return {
        "totality_star": format_extq(star),
        "totality_maxmin": format_extq(maxmin),
        "agree": star == maxmin,
        "surjectivity": format_extq(apx.surjectivity_defect(phi)),
    }, EXIT_OK


def cmd_apx_strictify(args):
    phi, psi = _valid_apx(args.upper), _valid_apx(args.lower)
    if phi.source != psi.source or phi.target != psi.target:
        raise InputError(f"{args.upper} and {args.lower} live on different spaces")
    try:
        rho = apx.strict_interpolant(phi, psi)
    except apx.DominationError as e:
        return {"error": str(e)}, EXIT_INVALID
    return apx_to_json(rho), EXIT_OK


def cmd_apx_perturb_check(args):
    data = load_json(args.file)
    phi = _valid_apx(args.file, _need(data, "phi", "$"), "$.phi")
    sets = {}
    for key in ("X0", "Y0", "X0p", "Y0p"):
        v = data.get(key)
        if not isinstance(v, list) or not all(isinstance(p, str) for p in v):
            raise InputError(f"{args.file}: $.{key}: expected a list of point names")
        sets[key] = v
    for key, space in (("X0", phi.source), ("X0p", phi.source), ("Y0", phi.target), ("Y0p", phi.target)):
        missing = [p for p in sets[key] if p not in space.points]
        if missing:
            raise InputError(f"{args.file}: $.{key}: unknown points {missing}")
    eps = _rational(_need(data, "eps", "$"), "$.eps")
    verdict = apx.verify_perturbation(phi, sets["X0"], sets["Y0"], sets["X0p"], sets["Y0p"], eps)
    return {"verdict": verdict.value}, EXIT_OK if verdict else EXIT_INVALID


# --- categories --------------------------------------------------------------------


def _pointed(data, path) -> PointedObject:
    s = _parse(structure_from_json, _need(data, "structure", "$"), path + ":$.structure")
    tup = data.get("tuple")
    if not isinstance(tup, list):
        raise InputError(f"{path}: $.tuple: expected a list of point names")
    try:
        return PointedObject(s, tuple(tup))
    except StructuralError as e:
        raise InputError(f"{path}: {e}") from None


def cmd_cat_dk(args):
    cat = get_category(args.category)
    a, b = _pointed(load_json(args.first), args.first), _pointed(load_json(args.second), args.second)
    r = dK_upper(a, b, cat, budget=args.budget or 10_000)
    return {
        "bound": format_extq(r.bound),
        "exhaustive": r.exhaustive,
        "tried": r.tried,
        "witness": None if r.witness is None else apx_to_json(r.witness),
        "diagnostic": r.diagnostic,
    }, EXIT_OK


def _chain(args, seed):
    return build_generic_chain(get_category(args.category), seed, args.steps, budget=args.budget)


def cmd_cat_chain(args):
    return _chain(args, args.seed).to_json(), EXIT_OK


def cmd_cat_baf(args):
    c1, c2 = _chain(args, args.seed), _chain(args, args.seed + 1)
    phi0 = apx.all_inf(c1.stages[0].domain, c2.stages[0].domain)
    r = back_and_forth(c1, c2, phi0)
    out = r.to_json()
    out["defect"] = q(partial_iso_defect(r.alpha, c1.last.domain, c2.last.domain))
    out["seeds"] = [args.seed, args.seed + 1]
    return out, EXIT_OK


def cmd_cat_limit_check(args):
    chain = _chain(args, args.seed)
    rep = check_limit_criteria(chain, chain.category, sample_budget=args.samples, seed=args.seed)
    return rep.to_json(), EXIT_OK if rep.ok else EXIT_INVALID


# --- uhf ---------------------------------------------------------------------------


def _morphisms_in(data, path):
    from .uhf.io import morphism_from_json

    if isinstance(data, dict) and "maps" in data:
        return [("$", _parse(morphism_from_json, data, path))]
    if isinstance(data, list):
        return [(f"$[{i}]", _parse(morphism_from_json, d, f"{path}:$[{i}]")) for i, d in enumerate(data)]
    if isinstance(data, dict):
        found = [(f"$.{k}", _parse(morphism_from_json, v, f"{path}:$.{k}"))
                 for k, v in data.items() if isinstance(v, dict) and "maps" in v]
        if found:
            return found
    raise InputError(f"{path}: no diagonal morphism found")


def cmd_uhf_check_trace(args):
    from .uhf.core import pushforward_density

    out, ok = [], True
    for name, dm in _morphisms_in(load_json(args.file), args.file):
        try:
            dens = pushforward_density(dm)
        except (ValueError, StructuralError) as e:
            out.append({"at": name, "trace_preserving": False, "error": str(e)})
            ok = False
            continue
        tp = dens == dm.source.trace_density()
        ok &= tp
        out.append({"at": name, "trace_preserving": tp, "density": [[q(a), q(b), q(v)] for a, b, v in dens]})
    return {"morphisms": out, "all_trace_preserving": ok}, EXIT_OK if ok else EXIT_INVALID


def cmd_uhf_hall_match(args):
    from .uhf.hall import NoPerfectMatching, hall_match
    from .uhf.io import map_from_json

    data = load_json(args.file)
    tuples = []
    for key in ("t1", "t2"):
        ms = _need(data, key, "$")
        if not isinstance(ms, list):
            raise InputError(f"{args.file}: $.{key}: expected a list of maps")
        tuples.append([_parse(map_from_json, m, f"{args.file}:$.{key}[{i}]") for i, m in enumerate(ms)])
    delta = _rational(_need(data, "delta", "$"), "$.delta")
    try:
        sigma = hall_match(tuples[0], tuples[1], delta)
    except (NoPerfectMatching, StructuralError) as e:
        return {"error": str(e)}, EXIT_INVALID
    dists = [q(tuples[0][l].sup_distance(tuples[1][s])) for l, s in enumerate(sigma)]
    return {"sigma": list(sigma), "distances": dists, "bound": q(2 * delta)}, EXIT_OK


def cmd_uhf_nap(args):
    from .uhf.core import CubeAlgebra, SupernaturalNumber
    from .uhf.io import morphism_from_json, morphism_to_json
    from .uhf.nap import nap_construct
    from .uhf.sampling import random_morphism

    nu = SupernaturalNumber.parse(args.nu)
    if args.file:
        data = load_json(args.file)
        i1 = _parse(morphism_from_json, _need(data, "i1", "$"), args.file + ":$.i1")
        i2 = _parse(morphism_from_json, _need(data, "i2", "$"), args.file + ":$.i2")
        eps = args.eps if args.eps is not None else _rational(_need(data, "eps", "$"), "$.eps")
        lip = args.lipschitz if args.lipschitz is not None else _rational(data.get("lipschitz", "1"), "$.lipschitz")
    else:
        rng = rng_for(args.seed)
        A = CubeAlgebra(1, rng.choice([1, 2]))
        i1 = random_morphism(rng, A, rng.choice([1, 2, 4]))
        i2 = random_morphism(rng, A, rng.choice([1, 2, 4]))
        eps = args.eps if args.eps is not None else Fraction(1, 10)
        lip = args.lipschitz if args.lipschitz is not None else Fraction(1)
    try:
        r = nap_construct(i1, i2, lip, eps, nu, m_cap=args.budget or 4096)
    except StructuralError as e:
        return {"error": str(e)}, EXIT_INVALID
    return {
        "i1": morphism_to_json(i1),
        "i2": morphism_to_json(i2),
        "eta1": morphism_to_json(r.eta1),
        "eta2": morphism_to_json(r.eta2),
        "delta": q(r.delta),
        "m": r.m,
        "size": r.size,
        "aligned_distance": q(r.distance),
        "generator_bound": q(r.bound(lip)),
        "eps": q(eps),
    }, EXIT_OK


def cmd_uhf_limit_check(args):
    from .uhf.core import SupernaturalNumber
    from .uhf.limit import canonical_chain, check_uhf_limit, identity_chain

    nu = SupernaturalNumber.parse(args.nu)
    if args.chain == "canonical":
        chain = canonical_chain(args.length, args.m)
    elif args.chain == "identity":
        chain = identity_chain(args.length)
    else:
        from .uhf.io import morphism_from_json

        data = load_json(args.chain)
        if not isinstance(data, list):
            raise InputError(f"{args.chain}: expected a list of morphisms")
        chain = [_parse(morphism_from_json, d, f"{args.chain}:$[{i}]") for i, d in enumerate(data)]
    try:
        rep = check_uhf_limit(chain, nu, depth=args.depth, eps_schedule=args.eps, n_bound=args.n_bound)
    except StructuralError as e:
        raise InputError(str(e)) from None
    return rep.to_json(), EXIT_OK if rep.ok else EXIT_INVALID


def cmd_uhf_hilbert(args):
    from .uhf.hilbert import cell_masses, cells_adjacent, hilbert_map
    from .uhf.io import map_to_json

    beta = hilbert_map(args.level)
    masses = cell_masses(beta, args.level)
    want = Fraction(1, 4 ** args.level)
    ok = len(masses) == 4 ** args.level and all(v == want for v in masses.values()) and cells_adjacent(args.level)
    return {"level": args.level, "map": map_to_json(beta), "cell_mass": q(want), "checks_pass": ok}, \
        EXIT_OK if ok else EXIT_INVALID


# --- matrix ----------------------------------------------------------------------------


def cmd_matrix_verify_lemma(args):
    from .matrix_checks import sweep

    r = sweep(args.m, args.n, args.trials, args.seed, args.near)
    return r, EXIT_OK if r["failures"] == 0 else EXIT_INVALID


# --- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    common.add_argument("--budget", type=int, default=argparse.SUPPRESS,
                        help="command budget: vertices, candidates or subdivision cap")
    common.add_argument("--out", default=argparse.SUPPRESS, help="write output here instead of stdout")
    common.add_argument("--format", choices=["json", "summary"], default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="fraisse", description=__doc__, parents=[common])
    top = p.add_subparsers(dest="group", required=True)

    def leaf(sub, name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    g = top.add_parser("apx", help="approximate isometries").add_subparsers(dest="cmd", required=True)
    leaf(g, "validate", cmd_apx_validate, "check the Katetov conditions").add_argument("file")
    s = leaf(g, "compose", cmd_apx_compose, "min-plus composite: second after first")
    s.add_argument("first")
    s.add_argument("second")
    leaf(g, "amalgamate", cmd_apx_amalgamate, "realize by a joint embedding").add_argument("file")
    leaf(g, "totality", cmd_apx_totality, "totality and surjectivity defects").add_argument("file")
    s = leaf(g, "strictify", cmd_apx_strictify, "rational interpolant strictly between lower and upper")
    s.add_argument("upper")
    s.add_argument("lower")
    leaf(g, "perturb-check", cmd_apx_perturb_check, "check the perturbation estimate").add_argument("file")

    g = top.add_parser("cat", help="categories and generic chains").add_subparsers(dest="cmd", required=True)
    s = leaf(g, "dk", cmd_cat_dk, "upper bound on the distance between pointed objects")
    s.add_argument("first")
    s.add_argument("second")
    for name, fn, help_ in (("chain", cmd_cat_chain, "build a generic chain"),
                            ("baf", cmd_cat_baf, "back-and-forth between chains for seed and seed+1"),
                            ("limit-check", cmd_cat_limit_check, "sampled limit criteria for a chain")):
        s = leaf(g, name, fn, help_)
        s.add_argument("--steps", type=int, default=10)
        if name == "limit-check":
            s.add_argument("--samples", type=int, default=10)
    for s in g.choices.values():
        s.add_argument("--category", choices=["graphs", "metrics"], default="graphs")

    g = top.add_parser("uhf", help="interval matrix algebras").add_subparsers(dest="cmd", required=True)
    leaf(g, "check-trace", cmd_uhf_check_trace, "trace preservation of morphisms").add_argument("file")
    leaf(g, "hall-match", cmd_uhf_hall_match, "match two map tuples").add_argument("file")
    s = leaf(g, "nap", cmd_uhf_nap, "near amalgamation; random pair from --seed without a file")
    s.add_argument("file", nargs="?")
    s.add_argument("--eps", type=_frac)
    s.add_argument("--lipschitz", type=_frac)
    s.add_argument("--nu", default="2^inf")
    s = leaf(g, "limit-check", cmd_uhf_limit_check, "UHF limit criteria")
    s.add_argument("--chain", default="canonical", help="canonical, identity or a JSON file")
    s.add_argument("--nu", default="2^inf")
    s.add_argument("--length", type=int, default=15)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--depth", type=int, default=8)
    s.add_argument("--eps", type=_frac, nargs="+", default=[Fraction(1, 2), Fraction(1, 8), Fraction(1, 64)])
    s.add_argument("--n-bound", type=int, default=64)
    leaf(g, "hilbert", cmd_uhf_hilbert, "dyadic Hilbert approximant").add_argument("--level", type=int, default=1)

    g = top.add_parser("matrix", help="almost-commuting bound checks").add_subparsers(dest="cmd", required=True)
    s = leaf(g, "verify-lemma", cmd_matrix_verify_lemma, "random sweep of the partial-trace bound")
    s.add_argument("--m", type=int, default=4)
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--near", type=float, default=0.0, help="perturb b(x)1 at this scale instead")
    return p


def _summary(payload) -> str:
    if not isinstance(payload, dict):
        return json.dumps(payload)
    lines = []
    for k, v in payload.items():
        if isinstance(v, (str, int, float, bool)) or v is None:
            lines.append(f"{k}: {v}")
        elif isinstance(v, (list, dict)):
            lines.append(f"{k}: <{type(v).__name__} of {len(v)}>")
    return "\n".join(lines)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("seed", 0), ("budget", None), ("out", None), ("format", "json")):
        if not hasattr(args, name):
            setattr(args, name, default)
    if args.budget is not None and args.budget < 1:
        parser.error("--budget must be positive")
    try:
        payload, code = args.func(args)
    except (InputError, SchemaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (BudgetExhausted, SearchBudgetExceeded) as e:
        payload, code = {"error": str(e), "resource_exhausted": True}, EXIT_RESOURCE
    except (Invalid, StructuralError) as e:
        payload, code = {"error": str(e)}, EXIT_INVALID
    text = json.dumps(payload, indent=2) if args.format == "json" else _summary(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


def main() -> None:
    sys.exit(run())
