"""Command-line front end.

Problem files are YAML. Exactly one of ``operator`` / ``radial`` is given::

    presentation: position-momentum     # or: ladder
    operator: "-Y^2 + X^2 + X^4"        # or a list of {coeff: "3/2", exponents: [a, b]}
    family: {kind: affine, a: "-1"}     # affine | one_plus_x2 | number_op | two_n_plus_one | custom
    k_max: 13
    basis_mode: explicit                # dense | polytope | explicit
    basis_rule: {x: 2, xy: 0}           # X^0..X^(k+x), Y..X^(k+xy) Y   (or bases: [[[a, b], ...], ...])
    grading: ladder_z4                  # or {order: 4, left: [3], right: [1]}
    solver: {feas_tol: 1e-9, gap_tol: 1e-9, max_iter: 100, backend: embedded}
    reference: 1.392351642

    radial: {potential: "-1 r^-1 + r", dimension: 1, m: 1}

Exit codes: 0 success, 2 parse/validation error, 3 solver status other than
Optimal, 4 certificate check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, List, Optional

import numpy as np
import yaml

from . import gram, ladder, radial, sdp
from .newton import BasisSpec
from .parsing import ParseError
from .scalar import Scalar, parse_scalar
from .weyl import (
    LADDER,
    POSITION_MOMENTUM,
    Monomial,
    Presentation,
    WeylElement,
    parse_element,
    symbol_positivity_sample,
)

EXIT_OK, EXIT_PARSE, EXIT_SOLVER, EXIT_CERTIFY = 0, 2, 3, 4
CERT_RESIDUAL_TOL = 1e-6
CERT_EIG_TOL = 1e-8


class ProblemError(ValueError):
    """Invalid problem file; carries a location when one is known."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        loc = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(loc + message)
        self.line, self.column = line, column


# -- YAML with source positions ------------------------------------------------


class _Str(str):
    line = 0
    column = 0
    quoted = False


class _Loader(yaml.SafeLoader):
    pass


def _construct_str(loader, node):
    s = _Str(loader.construct_scalar(node))
    s.line = node.start_mark.line + 1
    s.column = node.start_mark.column + 1
    s.quoted = node.style in ("'", '"')
    return s


_Loader.add_constructor("tag:yaml.org,2002:str", _construct_str)


def _located(exc: Exception, text: Any) -> ProblemError:
    if isinstance(text, _Str):
        col = text.column + (1 if text.quoted else 0)
        msg = str(exc)
        if isinstance(exc, ParseError):
            col += exc.column - 1
            msg = exc.message
        return ProblemError(msg, text.line, col)
    return ProblemError(str(exc))


def _scalar(text) -> Scalar:
    if isinstance(text, (int, Fraction)):
        return Scalar(text)
    if isinstance(text, float):
        return Scalar(Fraction(str(text)))
    try:
        return parse_scalar(str(text))
    except (ParseError, ZeroDivisionError, ValueError) as exc:
        raise _located(exc, text) from exc


# -- problem files ---------------------------------------------------------------


@dataclass
class ProblemFile:
    presentation: Presentation
    operator: Optional[WeylElement] = None
    radial: Optional[radial.RadialProblem] = None
    family: ladder.DenominatorFamily = field(default_factory=ladder.DenominatorFamily.affine)
    k_max: int = 0
    basis_mode: Any = "dense"
    grading: Optional[gram.Grading] = None
    options: ladder.LadderOptions = field(default_factory=ladder.LadderOptions)
    reference: Optional[float] = None

    def gram_problem(self, k: int) -> gram.GramProblem:
        if self.radial is not None:
            return radial.radial_gram(self.radial, k)
        return ladder.build_level(self.operator, self.family, k, self.basis_mode, self.grading)

    def sdp_problem(self, k: int) -> sdp.SdpProblem:
        """The realified SDP of level k, pruned when the options say so."""
        p = self.gram_problem(k)
        if self.options.prune:
            p, _ = gram.prune_forced_zero(p)
        return gram.realify(p, self.options.embedding)

    def run(self) -> ladder.LadderResult:
        if self.radial is not None:
            return radial.run_radial(self.radial, self.k_max, self.options)
        return ladder.run(self.operator, self.family, self.k_max, self.basis_mode, self.grading, self.options)


def _presentation(doc) -> Presentation:
    node = doc.get("presentation", POSITION_MOMENTUM)
    d = 1
    if isinstance(node, dict):
        d = int(node.get("d", 1))
        node = node.get("kind", POSITION_MOMENTUM)
    if node not in (POSITION_MOMENTUM, LADDER):
        raise _located(ValueError(f"unknown presentation {node!r}"), node)
    return Presentation(str(node), d)


def _operator(node, pres: Presentation) -> WeylElement:
    if isinstance(node, str):
        try:
            return parse_element(node, pres)
        except (ParseError, ZeroDivisionError) as exc:
            raise _located(exc, node) from exc
    if not isinstance(node, list):
        raise ProblemError("operator must be a string or a list of terms")
    terms = {}
    for t in node:
        if not isinstance(t, dict) or "coeff" not in t or "exponents" not in t:
            raise ProblemError("each operator term needs 'coeff' and 'exponents'")
        ex = t["exponents"]
        if pres.d == 1 and len(ex) == 2 and all(isinstance(v, int) for v in ex):
            alpha, beta = (ex[0],), (ex[1],)
        else:
            alpha, beta = tuple(ex[0]), tuple(ex[1])
        if len(alpha) != pres.d or len(beta) != pres.d or min(alpha + beta) < 0:
            raise ProblemError(f"bad exponents {ex!r}")
        m = Monomial(alpha, beta)
        terms[m] = terms.get(m, Scalar(0)) + _scalar(t["coeff"])
    return WeylElement(pres, terms)


def _family(node, pres: Presentation) -> ladder.DenominatorFamily:
    if node is None:
        return ladder.DenominatorFamily.affine()
    if isinstance(node, str):
        node = {"kind": node}
    kind = node.get("kind")
    if kind == "affine":
        return ladder.DenominatorFamily.affine(_scalar(node.get("a", -1)))
    if kind == "one_plus_x2":
        return ladder.DenominatorFamily.one_plus_x2()
    if kind == "number_op":
        alpha = _scalar(node.get("alpha", "1/2"))
        if not alpha.is_rational():
            raise _located(ValueError("alpha must be rational"), node.get("alpha"))
        m = node.get("m", [0])
        if isinstance(m, dict) and "round_robin" in m:
            lo, hi = m["round_robin"]
            m = list(range(int(lo), int(hi) + 1))
        elif isinstance(m, int):
            m = [m]
        return ladder.DenominatorFamily.number_op(alpha.a, m)
    if kind == "two_n_plus_one":
        return ladder.DenominatorFamily.two_n_plus_one()
    if kind == "custom":
        return ladder.DenominatorFamily.custom([_operator(f, pres) for f in node.get("factors", [])])
    raise _located(ValueError(f"unknown family kind {kind!r}"), kind)


def _bases(doc, k_max: int):
    mode = doc.get("basis_mode", "dense")
    if mode in ("dense", "polytope"):
        return str(mode)
    if mode != "explicit":
        raise _located(ValueError(f"unknown basis_mode {mode!r}"), mode)
    if "basis_rule" in doc:
        rule = doc["basis_rule"]
        x, xy = int(rule.get("x", 0)), int(rule.get("xy", -1))
        return [
            BasisSpec.from_exponents([(a, 0) for a in range(k + x + 1)] + [(a, 1) for a in range(k + xy + 1)])
            for k in range(k_max + 1)
        ]
    bases = doc.get("bases")
    if not isinstance(bases, list) or len(bases) < k_max + 1:
        raise ProblemError(f"explicit mode needs 'basis_rule' or {k_max + 1} entries in 'bases'")
    try:
        return [BasisSpec.from_exponents([tuple(p) for p in b]) for b in bases]
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"bad explicit basis: {exc}") from exc


def _grading(node) -> Optional[gram.Grading]:
    if node is None:
        return None
    if node == "ladder_z4":
        return gram.Grading.ladder_z4()
    if isinstance(node, dict):
        return gram.Grading(int(node["order"]), tuple(node["left"]), tuple(node["right"]))
    raise _located(ValueError(f"unknown grading {node!r}"), node)


def load_problem(text: str) -> ProblemFile:
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ProblemError(str(getattr(exc, "problem", exc)), mark.line + 1, mark.column + 1) from exc
        raise ProblemError(str(exc)) from exc
    if not isinstance(doc, dict):
        raise ProblemError("problem file must be a mapping")
    if ("operator" in doc) == ("radial" in doc):
        raise ProblemError("give exactly one of 'operator' and 'radial'")
    pres = _presentation(doc)
    k_max = int(doc.get("k_max", 0))
    if k_max < 0:
        raise ProblemError("k_max must be >= 0")
    solver = doc.get("solver", {}) or {}
    opts = ladder.LadderOptions(
        feas_tol=float(solver.get("feas_tol", 1e-9)),
        gap_tol=float(solver.get("gap_tol", 1e-9)),
        max_iter=int(solver.get("max_iter", 100)),
        solver=str(solver.get("backend", "embedded")),
        stop_on_trouble=bool(solver.get("stop_on_trouble", False)),
        prune=bool(solver.get("prune", True)),
    )
    ref = doc.get("reference")
    pf = ProblemFile(pres, k_max=k_max, options=opts, reference=None if ref is None else float(ref))
    if "radial" in doc:
        r = doc["radial"]
        pot = r.get("potential", "0")
        try:
            V = radial.LaurentPotential.parse(str(pot))
        except (radial.PotentialParseError, ValueError, ZeroDivisionError) as exc:
            raise _located(exc, pot) from exc
        m = r.get("m")
        try:
            pf.radial = radial.build_radial(V, int(r.get("dimension", 1)), None if m is None else int(m))
        except ValueError as exc:
            raise ProblemError(str(exc)) from exc
        return pf
    pf.operator = _operator(doc["operator"], pres)
    if pf.operator.star() != pf.operator:
        raise ProblemError("operator is not hermitian")
    pf.family = _family(doc.get("family"), pres)
    pf.basis_mode = _bases(doc, k_max)
    pf.grading = _grading(doc.get("grading"))
    return pf


# -- output helpers ----------------------------------------------------------------


def _round(obj):
    """Floats to 12 significant digits; NaN and infinities become strings."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    return obj


def _emit(payload: dict, args) -> None:
    text = json.dumps(_round(payload), indent=2, sort_keys=False)
    print(text)
    if getattr(args, "json", None):
        with open(args.json, "w") as fh:
            fh.write(text + "\n")


def _apply_flags(pf: ProblemFile, args) -> None:
    o = pf.options
    if getattr(args, "tol", None) is not None:
        o.feas_tol = o.gap_tol = args.tol
    if getattr(args, "max_iter", None) is not None:
        o.max_iter = args.max_iter
    if getattr(args, "solver", None):
        o.solver = args.solver


def _symbol(pf: ProblemFile, seed: int) -> Optional[str]:
    c = pf.operator
    if c is None or c.presentation.kind != POSITION_MOMENTUM:
        return None
    return str(symbol_positivity_sample(c, samples=2000, seed=seed).passed)


def _read_problem(path: str) -> ProblemFile:
    with open(path) as fh:
        return load_problem(fh.read())


# -- commands ----------------------------------------------------------------------


def cmd_bound(args) -> int:
    pf = _read_problem(args.file)
    _apply_flags(pf, args)
    p = pf.gram_problem(args.k)
    n_k, m_k = p.n_basis, p.n_words
    if pf.options.prune:
        p, _ = gram.prune_forced_zero(p)
    try:
        mu, status, info, Z = ladder.solve_gram(p, pf.options)
    except gram.InconsistentSystem as exc:
        _emit({"k": args.k, "mu": None, "status": "Infeasible", "n_k": n_k, "m_k": m_k, "message": str(exc)}, args)
        return EXIT_SOLVER
    out = {
        "k": args.k,
        "mu": mu,
        "status": status,
        "n_k": n_k,
        "m_k": m_k,
        "gap": info["gap"],
        "residual": info["residual"],
        "min_eigenvalue": info["min_eigenvalue"],
        "block_sizes": p.block_sizes,
    }
    _emit(out, args)
    if args.dump:
        dump = {
            "k": args.k,
            "mu": mu,
            "prune": pf.options.prune,
            "Z": [{"re": z.real.tolist(), "im": z.imag.tolist()} for z in Z],
        }
        with open(args.dump, "w") as fh:
            json.dump(dump, fh)
    return EXIT_OK if status == sdp.Status.OPTIMAL.value else EXIT_SOLVER


def _ladder_like(args, require_radial: bool) -> int:
    pf = _read_problem(args.file)
    if require_radial and pf.radial is None:
        raise ProblemError("the radial command needs a 'radial' section")
    _apply_flags(pf, args)
    if getattr(args, "k", None) is not None:
        pf.k_max = args.k
        if not isinstance(pf.basis_mode, str) and len(pf.basis_mode) < args.k + 1:
            raise ProblemError(f"explicit bases cover only k <= {len(pf.basis_mode) - 1}")
    res = pf.run()
    payload = {
        "mus": res.mus,
        "chosen": res.chosen,
        "best": res.best,
        "estimate": "Unknown" if res.estimate is None else res.estimate,
        "n_k": res.n_k,
        "m_k": res.m_k,
        "steps": [dict(s.__dict__) for s in res.steps],
    }
    if pf.radial is not None:
        payload["m"] = pf.radial.m
        payload["notes"] = pf.radial.notes
    else:
        payload["symbol_check"] = _symbol(pf, args.seed)
    _emit(payload, args)
    if args.csv:
        ref = pf.reference if args.reference is None else args.reference
        if ref is None:
            raise ProblemError("--csv needs a reference value (file 'reference' or --reference)")
        with open(args.csv, "w") as fh:
            fh.write(ladder.series_csv(res, ref))
    return EXIT_OK if res.chosen is not None else EXIT_SOLVER


def cmd_ladder(args) -> int:
    return _ladder_like(args, False)


def cmd_radial(args) -> int:
    return _ladder_like(args, True)


def cmd_export(args) -> int:
    pf = _read_problem(args.file)
    text = sdp.export_sdpa(pf.sdp_problem(args.k))
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_certify(args) -> int:
    pf = _read_problem(args.file)
    with open(args.solution) as fh:
        try:
            sol = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemError(f"solution file: {exc.msg}", exc.lineno, exc.colno) from exc
    k = int(sol.get("k", args.k or 0))
    p = pf.gram_problem(k)
    if sol.get("prune", pf.options.prune):
        p, _ = gram.prune_forced_zero(p)
    Z = [np.array(z["re"], dtype=float) + 1j * np.array(z["im"], dtype=float) for z in sol["Z"]]
    try:
        rep = gram.certify(p, Z, float(sol["mu"]))
    except gram.ShapeMismatch as exc:
        raise ProblemError(str(exc)) from exc
    ok = rep.residual <= CERT_RESIDUAL_TOL and rep.min_eigenvalue >= -CERT_EIG_TOL
    _emit(
        {
            "k": k,
            "mu": float(sol["mu"]),
            "residual": rep.residual,
            "min_eigenvalue": rep.min_eigenvalue,
            "min_eigenvalues": rep.min_eigenvalues,
            "certified": ok,
        },
        args,
    )
    return EXIT_OK if ok else EXIT_CERTIFY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weylsos", description="Lower bounds for Weyl-algebra operators via SOS ladders.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_k=True, k_default=None):
        p.add_argument("file", help="YAML problem file")
        if with_k:
            p.add_argument("--k", type=int, default=k_default)
        p.add_argument("--json", metavar="PATH", help="also write the JSON report to PATH")
        p.add_argument("--solver", help="embedded or external:<command with {input} {output}>")
        p.add_argument("--tol", type=float, help="feasibility and gap tolerance")
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--seed", type=int, default=0, help="seed for symbol sampling")

    p = sub.add_parser("bound", help="solve one level k")
    common(p, k_default=0)
    p.add_argument("--dump", metavar="PATH", help="write mu and Gram blocks as JSON")
    p.set_defaults(func=cmd_bound)

    for name, fn in (("ladder", cmd_ladder), ("radial", cmd_radial)):
        p = sub.add_parser(name, help=f"run the {name} sequence up to k_max (or --k)")
        common(p)
        p.add_argument("--csv", metavar="PATH", help="write k,mu,log10_rel_err")
        p.add_argument("--reference", type=float)
        p.set_defaults(func=fn)

    p = sub.add_parser("export", help="write the SDPA file for level k")
    p.add_argument("file")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("certify", help="check a dumped solution against the problem")
    common(p)
    p.add_argument("solution")
    p.set_defaults(func=cmd_certify)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        import logging

        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (ProblemError, ParseError, radial.PotentialParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (sdp.BackendUnavailable, sdp.ParseFailure) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (gram.GramError, ladder.LadderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
