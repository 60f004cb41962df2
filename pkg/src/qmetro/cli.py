"""Command line front end: ``qmetro analyze | construct | verify | example``.

Exit codes: 0 success, 2 schema error, 3 numerical-invariant failure,
4 no saturating measurement (construct without ``--allow-incomplete``),
5 incomplete POVM (verify). Reports are JSON on stdout or ``--output``;
diagnostics go to stderr.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .construct import construct_optimal_measurement
from .errors import IncompletePovm, NumericalInvariantError, QmetroError, SchemaError
from .geometry import analyze_subspaces, dimension_bound_verdict, sufficiency_threshold
from .hollowization import build_wm_family, check_pcc, check_povm, outcome_residual, pcc_violation
from .io import (
    dumps,
    load_json,
    model_from_dict,
    povm_from_dict,
    povm_to_dict,
    quasipure_to_dict,
)
from .model import born_probabilities, cfim, qfim, solve_slds, spectral_decompose
from .quasipure import paper_two_qubit_example
from .tolerances import Tolerances

log = logging.getLogger("qmetro")

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC, EXIT_INFEASIBLE, EXIT_INCOMPLETE = 0, 2, 3, 4, 5

EXAMPLES = ("two-qubit",)


class _Exit(Exception):
    def __init__(self, code, report=None):
        self.code = code
        self.report = report


def _tolerances(args, model_obj):
    tol = Tolerances()
    if isinstance(model_obj, dict) and "tolerances" in model_obj:
        tol = Tolerances.from_dict({**tol.to_dict(), **model_obj["tolerances"]})
    if args.tolerances:
        obj = load_json(args.tolerances)
        if isinstance(obj, dict) and "tolerances" in obj:
            obj = obj["tolerances"]
        tol = Tolerances.from_dict({**tol.to_dict(), **obj})
    return tol.updated(tol_rank=args.tol_rank, tol_sat=args.tol_sat)


def _analysis(model, tol):
    spec = spectral_decompose(model.rho, tol=tol)
    slds = solve_slds(model, spec, tol)
    F_Q, singular = qfim(spec, slds, return_singular=True, tol=tol)
    fam = build_wm_family(spec, slds, tol)
    pcc = check_pcc(spec, slds, fam=fam, tol_obj=tol)
    pair = analyze_subspaces(fam, model.dim, tol)
    d = model.dim
    thr = sufficiency_threshold(d) if d >= 3 else None
    bound_ok = dimension_bound_verdict(pair.n, d)
    notes = []
    if np.max(np.abs(F_Q), initial=0.0) <= tol.tol_singular:
        notes.append("QFIM vanishes: every measurement is trivially saturating")
    if not pcc:
        notes.append("PCC fails: not saturable (necessary condition)")
    if not bound_ok:
        notes.append("n < d - 1: not saturable (dimension bound)")
    if pcc and thr is not None and pair.n >= thr:
        notes.append("n above the sufficiency threshold: saturable")
    report = {
        "model": {"d": d, "s": model.num_params, "r": spec.rank, "degenerate_spectrum": spec.degenerate},
        "qfim": F_Q,
        "qfim_singular": singular,
        "pcc": {"holds": pcc, "violation": pcc_violation(spec, slds)},
        "geometry": {
            "dim_V": pair.dim_V,
            "n": pair.n,
            "d_minus_1": d - 1,
            "dimension_bound_ok": bound_ok,
            "sufficiency_threshold": thr,
            "above_threshold": None if thr is None else pair.n >= thr,
        },
        "notes": notes,
    }
    return report, (spec, slds, fam, F_Q)


def _header(args, tol, command):
    return {"tool": "qmetro", "version": __version__, "command": command, "seed": args.seed,
            "tolerances": tol.to_dict()}


def _residual_table(model, povm, fam, tol):
    born = born_probabilities(model, povm, tol)
    return [
        {"outcome": k, "probability": float(born.probs[k]), "null": bool(born.null[k]),
         "residual": outcome_residual(v, fam)}
        for k, v in enumerate(povm.vectors)
    ]


def cmd_analyze(args):
    obj = load_json(args.model)
    tol = _tolerances(args, obj)
    model, _ = model_from_dict(obj, tol)
    report, _ = _analysis(model, tol)
    return {**_header(args, tol, "analyze"), **report}, EXIT_OK


def cmd_construct(args):
    obj = load_json(args.model)
    tol = _tolerances(args, obj)
    model, _ = model_from_dict(obj, tol)
    report, (spec, slds, fam, F_Q) = _analysis(model, tol)
    res = construct_optimal_measurement(
        model, seed=args.seed, max_restarts=args.max_restarts, pool_size=args.pool_size,
        allow_incomplete=args.allow_incomplete, tol=tol,
    )
    c = {"feasible": res.feasible, "method": res.method, "reason": res.reason,
         "searched": res.searched, "failed_stage": res.failed_stage}
    if res.povm is not None:
        c["povm"] = povm_to_dict(res.povm)
        c["certificate"] = res.certificate.to_dict()
        c["cfim"] = res.cfim
        c["qfim"] = res.qfim
        c["max_gap"] = res.fisher_gap
        c["outcomes"] = _residual_table(model, res.povm, fam, tol)
    if not res.feasible and args.allow_incomplete and res.partial_vectors:
        c["partial"] = {"is_povm": False,
                        "vectors": [np.asarray(v) for v in res.partial_vectors],
                        "residuals": [outcome_residual(v, fam) for v in res.partial_vectors]}
    out = {**_header(args, tol, "construct"), **report, "construction": c}
    code = EXIT_OK if res.feasible or args.allow_incomplete else EXIT_INFEASIBLE
    return out, code


def cmd_verify(args):
    obj = load_json(args.model)
    tol = _tolerances(args, obj)
    model, _ = model_from_dict(obj, tol)
    povm = povm_from_dict(load_json(args.povm), model.dim)
    report, (spec, slds, fam, F_Q) = _analysis(model, tol)
    try:
        cert = check_povm(povm, fam, pcc_holds=report["pcc"]["holds"])
        F_C, _ = cfim(model, povm, tol)
    except IncompletePovm as exc:
        raise _Exit(EXIT_INCOMPLETE, {"error": "IncompletePovm", "message": str(exc),
                                      "completeness_residual": povm.completeness_residual()})
    out = {
        **_header(args, tol, "verify"),
        **report,
        "certificate": cert.to_dict(),
        "cfim": F_C,
        "qfim": F_Q,
        "max_gap": float(np.max(np.abs(F_C - F_Q))),
        "outcomes": _residual_table(model, povm, fam, tol),
    }
    return out, EXIT_OK


def cmd_example(args):
    if args.name not in EXAMPLES:
        raise SchemaError(f"unknown example '{args.name}' (known: {', '.join(EXAMPLES)})")
    tol = _tolerances(args, None)
    model, povm, rep = paper_two_qubit_example(args.q, args.theta, args.generator_order, tol)
    outdir = args.output or "."
    os.makedirs(outdir, exist_ok=True)
    paths = {"model": os.path.join(outdir, "two_qubit_model.json"),
             "povm": os.path.join(outdir, "two_qubit_povm.json")}
    _write(paths["model"], dumps(quasipure_to_dict(rep["quasipure"])))
    _write(paths["povm"], dumps(povm_to_dict(povm)))
    out = {**_header(args, tol, "example"), "name": args.name, "q": args.q, "theta": args.theta,
           "generator_order": args.generator_order, "files": paths,
           "qfim": rep["qfim"], "cfim": rep["cfim"], "max_gap": rep["gap"],
           "certificate": rep["certificate"].to_dict()}
    return out, EXIT_OK


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=float, default=None, help="relative rank cutoff")
    common.add_argument("--tol-sat", type=float, default=None, help="relative saturation tolerance")
    common.add_argument("--tolerances", default=None,
                        help="JSON file with a tolerance set (a previous report works too)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", "-o", default=None,
                        help="report path (directory for 'example')")
    common.add_argument("--quiet", "-q", action="store_true")

    p = argparse.ArgumentParser(prog="qmetro", description="QCRB saturation analysis and measurement synthesis")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="QFIM, PCC and subspace dimensions")
    a.add_argument("model")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("construct", parents=[common], help="search for a saturating POVM")
    c.add_argument("model")
    c.add_argument("--max-restarts", type=int, default=64)
    c.add_argument("--pool-size", type=int, default=None)
    c.add_argument("--allow-incomplete", action="store_true")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", parents=[common], help="certify a given POVM")
    v.add_argument("model")
    v.add_argument("povm")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("example", parents=[common], help="write example model and POVM files")
    e.add_argument("name")
    e.add_argument("--q", type=float, default=0.5)
    e.add_argument("--theta", type=float, default=float(np.pi / 2))
    e.add_argument("--generator-order", default="xx-zz", choices=["xx-zz", "zz-xx"])
    e.set_defaults(func=cmd_example)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="qmetro: %(levelname)s: %(message)s")
    try:
        report, code = args.func(args)
    except _Exit as ex:
        report, code = ex.report, ex.code
    except SchemaError as exc:
        print(f"qmetro: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except IncompletePovm as exc:
        print(f"qmetro: incomplete POVM: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (NumericalInvariantError, QmetroError) as exc:
        print(f"qmetro: numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"qmetro: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    text = dumps(report)
    if args.output and args.func is not cmd_example:
        _write(args.output, text)
    elif not args.quiet or args.func is cmd_example:
        sys.stdout.write(text)
    if code == EXIT_INFEASIBLE and not args.quiet:
        print("qmetro: no saturating measurement found", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
