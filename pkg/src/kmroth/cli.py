"""`km`: one entry point over the whole toolkit with stable JSON output.

Every JSON result is a single canonical object carrying the schema version,
a digest of the inputs, the seed, and the constants record, so identical
invocations produce byte-identical bytes. Exit codes: 0 success, 1 failed
verification/assertion, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bohr import BohrSet, extract_ap, is_regular, regularity_status
from .constants import load_constants, save_ledger, ledger_values
from .fourier import spectrum_json
from .functions import mu_of_set
from .groups import GSet, count_3aps, dilate_set, make_group
from .pipelines import (
    BohrBudget,
    behrend,
    embed_interval,
    is_progression_free,
    roth_ffq_driver,
    roth_znz_driver,
    three_sumset_ap_pipeline,
)
from .serialize import SCHEMA_VERSION, canonical_dumps, digest, jsonable
from .steps import OracleBudgetExceeded, SiftExhausted, density_increment_step, sift
from .verify import SUITES, SuiteSpec, run_suite


def _load_json(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _load_gset(path: str) -> GSet:
    return GSet.from_json_obj(_load_json(path))


def _load_intset(path: str) -> tuple[list[int], int]:
    obj = _load_json(path)
    if "group" in obj:
        raise ValueError(f"{path} is a group-set file; an integer set was expected")
    return [int(v) for v in obj["elements"]], int(obj["n"])


def _emit(args, command: str, inputs, results: dict, seed: int, consts) -> str:
    envelope = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "inputs_digest": digest(inputs),
        "constants": consts.to_json_obj(),
        "results": jsonable(results),
    }
    return canonical_dumps(envelope)


def _render_human(results: dict, indent: int = 0):
    pad = "  " * indent
    if isinstance(results, dict):
        for k, v in results.items():
            if isinstance(v, (dict, list)) and v and not _is_flat(v):
                print(f"{pad}{k}:")
                _render_human(v, indent + 1)
            else:
                print(f"{pad}{k}: {v}")
    elif isinstance(results, list):
        for v in results:
            _render_human(v, indent)


def _is_flat(v) -> bool:
    if isinstance(v, list):
        return all(not isinstance(x, (dict, list)) for x in v)
    return False


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="km", description=__doc__)
    ap.add_argument("--threads", type=int, default=1,
                    help="worker parallelism cap (advisory)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count-aps", help="exact ordered (x, d) 3-AP count of a set")
    p.add_argument("--set", required=True)
    p.add_argument("--dump-spectrum", metavar="PATH",
                   help="also write the spectrum of mu_A as JSON rows (coords, re, im)")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("behrend", help="progression-free subset of {1..N}")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--strategy", choices=("ternary", "sphere"), default="sphere")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("bohr", help="Bohr set inspection")
    bsub = p.add_subparsers(dest="bohr_command", required=True)
    for name in ("info", "extract-ap"):
        bp = bsub.add_parser(name)
        bp.add_argument("--bohr", required=True)
        bp.add_argument("--json", action="store_true")

    p = sub.add_parser("increment", help="one density-increment step over F_q^n")
    p.add_argument("--set", required=True)
    p.add_argument("--cset", help="C set file (default 2.A)")
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--codim-max", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("sift", help="dependent-random-choice sifting")
    p.add_argument("--set", required=True)
    p.add_argument("--b1", help="B1 set file (default G)")
    p.add_argument("--b2", help="B2 set file (default G)")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("roth-ffq", help="density-increment loop over F_q^n")
    p.add_argument("--set", required=True)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--codim-max", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="write the full trace JSON here")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("roth-znz", help="Bohr-set increment loop over Z_M")
    p.add_argument("--set", required=True, help="integer-set file {n, elements}")
    p.add_argument("--n", type=int, help="interval bound (defaults to the file's n)")
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("three-sum", help="A+A+A long-AP pipeline")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--set", required=True, help="integer-set file {n, elements}")
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("verify", help="run a lemma-verification suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--calibrate", action="store_true")
    p.add_argument("--json", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    consts = load_constants()
    try:
        return _dispatch(args, consts)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"km: error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args, consts) -> int:
    out = sys.stdout

    if args.command == "count-aps":
        A = _load_gset(args.set)
        n = count_3aps(A)
        results = {"count": n, "group": A.group.spec_string(), "card": A.card,
                   "density": A.density}
        if args.dump_spectrum:
            Path(args.dump_spectrum).write_text(
                canonical_dumps(spectrum_json(mu_of_set(A))))
            results["spectrum_path"] = args.dump_spectrum
        if args.json:
            out.write(_emit(args, "count-aps", A.to_json_obj(), results, 0, consts))
        else:
            print(n)
        return 0

    if args.command == "behrend":
        if args.n < 1:
            print("km: error: --n must be >= 1", file=sys.stderr)
            return 2
        A = behrend(args.n, args.strategy, verify=args.verify)
        obj = {"n": args.n, "elements": sorted(A)}
        if args.out:
            Path(args.out).write_text(canonical_dumps(obj))
        results = {"n": args.n, "strategy": args.strategy, "size": len(A),
                   "verified_ap_free": bool(args.verify)}
        if args.json:
            out.write(_emit(args, "behrend", obj, results, 0, consts))
        else:
            _render_human(results)
        return 0

    if args.command == "bohr":
        B = BohrSet.from_json_obj(_load_json(args.bohr))
        ok, margin = is_regular(B, consts.reg_const)
        info = {"group": B.group.spec_string(), "size": B.size, "rank": B.rank,
                "regularity": regularity_status(B, consts.reg_const),
                "margin": margin}
        if args.bohr_command == "extract-ap":
            run = extract_ap(B)
            info["ap"] = run.to_json_obj()
        if args.json:
            out.write(_emit(args, f"bohr-{args.bohr_command}", B.to_json_obj(),
                            info, 0, consts))
        else:
            _render_human(info)
        return 0

    if args.command == "increment":
        A = _load_gset(args.set)
        C = _load_gset(args.cset) if args.cset else dilate_set(A, 2)
        try:
            res = density_increment_step(A, C, args.eps, args.codim_max, consts,
                                         seed=args.seed, trials=args.trials)
        except OracleBudgetExceeded as exc:
            results = {"outcome": "budget-exceeded", "stage": exc.stage,
                       "margins": jsonable(exc.margins)}
            code = 1
        else:
            results = {"outcome": res.variant, "inner": res.inner_value,
                       "alpha": res.alpha}
            if not res.near_uniform:
                results.update({
                    "subspace": res.subspace.to_json_obj(),
                    "translate": list(res.translate),
                    "new_density": res.new_density,
                    "p": res.p, "p_prime": res.p_prime,
                    "shifts": [list(s) for s in res.sift.shifts],
                })
            code = 0
        if args.json:
            out.write(_emit(args, "increment",
                            [A.to_json_obj(), C.to_json_obj(), args.eps],
                            results, args.seed, consts))
        else:
            _render_human(results)
        return code

    if args.command == "sift":
        A = _load_gset(args.set)
        B1 = _load_gset(args.b1) if args.b1 else GSet.full(A.group)
        B2 = _load_gset(args.b2) if args.b2 else GSet.full(A.group)
        try:
            res = sift(A, B1, B2, args.p, args.eps, args.delta,
                       trials=args.trials, seed=args.seed, consts=consts)
        except SiftExhausted as exc:
            results = {"outcome": "sift-exhausted", "best": jsonable(exc.best)}
            code = 1
        else:
            results = {
                "outcome": "ok",
                "shifts": [list(s) for s in res.shifts],
                "p_raised": res.p_used,
                "inner_on_S": res.inner_on_S,
                "densities": list(res.densities),
                "a1": res.a1.to_json_obj(),
                "a2": res.a2.to_json_obj(),
                "S_card": res.S.card,
                "mode": res.mode,
            }
            code = 0
        if args.json:
            out.write(_emit(args, "sift",
                            [A.to_json_obj(), args.p, args.eps, args.delta],
                            results, args.seed, consts))
        else:
            _render_human(results)
        return code

    if args.command == "roth-ffq":
        A = _load_gset(args.set)
        trace = roth_ffq_driver(A, args.eps, args.codim_max, consts, seed=args.seed)
        if args.trace:
            Path(args.trace).write_text(canonical_dumps(trace.to_json_obj()))
        results = trace.to_json_obj()
        if args.json:
            out.write(_emit(args, "roth-ffq", [A.to_json_obj(), args.eps],
                            results, args.seed, consts))
        else:
            _render_human({"terminal": results["terminal"],
                           "steps": len(results["steps"])})
        return 0

    if args.command == "roth-znz":
        elements, n_file = _load_intset(args.set)
        N = args.n or n_file
        trace = roth_znz_driver(elements, N, args.eps, k=args.k,
                                consts=consts, seed=args.seed)
        if args.trace:
            Path(args.trace).write_text(canonical_dumps(trace.to_json_obj()))
        results = trace.to_json_obj()
        if args.json:
            out.write(_emit(args, "roth-znz", [elements, N, args.eps, args.k],
                            results, args.seed, consts))
        else:
            _render_human({"terminal": results["terminal"],
                           "steps": len(results["steps"])})
        return 0

    if args.command == "three-sum":
        elements, n_file = _load_intset(args.set)
        N = args.n or n_file
        rep = three_sumset_ap_pipeline(elements, N, args.eps,
                                       consts=consts, seed=args.seed)
        results = rep.to_json_obj()
        if args.json:
            out.write(_emit(args, "three-sum", [elements, N, args.eps],
                            results, args.seed, consts))
        else:
            _render_human({"stage": rep.stage, "verified": rep.verified,
                           "run": results["run"]})
        return 0 if rep.verified else 1

    if args.command == "verify":
        spec = SuiteSpec(args.suite, instances=args.instances, seed=args.seed,
                         exhaustive=args.exhaustive, calibrate=args.calibrate)
        rep = run_suite(spec, consts)
        if args.calibrate and rep.proposals:
            current = ledger_values()
            current.update(rep.proposals)
            save_ledger(current, {"suite": args.suite, "seed": args.seed,
                                  "instances": rep.instances_run})
        if args.json:
            out.write(_emit(args, "verify", spec.to_json_obj(),
                            rep.to_json_obj(), args.seed, consts))
        else:
            _render_human({"suite": rep.suite_id, "instances": rep.instances_run,
                           "regenerated": rep.regenerated,
                           "failures": len(rep.failures),
                           "min_margin": rep.min_margin,
                           "empirical": rep.empirical_constants,
                           "proposals": rep.proposals,
                           "wall_time_s": round(rep.wall_time, 3)})
        return 0 if rep.passed else 1

    raise ValueError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
