"""Command line entry point ``bsd-lab``.

Exit codes: 0 when every check passes, 2 on a property violation (or a
failed check), 3 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import catalog, frames, moduli, vmrt
from .domains import parse_spec
from .errors import BSDError, InputError, PropertyViolation, StageError
from .report import exit_code, run_report, write_atomic

EXIT_OK, EXIT_PROPERTY, EXIT_INPUT = 0, 2, 3


def _kind_rank(text):
    """'III:3' -> ('III', 3); the number is the rank of the domain."""
    try:
        kind, q = text.split(":")
        q = int(q)
    except ValueError:
        raise InputError(f"expected KIND:RANK, got {text!r}") from None
    if kind not in ("I", "II", "III"):
        raise InputError(f"unknown domain type {kind!r}")
    return kind, q


def cmd_report(args):
    try:
        rep = run_report(args.config, args.out, seed=args.seed)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    with open(f"{args.out}/summary.txt") as fh:
        sys.stdout.write(fh.read())
    return EXIT_OK if rep["passed"] else EXIT_PROPERTY


def cmd_catalog(args):
    for e in catalog.CATALOG.values():
        flag = "reserved" if e.builder is None else ("proper" if e.proper else "not proper")
        print(f"{e.name:45s} {flag:10s} {e.description}")
    return EXIT_OK


def cmd_rankgap(args):
    from .rigidity import rank_gap_analysis

    sk, q = _kind_rank(args.src)
    tk, qp = _kind_rank(args.tgt)
    rep = rank_gap_analysis(sk, q, tk, qp)
    print(json.dumps(rep, indent=2, default=str))
    return EXIT_OK


def cmd_moduli_sample(args):
    spec = parse_spec(args.domain)
    rng = np.random.default_rng(args.seed)
    out = []
    for lv in moduli.valid_levels(spec):
        for _ in range(args.count):
            out.append(moduli.random_flag(spec, lv, rng).to_json())
    print(json.dumps({"domain": spec.to_json(), "seed": args.seed, "flags": out}, indent=1))
    return EXIT_OK


def cmd_frames_selftest(args):
    rng = np.random.default_rng(args.seed)
    g, p, q, ell = args.group, args.p, args.q, args.ell
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["trial", "frame_relations", "maurer_cartan_symmetry", "structure_equation"])
    worst = [0.0, 0.0, 0.0]
    for j in range(args.trials):
        F = frames.random_frame(g, p, q, ell, rng)
        A = frames.random_algebra_element(g, p, q, rng, norm=1.0)
        B = frames.random_algebra_element(g, p, q, rng, norm=1.0)
        rel = max(frames.frame_residuals(F.matrix, g, p, q, ell).values())
        path = frames.FramePath.one_parameter(F.matrix, A)
        sym = frames.maurer_cartan(path, 0.3, g, p, q, ell).symmetry_residual()
        fam = frames.FrameFamily.exponential(F.matrix, A, B)
        st = frames.structure_residual(fam, 0.2, -0.1, h=1e-4)
        row = [rel, sym, st]
        worst = [max(a, b) for a, b in zip(worst, row)]
        w.writerow([j] + [f"{x:.3e}" for x in row])
    w.writerow(["max"] + [f"{x:.3e}" for x in worst])
    ok = worst[0] < 1e-10 and worst[1] < 1e-10 and worst[2] < 1e-6
    return EXIT_OK if ok else EXIT_PROPERTY


def cmd_vmrt_classify(args):
    rng = np.random.default_rng(args.seed)
    n, q = args.n, args.q
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["sample", "kind_drawn", "classification", "oracle", "zeta_surjective"])
    kinds = (vmrt.OPEN, vmrt.SPECIAL, vmrt.NOT_IN)
    disagree = 0
    for j in range(args.samples):
        t = vmrt.random_vmrt_tangent(n, q, rng, kinds[j % 3])
        c = vmrt.sgr_vmrt_member(n, q, t)
        o = vmrt.oracle_classify(n, q, t)
        surj = vmrt.second_fundamental_surjective(n, q, t) if c != vmrt.NOT_IN else ""
        disagree += c != o
        w.writerow([j, kinds[j % 3], c, o, surj])
    return EXIT_OK if disagree == 0 else EXIT_PROPERTY


def cmd_modulimap_run(args):
    from .modulimap import f_sharp, generic_flag, respects_check, sharp_oracle
    from .polys import PolyMatrixMap

    f = PolyMatrixMap.load(args.map)
    rng = np.random.default_rng(args.seed)
    flags = []
    worst = 0.0
    for _ in range(args.samples):
        sigma, Z0 = generic_flag(f.source, args.r, rng)
        res = f_sharp(f, args.r, sigma, rng, base=Z0)
        oracle = sharp_oracle(f, sigma, rng, base=Z0)
        gap = res.flag.distance(oracle)
        worst = max(worst, gap)
        flags.append({"source": sigma.to_json(), "image": res.flag.to_json(), "index": res.index,
                      "k0": res.k0, "oracle_gap": gap})
    checks = respects_check(f, args.r, 3, rng)
    out = {"schema": 1, "map": f.name, "level": str(args.r), "seed": args.seed,
           "oracle_max_gap": worst, "flags": flags, "respects": checks}
    write_atomic(args.report, json.dumps(out, indent=1, default=str) + "\n")
    print(f"level {args.r}: {len(flags)} flags, oracle gap {worst:.2e}, respects {checks['all_passed']}")
    return EXIT_OK if worst < 1e-8 and checks["all_passed"] else EXIT_PROPERTY


def build_parser():
    ap = argparse.ArgumentParser(prog="bsd-lab", description="Proper maps between bounded symmetric domains")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("report", help="run the full pipeline on one map")
    p.add_argument("--config", required=True, help="JSON config naming a catalog map or a map file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("catalog", help="catalog maps")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("rankgap", help="index-sequence arithmetic for a pair of domain types")
    p.add_argument("--src", required=True, help="source KIND:RANK, e.g. III:3")
    p.add_argument("--tgt", required=True, help="target KIND:RANK, e.g. I:4")
    p.set_defaults(func=cmd_rankgap)

    p = sub.add_parser("moduli", help="flag samples")
    p.add_argument("action", choices=["sample"])
    p.add_argument("--domain", default="I:3,2", help="e.g. I:3,2 or II:5 or III:3")
    p.add_argument("--count", type=int, default=1, help="flags per level")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_moduli_sample)

    p = sub.add_parser("frames", help="frame self-test")
    p.add_argument("action", choices=["selftest"])
    p.add_argument("--group", choices=list(frames.GROUPS), default="su")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_frames_selftest)

    p = sub.add_parser("vmrt", help="minimal rational tangent classifier")
    p.add_argument("action", choices=["classify"])
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--samples", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_vmrt_classify)

    p = sub.add_parser("modulimap", help="moduli map of a polynomial map file")
    p.add_argument("action", choices=["run"])
    p.add_argument("--map", required=True, help="map JSON file")
    p.add_argument("--r", type=int, required=True, help="level")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True, help="output JSON path")
    p.set_defaults(func=cmd_modulimap_run)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PropertyViolation as exc:
        print(f"property violation: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except (InputError, BSDError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
