"""Command line front end.

    setbdd solve model.txt [flags]
    setbdd bench golfers W G S | steiner T K N | hamming L D W [M] [flags]
    setbdd maxcode L D W [flags]

Exit status is 10 for SAT, 20 for UNSAT and 0 otherwise (2 for usage errors).
"""
import argparse
import json
import sys

from .models import (ModelError, check_solution, gen_hamming, gen_social_golfers,
                     gen_steiner, maximal_hamming)
from .parser import ParseError, parse_file
from .solver import SAT, UNSAT, Solver, SolverConfig, VARIANTS

EXIT_SAT = 10
EXIT_UNSAT = 20
EXIT_OTHER = 0
EXIT_USAGE = 2


def _config_flags(p):
    g = p.add_argument_group("solver configuration")
    g.add_argument("--variant", choices=list(VARIANTS),
                   help="named propagator variant; the flags below override it")
    g.add_argument("--search", choices=["vsids", "static"])
    g.add_argument("--reasons", choices=["lazy", "eager"])
    g.add_argument("--no-filter", dest="filter", action="store_false", default=None)
    g.add_argument("--no-memoize", dest="memoize", action="store_false", default=None,
                   help="also turns shortcutting off")
    g.add_argument("--no-shortcut", dest="shortcut", action="store_false", default=None)
    g.add_argument("--sparse", choices=["std", "mod"])
    g.add_argument("--matters", choices=["var", "literal"])
    g.add_argument("--tseitin", action="store_true", default=None,
                   help="solve a CNF encoding of the BDDs instead of propagating them")
    g.add_argument("--seed", type=int)
    g.add_argument("--timeout", type=float, help="seconds")
    g.add_argument("--stats-json", action="store_true",
                   help="print statistics as one JSON object instead of the stats line")
    g.add_argument("--emit-cnf", metavar="FILE", help="write the CNF in DIMACS (with --tseitin)")
    g.add_argument("--no-check", dest="check", action="store_false",
                   help="skip independent checking of solutions")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    _config_flags(common)
    p = argparse.ArgumentParser(prog="setbdd", description="BDD-based set constraint solver")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="solve a model file")
    s.add_argument("file")
    b = sub.add_parser("bench", help="solve a benchmark instance")
    bsub = b.add_subparsers(dest="family", required=True)
    bg = bsub.add_parser("golfers", parents=[common], help="social golfers: weeks groups size")
    for a in ("w", "g", "s"):
        bg.add_argument(a, type=int)
    bg.add_argument("--fix-prefix", action="store_true",
                    help="fix the first week and one group of the second")
    bs = bsub.add_parser("steiner", parents=[common], help="Steiner system S(t,k,N)")
    for a in ("t", "k", "n"):
        bs.add_argument(a, type=int)
    bs.add_argument("--dual", action="store_true", help="add point-degree views and branch on them first")
    bh = bsub.add_parser("hamming", parents=[common],
                         help="m codewords of length l, weight w, distance >= d")
    for a in ("l", "d", "w"):
        bh.add_argument(a, type=int)
    bh.add_argument("m", type=int, nargs="?",
                    help="number of codewords; without it search for the largest code")
    bh.add_argument("--fix-prefix", action="store_true")
    mc = sub.add_parser("maxcode", parents=[common], help="largest constant-weight code")
    for a in ("l", "d", "w"):
        mc.add_argument(a, type=int)
    return p


def make_config(args):
    base = dict(VARIANTS[args.variant]) if args.variant else {}
    for key in ("search", "reasons", "filter", "memoize", "shortcut", "sparse", "matters",
                "tseitin", "seed", "timeout"):
        val = getattr(args, key)
        if val is not None:
            base[key] = val
    if base.get("memoize") is False:
        base["shortcut"] = False
    return SolverConfig(**base)


def _format_set(elems):
    return "{" + ",".join(str(e) for e in sorted(elems)) + "}"


def _report(model, result, args, out):
    print(result.status, file=out)
    if result.status == SAT:
        for decl in model.setvars:
            print(f"{decl.name} = {_format_set(result.assignment[decl.name])}", file=out)
    if args.stats_json:
        print(json.dumps({"status": result.status, **result.stats.as_dict()}), file=out)
    else:
        print(result.stats.line(), file=out)


def _exit_code(status):
    return {SAT: EXIT_SAT, UNSAT: EXIT_UNSAT}.get(status, EXIT_OTHER)


def _model(args):
    if args.command == "solve":
        return parse_file(args.file)
    if args.family == "golfers":
        return gen_social_golfers(args.w, args.g, args.s, fix_prefix=args.fix_prefix)
    if args.family == "steiner":
        return gen_steiner(args.t, args.k, args.n, dual=args.dual)
    return gen_hamming(args.l, args.d, args.w, args.m, fix_prefix=args.fix_prefix)


def _solve(args, config, out, err):
    model = _model(args)
    solver = Solver(model, config)
    if args.emit_cnf:
        if not config.tseitin:
            print("error: --emit-cnf needs --tseitin", file=err)
            return EXIT_USAGE
        with open(args.emit_cnf, "w") as f:
            f.write(solver.dimacs())
    result = solver.solve()
    _report(model, result, args, out)
    if result.status == SAT and args.check:
        verdict = check_solution(model, result.assignment)
        if not verdict:
            print(f"error: solution fails the checker: {verdict.violation}", file=err)
            return 1
    return _exit_code(result.status)


def _maxcode(args, config, out):
    def step(m, result):
        print(f"m={m} {result.status} {result.stats.line()}", file=out)

    try:
        best = maximal_hamming(args.l, args.d, args.w, config, on_step=step)
    except TimeoutError as e:
        print(f"TIMEOUT {e}", file=out)
        return EXIT_OTHER
    print(f"max {best}", file=out)
    return EXIT_OTHER


def run(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0
    try:
        config = make_config(args)
        if args.command == "maxcode" or (args.command == "bench" and args.family == "hamming"
                                         and args.m is None):
            return _maxcode(args, config, out)
        return _solve(args, config, out, err)
    except ParseError as e:
        print(f"{args.file}:{e}", file=err)
        return EXIT_USAGE
    except (ModelError, ValueError, OSError) as e:
        print(f"error: {e}", file=err)
        return EXIT_USAGE


def main():
    sys.exit(run())
