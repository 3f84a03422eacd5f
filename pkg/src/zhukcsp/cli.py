"""Command line front end: solve, oracle, analyze, xy, gen, fuzz."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .algebra import DEFAULT_CAP
from .congruence import congruence_reports
from .csp import dump_instance, parse_instance, resolve_algebra
from .errors import CapExceeded, InputError, InternalDiagnostic, ZhukError
from .harness import GenParams, brute_force, fuzz_compare, gen_instance
from .solver import Solver, extract_solution
from .subuniverse import enumerate_subuniverses, is_binary_absorbing, is_central, is_ternary_absorbing
from .xy import derive_xy

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_CAP, EXIT_INTERNAL = 0, 1, 2, 3, 4


def _read_instance(path: str):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_instance(text, base=p.parent)


def _algebra(ref: str):
    return resolve_algebra(ref, Path.cwd())


def cmd_solve(args) -> int:
    inst = _read_instance(args.instance)
    trace = (lambda line: print(line, flush=True)) if args.trace else None
    solver = Solver(trace=trace)
    if args.assign:
        sol = extract_solution(inst, solver)
        print("satisfiable" if sol is not None else "unsatisfiable")
        for name, v in zip(inst.names, sol or []):
            print(f"{name}={v}")
    else:
        print("satisfiable" if solver.solve(inst) else "unsatisfiable")
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _read_instance(args.instance)
    if args.count:
        print(brute_force(inst, "count", cap=args.cap_product))
        return EXIT_OK
    sol = brute_force(inst, "first", cap=args.cap_product)
    print("satisfiable" if sol is not None else "unsatisfiable")
    if args.assign and sol is not None:
        for name, v in zip(inst.names, sol):
            print(f"{name}={v}")
    return EXIT_OK


def _fmt(subset) -> str:
    return "{" + ",".join(map(str, subset)) + "}"


def _relation_str(m) -> str:
    return " ".join(f"{a}{b}" for a in range(m.shape[0]) for b in range(m.shape[1]) if m[a, b])


def cmd_analyze(args) -> int:
    alg = _algebra(args.algebra)
    flags = [name for name, ok in (("idempotent", alg.is_idempotent), ("wnu", alg.is_wnu),
                                   ("special", alg.is_special)) if ok]
    print(f"algebra size={alg.size} arity={alg.arity} flags={','.join(flags) or '-'}")
    for b in enumerate_subuniverses(alg):
        if len(b) == alg.size:
            continue
        tags = []
        ba = is_binary_absorbing(alg, b, cap=args.cap_tuples)
        central = is_central(alg, b, cap=args.cap_tuples)
        if ba:
            tags.append("BA")
        if central:
            tags.append("C")
        if is_ternary_absorbing(alg, b, cap=args.cap_tuples):
            tags.append("TERN-ABS")
        if ba and central:
            tags.append("S")
        line = f"subuniverse {_fmt(b)} {' '.join(tags) or '-'}"
        if ba and ba.witness is not None:
            line += f" witness={ba.witness}"
        print(line)
    for rep in congruence_reports(alg):
        line = f"congruence {rep.sigma} irreducible={'yes' if rep.irreducible else 'no'}"
        if rep.irreducible:
            c = rep.classification
            line += f" cover=[{_relation_str(rep.cover)}]"
            line += f" Linear(p={c.p})" if c.kind == "Linear" else " PC"
            if c.kind == "Linear" and c.bridge is not None:
                line += " bridge=" + ";".join("".join(map(str, q)) for q in c.bridge.tolist())
        print(line)
    return EXIT_OK


def cmd_xy(args) -> int:
    alg = _algebra(args.algebra)
    res = derive_xy(alg, args.arity, cap=args.cap_tuples)
    print(f"size {alg.size}")
    print(f"arity {res.n}")
    print("table " + " ".join(map(str, res.table.tolist())))
    if args.term_out:
        Path(args.term_out).write_text(str(res.term) + "\n")
    return EXIT_OK


def _params(args) -> GenParams:
    return GenParams(args.algebra, n_vars=args.vars, n_constraints=args.constraints,
                     max_arity=args.max_arity, max_generators=args.generators, seed=args.seed,
                     planted=args.planted, vary=getattr(args, "vary", False))


def cmd_gen(args) -> int:
    text = dump_instance(gen_instance(_params(args), cap=args.cap_tuples))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_fuzz(args) -> int:
    report = fuzz_compare(_params(args), args.cases, workers=args.workers)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_MISMATCH


def _gen_options(p: argparse.ArgumentParser, seed: int) -> None:
    p.add_argument("--algebra", default="Z2", help="catalog name or .alg path")
    p.add_argument("--vars", type=int, default=4)
    p.add_argument("--constraints", type=int, default=3)
    p.add_argument("--max-arity", type=int, default=3)
    p.add_argument("--generators", type=int, default=3, help="max random generators per relation")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--planted", action="store_true", help="plant a solution in every relation")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zhukcsp", description=__doc__)
    ap.add_argument("--cap-tuples", type=int, default=DEFAULT_CAP,
                    help="limit on tuples in any closure (default %(default)s)")
    ap.add_argument("--cap-product", type=int, default=10**8,
                    help="limit on the brute-force search space (default %(default)s)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="decide an instance with the solver")
    p.add_argument("--instance", required=True)
    p.add_argument("--assign", action="store_true", help="also print a solution")
    p.add_argument("--trace", action="store_true", help="stream reduction and SolveLinear steps")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="decide or count by brute force")
    p.add_argument("--instance", required=True)
    p.add_argument("--count", action="store_true")
    p.add_argument("--assign", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("analyze", help="subuniverses and congruences of an algebra")
    p.add_argument("--algebra", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("xy", help="derive an XY-symmetric term operation")
    p.add_argument("--algebra", required=True)
    p.add_argument("--arity", type=int, default=None, help="odd arity (default: arity of w)")
    p.add_argument("--term-out", help="write the witness term here")
    p.set_defaults(func=cmd_xy)

    p = sub.add_parser("gen", help="generate a random invariant instance")
    _gen_options(p, 42)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fuzz", help="differential test against the brute-force oracle")
    _gen_options(p, 1)
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--vary", action="store_true", help="draw sizes per case up to the given maxima")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_fuzz)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except InternalDiagnostic as exc:
        ctx = " ".join(f"{k}={v}" for k, v in exc.context.items())
        print(f"internal diagnostic: {exc} {ctx}".rstrip(), file=sys.stderr)
        return EXIT_INTERNAL
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ZhukError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
