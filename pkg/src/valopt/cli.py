"""Command line driver.

    valopt PROBLEM [--specs FILE] [--summary -|PATH|off] [--print PATH]
           [--print-structure] [--seed N] [--check-only]

Reads a problem file, probes and validates the derivative structure,
runs the solver, and reports.  The print file is deterministic: two
runs on the same inputs produce identical bytes.

Exit codes: 0 solved (optimal or feasible), 1 evaluation or derivative
failure, 2 usage or file errors, 3 infeasible, 4 iteration limit,
5 user abort.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from typing import Optional

import numpy as np

from .assemble import init_cache
from .check import DerivativeCheckError, verify_at_start
from .expr import EvalFault
from .files import parse_problem_file, parse_specs_file
from .parsing import ParseError
from .problem import (MAXIMIZE, Options, SpecError, finalize_spec)
from .solver import (EVAL_ERROR, FEASIBLE, INFEASIBLE, ITERATION_LIMIT,
                     OPTIMAL, USER_ABORT, solve)
from .structure import StructureProbeError, probe_structure

_EXIT_CODES = {
    OPTIMAL: 0,
    FEASIBLE: 0,
    EVAL_ERROR: 1,
    INFEASIBLE: 3,
    ITERATION_LIMIT: 4,
    USER_ABORT: 5,
}


def _read_file(path: str) -> str:
    try:
        with open(path, "r") as fh:
            return fh.read()
    except OSError:
        print(f"error while opening file {path}", file=sys.stderr)
        raise SystemExit(2)


def _structure_line(pattern) -> str:
    from .structure import EntryClass
    n_const = int(np.count_nonzero(pattern.classes == EntryClass.CONSTANT))
    n_nonlin = int(np.count_nonzero(pattern.classes == EntryClass.NONLINEAR))
    n_zero = pattern.neF * pattern.n - pattern.nnz
    return (f"structure nnz={pattern.nnz} constant={n_const} "
            f"nonlinear={n_nonlin} zero={n_zero}")


def _summary_text(spec, pattern, report, sol) -> str:
    sense = "feasibility" if spec.ObjRow == 0 else (
        "maximize" if spec.sense == MAXIMIZE else "minimize")
    lines = [
        f"problem   {spec.report_name()}",
        f"sense     {sense}" + (
            f"  (row {spec.ObjRow})" if spec.ObjRow else ""),
        f"size      {spec.n} variables, {spec.neF} rows",
        _structure_line(pattern),
    ]
    if report is not None:
        status = "passed" if report.passed else "FAILED"
        lines.append(f"check     max rel err {report.max_rel_error:.3e} "
                     f"({status}, {len(report.repairs)} repaired)")
    if sol is not None:
        lines.append(f"exit      {sol.exit}")
        lines.append(f"objective {float(sol.objective)!r}")
        lines.append(f"majors    {sol.majors}    evaluations {sol.evals}")
        names = spec.var_names or [f"x{j+1}" for j in range(spec.n)]
        for j, nm in enumerate(names):
            lines.append(f"  {nm} = {float(sol.x[j])!r}")
    return "\n".join(lines) + "\n"


def _print_file_text(spec, pattern, report, sol) -> str:
    """Full machine-stable report: structure, check, trace, solution."""
    out = ["==== begin problem report ===="]
    sense = "feasibility" if spec.ObjRow == 0 else (
        "maximize" if spec.sense == MAXIMIZE else "minimize")
    out.append(f"problem {spec.report_name()}")
    out.append(f"sense {sense} objrow {spec.ObjRow} "
               f"objadd {spec.ObjAdd:.16e}")
    out.append(f"size n {spec.n} nef {spec.neF}")
    out.append(_structure_line(pattern))
    for line in pattern.dump().splitlines():
        out.append("  " + line)
    if report is not None:
        out.append(f"check max-rel-err {report.max_rel_error:.16e} "
                   f"passed {int(report.passed)} "
                   f"repairs {len(report.repairs)}")
    if sol is not None:
        out.append("iterations")
        out.append(" major         merit_before          merit_after"
                   "       feas        opt       step    penalty")
        for r in sol.trace:
            out.append(f"{r.major:6d} {r.merit_before:20.12e} "
                       f"{r.merit_after:20.12e} {r.feas:10.3e} "
                       f"{r.opt:10.3e} {r.step:10.3e} {r.penalty:10.3e}")
        out.append(f"exit {sol.exit}")
        out.append(f"objective {sol.objective:.16e}")
        out.append(f"majors {sol.majors} evals {sol.evals}")
        for j in range(spec.n):
            out.append(f"x {j + 1} {sol.x[j]:.16e}")
        for i in range(spec.neF):
            out.append(f"f {i + 1} {sol.F[i]:.16e}")
        for i in range(spec.neF):
            out.append(f"fmul {i + 1} {sol.Fmul[i]:.16e}")
    out.append("==== end problem report ====")
    return "\n".join(out) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="valopt",
        description="sparse-structure SQP solver for expression problems")
    ap.add_argument("problem", help="problem file to solve")
    ap.add_argument("--specs", help="option file", default=None)
    ap.add_argument("--summary", default="-",
                    help="summary destination: - for stdout, a path, or off")
    ap.add_argument("--print", dest="print_path", default=None,
                    help="write the deterministic report file here")
    ap.add_argument("--print-structure", action="store_true",
                    help="write the probed structure to stdout")
    ap.add_argument("--seed", type=int, default=None,
                    help="override the random seed")
    ap.add_argument("--check-only", action="store_true",
                    help="probe and verify the structure, do not solve")
    return ap


def main(argv: Optional[list] = None) -> int:
    args = _build_parser().parse_args(argv)

    text = _read_file(args.problem)
    try:
        spec, funcs = parse_problem_file(text)
    except ParseError as pe:
        print(f"{args.problem}:{pe.line}: {pe.message}", file=sys.stderr)
        return 2

    opts = Options()
    if args.specs is not None:
        try:
            opts, unknown = parse_specs_file(_read_file(args.specs), opts)
        except ParseError as pe:
            print(f"{args.specs}:{pe.line}: {pe.message}", file=sys.stderr)
            return 2
        for line in unknown:
            print(f"warning: unrecognized option line: {line}",
                  file=sys.stderr)
    if args.seed is not None:
        import dataclasses
        opts = dataclasses.replace(opts, rng_seed=args.seed)

    try:
        spec = finalize_spec(spec, opts)
    except SpecError as se:
        for issue in se.issues:
            print(f"spec error: {issue.message}", file=sys.stderr)
        return 1

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pattern = probe_structure(funcs, spec.x0, opts)
            cache = init_cache(pattern)
            report = verify_at_start(funcs, spec.x0, pattern, opts, cache=cache)
            if report.repairs:
                pattern = report.pattern
                cache = init_cache(pattern)
    except (StructureProbeError, DerivativeCheckError, EvalFault) as exc:
        print(f"derivative structure failure: {exc}", file=sys.stderr)
        return 1

    if args.print_structure:
        sys.stdout.write(pattern.dump() + "\n")

    sol = None
    if not args.check_only:
        try:
            sol = solve(spec, funcs, opts, pattern=pattern, cache=cache,
                        check=False)
        except EvalFault as exc:
            print(f"evaluation failure: {exc}", file=sys.stderr)
            return 1

    if args.summary != "off":
        summary = _summary_text(spec, pattern, report, sol)
        if args.summary == "-":
            sys.stdout.write(summary)
        else:
            with open(args.summary, "w") as fh:
                fh.write(summary)

    if args.print_path is not None:
        with open(args.print_path, "w") as fh:
            fh.write(_print_file_text(spec, pattern, report, sol))

    if args.check_only:
        return 0 if report.passed else 1
    return _EXIT_CODES[sol.exit]


if __name__ == "__main__":
    sys.exit(main())
