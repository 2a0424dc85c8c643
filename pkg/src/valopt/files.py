"""Text formats: problem files and option files.

A problem file is a small line-oriented description::

    # anything after a hash is a comment
    problem demo
    variables x1 x2
    minimize 1
    F 1 = (x1 - 1)^2 + x2^2
    F 2 = x1 + x2
    bound x1 0 inf
    rowbound 2 -1 1
    start x1 0.5
    objadd 0

Row and variable references are 1-based in the file, matching the
rendered output of the rest of the package.  `inf` and `-inf` are
accepted wherever a bound may be infinite.

An option file pairs a key phrase with a value, one per line, matched
case-insensitively::

    Feasibility tolerance  1e-8
    Major iterations       500

Unknown phrases are collected and reported, not fatal.
"""

from __future__ import annotations

import dataclasses
import math
import re
from typing import List, Optional, Tuple

from .expr import FunctionSet, format_expr
from .parsing import ParseError, parse_function
from .problem import MAXIMIZE, MINIMIZE, Options, ProblemSpec, default_spec

__all__ = ["parse_problem_file", "render_problem_file", "parse_specs_file",
           "SPEC_KEYS"]

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*\Z")


def _bound_value(tok: str, line: int) -> float:
    t = tok.lower()
    if t in ("inf", "+inf"):
        return math.inf
    if t == "-inf":
        return -math.inf
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number or inf, got {tok!r}", 1, line)


def _split_statements(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_problem_file(text: str) -> Tuple[ProblemSpec, FunctionSet]:
    """Parse a problem description into a spec and its functions.

    The returned spec is raw: pass it through finalize_spec before
    solving.  Raises ParseError with a 1-based line number on any
    malformed statement.
    """
    statements = list(_split_statements(text))

    names: Optional[tuple] = None
    name = "problem"
    sense = None
    obj_row = None
    obj_add = 0.0
    f_rows = {}
    bounds = {}
    row_bounds = {}
    starts = {}
    seen_problem = False
    seen_objective = False

    for lineno, line in statements:
        parts = line.split()
        key = parts[0].lower()
        if key == "problem":
            if seen_problem:
                raise ParseError("duplicate problem statement", 1, lineno)
            if len(parts) != 2:
                raise ParseError("problem takes exactly one name", 1, lineno)
            name = parts[1]
            seen_problem = True
        elif key == "variables":
            if names is not None:
                raise ParseError("duplicate variables statement", 1, lineno)
            if len(parts) < 2:
                raise ParseError("variables needs at least one name", 1, lineno)
            seen = set()
            for tok in parts[1:]:
                if not _NAME_RE.match(tok):
                    raise ParseError(f"bad variable name {tok!r}", 1, lineno)
                if tok in seen:
                    raise ParseError(f"duplicate variable {tok!r}", 1, lineno)
                seen.add(tok)
            names = tuple(parts[1:])
        elif key in ("minimize", "maximize", "feasibility"):
            if seen_objective:
                raise ParseError("duplicate objective statement", 1, lineno)
            seen_objective = True
            if key == "feasibility":
                if len(parts) != 1:
                    raise ParseError("feasibility takes no arguments", 1, lineno)
                sense, obj_row = MINIMIZE, 0
            else:
                if len(parts) != 2:
                    raise ParseError(f"{key} takes exactly one row index",
                                     1, lineno)
                try:
                    obj_row = int(parts[1])
                except ValueError:
                    raise ParseError(f"bad row index {parts[1]!r}", 1, lineno)
                if obj_row < 1:
                    raise ParseError("objective row indices start at 1",
                                     1, lineno)
                sense = MINIMIZE if key == "minimize" else MAXIMIZE
        elif key == "f":
            m = re.match(r"[Ff]\s+(\d+)\s*=\s*(.*)\Z", line)
            if not m:
                raise ParseError("expected: F <row> = <expression>", 1, lineno)
            idx = int(m.group(1))
            if idx < 1:
                raise ParseError("row indices start at 1", 1, lineno)
            if idx in f_rows:
                raise ParseError(f"row {idx} defined twice", 1, lineno)
            if names is None:
                raise ParseError("variables must be declared before rows",
                                 1, lineno)
            try:
                f_rows[idx] = parse_function(m.group(2), names)
            except ParseError as pe:
                raise ParseError(pe.message, pe.column, lineno)
        elif key == "bound":
            if len(parts) != 4:
                raise ParseError("expected: bound <var> <low> <high>", 1, lineno)
            if names is None or parts[1] not in names:
                raise ParseError(f"unknown variable {parts[1]!r}", 1, lineno)
            bounds[names.index(parts[1])] = (
                _bound_value(parts[2], lineno), _bound_value(parts[3], lineno))
        elif key == "rowbound":
            if len(parts) != 4:
                raise ParseError("expected: rowbound <row> <low> <high>",
                                 1, lineno)
            try:
                idx = int(parts[1])
            except ValueError:
                raise ParseError(f"bad row index {parts[1]!r}", 1, lineno)
            if idx < 1:
                raise ParseError("row indices start at 1", 1, lineno)
            row_bounds[idx] = (
                _bound_value(parts[2], lineno), _bound_value(parts[3], lineno))
        elif key == "start":
            if len(parts) != 3:
                raise ParseError("expected: start <var> <value>", 1, lineno)
            if names is None or parts[1] not in names:
                raise ParseError(f"unknown variable {parts[1]!r}", 1, lineno)
            starts[names.index(parts[1])] = _bound_value(parts[2], lineno)
        elif key == "objadd":
            if len(parts) != 2:
                raise ParseError("expected: objadd <value>", 1, lineno)
            obj_add = _bound_value(parts[1], lineno)
        else:
            raise ParseError(f"unknown statement {parts[0]!r}", 1, lineno)

    if names is None:
        raise ParseError("missing variables statement", 1, 1)
    if not seen_objective:
        raise ParseError(
            "missing objective statement (minimize, maximize or feasibility)",
            1, 1)
    if not f_rows:
        raise ParseError("no function rows defined", 1, 1)
    ne_f = max(f_rows)
    missing = [str(i) for i in range(1, ne_f + 1) if i not in f_rows]
    if missing:
        raise ParseError("missing row definitions: " + ", ".join(missing), 1, 1)
    if obj_row > ne_f:
        raise ParseError(f"objective row {obj_row} has no definition", 1, 1)
    for idx in row_bounds:
        if idx > ne_f:
            raise ParseError(f"rowbound {idx} has no matching row", 1, 1)

    spec = default_spec(len(names), ne_f, name=name)
    spec.sense = sense
    spec.ObjRow = obj_row
    spec.ObjAdd = obj_add
    spec.var_names = names
    for j, (lo, hi) in bounds.items():
        spec.xlow[j] = lo
        spec.xupp[j] = hi
    for idx, (lo, hi) in row_bounds.items():
        spec.Flow[idx - 1] = lo
        spec.Fupp[idx - 1] = hi
    for j, v in starts.items():
        spec.x0[j] = v

    rows = [f_rows[i] for i in range(1, ne_f + 1)]
    return spec, FunctionSet(len(names), rows, names)


def _fmt_bound(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def render_problem_file(spec: ProblemSpec, funcs: FunctionSet) -> str:
    """Render a spec and its expression rows back into file syntax.

    Parsing the result reproduces the problem; only non-default bound,
    start and objadd lines are written.
    """
    names = funcs.var_names
    out = [f"problem {spec.report_name()}"]
    out.append("variables " + " ".join(names))
    if spec.ObjRow == 0:
        out.append("feasibility")
    else:
        word = "maximize" if spec.sense == MAXIMIZE else "minimize"
        out.append(f"{word} {spec.ObjRow}")
    if spec.ObjAdd != 0.0:
        out.append(f"objadd {repr(float(spec.ObjAdd))}")
    for i, row in enumerate(funcs.rows, start=1):
        out.append(f"F {i} = {format_expr(row, names)}")
    for j, nm in enumerate(names):
        lo, hi = spec.xlow[j], spec.xupp[j]
        if not (math.isinf(lo) and lo < 0 and math.isinf(hi) and hi > 0):
            out.append(f"bound {nm} {_fmt_bound(lo)} {_fmt_bound(hi)}")
    for i in range(spec.neF):
        lo, hi = spec.Flow[i], spec.Fupp[i]
        if not (math.isinf(lo) and lo < 0 and math.isinf(hi) and hi > 0):
            out.append(f"rowbound {i + 1} {_fmt_bound(lo)} {_fmt_bound(hi)}")
    for j, nm in enumerate(names):
        if spec.x0[j] != 0.0:
            out.append(f"start {nm} {repr(float(spec.x0[j]))}")
    return "\n".join(out) + "\n"


SPEC_KEYS = (
    ("infinite bound", "inf_bound", float),
    ("feasibility tolerance", "feas_tol", float),
    ("optimality tolerance", "opt_tol", float),
    ("major iterations", "major_iter_limit", int),
    ("difference interval", "fd_step", float),
    ("probe scale", "probe_scale", float),
    ("random seed", "rng_seed", int),
)


def parse_specs_file(text: str,
                     base: Optional[Options] = None) -> Tuple[Options, List[str]]:
    """Parse an option file on top of `base` (default Options()).

    Returns the merged options and the list of unrecognized lines.
    Values that fail to parse raise ParseError with the line number.
    """
    opts = base or Options()
    overrides = {}
    unknown = []
    for lineno, line in _split_statements(text):
        low = line.lower()
        for phrase, field, conv in SPEC_KEYS:
            if low.startswith(phrase):
                rest = line[len(phrase):].strip()
                if not rest:
                    raise ParseError(f"missing value for {phrase!r}", 1, lineno)
                try:
                    overrides[field] = conv(rest)
                except ValueError:
                    raise ParseError(
                        f"bad value {rest!r} for {phrase!r}", 1, lineno)
                break
        else:
            unknown.append(line)
    if overrides:
        opts = dataclasses.replace(opts, **overrides)
    return opts, unknown
