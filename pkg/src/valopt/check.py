"""Third-point validation of the detected structure.

Probing classifies entries from two points; before trusting the pattern
for a whole solve it is checked once more at the start point against
central finite differences.  Honest misclassifications (an entry that
merely looked constant near the probes) are repaired by promoting the
entry to Nonlinear.  Evidence of corruption, such as a cached value the
probe points themselves cannot reproduce, or dual-number derivatives
that disagree with differences, is a hard failure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ad import full_jacobian
from .assemble import ConstantCache
from .problem import Options
from .structure import EntryClass, StructurePattern

__all__ = ["CHECK_TOL", "CheckReport", "RepairNote", "DerivativeCheckError",
           "fd_jacobian", "verify_at_start"]

CHECK_TOL = 1.0e-5


class DerivativeCheckError(Exception):
    """Validation found something a repair cannot explain away.

    kind is one of "stale-cache", "stale-constant", "derivative-mismatch".
    entry is the offending (row, column), 0-based.
    """

    def __init__(self, kind: str, entry, detail: str):
        self.kind = kind
        self.entry = tuple(entry)
        super().__init__(
            f"{kind} at row {entry[0] + 1}, column {entry[1] + 1}: {detail}")


@dataclass
class RepairNote:
    row: int
    col: int
    was: EntryClass
    evidence: str

    def __str__(self):
        return (f"({self.row + 1},{self.col + 1}) {self.was.name} -> "
                f"NONLINEAR: {self.evidence}")


@dataclass
class CheckReport:
    passed: bool
    max_rel_error: float
    worst_entry: Optional[tuple]
    repairs: list = field(default_factory=list)
    pattern_mismatches: list = field(default_factory=list)
    pattern: Optional[StructurePattern] = None


def fd_jacobian(funcs, x0, h: float) -> np.ndarray:
    """Dense Jacobian by central differences with a uniform step h."""
    x0 = np.asarray(x0, dtype=float)
    J = np.empty((funcs.neF, funcs.n))
    for j in range(funcs.n):
        J[:, j] = _fd_column(funcs, x0, j, h)
    return J


def _fd_column(funcs, x0, j: int, h: float) -> np.ndarray:
    from .ad import eval_values
    xp = x0.copy()
    xm = x0.copy()
    xp[j] += h
    xm[j] -= h
    return (eval_values(funcs, xp) - eval_values(funcs, xm)) / (2.0 * h)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a))


def verify_at_start(funcs, x0, pattern: StructurePattern,
                    opts: Optional[Options] = None,
                    cache: Optional[ConstantCache] = None,
                    check_tol: float = CHECK_TOL) -> CheckReport:
    """Check the pattern and derivative values at the start point.

    Steps, in order:
      * a cache passed in must match the pattern values bitwise
      * tangent-sweep derivatives must agree with central differences at
        every structural nonzero within check_tol
      * Constant entries must reproduce their stored value at x0; an
        entry that does not, but whose stored value still matches the
        Jacobian at both original probe points, was honestly probed and
        is repaired to Nonlinear; otherwise the stored value is corrupt
      * Zero entries must show no derivative at x0; violators are
        promoted to Nonlinear

    Returns a CheckReport whose `pattern` holds the post-repair pattern
    (the caller rebuilds seed and cache when repairs is nonempty).
    Raises DerivativeCheckError for the corruption cases.
    """
    opts = opts or Options()
    x0 = np.asarray(x0, dtype=float)

    if cache is not None:
        rows, cols = np.where(pattern.classes == EntryClass.CONSTANT)
        if (len(cache) != len(rows)
                or not np.array_equal(cache.rows, rows)
                or not np.array_equal(cache.cols, cols)):
            raise DerivativeCheckError(
                "stale-cache", (int(rows[0]) if len(rows) else 0,
                                int(cols[0]) if len(cols) else 0),
                "cache layout does not match the pattern")
        pv = pattern.values[rows, cols]
        diff = np.where(cache.vals != pv)[0]
        if len(diff):
            k = int(diff[0])
            raise DerivativeCheckError(
                "stale-cache", (int(rows[k]), int(cols[k])),
                f"cached {cache.vals[k]!r} but pattern holds {pv[k]!r}")

    _, A = full_jacobian(funcs, x0)
    FD = np.empty_like(A)
    for j in range(funcs.n):
        hj = opts.fd_step * max(1.0, abs(x0[j]))
        FD[:, j] = _fd_column(funcs, x0, j, hj)

    tau = pattern.tau
    probe_jacs = None  # computed only if a constant entry disagrees
    repairs = []

    for i in range(pattern.neF):
        for j in range(pattern.n):
            c = pattern.classes[i, j]
            if c == EntryClass.ZERO:
                if max(abs(FD[i, j]), abs(A[i, j])) > check_tol:
                    repairs.append(RepairNote(
                        i, j, EntryClass.ZERO,
                        f"derivative {A[i, j]:.6g} at the start point"))
                continue
            if _rel(A[i, j], FD[i, j]) > check_tol:
                raise DerivativeCheckError(
                    "derivative-mismatch", (i, j),
                    f"tangent sweep gives {A[i, j]!r}, differences give {FD[i, j]!r}")
            if c == EntryClass.CONSTANT:
                v = pattern.values[i, j]
                if abs(v - A[i, j]) <= tau * max(1.0, abs(v)):
                    continue
                if probe_jacs is None:
                    probe_jacs = [full_jacobian(funcs, p)[1]
                                  for p in pattern.probe_points]
                ok = all(abs(v - P[i, j]) <= tau * max(1.0, abs(v))
                         for P in probe_jacs)
                if not ok:
                    raise DerivativeCheckError(
                        "stale-constant", (i, j),
                        f"stored {v!r} is not the derivative at the probe points")
                repairs.append(RepairNote(
                    i, j, EntryClass.CONSTANT,
                    f"stored {v:.6g} but the start point gives {A[i, j]:.6g}"))

    out_pattern = pattern
    if repairs:
        out_pattern = pattern.promote([(r.row, r.col) for r in repairs])
        warnings.warn(
            "structure repaired at " +
            ", ".join(f"({r.row + 1},{r.col + 1})" for r in repairs) +
            "; entries promoted to Nonlinear", UserWarning, stacklevel=2)

    max_err = 0.0
    worst = None
    for i in range(out_pattern.neF):
        for j in range(out_pattern.n):
            c = out_pattern.classes[i, j]
            if c == EntryClass.ZERO:
                continue
            ref = out_pattern.values[i, j] if c == EntryClass.CONSTANT else A[i, j]
            e = _rel(ref, FD[i, j])
            if e > max_err:
                max_err = e
                worst = (i, j)

    return CheckReport(
        passed=max_err <= check_tol,
        max_rel_error=max_err,
        worst_entry=worst,
        repairs=repairs,
        pattern_mismatches=[],
        pattern=out_pattern,
    )
