"""Problem data: variables, bounds, function rows, and solve options.

The problem form is

    optimize   F_obj(x)            (one row, or nothing for pure feasibility)
    subject to xlow <=  x   <= xupp
               Flow <= F(x) <= Fupp

Bounds at or beyond the infinite-bound threshold mean "no bound" and are
replaced by real infinities once, in `finalize_spec`; everything
downstream sees canonical +-inf sentinels.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

__all__ = [
    "MINIMIZE", "MAXIMIZE", "BoundKind", "Options", "ProblemSpec",
    "SpecError", "ValidationIssue", "default_spec", "classify_bound",
    "effective_objective", "validate_spec", "finalize_spec",
]

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

DEFAULT_INF_BOUND = 1.0e20


class BoundKind(enum.Enum):
    FREE = "free"
    LOWER_ONLY = "lower"
    UPPER_ONLY = "upper"
    RANGE = "range"
    FIXED = "fixed"


@dataclass(frozen=True)
class Options:
    """Tuning knobs shared across the pipeline.

    inf_bound        magnitude treated as infinite in user-supplied bounds
    feas_tol         constraint feasibility tolerance
    opt_tol          optimality (stationarity) tolerance
    major_iter_limit cap on major iterations
    fd_step          base relative step for difference-based checking
    probe_scale      relative size of the structure-probe perturbations
    rng_seed         seed for every random draw the pipeline makes
    """

    inf_bound: float = DEFAULT_INF_BOUND
    feas_tol: float = 1.0e-6
    opt_tol: float = 1.0e-6
    major_iter_limit: int = 200
    fd_step: float = 1.0e-6
    probe_scale: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.inf_bound <= 0 or self.feas_tol <= 0 or self.opt_tol <= 0:
            raise ValueError("tolerances and the infinite-bound threshold must be positive")
        if self.fd_step <= 0 or self.probe_scale <= 0:
            raise ValueError("fd_step and probe_scale must be positive")
        if self.major_iter_limit < 1:
            raise ValueError("major_iter_limit must be at least 1")


@dataclass
class ValidationIssue:
    field: str
    index: Optional[int]
    message: str

    def __str__(self):
        where = f"{self.field}[{self.index}]" if self.index is not None else self.field
        return f"{where}: {self.message}"


class SpecError(Exception):
    """Raised when a problem description fails validation."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


@dataclass
class ProblemSpec:
    """Complete description of one problem instance.

    ObjRow is the 1-based objective row, with 0 meaning there is no
    objective and the solve only seeks a feasible point.  ObjAdd is a
    constant added to the reported objective, never to the optimization
    itself.  xstate gives per-variable start hints: 0 plain, 4 start at
    the lower bound, 5 start at the upper bound.
    """

    name: str
    n: int
    neF: int
    ObjRow: int
    ObjAdd: float
    sense: str
    x0: np.ndarray
    xlow: np.ndarray
    xupp: np.ndarray
    xstate: np.ndarray
    Flow: np.ndarray
    Fupp: np.ndarray
    Fmul0: np.ndarray
    var_names: list = field(default_factory=list)

    def report_name(self) -> str:
        """Name as shown in reports, at most 8 significant characters."""
        return self.name[:8]


def default_spec(n: int, neF: int, name: str = "problem") -> ProblemSpec:
    """Spec with every field at its default: start at the origin, all
    bounds infinite, minimize row 1, zero multiplier estimates."""
    return ProblemSpec(
        name=name[:8],
        n=n,
        neF=neF,
        ObjRow=1,
        ObjAdd=0.0,
        sense=MINIMIZE,
        x0=np.zeros(n),
        xlow=np.full(n, -math.inf),
        xupp=np.full(n, math.inf),
        xstate=np.zeros(n, dtype=int),
        Flow=np.full(neF, -math.inf),
        Fupp=np.full(neF, math.inf),
        Fmul0=np.zeros(neF),
        var_names=[f"x{j+1}" for j in range(n)],
    )


def classify_bound(lo: float, hi: float,
                   inf_bound: float = DEFAULT_INF_BOUND) -> BoundKind:
    """Kind of the interval [lo, hi].  Magnitudes at or beyond
    `inf_bound` count as infinite.  lo > hi is an error."""
    lo_inf = lo <= -inf_bound or math.isinf(lo) and lo < 0
    hi_inf = hi >= inf_bound or math.isinf(hi) and hi > 0
    if lo_inf and hi_inf:
        return BoundKind.FREE
    if lo_inf:
        return BoundKind.UPPER_ONLY
    if hi_inf:
        return BoundKind.LOWER_ONLY
    if lo > hi:
        raise ValueError(f"inconsistent bound: lower {lo!r} exceeds upper {hi!r}")
    if lo == hi:
        return BoundKind.FIXED
    return BoundKind.RANGE


def effective_objective(F, spec: ProblemSpec) -> float:
    """Internal minimization objective at function values F: the
    objective row negated for maximization, or 0 with no objective."""
    if spec.ObjRow == 0:
        return 0.0
    v = float(F[spec.ObjRow - 1])
    return -v if spec.sense == MAXIMIZE else v


def validate_spec(spec: ProblemSpec, opts: Optional[Options] = None) -> list:
    """All consistency problems found, as a list of ValidationIssue.
    An empty list means the spec is ready to use."""
    opts = opts or Options()
    issues = []

    def bad(field_name, idx, msg):
        issues.append(ValidationIssue(field_name, idx, msg))

    if spec.n < 1:
        bad("n", None, "need at least one variable")
    if spec.neF < 1:
        bad("neF", None, "need at least one function row")
    if spec.sense not in (MINIMIZE, MAXIMIZE):
        bad("sense", None, f"unknown sense {spec.sense!r}")
    if not (0 <= spec.ObjRow <= spec.neF):
        bad("ObjRow", None, f"must lie in 0..{spec.neF}")
    if not math.isfinite(spec.ObjAdd):
        bad("ObjAdd", None, "must be finite")

    for field_name, arr, length in (
            ("x0", spec.x0, spec.n), ("xlow", spec.xlow, spec.n),
            ("xupp", spec.xupp, spec.n), ("xstate", spec.xstate, spec.n),
            ("Flow", spec.Flow, spec.neF), ("Fupp", spec.Fupp, spec.neF),
            ("Fmul0", spec.Fmul0, spec.neF)):
        if len(arr) != length:
            bad(field_name, None, f"length {len(arr)}, expected {length}")

    if len(spec.x0) == spec.n and not np.all(np.isfinite(spec.x0)):
        j = int(np.argmax(~np.isfinite(np.asarray(spec.x0, dtype=float))))
        bad("x0", j, "start point must be finite")

    if len(spec.xlow) == spec.n and len(spec.xupp) == spec.n:
        for j in range(spec.n):
            try:
                classify_bound(float(spec.xlow[j]), float(spec.xupp[j]), opts.inf_bound)
            except ValueError as exc:
                bad("xlow/xupp", j, str(exc))

    if len(spec.Flow) == spec.neF and len(spec.Fupp) == spec.neF:
        for i in range(spec.neF):
            try:
                classify_bound(float(spec.Flow[i]), float(spec.Fupp[i]), opts.inf_bound)
            except ValueError as exc:
                bad("Flow/Fupp", i, str(exc))

    if len(spec.xstate) == spec.n:
        for j in range(spec.n):
            if int(spec.xstate[j]) not in (0, 4, 5):
                bad("xstate", j, f"value {int(spec.xstate[j])} not one of 0, 4, 5")

    if len(spec.Fmul0) == spec.neF and not np.all(np.isfinite(np.asarray(spec.Fmul0, dtype=float))):
        bad("Fmul0", None, "multiplier estimates must be finite")

    return issues


def _substitute(arr, inf_bound: float) -> np.ndarray:
    out = np.asarray(arr, dtype=float).copy()
    out[out <= -inf_bound] = -math.inf
    out[out >= inf_bound] = math.inf
    return out


def finalize_spec(spec: ProblemSpec, opts: Optional[Options] = None) -> ProblemSpec:
    """Canonical form ready for the pipeline.

    Bounds with magnitude >= opts.inf_bound become real infinities, the
    objective row's bounds are forced free (a note is emitted if finite
    ones were supplied), and the result is validated.  Raises SpecError
    on any validation issue.
    """
    opts = opts or Options()
    out = replace(
        spec,
        x0=np.asarray(spec.x0, dtype=float).copy(),
        xlow=_substitute(spec.xlow, opts.inf_bound),
        xupp=_substitute(spec.xupp, opts.inf_bound),
        xstate=np.asarray(spec.xstate, dtype=int).copy(),
        Flow=_substitute(spec.Flow, opts.inf_bound),
        Fupp=_substitute(spec.Fupp, opts.inf_bound),
        Fmul0=np.asarray(spec.Fmul0, dtype=float).copy(),
        var_names=list(spec.var_names),
    )
    if out.ObjRow > 0 and 0 < out.ObjRow <= out.neF:
        i = out.ObjRow - 1
        if math.isfinite(out.Flow[i]) or math.isfinite(out.Fupp[i]):
            warnings.warn(
                f"bounds on objective row {out.ObjRow} are ignored; the row is free",
                UserWarning, stacklevel=2)
        out.Flow[i] = -math.inf
        out.Fupp[i] = math.inf
    issues = validate_spec(out, opts)
    if issues:
        raise SpecError(issues)
    return out
