"""Sequential quadratic programming over assembled sparse Jacobians.

The solver is deliberately desk-scale: dense linear algebra, a damped
BFGS model of the Lagrangian Hessian, an elastic active-set QP for the
step, and an l1 penalty line search.  What it promises:

  * the evaluator is never called outside the variable bounds
  * linear constraint rows, once satisfied, stay satisfied at every
    accepted iterate (they enter the step QP exactly)
  * the merit value never increases across accepted iterations
  * the evaluation protocol runs status 1 on the first call, 0 after,
    and exactly one final call with status 2, whatever the outcome;
    an evaluator can veto a trial point (mode -1), which halves the
    step toward the previous iterate, or abort the solve (mode < -1)

Candidate optima are confirmed by a handful of seeded, feasibility
restored probe directions before the solver commits to "optimal"; a
first-order point with feasible descent nearby (a saddle pinned by
problem symmetry, say) is escaped instead of reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assemble import ConstantCache, assemble, build_seed, init_cache
from .check import verify_at_start
from .expr import EvalFault
from .problem import (MAXIMIZE, Options, ProblemSpec, SpecError,
                      effective_objective, validate_spec)
from .qp import solve_qp
from .structure import StructurePattern, probe_structure

__all__ = [
    "OPTIMAL", "FEASIBLE", "INFEASIBLE", "ITERATION_LIMIT", "USER_ABORT",
    "EVAL_ERROR", "Solution", "MajorRecord", "IterateState",
    "ProtocolEvaluator", "UserAbort", "RetryExhausted",
    "InfeasibleLinearRows", "kkt_residual", "maintain_linear_feasibility",
    "solve",
]

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration-limit"
USER_ABORT = "user-abort"
EVAL_ERROR = "evaluation-error"

_ARMIJO = 1.0e-4
_MIN_STEP = 1.0e-12


class UserAbort(Exception):
    """The evaluator returned mode < -1."""

    def __init__(self, mode: int):
        self.mode = mode
        super().__init__(f"evaluator requested abort (mode {mode})")


class RetryExhausted(Exception):
    """mode -1 retries used up the whole budget."""


class InfeasibleLinearRows(Exception):
    """The linear constraint rows admit no point within the bounds."""


@dataclass
class MajorRecord:
    """One accepted major iteration, as seen by the merit function."""
    major: int
    x: np.ndarray
    merit_before: float
    merit_after: float
    feas: float
    opt: float
    step: float
    penalty: float


@dataclass
class IterateState:
    """Everything the solver knows at one iterate."""
    x: np.ndarray
    F: np.ndarray
    J: np.ndarray                  # dense neF-by-n
    mul: np.ndarray                # per-row multipliers, objective row 0
    penalty: float
    major: int


@dataclass
class Solution:
    x: np.ndarray
    F: np.ndarray
    Fmul: np.ndarray
    objective: float
    exit: str
    majors: int
    evals: int
    trace: list = field(default_factory=list)


class ProtocolEvaluator:
    """Value evaluations under the status/mode call protocol.

    evaluate() passes status 1 on the very first call and 0 afterwards,
    and honors the evaluator's mode: 0 accepts, -1 asks for a point
    closer to `base` (the step is halved, at most `retry_budget` times),
    anything below -1 aborts.  A domain fault inside the functions is
    treated like mode -1.  close() issues the single final status-2
    call.
    """

    def __init__(self, funcs, retry_budget: int = 10):
        self.funcs = funcs
        self.retry_budget = int(retry_budget)
        self.evals = 0
        self._opened = False
        self._closed = False

    def evaluate(self, x, base=None):
        """Returns (F, point) where point is x or a retreat toward base."""
        x = np.asarray(x, dtype=float).copy()
        base = None if base is None else np.asarray(base, dtype=float)
        for _ in range(self.retry_budget + 1):
            status = 0 if self._opened else 1
            self._opened = True
            self.evals += 1
            try:
                vals, mode = self.funcs.eval_with_status(x, status)
            except EvalFault:
                mode = -1
                vals = None
            if mode == 0:
                return np.asarray(vals, dtype=float), x
            if mode < -1:
                raise UserAbort(mode)
            if base is not None:
                x = 0.5 * (x + base)
        raise RetryExhausted(
            f"no evaluable point after {self.retry_budget} step retreats")

    def close(self, x):
        if self._opened and not self._closed:
            self._closed = True
            try:
                self.funcs.eval_with_status(np.asarray(x, dtype=float), 2)
            except Exception:
                pass  # the outcome is already decided


def _general_rows(spec: ProblemSpec) -> list:
    """Constraint rows: every row except the objective that has at
    least one finite bound."""
    obj = spec.ObjRow - 1 if spec.ObjRow > 0 else None
    out = []
    for i in range(spec.neF):
        if i == obj:
            continue
        if math.isfinite(spec.Flow[i]) or math.isfinite(spec.Fupp[i]):
            out.append(i)
    return out


def _row_violations(F, spec: ProblemSpec, rows) -> np.ndarray:
    v = np.zeros(len(rows))
    for k, i in enumerate(rows):
        v[k] = max(0.0, spec.Flow[i] - F[i], F[i] - spec.Fupp[i])
    return v


def _viol_max(F, spec, rows) -> float:
    v = _row_violations(F, spec, rows)
    return float(np.max(v)) if len(v) else 0.0


def _viol_sum(F, spec, rows) -> float:
    return float(np.sum(_row_violations(F, spec, rows)))


def _objective_gradient(J, spec: ProblemSpec) -> np.ndarray:
    if spec.ObjRow == 0:
        return np.zeros(J.shape[1])
    sigma = -1.0 if spec.sense == MAXIMIZE else 1.0
    return sigma * J[spec.ObjRow - 1]


def kkt_residual(spec: ProblemSpec, state: IterateState) -> float:
    """Max of stationarity, complementarity, and feasibility measures.

    Stationarity projects the reduced gradient onto the bound structure:
    components pinned at a bound may carry a sign-correct multiplier,
    everything else must vanish.  Complementarity takes
    min(slack, |multiplier|) per constraint row.
    """
    x, F, J, lam = state.x, state.F, state.J, state.mul
    rows = _general_rows(spec)
    atol = 1.0e-6

    r = _objective_gradient(J, spec) - J.T @ lam
    mu = np.zeros_like(r)
    for j in range(spec.n):
        at_lo = x[j] - spec.xlow[j] <= atol * (1.0 + abs(spec.xlow[j])) \
            if math.isfinite(spec.xlow[j]) else False
        at_up = spec.xupp[j] - x[j] <= atol * (1.0 + abs(spec.xupp[j])) \
            if math.isfinite(spec.xupp[j]) else False
        if at_lo and at_up:
            mu[j] = r[j]
        elif at_lo:
            mu[j] = max(r[j], 0.0)
        elif at_up:
            mu[j] = min(r[j], 0.0)
    stationarity = float(np.max(np.abs(r - mu), initial=0.0))

    comp = 0.0
    for i in rows:
        lo_slack = F[i] - spec.Flow[i] if math.isfinite(spec.Flow[i]) else math.inf
        up_slack = spec.Fupp[i] - F[i] if math.isfinite(spec.Fupp[i]) else math.inf
        slack = max(0.0, min(lo_slack, up_slack))
        comp = max(comp, min(slack, abs(lam[i])))

    feas = _viol_max(F, spec, rows)
    bound_viol = float(np.max(np.maximum(spec.xlow - x, x - spec.xupp),
                              initial=0.0))
    return max(stationarity, comp, feas, max(0.0, bound_viol))


def _linear_constraint_rows(spec, pattern: StructurePattern) -> list:
    gen = set(_general_rows(spec))
    return [i for i in pattern.linear_rows if i in gen]


def _linear_matrix(pattern: StructurePattern, cache: ConstantCache,
                   rows) -> np.ndarray:
    A = np.zeros((len(rows), pattern.n))
    pos = {i: k for k, i in enumerate(rows)}
    for r, c, v in zip(cache.rows, cache.cols, cache.vals):
        if int(r) in pos:
            A[pos[int(r)], int(c)] = v
    return A


def _project_linear(spec: ProblemSpec, pattern, cache, x, F,
                    opts: Options) -> np.ndarray:
    """Point satisfying the linear rows and the bounds, near x.

    Solved as an elastic least-change QP with an escalating penalty;
    raises InfeasibleLinearRows when no amount of penalty drives the
    slack out.
    """
    rows = _linear_constraint_rows(spec, pattern)
    if not rows:
        return np.asarray(x, dtype=float)
    x = np.asarray(x, dtype=float)
    A = _linear_matrix(pattern, cache, rows)
    c = np.array([F[i] - A[k] @ x for k, i in enumerate(rows)])
    lo = np.array([spec.Flow[i] for i in rows])
    up = np.array([spec.Fupp[i] for i in rows])
    viol = np.maximum(0.0, np.maximum(lo - (A @ x + c), (A @ x + c) - up))
    if np.max(viol, initial=0.0) <= opts.feas_tol:
        return x

    n, m = spec.n, len(rows)
    N = n + 2 * m
    Aq = np.zeros((m, N))
    Aq[:, :n] = A
    Aq[:, n:n + m] = np.eye(m)
    Aq[:, n + m:] = -np.eye(m)
    blo = lo - (A @ x + c)
    bup = up - (A @ x + c)
    dlo = np.concatenate([spec.xlow - x, np.zeros(2 * m)])
    dup = np.concatenate([spec.xupp - x, np.full(2 * m, math.inf)])
    t = np.clip(0.0, blo, bup)
    z0 = np.concatenate([np.zeros(n), np.maximum(t, 0.0), np.maximum(-t, 0.0)])
    scale = 1.0 + float(np.max(np.abs(x)))
    for rho in (1e4 * scale, 1e6 * scale, 1e8 * scale):
        H = np.eye(N)
        H[n:, n:] *= 1e-8 * rho
        g = np.concatenate([np.zeros(n), np.full(2 * m, rho)])
        res = solve_qp(H, g, Aq, blo, bup, dlo, dup, z0)
        slack = float(np.sum(res.z[n:]))
        if slack <= 0.5 * opts.feas_tol:
            return np.clip(x + res.z[:n], spec.xlow, spec.xupp)
    raise InfeasibleLinearRows(
        "linear constraint rows cannot all hold within the bounds")


def maintain_linear_feasibility(spec: ProblemSpec, funcs, state: IterateState,
                                pattern: StructurePattern, cache: ConstantCache,
                                opts: Optional[Options] = None) -> IterateState:
    """Project the state onto the linear-feasible region.

    Identity when there are no linear constraint rows or they already
    hold.  Function values are refreshed at the projected point.
    """
    from .ad import eval_values
    opts = opts or Options()
    x_new = _project_linear(spec, pattern, cache, state.x, state.F, opts)
    if np.array_equal(x_new, state.x):
        return state
    F_new = eval_values(funcs, x_new)
    return IterateState(x=x_new, F=F_new, J=state.J, mul=state.mul,
                        penalty=state.penalty, major=state.major)


def _solve_step_qp(B, g_obj, J, F, spec, rows, x, rho, hard=frozenset()):
    """Elastic step QP around x: returns (d, row multipliers, total
    slack, status).

    Rows in `hard` get no slack variables.  They must be satisfied at
    d = 0 (linear rows after the initial projection are), which keeps
    the subproblem feasible and the rows exactly satisfied at every
    accepted point.
    """
    n = spec.n
    m = len(rows)
    soft = [k for k, i in enumerate(rows) if i not in hard]
    ms = len(soft)
    N = n + 2 * ms
    H = np.zeros((N, N))
    H[:n, :n] = B
    if ms:
        H[range(n, N), range(n, N)] = 1e-8 * (1.0 + rho)
    g = np.concatenate([g_obj, np.full(2 * ms, rho)])
    Aq = np.zeros((m, N))
    blo = np.empty(m)
    bup = np.empty(m)
    slot = {k: s for s, k in enumerate(soft)}
    for k, i in enumerate(rows):
        Aq[k, :n] = J[i]
        if k in slot:
            Aq[k, n + slot[k]] = 1.0
            Aq[k, n + ms + slot[k]] = -1.0
        blo[k] = spec.Flow[i] - F[i]
        bup[k] = spec.Fupp[i] - F[i]
    zlo = np.concatenate([spec.xlow - x, np.zeros(2 * ms)])
    zup = np.concatenate([spec.xupp - x, np.full(2 * ms, math.inf)])
    sp = np.zeros(ms)
    sm = np.zeros(ms)
    for s, k in enumerate(soft):
        t = min(max(0.0, blo[k]), bup[k])
        sp[s] = max(t, 0.0)
        sm[s] = max(-t, 0.0)
    z0 = np.concatenate([np.zeros(n), sp, sm])
    res = solve_qp(H, g, Aq, blo, bup, zlo, zup, z0)
    lam = np.zeros(spec.neF)
    for k, i in enumerate(rows):
        lam[i] = res.lam_general[k]
    slack = float(np.sum(res.z[n:])) if ms else 0.0
    return res.z[:n], lam, slack, res.status


def _damped_bfgs(B, s, y):
    sBs = float(s @ B @ s)
    sy = float(s @ y)
    ss = float(s @ s)
    if ss <= 0.0 or sBs <= 0.0:
        return B
    if sy < 0.2 * sBs:
        theta = 0.8 * sBs / (sBs - sy)
        y = theta * y + (1.0 - theta) * (B @ s)
        sy = float(s @ y)
    if sy <= 1e-14 * max(1.0, sBs):
        return B
    Bs = B @ s
    return B - np.outer(Bs, Bs) / sBs + np.outer(y, y) / sy


def _lagrangian_gradient(J, lam, spec) -> np.ndarray:
    return _objective_gradient(J, spec) - J.T @ lam


def _null_space_project(v, normals):
    if not normals:
        return v
    A = np.vstack(normals)
    return v - np.linalg.pinv(A) @ (A @ v)


def _restored_descent_probe(spec, funcs, pattern, cache, seed, pe,
                            x, F, J, rows, opts, rho, tag):
    """Look for nearby feasible descent before declaring optimality.

    Seeded directions in the null space of the active constraint
    normals are stepped a short distance, pulled back onto the
    constraints by frozen-Jacobian least-squares corrections, and
    compared on the objective and the merit.  Returns (x, F) of a
    strictly better feasible point, or None when every probe confirms
    the candidate.
    """
    if spec.ObjRow == 0:
        return None
    n = spec.n
    delta = 1e-3 * (1.0 + float(np.max(np.abs(x))))
    act_tol = max(opts.feas_tol, 1e-8)

    normals = []
    for i in rows:
        lo_gap = F[i] - spec.Flow[i] if math.isfinite(spec.Flow[i]) else math.inf
        up_gap = spec.Fupp[i] - F[i] if math.isfinite(spec.Fupp[i]) else math.inf
        if min(lo_gap, up_gap) <= act_tol * (1.0 + abs(F[i])):
            normals.append(J[i])
    free = np.ones(n, dtype=bool)
    for j in range(n):
        at_lo = math.isfinite(spec.xlow[j]) and x[j] - spec.xlow[j] <= act_tol
        at_up = math.isfinite(spec.xupp[j]) and spec.xupp[j] - x[j] <= act_tol
        if at_lo or at_up:
            free[j] = False
            e = np.zeros(n); e[j] = 1.0
            normals.append(e)

    f0 = effective_objective(F, spec)
    merit0 = f0 + rho * _viol_sum(F, spec, rows)
    thresh = 1e-8 * (1.0 + abs(f0))
    rng = np.random.default_rng((opts.rng_seed, 104729, tag))

    for _ in range(6):
        v = _null_space_project(rng.standard_normal(n), normals)
        nv = float(np.linalg.norm(v))
        if nv <= 1e-10:
            continue
        cand = np.clip(x + delta * (v / nv), spec.xlow, spec.xupp)
        F_c = None
        restored = False
        for _ in range(3):
            try:
                F_c, cand = pe.evaluate(cand, base=x)
            except RetryExhausted:
                F_c = None
                break
            resid = []
            resid_rows = []
            for i in rows:
                t = F_c[i] - min(max(F_c[i], spec.Flow[i]), spec.Fupp[i])
                if abs(t) > 0.25 * opts.feas_tol:
                    resid.append(t)
                    resid_rows.append(i)
            if not resid_rows:
                restored = True
                break
            # pull back onto the violated rows through the free
            # variables only; a correction routed through a variable
            # pinned at its bound would just be clipped away
            A = J[np.array(resid_rows)] * free
            corr = np.linalg.lstsq(A, -np.array(resid), rcond=None)[0]
            cand = np.clip(cand + corr, spec.xlow, spec.xupp)
        if F_c is None or not restored:
            continue
        f_c = effective_objective(F_c, spec)
        merit_c = f_c + rho * _viol_sum(F_c, spec, rows)
        if (_viol_max(F_c, spec, rows) <= opts.feas_tol
                and f_c < f0 - thresh and merit_c < merit0):
            return cand, F_c
    return None


def solve(spec: ProblemSpec, funcs, opts: Optional[Options] = None, *,
          pattern: Optional[StructurePattern] = None,
          cache: Optional[ConstantCache] = None,
          check: bool = True, retry_budget: int = 10) -> Solution:
    """Run the full pipeline on a finalized spec and return a Solution.

    When no pattern is supplied the structure is probed, cached, and
    validated here first.  `retry_budget` caps the evaluator's mode -1
    step retreats per evaluation.
    """
    opts = opts or Options()
    issues = validate_spec(spec, opts)
    if issues:
        raise SpecError(issues)

    if pattern is None:
        pattern = probe_structure(funcs, spec.x0, opts)
        cache = init_cache(pattern)
        if check:
            report = verify_at_start(funcs, spec.x0, pattern, opts, cache=cache)
            if report.repairs:
                pattern = report.pattern
                cache = init_cache(pattern)
    elif cache is None:
        cache = init_cache(pattern)
    seed = build_seed(pattern)

    obj_row = spec.ObjRow - 1 if spec.ObjRow > 0 else None
    sigma = -1.0 if spec.sense == MAXIMIZE else 1.0
    rows = _general_rows(spec)

    x = np.asarray(spec.x0, dtype=float).copy()
    for j in range(spec.n):
        st = int(spec.xstate[j])
        if st == 4 and math.isfinite(spec.xlow[j]):
            x[j] = spec.xlow[j]
        elif st == 5 and math.isfinite(spec.xupp[j]):
            x[j] = spec.xupp[j]
    x = np.clip(x, spec.xlow, spec.xupp)

    pe = ProtocolEvaluator(funcs, retry_budget)
    mul = np.asarray(spec.Fmul0, dtype=float).copy()
    if obj_row is not None:
        mul[obj_row] = 0.0
    rho = max(1.0, 1.5 * float(np.max(np.abs(mul), initial=0.0)))
    B = np.eye(spec.n)
    trace = []
    majors = 0
    F = None
    outcome = ITERATION_LIMIT

    try:
        F, x = pe.evaluate(x)

        x_proj = _project_linear(spec, pattern, cache, x, F, opts)
        if not np.array_equal(x_proj, x):
            F, x = pe.evaluate(x_proj, base=x)

        _, J = assemble(funcs, x, pattern, cache, seed)
        J = J.to_dense()
        stall = 0
        hard_rows = frozenset(_linear_constraint_rows(spec, pattern))

        for major in range(1, opts.major_iter_limit + 1):
            state = IterateState(x, F, J, mul, rho, major)
            vmax = _viol_max(F, spec, rows)
            if obj_row is None:
                if vmax <= opts.feas_tol:
                    outcome = FEASIBLE
                    break
            else:
                kkt = kkt_residual(spec, state)
                if vmax <= opts.feas_tol and kkt <= opts.opt_tol:
                    found = _restored_descent_probe(
                        spec, funcs, pattern, cache, seed, pe, x, F, J,
                        rows, opts, rho, major)
                    if found is None:
                        outcome = OPTIMAL
                        break
                    merit0 = effective_objective(F, spec) + rho * _viol_sum(F, spec, rows)
                    x_new, F_new = found
                    merit1 = effective_objective(F_new, spec) + rho * _viol_sum(F_new, spec, rows)
                    trace.append(MajorRecord(
                        major, x_new.copy(), merit0, merit1,
                        _viol_max(F_new, spec, rows), kkt,
                        float(np.max(np.abs(x_new - x))), rho))
                    x, F = x_new, F_new
                    _, J = assemble(funcs, x, pattern, cache, seed)
                    J = J.to_dense()
                    majors = major
                    continue

            g_obj = _objective_gradient(J, spec)
            d, lam_new, slack, qp_status = _solve_step_qp(
                B, g_obj, J, F, spec, rows, x, rho, hard=hard_rows)
            if qp_status != "optimal":
                # fall back to a short projected gradient move; the
                # merit test still guards acceptance
                d = np.clip(x - 0.1 * g_obj / max(1.0, np.linalg.norm(g_obj)),
                            spec.xlow, spec.xupp) - x
                lam_new = mul

            rho_needed = 1.5 * float(np.max(np.abs(lam_new), initial=0.0)) + 1e-2
            rho = max(rho, rho_needed)
            if slack > opts.feas_tol and rho < 1e10:
                rho = min(10.0 * rho, 1e10)

            vsum = _viol_sum(F, spec, rows)
            merit0 = effective_objective(F, spec) + rho * vsum
            descent = float(g_obj @ d) - rho * vsum + rho * slack
            descent = min(descent, 0.0)

            step_norm = float(np.max(np.abs(d), initial=0.0))
            if step_norm <= _MIN_STEP * (1.0 + float(np.max(np.abs(x)))):
                # a zero step means the subproblem is stationary at x
                # itself, so its multipliers describe this very point
                mul = lam_new
                stall += 1
                majors = major
                if stall >= 5:
                    break
                continue

            alpha = 1.0
            accepted = None
            while alpha >= 1e-12:
                trial = x + alpha * d
                F_t, x_t = pe.evaluate(trial, base=x)
                merit_t = effective_objective(F_t, spec) + rho * _viol_sum(F_t, spec, rows)
                if merit_t <= merit0 + _ARMIJO * alpha * descent:
                    accepted = (x_t, F_t, merit_t)
                    break
                alpha *= 0.5
            majors = major
            if accepted is None:
                mul = lam_new
                stall += 1
                if stall >= 5:
                    break
                continue
            stall = 0

            x_new, F_new, merit_new = accepted
            _, J_new = assemble(funcs, x_new, pattern, cache, seed)
            J_new = J_new.to_dense()
            s = x_new - x
            y = (_lagrangian_gradient(J_new, lam_new, spec)
                 - _lagrangian_gradient(J, lam_new, spec))
            B = _damped_bfgs(B, s, y)
            trace.append(MajorRecord(
                major, x_new.copy(), merit0, merit_new,
                _viol_max(F_new, spec, rows),
                kkt_residual(spec, IterateState(x_new, F_new, J_new, lam_new,
                                                rho, major)),
                float(alpha * np.max(np.abs(d))), rho))
            x, F, J, mul = x_new, F_new, J_new, lam_new
    except UserAbort:
        outcome = USER_ABORT
    except RetryExhausted:
        outcome = EVAL_ERROR
    except EvalFault:
        outcome = EVAL_ERROR
    except InfeasibleLinearRows:
        outcome = INFEASIBLE
    finally:
        pe.close(x)

    if F is None:
        F = np.full(spec.neF, math.nan)
    if obj_row is not None and math.isfinite(F[obj_row]):
        objective = float(F[obj_row]) + spec.ObjAdd
    else:
        objective = spec.ObjAdd if obj_row is None else math.nan
    return Solution(
        x=x,
        F=np.asarray(F, dtype=float),
        Fmul=sigma * mul,
        objective=objective,
        exit=outcome,
        majors=majors,
        evals=pe.evals,
        trace=trace,
    )
