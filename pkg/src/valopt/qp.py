"""Dense active-set solver for strictly convex quadratic programs.

    minimize    0.5 z'Hz + g'z
    subject to  blo <= A z <= bup      (general rows)
                zlo <=  z  <= zup      (box)

Textbook primal active-set iteration: solve the equality-constrained
problem on the working set, step with a ratio test, add the blocking
constraint, and at a subspace minimizer drop the constraint whose
multiplier has the wrong sign.  H must be positive definite; the caller
provides a feasible starting point.  Sized for problems with tens of
variables, which is all the surrounding solver needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QPResult", "solve_qp"]

_MULT_TOL = 1.0e-9


@dataclass
class QPResult:
    z: np.ndarray
    lam_general: np.ndarray      # one multiplier per general row, 0 if inactive
    status: str                  # "optimal" or "stalled"
    iterations: int
    active: list                 # (kind, index, side) tuples, kind "box" or "gen"


def _kkt_solve(H, E, g, b):
    """Minimize 0.5 z'Hz + g'z subject to E z = b.

    Returns (z, lam) with the stationarity convention Hz + g = E' lam,
    so a constraint active at its lower side carries lam >= 0 at an
    optimum and one active at its upper side carries lam <= 0.
    """
    k = E.shape[0]
    if k == 0:
        try:
            return np.linalg.solve(H, -g), np.empty(0)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(H, -g, rcond=None)[0], np.empty(0)
    n = H.shape[0]
    M = np.zeros((n + k, n + k))
    M[:n, :n] = H
    M[:n, n:] = E.T
    M[n:, :n] = E
    rhs = np.concatenate([-g, b])
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    if not np.all(np.isfinite(sol)):
        sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    return sol[:n], -sol[n:]


def solve_qp(H, g, A, blo, bup, zlo, zup, z0) -> QPResult:
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, H.shape[0])
    blo = np.asarray(blo, dtype=float)
    bup = np.asarray(bup, dtype=float)
    zlo = np.asarray(zlo, dtype=float)
    zup = np.asarray(zup, dtype=float)
    z = np.asarray(z0, dtype=float).copy()
    n = len(z)
    m = A.shape[0]

    def row_of(kind, idx):
        if kind == "box":
            e = np.zeros(n)
            e[idx] = 1.0
            return e
        return A[idx]

    def value_of(kind, idx):
        return z[idx] if kind == "box" else float(A[idx] @ z)

    work = []          # (kind, idx, side); side -1 lower, +1 upper, 0 equality
    for i in range(m):
        if blo[i] == bup[i]:
            work.append(("gen", i, 0))
    for j in range(n):
        if zlo[j] == zup[j]:
            work.append(("box", j, 0))

    def in_work(kind, idx):
        return any(w[0] == kind and w[1] == idx for w in work)

    maxit = 50 * (n + m + 5)
    stall = 0
    it = 0
    while it < maxit:
        it += 1
        E = (np.array([row_of(k_, i_) for k_, i_, _ in work])
             if work else np.empty((0, n)))
        rhs = np.array([
            (blo[i_] if k_ == "gen" else zlo[i_]) if s_ <= 0
            else (bup[i_] if k_ == "gen" else zup[i_])
            for k_, i_, s_ in work])
        z_eq, lam = _kkt_solve(H, E, g, rhs)
        p = z_eq - z

        if np.max(np.abs(p), initial=0.0) <= 1e-11 * (1.0 + np.max(np.abs(z), initial=0.0)):
            # subspace minimizer; check multiplier signs on inequalities
            worst = None
            worst_q = -_MULT_TOL * (1.0 + np.max(np.abs(lam), initial=0.0))
            for w_idx, (k_, i_, s_) in enumerate(work):
                if s_ == 0:
                    continue
                q = lam[w_idx] if s_ < 0 else -lam[w_idx]
                if q < worst_q:
                    worst_q = q
                    worst = w_idx
            if worst is None:
                lam_general = np.zeros(m)
                for w_idx, (k_, i_, s_) in enumerate(work):
                    if k_ == "gen":
                        lam_general[i_] = lam[w_idx]
                return QPResult(z, lam_general, "optimal", it, list(work))
            work.pop(worst)
            stall += 1
            if stall > 2 * (n + m) + 10:
                break
            continue

        # ratio test against constraints not in the working set
        alpha = 1.0
        blocker = None
        for kind, count in (("box", n), ("gen", m)):
            for idx in range(count):
                if in_work(kind, idx):
                    continue
                a = row_of(kind, idx)
                ap = float(a @ p)
                av = value_of(kind, idx)
                lo = zlo[idx] if kind == "box" else blo[idx]
                up = zup[idx] if kind == "box" else bup[idx]
                if ap > 1e-13 and np.isfinite(up):
                    ac = max(0.0, (up - av) / ap)
                    if ac < alpha - 1e-13:
                        alpha = ac
                        blocker = (kind, idx, +1)
                elif ap < -1e-13 and np.isfinite(lo):
                    ac = max(0.0, (lo - av) / ap)
                    if ac < alpha - 1e-13:
                        alpha = ac
                        blocker = (kind, idx, -1)
        if blocker is None:
            z = z_eq
            stall = 0
        else:
            z = z + alpha * p
            work.append(blocker)
            stall = stall + 1 if alpha <= 1e-13 else 0
            if stall > 2 * (n + m) + 10:
                break

    # ran out of iterations or cycled; report best current point
    lam_general = np.zeros(m)
    return QPResult(z, lam_general, "stalled", it, list(work))
