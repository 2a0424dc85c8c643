"""Jacobian structure detection by probing.

The Jacobian is evaluated at two random perturbations of the start
point.  An entry that is (numerically) the same nonzero value at both
points is taken to be Constant; an entry that vanishes at both points is
taken to be Zero; everything else is Nonlinear.  The two probe points
are kept for later third-point validation, which can only promote an
entry toward Nonlinear, never demote it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ad import EvalCounter, full_jacobian
from .expr import EvalFault
from .problem import Options

__all__ = ["EntryClass", "StructurePattern", "BlockPartition",
           "StructureProbeError", "perturb", "probe_structure",
           "block_partition"]

TAU_FLOOR = 1.0e-10          # classification tolerance per unit of Jacobian scale
NEAR_ZERO_FRACTION = 0.05    # perturbation components stay above this share of scale
SEPARATION_FRACTION = 0.1    # the two draws differ at least this much per component


class EntryClass(enum.IntEnum):
    ZERO = 0
    CONSTANT = 1
    NONLINEAR = 2


class StructureProbeError(Exception):
    pass


@dataclass(frozen=True)
class BlockPartition:
    """Row and column split induced by a pattern.  A row is linear when
    it has no Nonlinear entry; a variable is nonlinear when some row
    depends on it nonlinearly.  All indices 0-based."""
    nonlinear_rows: tuple
    linear_rows: tuple
    nonlinear_vars: tuple
    linear_vars: tuple


class StructurePattern:
    """Classification of every Jacobian entry plus the evidence points.

    classes : (neF, n) int8 array of EntryClass values
    values  : constant entries hold their probed value, others hold 0
    probe_points : the two points the classification was made at
    """

    def __init__(self, classes: np.ndarray, values: np.ndarray,
                 probe_points: np.ndarray, tau: float):
        self.classes = np.asarray(classes, dtype=np.int8)
        self.values = np.asarray(values, dtype=float)
        self.probe_points = np.asarray(probe_points, dtype=float)
        self.tau = float(tau)
        self.neF, self.n = self.classes.shape
        nl_cols = np.any(self.classes == EntryClass.NONLINEAR, axis=0)
        nl_rows = np.any(self.classes == EntryClass.NONLINEAR, axis=1)
        self.nonlinear_vars = tuple(int(j) for j in np.where(nl_cols)[0])
        self.linear_vars = tuple(int(j) for j in np.where(~nl_cols)[0])
        self.nonlinear_rows = tuple(int(i) for i in np.where(nl_rows)[0])
        self.linear_rows = tuple(int(i) for i in np.where(~nl_rows)[0])
        self.nnz = int(np.count_nonzero(self.classes != EntryClass.ZERO))

    def entry(self, i: int, j: int):
        """(EntryClass, value) for one position; value is None unless
        the entry is Constant."""
        c = EntryClass(int(self.classes[i, j]))
        v = float(self.values[i, j]) if c == EntryClass.CONSTANT else None
        return c, v

    def promote(self, entries) -> "StructurePattern":
        """New pattern with the given (i, j) entries reclassified as
        Nonlinear.  Used by validation repairs; moves are one-way."""
        classes = self.classes.copy()
        values = self.values.copy()
        for i, j in entries:
            classes[i, j] = EntryClass.NONLINEAR
            values[i, j] = 0.0
        return StructurePattern(classes, values, self.probe_points, self.tau)

    def dump(self) -> str:
        """One line per structural nonzero, row-major: 1-based row and
        column, the class name, and for Constant entries the value."""
        lines = []
        for i in range(self.neF):
            for j in range(self.n):
                c = self.classes[i, j]
                if c == EntryClass.CONSTANT:
                    lines.append("%d %d CONSTANT %.17g" % (i + 1, j + 1, self.values[i, j]))
                elif c == EntryClass.NONLINEAR:
                    lines.append("%d %d NONLINEAR" % (i + 1, j + 1))
        return "\n".join(lines)


def _draw(rng, x0: np.ndarray, scale: np.ndarray) -> np.ndarray:
    d = rng.uniform(-scale, scale)
    floor = NEAR_ZERO_FRACTION * scale
    for j in range(len(d)):
        while abs(d[j]) < floor[j]:
            d[j] = rng.uniform(-scale[j], scale[j])
    return d


def perturb(x0, k: int, opts: Options, avoid=None, attempt: int = 0) -> np.ndarray:
    """Probe point number k (1 or 2) near x0.

    Component j moves by up to probe_scale * max(1, |x0_j|), never by a
    near-zero amount.  The second point is kept componentwise separated
    from the first (pass it as `avoid`); draws are deterministic in
    (rng_seed, k, attempt).
    """
    x0 = np.asarray(x0, dtype=float)
    scale = opts.probe_scale * np.maximum(1.0, np.abs(x0))
    rng = np.random.default_rng((opts.rng_seed, 7919, k, attempt))
    d = _draw(rng, x0, scale)
    if avoid is None and k == 2:
        avoid = perturb(x0, 1, opts)
    if avoid is not None:
        gap = SEPARATION_FRACTION * scale
        d_avoid = np.asarray(avoid, dtype=float) - x0
        floor = NEAR_ZERO_FRACTION * scale
        for j in range(len(d)):
            while abs(d[j] - d_avoid[j]) < gap[j] or abs(d[j]) < floor[j]:
                d[j] = rng.uniform(-scale[j], scale[j])
    return x0 + d


def probe_structure(funcs, x0, opts: Optional[Options] = None,
                    counter: Optional[EvalCounter] = None) -> StructurePattern:
    """Classify every Jacobian entry from two probe evaluations.

    A probe point where the functions fault is redrawn once; a second
    fault is reported with guidance rather than retried forever.
    """
    opts = opts or Options()
    x0 = np.asarray(x0, dtype=float)

    points = []
    jacobians = []
    for k in (1, 2):
        avoid = points[0] if k == 2 else None
        last_fault = None
        for attempt in (0, 1):
            pt = perturb(x0, k, opts, avoid=avoid, attempt=attempt)
            try:
                _, J = full_jacobian(funcs, pt, counter=counter)
            except EvalFault as exc:
                last_fault = exc
                continue
            points.append(pt)
            jacobians.append(J)
            break
        else:
            raise StructureProbeError(
                f"functions fault near the start point ({last_fault}); "
                "reduce probe_scale or move the start point") from last_fault

    J1, J2 = jacobians
    gmax = max(1.0, float(np.max(np.abs(J1))), float(np.max(np.abs(J2))))
    tau = TAU_FLOOR * gmax

    zero = (np.abs(J1) <= tau) & (np.abs(J2) <= tau)
    same = np.abs(J1 - J2) <= tau * np.maximum(1.0, np.abs(J1))
    classes = np.full(J1.shape, int(EntryClass.NONLINEAR), dtype=np.int8)
    classes[same & ~zero] = int(EntryClass.CONSTANT)
    classes[zero] = int(EntryClass.ZERO)
    values = np.where(classes == EntryClass.CONSTANT, J1, 0.0)
    return StructurePattern(classes, values, np.vstack(points), tau)


def block_partition(pattern: StructurePattern) -> BlockPartition:
    """Split rows and variables into linear and nonlinear groups."""
    return BlockPartition(
        nonlinear_rows=pattern.nonlinear_rows,
        linear_rows=pattern.linear_rows,
        nonlinear_vars=pattern.nonlinear_vars,
        linear_vars=pattern.linear_vars,
    )
