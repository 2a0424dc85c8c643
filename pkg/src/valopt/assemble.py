"""Sparse Jacobian assembly from a structure pattern.

Constant entries are cached once, straight from the probe values, and
copied into every assembled Jacobian.  Only the nonlinear variables get
seed columns, so each assembly carries exactly len(nonlinear_vars)
tangent components; an all-linear problem does no differentiation at
all after probing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ad import EvalCounter, SeedMatrix, eval_values, jacobian_times_seed
from .structure import EntryClass, StructurePattern

__all__ = ["ConstantCache", "SparseJacobian", "build_seed", "init_cache", "assemble"]


@dataclass
class ConstantCache:
    """Constant Jacobian entries in row-major triplet form."""
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def __len__(self):
        return len(self.vals)


class SparseJacobian:
    """Row-major triplets (rows, cols, vals) over a fixed shape.

    Entries outside the structural pattern are absent, not stored as
    zeros."""

    def __init__(self, shape, rows, cols, vals):
        self.shape = tuple(shape)
        self.rows = np.asarray(rows, dtype=int)
        self.cols = np.asarray(cols, dtype=int)
        self.vals = np.asarray(vals, dtype=float)

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.rows, self.cols] = self.vals
        return out


def build_seed(pattern: StructurePattern) -> SeedMatrix:
    """Unit seed columns for the nonlinear variables, ascending.
    p = 0 when the whole Jacobian is constant or zero."""
    return SeedMatrix.unit_columns(pattern.n, pattern.nonlinear_vars)


def init_cache(pattern: StructurePattern) -> ConstantCache:
    """Triplets for every Constant entry, copied bitwise from the
    pattern, sorted row-major."""
    rows, cols = np.where(pattern.classes == EntryClass.CONSTANT)
    return ConstantCache(rows=rows.copy(), cols=cols.copy(),
                         vals=pattern.values[rows, cols].copy())


def assemble(funcs, x, pattern: StructurePattern, cache: ConstantCache,
             seed: Optional[SeedMatrix] = None,
             counter: Optional[EvalCounter] = None,
             kink_tol: float = 0.0):
    """Function values and sparse Jacobian at x.

    One tangent sweep with the reduced seed fills the nonlinear entries;
    constant entries come from the cache; zero entries are omitted.
    Returns (F, SparseJacobian).
    """
    if seed is None:
        seed = build_seed(pattern)
    if seed.p == 0:
        F = eval_values(funcs, x, counter=counter, kink_tol=kink_tol)
        JS = None
    else:
        F, JS = jacobian_times_seed(funcs, x, seed, counter=counter,
                                    kink_tol=kink_tol)
    col_slot = {j: k for k, j in enumerate(seed.cols)}

    rows = []
    cols = []
    vals = []
    cache_pos = 0
    for i in range(pattern.neF):
        for j in range(pattern.n):
            c = pattern.classes[i, j]
            if c == EntryClass.CONSTANT:
                # cache is row-major like this loop, so walk it in step
                assert cache.rows[cache_pos] == i and cache.cols[cache_pos] == j
                rows.append(i)
                cols.append(j)
                vals.append(cache.vals[cache_pos])
                cache_pos += 1
            elif c == EntryClass.NONLINEAR:
                rows.append(i)
                cols.append(j)
                vals.append(JS[i, col_slot[j]])
    return F, SparseJacobian((pattern.neF, pattern.n), rows, cols, vals)
