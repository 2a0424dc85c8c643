"""Forward-mode differentiation with vector tangents.

A Dual carries a value and a row of p tangent components, so a single
sweep through the functions computes J(x) @ S for an n-by-p seed matrix
S.  Seeding unit columns for a subset of variables yields exactly the
Jacobian columns that can change, which is what makes the sparse
assembly cheap: p equals the number of nonlinear variables, never n.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .expr import EvalFault

__all__ = ["Dual", "SeedMatrix", "EvalCounter",
           "jacobian_times_seed", "full_jacobian", "eval_values"]


class Dual:
    """Scalar with tangent vector, closed under arithmetic and the
    elementary functions the expression language supports."""

    __slots__ = ("val", "dot")

    def __init__(self, val: float, dot):
        self.val = float(val)
        self.dot = np.asarray(dot, dtype=float)

    def _lift(self, other) -> "Dual":
        if isinstance(other, Dual):
            return other
        return Dual(float(other), np.zeros_like(self.dot))

    # arithmetic

    def __add__(self, other):
        o = self._lift(other)
        return Dual(self.val + o.val, self.dot + o.dot)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return Dual(self.val - o.val, self.dot - o.dot)

    def __rsub__(self, other):
        o = self._lift(other)
        return Dual(o.val - self.val, o.dot - self.dot)

    def __mul__(self, other):
        o = self._lift(other)
        return Dual(self.val * o.val, self.val * o.dot + o.val * self.dot)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        q = self.val / o.val
        return Dual(q, (self.dot - q * o.dot) / o.val)

    def __rtruediv__(self, other):
        return self._lift(other).__truediv__(self)

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __pos__(self):
        return self

    def __abs__(self):
        s = math.copysign(1.0, self.val) if self.val != 0.0 else 0.0
        return Dual(abs(self.val), s * self.dot)

    def __pow__(self, k):
        from .expr import int_power
        if isinstance(k, int):
            return int_power(self, k)
        o = self._lift(k)
        return (o * self.log()).exp()

    # comparisons act on values, so host callbacks can branch

    def __lt__(self, other):
        return self.val < (other.val if isinstance(other, Dual) else other)

    def __le__(self, other):
        return self.val <= (other.val if isinstance(other, Dual) else other)

    def __gt__(self, other):
        return self.val > (other.val if isinstance(other, Dual) else other)

    def __ge__(self, other):
        return self.val >= (other.val if isinstance(other, Dual) else other)

    # elementary functions

    def exp(self):
        v = math.exp(self.val)
        return Dual(v, v * self.dot)

    def log(self):
        return Dual(math.log(self.val), self.dot / self.val)

    def sqrt(self):
        v = math.sqrt(self.val)
        return Dual(v, self.dot / (2.0 * v))

    def sin(self):
        return Dual(math.sin(self.val), math.cos(self.val) * self.dot)

    def cos(self):
        return Dual(math.cos(self.val), -math.sin(self.val) * self.dot)

    def tan(self):
        v = math.tan(self.val)
        c = math.cos(self.val)
        return Dual(v, self.dot / (c * c))

    def __repr__(self):
        return f"Dual({self.val!r}, {self.dot!r})"


class SeedMatrix:
    """n-by-p matrix of tangent directions.

    Stored either dense or as a list of unit columns (column k carries a
    single 1 in row cols[k]), which is the shape the sparse assembly
    uses."""

    def __init__(self, n: int, dense: Optional[np.ndarray] = None,
                 cols: Optional[Sequence[int]] = None):
        self.n = int(n)
        if (dense is None) == (cols is None):
            raise ValueError("give exactly one of dense or cols")
        if dense is not None:
            self.dense = np.asarray(dense, dtype=float)
            if self.dense.shape[0] != self.n:
                raise ValueError("seed has wrong number of rows")
            self.cols = None
            self.p = self.dense.shape[1]
        else:
            self.dense = None
            self.cols = list(cols)
            if any(j < 0 or j >= self.n for j in self.cols):
                raise ValueError("unit column index out of range")
            self.p = len(self.cols)

    @classmethod
    def identity(cls, n: int) -> "SeedMatrix":
        return cls(n, cols=range(n))

    @classmethod
    def unit_columns(cls, n: int, cols: Sequence[int]) -> "SeedMatrix":
        return cls(n, cols=cols)

    @classmethod
    def from_dense(cls, arr) -> "SeedMatrix":
        arr = np.asarray(arr, dtype=float)
        return cls(arr.shape[0], dense=arr)

    def row(self, j: int) -> np.ndarray:
        """Tangent components seeded into variable j."""
        if self.dense is not None:
            return self.dense[j]
        r = np.zeros(self.p)
        for k, c in enumerate(self.cols):
            if c == j:
                r[k] = 1.0
        return r

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense.copy()
        out = np.zeros((self.n, self.p))
        for k, c in enumerate(self.cols):
            out[c, k] = 1.0
        return out


class EvalCounter:
    """Counts work done by the engine; tests use it to pin the cost
    model (tangent components per sweep, number of sweeps)."""

    def __init__(self):
        self.sweeps = 0
        self.components = []
        self.value_calls = 0

    def count_sweep(self, p: int):
        self.sweeps += 1
        self.components.append(p)

    def count_values(self):
        self.value_calls += 1


def jacobian_times_seed(funcs, x, seed: SeedMatrix,
                        counter: Optional[EvalCounter] = None,
                        kink_tol: float = 0.0):
    """One dual sweep: returns (F, J @ S) with F identical to a plain
    evaluation at x.

    F has shape (neF,), the product has shape (neF, p).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] != funcs.n or funcs.n != seed.n:
        raise ValueError("dimension mismatch between x, functions, and seed")
    duals = [Dual(x[j], seed.row(j)) for j in range(funcs.n)]
    vals = funcs.eval_scalars(duals, kink_tol)
    F = np.empty(funcs.neF)
    JS = np.zeros((funcs.neF, seed.p))
    for i, v in enumerate(vals):
        if isinstance(v, Dual):
            F[i] = v.val
            JS[i, :] = v.dot
        else:
            F[i] = float(v)
    if counter is not None:
        counter.count_sweep(seed.p)
    return F, JS


def full_jacobian(funcs, x, counter: Optional[EvalCounter] = None,
                  kink_tol: float = 0.0):
    """Dense Jacobian via an identity seed: returns (F, J)."""
    return jacobian_times_seed(funcs, x, SeedMatrix.identity(funcs.n),
                               counter=counter, kink_tol=kink_tol)


def eval_values(funcs, x, counter: Optional[EvalCounter] = None,
                kink_tol: float = 0.0) -> np.ndarray:
    """Plain value evaluation, no tangents."""
    x = np.asarray(x, dtype=float)
    vals = funcs.eval_scalars([float(v) for v in x], kink_tol)
    if counter is not None:
        counter.count_values()
    return np.array([float(v) if not isinstance(v, Dual) else v.val for v in vals])
