"""Random expression problems for property tests.

Every generated row is a short sum of terms: exact constants, linear
terms, integer-power monomials, two-variable products, and gently
scaled sin/cos/exp terms, so values and derivatives stay moderate on
the unit box and finite differencing is well conditioned.
Coefficients are drawn from an eighth-integer grid so linear slopes
are exactly representable.
"""

import numpy as np

from valopt.expr import Binary, Const, FunctionSet, Power, Unary, Var


def _coef(rng):
    c = 0.0
    while c == 0.0:
        c = round(float(rng.uniform(-3.0, 3.0)) * 8.0) / 8.0
    return c


def _term(rng, n):
    kind = rng.integers(0, 6)
    j = int(rng.integers(0, n))
    c = Const(_coef(rng))
    if kind == 0:
        return Const(_coef(rng))
    if kind == 1:
        return Binary("mul", c, Var(j))
    if kind == 2:
        k = int(rng.integers(2, 5))
        return Binary("mul", c, Power(Var(j), k))
    if kind == 3:
        j2 = int(rng.integers(0, n))
        return Binary("mul", c, Binary("mul", Var(j), Var(j2)))
    op = ("sin", "cos", "exp")[int(rng.integers(0, 3))]
    scaled = Binary("mul", Const(0.25 * abs(_coef(rng)) + 0.125), Var(j))
    return Binary("mul", c, Unary(op, scaled))


def random_function_set(rng, n=None, neF=None) -> FunctionSet:
    n = int(rng.integers(2, 9)) if n is None else n
    neF = int(rng.integers(1, 7)) if neF is None else neF
    rows = []
    for _ in range(neF):
        e = _term(rng, n)
        for _ in range(int(rng.integers(0, 4))):
            e = Binary("add", e, _term(rng, n))
        rows.append(e)
    return FunctionSet(n, rows, [f"x{j+1}" for j in range(n)])


def random_point(rng, n):
    return rng.uniform(-1.0, 1.0, size=n)
