"""Dual-number forward differentiation and seed matrices."""

import math

import numpy as np
import pytest

from corpus import random_function_set, random_point
from valopt.ad import (Dual, EvalCounter, SeedMatrix, eval_values,
                       full_jacobian, jacobian_times_seed)
from valopt.expr import FunctionSet
from valopt.parsing import parse_function


def _d(v, dot=1.0):
    return Dual(v, np.array([dot]))


class TestDualArithmetic:

    def test_add_sub(self):
        z = _d(2.0) + _d(3.0, 5.0)
        assert z.val == 5.0 and z.dot[0] == 6.0
        z = _d(2.0) - 3.0
        assert z.val == -1.0 and z.dot[0] == 1.0
        z = 3.0 - _d(2.0)
        assert z.val == 1.0 and z.dot[0] == -1.0

    def test_product_rule(self):
        z = _d(2.0, 1.0) * _d(3.0, 0.0)
        assert z.val == 6.0 and z.dot[0] == 3.0

    def test_quotient_rule(self):
        x, y = 2.0, 4.0
        z = _d(x, 1.0) / _d(y, 0.0)
        assert z.val == 0.5
        np.testing.assert_allclose(z.dot[0], 1.0 / y, rtol=1e-15)
        z = 1.0 / _d(x)
        np.testing.assert_allclose(z.dot[0], -1.0 / x ** 2, rtol=1e-15)

    def test_negation(self):
        z = -_d(2.0, 3.0)
        assert z.val == -2.0 and z.dot[0] == -3.0

    def test_unary_derivatives(self):
        x = 0.7
        for name, dfn in [
            ("exp", math.exp(x)),
            ("log", 1.0 / x),
            ("sqrt", 0.5 / math.sqrt(x)),
            ("sin", math.cos(x)),
            ("cos", -math.sin(x)),
            ("tan", 1.0 / math.cos(x) ** 2),
        ]:
            z = getattr(_d(x), name)()
            np.testing.assert_allclose(z.dot[0], dfn, rtol=1e-14)

    def test_abs_sign_rule(self):
        assert abs(_d(2.0, 3.0)).dot[0] == 3.0
        assert abs(_d(-2.0, 3.0)).dot[0] == -3.0

    def test_integer_power_derivative(self):
        z = _d(3.0) ** 5
        assert z.val == 243.0
        assert z.dot[0] == 5 * 3.0 ** 4

    def test_real_power_derivative(self):
        z = _d(4.0) ** 1.5
        np.testing.assert_allclose(z.val, 8.0, rtol=1e-15)
        np.testing.assert_allclose(z.dot[0], 1.5 * 4.0 ** 0.5, rtol=1e-14)

    def test_comparisons_use_values(self):
        assert _d(2.0) > 1
        assert _d(2.0) <= 2.0
        assert not (_d(-1.0) > 0)


class TestSeedMatrix:

    def test_identity(self):
        s = SeedMatrix.identity(3)
        assert s.p == 3
        np.testing.assert_array_equal(s.to_dense(), np.eye(3))

    def test_unit_columns(self):
        s = SeedMatrix.unit_columns(4, [1, 3])
        assert s.p == 2
        d = s.to_dense()
        np.testing.assert_array_equal(d[:, 0], [0, 1, 0, 0])
        np.testing.assert_array_equal(d[:, 1], [0, 0, 0, 1])
        np.testing.assert_array_equal(s.row(0), [0.0, 0.0])
        np.testing.assert_array_equal(s.row(3), [0.0, 1.0])


class TestJacobian:

    def test_known_jacobian(self):
        names = ("x1", "x2")
        fs = FunctionSet(2, [
            parse_function("x1^2*x2", names),
            parse_function("sin(x1) + x2", names),
        ], names)
        x = np.array([0.8, 1.3])
        F, J = full_jacobian(fs, x)
        np.testing.assert_allclose(F, [0.8 ** 2 * 1.3, math.sin(0.8) + 1.3],
                                   rtol=1e-15)
        want = np.array([
            [2 * 0.8 * 1.3, 0.8 ** 2],
            [math.cos(0.8), 1.0],
        ])
        np.testing.assert_allclose(J, want, rtol=1e-14)

    def test_values_match_plain_evaluation_bitwise(self):
        # the dual sweep must reproduce the plain values exactly, not
        # approximately
        rng = np.random.default_rng(11)
        for _ in range(30):
            fs = random_function_set(rng)
            x = random_point(rng, fs.n)
            F_sweep, _ = full_jacobian(fs, x)
            F_plain = eval_values(fs, x)
            np.testing.assert_array_equal(F_sweep, F_plain)

    def test_seed_projection(self):
        # J @ S for a thin seed equals the dense product
        rng = np.random.default_rng(12)
        for _ in range(20):
            fs = random_function_set(rng)
            x = random_point(rng, fs.n)
            _, J = full_jacobian(fs, x)
            cols = sorted(rng.choice(fs.n, size=min(2, fs.n), replace=False))
            seed = SeedMatrix.unit_columns(fs.n, cols)
            _, JS = jacobian_times_seed(fs, x, seed)
            np.testing.assert_array_equal(JS, J[:, cols])

    def test_constant_row_yields_plain_float(self):
        fs = FunctionSet(1, [parse_function("4", ("x",)),
                             parse_function("x^2", ("x",))], ("x",))
        F, J = full_jacobian(fs, np.array([3.0]))
        np.testing.assert_array_equal(F, [4.0, 9.0])
        np.testing.assert_array_equal(J, [[0.0], [6.0]])

    def test_counter_records_sweep_width(self):
        fs = FunctionSet(2, [parse_function("x1*x2", ("x1", "x2"))],
                         ("x1", "x2"))
        c = EvalCounter()
        full_jacobian(fs, np.array([1.0, 2.0]), counter=c)
        jacobian_times_seed(fs, np.array([1.0, 2.0]),
                            SeedMatrix.unit_columns(2, [0]), counter=c)
        eval_values(fs, np.array([1.0, 2.0]), counter=c)
        assert c.sweeps == 2
        assert c.components == [2, 1]
        assert c.value_calls == 1

    def test_dimension_mismatch(self):
        fs = FunctionSet(2, [parse_function("x1", ("x1", "x2"))],
                         ("x1", "x2"))
        with pytest.raises(ValueError):
            jacobian_times_seed(fs, np.array([1.0]),
                                SeedMatrix.identity(2))
