"""Dense active-set QP: closed forms, conventions, and a scipy battery."""

import math

import numpy as np

from valopt.qp import solve_qp

_INF = math.inf


def _stationarity(H, g, A, res, zlo, zup):
    """Residual of H z + g = A' lam + bound multipliers."""
    r = H @ res.z + g
    if len(A):
        r = r - A.T @ res.lam_general
    # remaining components must be explainable by active simple bounds
    out = 0.0
    for j in range(len(r)):
        at_lo = res.z[j] - zlo[j] <= 1e-8
        at_up = zup[j] - res.z[j] <= 1e-8
        if at_lo and r[j] >= -1e-8:
            continue
        if at_up and r[j] <= 1e-8:
            continue
        if at_lo or at_up:
            continue
        out = max(out, abs(r[j]))
    return out


class TestClosedForm:

    def test_unconstrained(self):
        H = np.eye(2)
        g = np.array([-1.0, -2.0])
        res = solve_qp(H, g, np.zeros((0, 2)), np.zeros(0), np.zeros(0),
                       np.array([-_INF, -_INF]), np.array([_INF, _INF]),
                       np.zeros(2))
        assert res.status == "optimal"
        np.testing.assert_allclose(res.z, [1.0, 2.0], atol=1e-10)

    def test_box_corner(self):
        # the unconstrained answer (2, -3) is cut to the box corner
        H = np.eye(2)
        g = np.array([-2.0, 3.0])
        res = solve_qp(H, g, np.zeros((0, 2)), np.zeros(0), np.zeros(0),
                       np.array([-1.0, -1.0]), np.array([1.0, 1.0]),
                       np.zeros(2))
        assert res.status == "optimal"
        np.testing.assert_allclose(res.z, [1.0, -1.0], atol=1e-10)

    def test_halfplane_lower_side_multiplier_positive(self):
        # min 1/2|z|^2 s.t. z1 + z2 >= 2  =>  z = (1, 1), lam = 1...
        # with H = I and g = 0 the multiplier is exactly 1
        H = np.eye(2)
        g = np.zeros(2)
        A = np.array([[1.0, 1.0]])
        res = solve_qp(H, g, A, np.array([2.0]), np.array([_INF]),
                       np.full(2, -_INF), np.full(2, _INF), np.array([2.0, 0.0]))
        assert res.status == "optimal"
        np.testing.assert_allclose(res.z, [1.0, 1.0], atol=1e-10)
        np.testing.assert_allclose(res.lam_general, [1.0], atol=1e-10)

    def test_upper_side_multiplier_negative(self):
        # min 1/2 z^2 - 2 z s.t. z <= 1: active at the upper side with
        # a negative multiplier
        H = np.array([[1.0]])
        g = np.array([-2.0])
        A = np.array([[1.0]])
        res = solve_qp(H, g, A, np.array([-_INF]), np.array([1.0]),
                       np.array([-_INF]), np.array([_INF]), np.array([0.0]))
        assert res.status == "optimal"
        np.testing.assert_allclose(res.z, [1.0], atol=1e-10)
        np.testing.assert_allclose(res.lam_general, [-1.0], atol=1e-10)

    def test_equality_with_box(self):
        # min 1/2|z|^2 - z1 s.t. z1 + z2 = 1, 0 <= z <= 0.8
        H = np.eye(2)
        g = np.array([-1.0, 0.0])
        A = np.array([[1.0, 1.0]])
        res = solve_qp(H, g, A, np.array([1.0]), np.array([1.0]),
                       np.zeros(2), np.array([0.8, 0.8]),
                       np.array([0.5, 0.5]))
        assert res.status == "optimal"
        np.testing.assert_allclose(res.z, [0.8, 0.2], atol=1e-10)

    def test_start_on_degenerate_vertex(self):
        # start where both bounds of a fixed variable meet
        H = np.eye(2)
        g = np.array([1.0, 1.0])
        res = solve_qp(H, g, np.zeros((0, 2)), np.zeros(0), np.zeros(0),
                       np.array([0.0, -1.0]), np.array([0.0, 1.0]),
                       np.zeros(2))
        assert res.status == "optimal"
        np.testing.assert_allclose(res.z, [0.0, -1.0], atol=1e-10)


class TestRandomBattery:

    def test_against_scipy(self):
        from scipy.optimize import minimize as scipy_minimize

        rng = np.random.default_rng(41)
        bad = 0
        for trial in range(40):
            n = int(rng.integers(2, 6))
            m = int(rng.integers(0, 4))
            M = rng.standard_normal((n, n))
            H = M @ M.T + (0.5 + rng.uniform()) * np.eye(n)
            g = rng.standard_normal(n)
            A = rng.standard_normal((m, n))
            zlo = -1.0 - rng.uniform(size=n)
            zup = 1.0 + rng.uniform(size=n)
            z0 = np.zeros(n)
            blo = np.empty(m)
            bup = np.empty(m)
            for k in range(m):
                mid = float(A[k] @ z0)
                kind = rng.integers(0, 3)
                if kind == 0:
                    blo[k], bup[k] = mid - rng.uniform(0.1, 1.0), _INF
                elif kind == 1:
                    blo[k], bup[k] = -_INF, mid + rng.uniform(0.1, 1.0)
                else:
                    w = rng.uniform(0.2, 1.0)
                    blo[k], bup[k] = mid - w, mid + w
            res = solve_qp(H, g, A, blo, bup, zlo, zup, z0)
            assert res.status == "optimal", f"trial {trial} not optimal"

            cons = []
            for k in range(m):
                if math.isfinite(blo[k]):
                    cons.append({"type": "ineq",
                                 "fun": lambda z, k=k: A[k] @ z - blo[k]})
                if math.isfinite(bup[k]):
                    cons.append({"type": "ineq",
                                 "fun": lambda z, k=k: bup[k] - A[k] @ z})
            ref = scipy_minimize(
                lambda z: 0.5 * z @ H @ z + g @ z, z0, jac=lambda z: H @ z + g,
                bounds=list(zip(zlo, zup)), constraints=cons, method="SLSQP",
                options={"maxiter": 200, "ftol": 1e-12})
            obj_mine = 0.5 * res.z @ H @ res.z + g @ res.z
            obj_ref = 0.5 * ref.x @ H @ ref.x + g @ ref.x
            if obj_mine > obj_ref + 1e-6 * (1 + abs(obj_ref)):
                bad += 1
            assert _stationarity(H, g, A, res, zlo, zup) < 1e-6
        assert bad == 0

    def test_multiplier_signs_on_random_actives(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            n = int(rng.integers(2, 5))
            H = np.eye(n) * (1.0 + rng.uniform())
            g = rng.standard_normal(n)
            A = rng.standard_normal((1, n))
            z0 = np.zeros(n)
            mid = float(A[0] @ z0)
            blo = np.array([mid - 0.05])
            bup = np.array([_INF])
            res = solve_qp(H, g, A, blo, bup,
                           np.full(n, -_INF), np.full(n, _INF), z0)
            assert res.status == "optimal"
            slack = A[0] @ res.z - blo[0]
            if slack < 1e-9:
                assert res.lam_general[0] >= -1e-9  # lower side: lam >= 0
            else:
                assert abs(res.lam_general[0]) <= 1e-9
