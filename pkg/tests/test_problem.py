"""Problem specification, bounds, validation, and finalization."""

import math
import warnings

import numpy as np
import pytest

from valopt.problem import (BoundKind, MAXIMIZE, MINIMIZE, Options,
                            SpecError, classify_bound, default_spec,
                            effective_objective, finalize_spec,
                            validate_spec)


class TestOptions:

    def test_defaults(self):
        o = Options()
        assert o.inf_bound == 1e20
        assert o.feas_tol == 1e-6
        assert o.opt_tol == 1e-6
        assert o.major_iter_limit == 200
        assert o.fd_step == 1e-6
        assert o.probe_scale == 0.5
        assert o.rng_seed == 0

    def test_frozen(self):
        o = Options()
        with pytest.raises(Exception):
            o.feas_tol = 1.0

    def test_positivity_checks(self):
        with pytest.raises(ValueError):
            Options(feas_tol=0.0)
        with pytest.raises(ValueError):
            Options(probe_scale=-1.0)
        with pytest.raises(ValueError):
            Options(major_iter_limit=0)


class TestClassifyBound:

    def test_all_kinds(self):
        assert classify_bound(-1e20, 1e20) == BoundKind.FREE
        assert classify_bound(0.0, 1e20) == BoundKind.LOWER_ONLY
        assert classify_bound(-1e20, 5.0) == BoundKind.UPPER_ONLY
        assert classify_bound(0.0, 5.0) == BoundKind.RANGE
        assert classify_bound(2.0, 2.0) == BoundKind.FIXED

    def test_threshold_is_inclusive(self):
        # magnitudes at or above the infinite-bound threshold count as
        # infinite
        assert classify_bound(-1e20, 1e20) == BoundKind.FREE
        assert classify_bound(-2e20, 3e20) == BoundKind.FREE
        assert classify_bound(-9.99e19, 1e20) == BoundKind.LOWER_ONLY

    def test_inverted_bounds_rejected(self):
        with pytest.raises(ValueError):
            classify_bound(3.0, 1.0)

    def test_infinities_accepted_directly(self):
        assert classify_bound(-math.inf, math.inf) == BoundKind.FREE


class TestDefaultSpec:

    def test_shapes_and_values(self):
        spec = default_spec(3, 2)
        assert spec.n == 3 and spec.neF == 2
        np.testing.assert_array_equal(spec.x0, np.zeros(3))
        assert np.all(spec.xlow <= -1e20) and np.all(spec.xupp >= 1e20)
        assert spec.ObjRow == 1
        assert spec.ObjAdd == 0.0
        assert spec.sense == MINIMIZE
        np.testing.assert_array_equal(spec.xstate, np.zeros(3))

    def test_name_truncated_to_eight(self):
        spec = default_spec(1, 1, name="averylongname")
        assert spec.report_name() == "averylon"


class TestValidate:

    def test_clean_spec_has_no_issues(self):
        assert validate_spec(default_spec(2, 2)) == []

    def test_length_mismatch(self):
        spec = default_spec(2, 2)
        spec.x0 = np.zeros(3)
        assert validate_spec(spec)

    def test_inverted_bounds(self):
        spec = default_spec(2, 2)
        spec.xlow[0], spec.xupp[0] = 2.0, 1.0
        issues = validate_spec(spec)
        assert any("bound" in i.message.lower() for i in issues)

    def test_objrow_out_of_range(self):
        spec = default_spec(2, 2)
        spec.ObjRow = 3
        assert validate_spec(spec)
        spec.ObjRow = -1
        assert validate_spec(spec)
        spec.ObjRow = 0
        assert validate_spec(spec) == []

    def test_xstate_values(self):
        spec = default_spec(2, 2)
        spec.xstate = np.array([0, 4])
        assert validate_spec(spec) == []
        spec.xstate = np.array([0, 5])
        assert validate_spec(spec) == []
        for bad in (1, 2, 3, 6):
            spec.xstate = np.array([0, bad])
            assert validate_spec(spec), f"xstate {bad} should be rejected"

    def test_nonfinite_start_rejected(self):
        spec = default_spec(2, 2)
        spec.x0[1] = math.nan
        assert validate_spec(spec)


class TestFinalize:

    def test_threshold_becomes_inf(self):
        spec = default_spec(2, 2)
        spec.xlow = np.array([-1e20, 0.0])
        spec.xupp = np.array([1e20, 3e21])
        out = finalize_spec(spec)
        assert out.xlow[0] == -math.inf and out.xlow[1] == 0.0
        assert out.xupp[0] == math.inf and out.xupp[1] == math.inf

    def test_objective_row_bounds_forced_free(self):
        spec = default_spec(2, 2)
        spec.Flow = np.array([0.0, -1e20])
        spec.Fupp = np.array([5.0, 1e20])
        with warnings.catch_warnings(record=True) as log:
            warnings.simplefilter("always")
            out = finalize_spec(spec)
        assert out.Flow[0] == -math.inf and out.Fupp[0] == math.inf
        assert any("objective" in str(w.message).lower() for w in log)

    def test_invalid_spec_raises(self):
        spec = default_spec(2, 2)
        spec.ObjRow = 9
        with pytest.raises(SpecError) as ei:
            finalize_spec(spec)
        assert ei.value.issues

    def test_feasibility_mode_untouched(self):
        spec = default_spec(2, 2)
        spec.ObjRow = 0
        spec.Flow = np.array([0.0, 0.0])
        spec.Fupp = np.array([1.0, 1.0])
        out = finalize_spec(spec)
        np.testing.assert_array_equal(out.Flow, [0.0, 0.0])


class TestEffectiveObjective:

    def test_minimize_passthrough(self):
        spec = default_spec(1, 2)
        spec.ObjRow = 2
        assert effective_objective(np.array([7.0, 3.0]), spec) == 3.0

    def test_maximize_flips_sign(self):
        spec = default_spec(1, 2)
        spec.ObjRow = 2
        spec.sense = MAXIMIZE
        assert effective_objective(np.array([7.0, 3.0]), spec) == -3.0

    def test_feasibility_is_zero(self):
        spec = default_spec(1, 2)
        spec.ObjRow = 0
        assert effective_objective(np.array([7.0, 3.0]), spec) == 0.0
