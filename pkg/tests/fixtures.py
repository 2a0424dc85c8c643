"""Shared problem builders for the test suite.

The four-variable sample is the workhorse: one nonlinear objective,
one linear row, two nonlinear equality rows, two bounded variables.
Reference values here were frozen from tests/oracle.py (a scipy-based
reduction that never imports this package) and from hand derivation;
see that file for how they were produced.
"""

import numpy as np

from valopt.expr import CallbackFunctions, FunctionSet
from valopt.parsing import parse_function
from valopt.problem import Options, default_spec, finalize_spec

SAMPLE4_NAMES = ("x1", "x2", "x3", "x4")
SAMPLE4_ROWS = (
    "3*x1 + (x1 + x2 + x3)^2 + 5*x4",
    "4*x2 + 2*x3",
    "x1 + x2^2 + x3^2",
    "x2^4 + x3^4 + x4",
)

# the two global minimizers (x2 and x3 swap) and the exact optimum
SAMPLE4_FSTAR = 1.9
SAMPLE4_XSTAR_A = np.array(
    [0.0, 1.4124402419595032, -0.0707994554596294, 0.02])
SAMPLE4_XSTAR_B = np.array(
    [0.0, -0.0707994554596294, 1.4124402419595032, 0.02])

# values at the standard start (1, 1, 1, 1)
SAMPLE4_F_START = np.array([17.0, 6.0, 3.0, 3.0])
SAMPLE4_J_START = np.array([
    [9.0, 6.0, 6.0, 5.0],
    [0.0, 4.0, 2.0, 0.0],
    [1.0, 2.0, 2.0, 0.0],
    [0.0, 4.0, 4.0, 1.0],
])

# a feasible point checkable by substitution: F = (22, 4, 2, 4)
SAMPLE4_WITNESS = np.array([1.0, 1.0, 0.0, 3.0])
SAMPLE4_F_WITNESS = np.array([22.0, 4.0, 2.0, 4.0])

# frozen structure truth: 12 nonzeros, 5 constant, 7 nonlinear
SAMPLE4_CLASSES = np.array([
    [2, 2, 2, 1],
    [0, 1, 1, 0],
    [1, 2, 2, 0],
    [0, 2, 2, 1],
], dtype=np.int8)
SAMPLE4_CONSTANTS = {(0, 3): 5.0, (1, 1): 4.0, (1, 2): 2.0,
                     (2, 0): 1.0, (3, 3): 1.0}

SAMPLE4_TEXT = """\
problem sample4
variables x1 x2 x3 x4
minimize 1
F 1 = 3*x1 + (x1 + x2 + x3)^2 + 5*x4
F 2 = 4*x2 + 2*x3
F 3 = x1 + x2^2 + x3^2
F 4 = x2^4 + x3^4 + x4
bound x1 0 inf
bound x4 0 inf
rowbound 2 0 inf
rowbound 3 2 2
rowbound 4 4 4
start x1 1
start x2 1
start x3 1
start x4 1
"""


def sample4_functions():
    rows = [parse_function(s, SAMPLE4_NAMES) for s in SAMPLE4_ROWS]
    return FunctionSet(4, rows, SAMPLE4_NAMES)


def sample4_spec(feasibility_only=False):
    """Raw (unfinalized) spec for the sample; flip to feasibility mode
    with the flag."""
    spec = default_spec(4, 4, name="sample4")
    spec.x0 = np.ones(4)
    spec.xlow = np.array([0.0, -1e20, -1e20, 0.0])
    spec.xupp = np.full(4, 1e20)
    spec.Flow = np.array([-1e20, 0.0, 2.0, 4.0])
    spec.Fupp = np.array([1e20, 1e20, 2.0, 4.0])
    if feasibility_only:
        spec.ObjRow = 0
    return spec


def sample4_problem(opts=None, feasibility_only=False):
    """Finalized spec plus functions, ready to solve."""
    opts = opts or Options()
    spec = finalize_spec(sample4_spec(feasibility_only), opts)
    return spec, sample4_functions()


# ---------------------------------------------------------------------------
# probe trap: a function whose Jacobian looks constant from the two
# probe points but is not.  g has slope 1 everywhere outside [-1, 1]
# and slope 2t inside; TRAP_SEED is pinned so both probe draws at
# probe_scale 2 land outside, which classifies the entry Constant 1.
# The start-point check must then repair it to Nonlinear.

TRAP_SEED = 1
TRAP_OPTS = dict(probe_scale=2.0, rng_seed=TRAP_SEED)
TRAP_XSTAR = 0.2
TRAP_FSTAR = 0.09
TRAP_LAMBDA = -1.5


def _trap_rows(x):
    t = x[0]
    g = t if abs(t) > 1 else t * t
    return [(t - 0.5) ** 2, g]


def trap_functions():
    return CallbackFunctions(1, 2, _trap_rows)


def trap_spec():
    """min (x1 - 0.5)^2 over x1 in [-0.9, 0.9] with g(x1) <= 0.04.

    Inside the box g(t) = t^2, so the answer is x1 = 0.2, f = 0.09,
    row multiplier -1.5.
    """
    spec = default_spec(1, 2, name="trap")
    spec.xlow = np.array([-0.9])
    spec.xupp = np.array([0.9])
    spec.Flow = np.array([-1e20, -1e20])
    spec.Fupp = np.array([1e20, 0.04])
    return spec


# ---------------------------------------------------------------------------
# scripted evaluators for the call protocol


class RecordingFunctions(FunctionSet):
    """FunctionSet that logs every (status, x) it is called with."""

    def __init__(self, n, rows, var_names=None):
        super().__init__(n, rows, var_names)
        self.calls = []

    def eval_with_status(self, x, status):
        self.calls.append((int(status), np.array(x, dtype=float)))
        return super().eval_with_status(x, status)

    @property
    def statuses(self):
        return [s for s, _ in self.calls]


class RefusingFunctions(RecordingFunctions):
    """Returns mode -1 whenever a coordinate dips below `floor`."""

    def __init__(self, n, rows, floor=0.0, var_names=None):
        super().__init__(n, rows, var_names)
        self.floor = floor
        self.refusals = 0

    def eval_with_status(self, x, status):
        self.calls.append((int(status), np.array(x, dtype=float)))
        if status != 2 and min(x) < self.floor:
            self.refusals += 1
            return [0.0] * self.neF, -1
        vals = self.eval_scalars(list(x))
        return vals, 0


class AbortingFunctions(RecordingFunctions):
    """Returns mode -2 on the k-th value evaluation."""

    def __init__(self, n, rows, abort_on, var_names=None):
        super().__init__(n, rows, var_names)
        self.abort_on = abort_on
        self.value_calls = 0

    def eval_with_status(self, x, status):
        self.calls.append((int(status), np.array(x, dtype=float)))
        if status == 2:
            return [0.0] * self.neF, 0
        self.value_calls += 1
        if self.value_calls == self.abort_on:
            return [0.0] * self.neF, -2
        vals = self.eval_scalars(list(x))
        return vals, 0


def recording_sample4():
    rows = [parse_function(s, SAMPLE4_NAMES) for s in SAMPLE4_ROWS]
    return RecordingFunctions(4, rows, SAMPLE4_NAMES)
