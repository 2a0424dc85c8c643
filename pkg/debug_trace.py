import sys
sys.path.insert(0, "src")
import numpy as np
import valopt.solver as S
from valopt.parsing import parse_function
from valopt.expr import FunctionSet
from valopt.problem import Options, default_spec, finalize_spec

orig = S._solve_step_qp
calls = []
def spy(B, g_obj, J, F, spec, rows, x, rho):
    d, lam, slack, status = orig(B, g_obj, J, F, spec, rows, x, rho)
    calls.append((x.copy(), B.copy(), d.copy(), lam.copy(), slack, status, rho))
    print(f"QP at x={np.round(x,6)} rho={rho:.2f} status={status}")
    print(f"   d={np.round(d,8)} lam={np.round(lam,6)} slack={slack:.2e}")
    print(f"   B eig={np.round(np.linalg.eigvalsh(B),4)}")
    return d, lam, slack, status
S._solve_step_qp = spy

names = ("x1", "x2", "x3", "x4")
rows = [parse_function(s, names) for s in (
    "3*x1 + (x1 + x2 + x3)^2 + 5*x4",
    "4*x2 + 2*x3",
    "x1 + x2^2 + x3^2",
    "x2^4 + x3^4 + x4",
)]
funcs = FunctionSet(4, rows, names)
spec = default_spec(4, 4, name="sample4")
spec.x0 = np.ones(4)
spec.xlow = np.array([0.0, -1e20, -1e20, 0.0])
spec.xupp = np.full(4, 1e20)
spec.Flow = np.array([-1e20, 0.0, 2.0, 4.0])
spec.Fupp = np.array([1e20, 1e20, 2.0, 4.0])
opts = Options()
spec = finalize_spec(spec, opts)
sol = S.solve(spec, funcs, opts)
print("exit:", sol.exit, "obj:", sol.objective, "x:", np.round(sol.x, 8))
