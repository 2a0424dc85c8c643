import sys
sys.path.insert(0, "src")
import numpy as np
from valopt.parsing import parse_function
from valopt.expr import FunctionSet
from valopt.problem import Options, default_spec, finalize_spec
from valopt.solver import solve

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

sol = solve(spec, funcs, opts)
print("exit:", sol.exit)
print("x:", sol.x)
print("objective:", sol.objective)
print("majors:", sol.majors, "evals:", sol.evals)
print("F:", sol.F)
print("Fmul:", sol.Fmul)
want_a = np.array([0.0, 1.4124402419595032, -0.0707994554596294, 0.02])
want_b = np.array([0.0, -0.0707994554596294, 1.4124402419595032, 0.02])
da = np.max(np.abs(sol.x - want_a))
db = np.max(np.abs(sol.x - want_b))
print("dist to minimizers:", da, db, "best:", min(da, db))
print("obj err:", abs(sol.objective - 1.9))
for rec in sol.trace:
    print(f"  major {rec.major:3d} merit {rec.merit_before:.8f} -> {rec.merit_after:.8f} "
          f"feas {rec.feas:.2e} opt {rec.opt:.2e} step {rec.step:.2e} rho {rec.penalty:.1f}")
