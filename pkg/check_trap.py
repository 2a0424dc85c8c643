import sys
sys.path.insert(0, "src")
import warnings
import numpy as np
from valopt.expr import CallbackFunctions
from valopt.problem import Options, default_spec, finalize_spec
from valopt.structure import probe_structure, EntryClass
from valopt.assemble import init_cache
from valopt.check import verify_at_start
from valopt.solver import solve


def trap_rows(x):
    t = x[0]
    g = t if abs(t) > 1 else t * t
    return [(t - 0.5) ** 2, g]


funcs = CallbackFunctions(1, 2, trap_rows)
opts = Options(probe_scale=2.0, rng_seed=1)
x0 = np.zeros(1)
pat = probe_structure(funcs, x0, opts)
print("before:", pat.classes.tolist(), pat.values.tolist())
with warnings.catch_warnings(record=True) as wlog:
    warnings.simplefilter("always")
    rep = verify_at_start(funcs, x0, pat, opts, cache=init_cache(pat))
print("repairs:", [(r.row, r.col, r.was, r.evidence) for r in rep.repairs])
print("passed:", rep.passed, "max_rel:", rep.max_rel_error)
print("after:", rep.pattern.classes.tolist())
print("warnings:", [str(w.message)[:80] for w in wlog])

spec = default_spec(1, 2, name="trap")
spec.x0 = x0.copy()
spec.xlow = np.array([-0.9])
spec.xupp = np.array([0.9])
spec.Flow = np.array([-1e20, -1e20])
spec.Fupp = np.array([1e20, 0.04])
spec = finalize_spec(spec, opts)
pat2 = rep.pattern
sol = solve(spec, funcs, opts, pattern=pat2, cache=init_cache(pat2), check=False)
print("exit:", sol.exit, "x:", sol.x, "f:", sol.objective, "Fmul:", sol.Fmul)
print("expect x*=0.2 f*=0.09 lam=-1.5")
