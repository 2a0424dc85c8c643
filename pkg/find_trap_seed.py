import sys
sys.path.insert(0, "src")
import warnings
import numpy as np
from valopt.expr import CallbackFunctions
from valopt.problem import Options
from valopt.structure import probe_structure, EntryClass


def trap_rows(x):
    t = x[0]
    g = t if abs(t) > 1 else t * t
    return [(t - 0.5) ** 2, g]


funcs = CallbackFunctions(1, 2, trap_rows)
hits = []
for seed in range(200):
    opts = Options(probe_scale=2.0, rng_seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            pat = probe_structure(funcs, np.zeros(1), opts)
        except Exception as e:
            continue
    # the trap: row 2 (index 1) wrongly classified constant slope 1
    c = pat.classes[1, 0]
    if c == EntryClass.CONSTANT and pat.values[1, 0] == 1.0:
        hits.append(seed)
print("trap seeds:", hits[:12], "of", len(hits), "in 200")
if hits:
    s = hits[0]
    opts = Options(probe_scale=2.0, rng_seed=s)
    pat = probe_structure(funcs, np.zeros(1), opts)
    print("seed", s, "probe points:", pat.probe_points, "classes:", pat.classes.tolist(),
          "values:", pat.values.tolist())
