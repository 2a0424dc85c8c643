import sys
sys.path.insert(0, "src")
import numpy as np
from valopt.parsing import parse_function
from valopt.expr import FunctionSet
from valopt.problem import Options, default_spec, finalize_spec
from valopt.structure import probe_structure
from valopt.assemble import assemble, build_seed, init_cache
from valopt.solver import _solve_step_qp, _general_rows
from valopt.qp import solve_qp

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

pattern = probe_structure(funcs, spec.x0, opts)
cache = init_cache(pattern)
seed = build_seed(pattern)

x = np.array([0.0, 1.0, 1.0, 2.0])
F, J = assemble(funcs, x, pattern, cache, seed)
J = J.to_dense()
print("F:", F)
print("J:\n", J)
g = J[0]
rows_g = _general_rows(spec)
print("gen rows:", rows_g)

for tag, B in (("I", np.eye(4)),):
    d, lam, slack, status = _solve_step_qp(B, g, J, F, spec, rows_g, x, 15.1)
    print(f"B={tag}: status={status} d={d} lam={lam} slack={slack}")

# raw QP replication with explicit debug
n, m = 4, 3
N = n + 2 * m
B = np.eye(4)
rho = 15.1
H = np.zeros((N, N)); H[:n, :n] = B
H[range(n, N), range(n, N)] = 1e-8 * (1 + rho)
gq = np.concatenate([g, np.full(2 * m, rho)])
Aq = np.zeros((m, N)); blo = np.empty(m); bup = np.empty(m)
for k, i in enumerate(rows_g):
    Aq[k, :n] = J[i]; Aq[k, n + k] = 1.0; Aq[k, n + m + k] = -1.0
    blo[k] = spec.Flow[i] - F[i]; bup[k] = spec.Fupp[i] - F[i]
zlo = np.concatenate([spec.xlow - x, np.zeros(2 * m)])
zup = np.concatenate([spec.xupp - x, np.full(2 * m, np.inf)])
t = np.clip(0.0, blo, bup)
z0 = np.concatenate([np.zeros(n), np.maximum(t, 0), np.maximum(-t, 0)])
print("blo:", blo, "bup:", bup)
res = solve_qp(H, gq, Aq, blo, bup, zlo, zup, z0)
print("raw:", res.status, "iters", res.iterations)
print("z:", res.z)
print("lam_general:", res.lam_general)
print("active:", res.active)
# stationarity of the QP solution
r = H @ res.z + gq - Aq.T @ res.lam_general
print("stationarity residual (should be box multipliers only):", r)
