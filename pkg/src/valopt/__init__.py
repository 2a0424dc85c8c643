"""valopt: a small SQP solver with probed sparse derivative structure.

The pipeline: describe a problem (expressions or a callback), probe the
Jacobian structure at two seeded random points, cache the constant
entries, validate everything against finite differences at the start
point, then solve with an active-set SQP that only differentiates the
variables that actually appear nonlinearly.
"""

from .ad import (Dual, EvalCounter, SeedMatrix, eval_values, full_jacobian,
                 jacobian_times_seed)
from .assemble import (ConstantCache, SparseJacobian, assemble, build_seed,
                       init_cache)
from .check import (CheckReport, DerivativeCheckError, RepairNote,
                    fd_jacobian, verify_at_start)
from .expr import (Binary, CallbackFunctions, Const, EvalFault, FunctionSet,
                   Power, Unary, Var, eval_expr, format_expr, free_variables,
                   int_power)
from .files import parse_problem_file, parse_specs_file, render_problem_file
from .parsing import ParseError, parse_function
from .problem import (BoundKind, MAXIMIZE, MINIMIZE, Options, ProblemSpec,
                      SpecError, ValidationIssue, classify_bound,
                      default_spec, effective_objective, finalize_spec,
                      validate_spec)
from .qp import QPResult, solve_qp
from .solver import (EVAL_ERROR, FEASIBLE, INFEASIBLE, ITERATION_LIMIT,
                     IterateState, MajorRecord, OPTIMAL, ProtocolEvaluator,
                     RetryExhausted, Solution, USER_ABORT, UserAbort,
                     InfeasibleLinearRows, kkt_residual,
                     maintain_linear_feasibility, solve)
from .structure import (BlockPartition, EntryClass, StructurePattern,
                        StructureProbeError, block_partition, perturb,
                        probe_structure)

__version__ = "0.1.0"

__all__ = [
    "Dual", "EvalCounter", "SeedMatrix", "eval_values", "full_jacobian",
    "jacobian_times_seed",
    "ConstantCache", "SparseJacobian", "assemble", "build_seed", "init_cache",
    "CheckReport", "DerivativeCheckError", "RepairNote", "fd_jacobian",
    "verify_at_start",
    "Binary", "CallbackFunctions", "Const", "EvalFault", "FunctionSet",
    "Power", "Unary", "Var", "eval_expr", "format_expr", "free_variables",
    "int_power",
    "parse_problem_file", "parse_specs_file", "render_problem_file",
    "ParseError", "parse_function",
    "BoundKind", "MAXIMIZE", "MINIMIZE", "Options", "ProblemSpec",
    "SpecError", "ValidationIssue", "classify_bound", "default_spec",
    "effective_objective", "finalize_spec", "validate_spec",
    "QPResult", "solve_qp",
    "EVAL_ERROR", "FEASIBLE", "INFEASIBLE", "ITERATION_LIMIT",
    "IterateState", "MajorRecord", "OPTIMAL", "ProtocolEvaluator",
    "RetryExhausted", "Solution", "USER_ABORT", "UserAbort",
    "InfeasibleLinearRows", "kkt_residual", "maintain_linear_feasibility",
    "solve",
    "BlockPartition", "EntryClass", "StructurePattern",
    "StructureProbeError", "block_partition", "perturb", "probe_structure",
    "__version__",
]
