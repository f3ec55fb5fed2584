"""Symbolic Finsler curvature, soliton checking, and Ricci flow construction."""

from .errors import (
    ConfigError,
    DegenerateSampleError,
    DomainExceededError,
    DslSyntaxError,
    EvaluationDomainError,
    FinslerError,
    IntegrationBlowupError,
    NotEinsteinError,
    NotPositiveDefiniteError,
    StepUnderflowError,
    UnboundVariableError,
)
from .expr import (
    Add, Const, Cos, Div, Exp, Expr, Log, Mul, Neg, Pow, Sin, Sqrt, Sub, Var,
    differentiate, evaluate, free_vars, simplify, substitute, to_str,
)
from .parser import parse
from .tape import Tape, backend_name, compile_tape, set_backend
from .geometry import (
    FinslerStructure, Sample, akbar_zadeh_ricci, check_finsler, christoffel,
    curvature_at, f2_value, f2_values, fundamental_tensor, reduced_curvature,
    ricci_scalar, ricci_scalars, scale, spray,
)
from .sampling import grid_samples, random_samples
from .lifts import (
    CompleteLift, SymbolicDiffeo, VectorField, complete_lift,
    lie_derivative_F2, lie_derivative_g, pullback_symbolic,
)
from .flowmap import NumericFlowMap, TimeScaledField, flow_map
from .soliton import (
    SolitonTriple, combine_fields, estimate_lambda, estimate_vector_field,
    residual_report, scalar_residual, tensor_residual, zero_field,
)
from .ricciflow import (
    FlowFamily, construct_flow, evaluate_family, evaluate_family_batch,
    extract_soliton, flow_residual, flow_residual_grid,
    integrate_conformal_flow, ricci_of_family,
)
from .verify import verify_corpus, verify_lemma1, verify_lemma2, verify_lemma3

__version__ = "0.1.0"
