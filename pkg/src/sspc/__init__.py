"""Semismooth predictor-corrector tracking of parametric NLP solutions,
with a suboptimal-MPC compensator, closed-loop simulation, and the
spacecraft attitude benchmark."""

from .errors import (ConfigError, DimensionMismatchError, GimbalLockError,
                     NoConvergenceError, NonFiniteEvaluationError,
                     SingularMatrixError, SspcError)
from .nlp import (Evaluation, KktResidual, ParametricNLP, PrimalDualPoint,
                  evaluate, fb, fb_pair_derivative, jacobian_p, jacobian_z,
                  residual)
from .numerics import RiccatiResult, fd_jacobian, solve_dare, solve_linear
from .runtime import (CompensatorState, ideal_control, init_compensator,
                      suboptimality_error, update)
from .simulation import (PlantModel, SimConfig, SimRecord, SimTrace,
                         constraint_margins, euler_discretize, simulate)
from .solver import (SspcConfig, StepDiagnostics, convergence_ratios,
                     corrector, predictor, solve_to_convergence, step)
from .transcription import (OcpSpec, VariableLayout, extract_control,
                            plan_cost, transcribe)

__all__ = [
    "ConfigError", "DimensionMismatchError", "GimbalLockError",
    "NoConvergenceError", "NonFiniteEvaluationError", "SingularMatrixError",
    "SspcError",
    "Evaluation", "KktResidual", "ParametricNLP", "PrimalDualPoint",
    "evaluate", "fb", "fb_pair_derivative", "jacobian_p", "jacobian_z",
    "residual",
    "RiccatiResult", "fd_jacobian", "solve_dare", "solve_linear",
    "CompensatorState", "ideal_control", "init_compensator",
    "suboptimality_error", "update",
    "PlantModel", "SimConfig", "SimRecord", "SimTrace", "constraint_margins",
    "euler_discretize", "simulate",
    "SspcConfig", "StepDiagnostics", "convergence_ratios", "corrector",
    "predictor", "solve_to_convergence", "step",
    "OcpSpec", "VariableLayout", "extract_control", "plan_cost", "transcribe",
]

__version__ = "0.1.0"
