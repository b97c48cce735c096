"""firsyn: synthesis and analysis of FIR output-feedback controllers for
discrete-time linear systems.

The toolkit decides existence of stabilizing FIR laws (strong
stabilizability / parity interlacing), attempts convex LMI-based designs,
runs non-convex spectral-radius minimization with warm-started
multi-start, and verifies every result by simulation and Lyapunov
certificates.
"""

__version__ = "0.1.0"

from .analysis import (
    PipReport,
    StrongStabilizability,
    augmented_stabilizable_check,
    is_schur,
    pbh_detectable,
    pbh_stabilizable,
    pip_check,
    poles_zeros,
    strong_stabilizability_gate,
)
from .errors import (
    ContractError,
    ConvergenceError,
    DegenerateSolutionError,
    DimensionError,
    FirsynError,
    SingularMatrixError,
)
from .firdesign import (
    DesignOutcome,
    OptimizerConfig,
    SearchMethod,
    approximation_tail,
    fir_approximate,
    objective,
    optimize_order,
    order_sweep,
)
from .lmi import (
    FeasibilityProblem,
    FeasibilityResult,
    FeasibilityStatus,
    lyapunov_verify,
    sof_convex_design,
    solve_feasibility,
    state_feedback_design,
    try_decompose,
)
from .sim import Trajectory, decay_check, simulate_dynamic, simulate_fir
from .sysmodel import (
    AugmentedPlant,
    DynamicController,
    FirGains,
    StateSpaceSystem,
    TransferFunction,
    augment,
    closed_loop,
    closed_loop_dynamic,
    pad_gains,
    stack_gains,
    tf_to_ss,
    to_dynamic,
)

__all__ = [
    "__version__",
    "AugmentedPlant",
    "ContractError",
    "ConvergenceError",
    "DegenerateSolutionError",
    "DesignOutcome",
    "DimensionError",
    "DynamicController",
    "FeasibilityProblem",
    "FeasibilityResult",
    "FeasibilityStatus",
    "FirGains",
    "FirsynError",
    "OptimizerConfig",
    "PipReport",
    "SearchMethod",
    "SingularMatrixError",
    "StateSpaceSystem",
    "StrongStabilizability",
    "Trajectory",
    "TransferFunction",
    "approximation_tail",
    "augment",
    "augmented_stabilizable_check",
    "closed_loop",
    "closed_loop_dynamic",
    "decay_check",
    "fir_approximate",
    "is_schur",
    "lyapunov_verify",
    "objective",
    "optimize_order",
    "order_sweep",
    "pad_gains",
    "pbh_detectable",
    "pbh_stabilizable",
    "pip_check",
    "poles_zeros",
    "simulate_dynamic",
    "simulate_fir",
    "sof_convex_design",
    "solve_feasibility",
    "stack_gains",
    "state_feedback_design",
    "strong_stabilizability_gate",
    "tf_to_ss",
    "to_dynamic",
    "try_decompose",
]
