"""Nonlinear reinforced urns with interacting colour types.

Simulation of the urn chain, the mean-field drift and its Lyapunov function,
stationary points and their stability, phase diagrams, and Monte Carlo
classification of trajectory limits.
"""

__version__ = "0.1.0"

from .field import (
    F_cyclic,
    F_general,
    F_symmetric,
    eigenvalues_2x2,
    jacobian_reduced,
    lyapunov,
)
from .montecarlo import (
    EnsembleSummary,
    LimitClassification,
    Tolerances,
    Verdict,
    classify_limit,
    noise_positivity_check,
    run_ensemble,
)
from .phase import PhaseGrid, boundary_curves, sweep_cyclic, sweep_symmetric
from .stationary import (
    PhaseLabel,
    PolyParams,
    Stability,
    StationaryPoint,
    SymmetricPhase,
    Variant,
    beta0,
    beta1,
    classify_stationary,
    cyclic_center_stability,
    cyclic_stationary_search,
    enumerate_stationary_points,
    find_positive_roots,
    phase_symmetric,
    poly_eval,
    two_type_root,
)
from .urn import ModelSpec, TrajectoryRecord, UrnState, proportions, simulate, step, transition_probabilities

__all__ = [
    "__version__",
    "ModelSpec",
    "UrnState",
    "TrajectoryRecord",
    "transition_probabilities",
    "step",
    "simulate",
    "proportions",
    "F_general",
    "F_symmetric",
    "F_cyclic",
    "jacobian_reduced",
    "eigenvalues_2x2",
    "lyapunov",
    "PolyParams",
    "Variant",
    "Stability",
    "PhaseLabel",
    "StationaryPoint",
    "SymmetricPhase",
    "poly_eval",
    "find_positive_roots",
    "beta0",
    "beta1",
    "classify_stationary",
    "enumerate_stationary_points",
    "phase_symmetric",
    "two_type_root",
    "cyclic_center_stability",
    "cyclic_stationary_search",
    "Tolerances",
    "Verdict",
    "LimitClassification",
    "EnsembleSummary",
    "classify_limit",
    "run_ensemble",
    "noise_positivity_check",
    "PhaseGrid",
    "sweep_symmetric",
    "sweep_cyclic",
    "boundary_curves",
]
