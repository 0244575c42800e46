"""Fast-slow ODE reduction in Tikhonov form on the infinite time interval."""

__version__ = "0.1.0"

from .core import FastSlowSystem, State, Trajectory, check_jacobians, jacobian
from .dichotomy import DichotomyFit, continuity_modulus, fit_dichotomy, propagator
from .errors import (Divergence, HypothesisViolated, IntegrationError, MaxStepsExceeded, NoConvergence,
                     NonFiniteOutput, SingularJacobian, SingularMatrix, StepUnderflow, TikhonovError)
from .hypotheses import HypothesisReport, check_a3, check_a3_tube, check_a5, full_report
from .integrate import IntegratorConfig, integrate
from .layer import LayerSolution, basin_check, integrate_layer, spectral_margin
from .localization import Tube, coincidence_test, localized_system, psi
from .models import AlleeParams, PredPreyParams, allee_system, predprey_system
from .reduction import (ErrorCurves, SlowSolution, composite_v, convergence_order, error_curves, integrate_full,
                        integrate_reduced, solve_qss)

__all__ = [
    "AlleeParams", "DichotomyFit", "Divergence", "ErrorCurves", "FastSlowSystem", "HypothesisReport",
    "HypothesisViolated", "IntegrationError", "IntegratorConfig", "LayerSolution", "MaxStepsExceeded",
    "NoConvergence", "NonFiniteOutput", "PredPreyParams", "SingularJacobian", "SingularMatrix", "SlowSolution",
    "State", "StepUnderflow", "TikhonovError", "Trajectory", "Tube", "allee_system", "basin_check",
    "check_a3", "check_a3_tube", "check_a5", "check_jacobians", "coincidence_test", "composite_v",
    "continuity_modulus", "convergence_order", "error_curves", "fit_dichotomy", "full_report", "integrate",
    "integrate_full", "integrate_layer", "integrate_reduced", "jacobian", "localized_system",
    "predprey_system", "propagator", "psi", "solve_qss", "spectral_margin",
]
