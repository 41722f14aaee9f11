"""Finite-volume elliptic operators with nonlocal Robin boundary conditions."""
from .assembly import (BoundaryOperatorSet, GeneratorMatrix, assemble_A0, assemble_boundary_ops,
                       assemble_generator, boundary_flux_of_constant, discrete_B, is_metzler,
                       maximal_of_constant, to_matrix_market)
from .coefficients import (CoefficientField, FieldDiagnostics, discrete_divergence_b,
                           ellipticity_constant, face_drift, validate)
from .conditions import (MARKOV, NOT_POSITIVE, SUBMARKOV, SUPRA, ConditionVerdict, Reconciliation,
                         evaluate_conditions, observed_class, reconcile)
from .evolution import (ExpmPropagator, MarkovDiagnostics, ThetaStepper, Trajectory, evolve,
                        expm_apply, markov_diagnostics, stability_bound, step_theta)
from .exceptions import *  # noqa: F401,F403
from .geometry import BoundaryFace, Grid, build_interval, build_rectangle
from .greiner import (ResolventContext, auto_lambda, make_context, perturbed_resolvent,
                      resolvent_identity_residual, s_lambda_decay_profile, solve_S_lambda)
from .measures import (BoundaryMeasureFamily, Measure, constant_family, hypothesis_report, pair,
                       piecewise_family)
from .scenario import Problem, Scenario, build_problem, bundled_scenarios, load_scenario, parse_scenario
from .spectral import (SpectralReport, convergence_rate_fit, eig_report, growth_rate_fit,
                       is_irreducible, spectral_monotonicity_check, stationary_projection)

__version__ = "0.1.0"
