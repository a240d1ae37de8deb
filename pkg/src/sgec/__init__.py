"""Observer-based boundary energy control of the sine-Gordon equation.

Simulates a semilinear wave field on the unit interval with a Neumann
boundary actuator, a boundary-injection state observer, and a speed-gradient
energy controller, and checks the associated admissibility inequalities and
exponential decay certificates against the computed trajectories.
"""

from .admissibility import (AdmissibilityReport, DecayCertificate,
                            alpha_interval, check_assumption2,
                            decay_certificate, deltas, eta, optimize_epsilon,
                            piecewise_admissible, piecewise_beta_bound)
from .core import (ClosedLoopState, ControllerConfig, FieldState, Grid,
                   ObserverConfig, PhysicalParams, build_grid, sample_profile)
from .dynamics import (control_u, loop_signals, observer_ghost, output_y,
                       plant_ghost, rhs_closed_loop, rhs_field)
from .functionals import (goal_q, hamiltonian, power_identity_residual,
                          weighted_error)
from .integrator import (DivergenceError, IntegrationResult, IntegratorConfig,
                         StiffnessError, integrate, integrate_fixed,
                         step_dp45)
from .scenario import (CertificateCheck, ConfigError, ScenarioConfig,
                       SweepRow, TimeSeriesRecord, band_times, gamma_sweep,
                       load_config, run, verify_certificate)
from .cli import dispatch, emit_csv, main, read_csv

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport", "DecayCertificate", "alpha_interval",
    "check_assumption2", "decay_certificate", "deltas", "eta",
    "optimize_epsilon", "piecewise_admissible", "piecewise_beta_bound",
    "ClosedLoopState", "ControllerConfig", "FieldState", "Grid",
    "ObserverConfig", "PhysicalParams", "build_grid", "sample_profile",
    "control_u", "loop_signals", "observer_ghost", "output_y", "plant_ghost",
    "rhs_closed_loop", "rhs_field",
    "goal_q", "hamiltonian", "power_identity_residual", "weighted_error",
    "DivergenceError", "IntegrationResult", "IntegratorConfig",
    "StiffnessError", "integrate", "integrate_fixed", "step_dp45",
    "CertificateCheck", "ConfigError", "ScenarioConfig", "SweepRow",
    "TimeSeriesRecord", "band_times", "gamma_sweep", "load_config", "run",
    "verify_certificate",
    "dispatch", "emit_csv", "main", "read_csv",
    "__version__",
]
