"""Conditional Gaussian dynamics of pulse-probed mechanical oscillators."""

from .errors import (ConvergenceError, DomainError, InternalError,
                     StepSizeError, StrobomechError, UnsupportedBranchError,
                     UsageError)
from .params import PhysicalParams, PulseParams, TwoModeParams
from .gaussian import (GaussianState, SymplecticTransform, apply_symplectic,
                       cov_purity, is_physical_cov, log_negativity, purity,
                       squeezing_db, symplectic_eigenvalues, symplectic_form)
from .strobo import (Composition, Measurement, ThermalRotation, bae_cycle,
                     bae_steady_exact, bae_steady_largeQ, cooling_cycle,
                     cooling_steady_largeQ, cooling_steady_leading,
                     fixed_point, measurement_map, ordering_gap_estimate,
                     squeezing_threshold_chi, squeezing_threshold_exact,
                     thermal_rotation_map)
from .pulses import (cavity_field, coupling_rate, magnus_coefficients,
                     nonqnd_symplectic, pulse_symplectic_numeric)
from .conditioning import (Fig4Point, TrajectoryResult, extended_fixed_point,
                           extended_pulse_unitary, extended_steady_exact,
                           extended_steady_largeQ, fig4_point,
                           riccati_trajectory, stroboscopic_steady_riccati)
from .twomode import (CollectiveSteadyState, collective_steady,
                      collective_transform, is_entangled,
                      log_negativity_collective, two_mode_state)
from .retrodiction import (CalibrationResult, MeasurementRecord, RecordModel,
                           RetrodictionResult, analytic_inverse_entry,
                           initial_weights, run_calibration, simulate_record,
                           solve_posterior, variance_formulas)

__version__ = "0.1.0"
