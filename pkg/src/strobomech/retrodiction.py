"""Estimating past oscillator positions from a full pulse record.

Each pulse yields one noisy reading of the measured quadrature, and between
pulses the quadrature relaxes toward the thermal distribution.  Conditioned
on the whole record, the sequence of true positions is Gaussian with a
tridiagonal precision matrix: diagonal blocks combine prior, measurement and
dynamics information, and the single off-diagonal encodes the one-step
dynamics.  Everything of interest (the smoothed estimate of the initial
position, its variance, and the weights the estimate puts on later
readings) follows from that matrix.

Two routes are implemented.  The numeric route factorizes the banded matrix
directly and recovers the diagonal of its inverse from the forward and
backward pivot recursions.  The analytic route normalizes the matrix by its
corner entry (the two corners coincide exactly when the prior is the
stationary thermal distribution) and evaluates inverse entries from the two
roots of the characteristic quadratic; it stays finite for records of any
length because only ratios below one are ever raised to large powers.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .errors import DomainError, UnsupportedBranchError, UsageError

__all__ = [
    "RecordModel",
    "MeasurementRecord",
    "build_precision",
    "RetrodictionResult",
    "solve_posterior",
    "reduced_coeffs",
    "analytic_inverse_entry",
    "analytic_covariance_entry",
    "analytic_variance",
    "initial_variance_limit",
    "steady_variance_limit",
    "initial_weights",
    "weight_decay_ratio",
    "variance_formulas",
    "simulate_record",
    "CalibrationResult",
    "run_calibration",
]


@dataclass(frozen=True)
class RecordModel:
    """Statistical model of a pulsed position record of length n.

    sigma_m2    per-pulse measurement noise variance
    sigma_d2    variance added by the bath between consecutive pulses
    gamma_T     damping exponent accumulated between consecutive pulses
    sigma_x0_2  prior variance of the initial position
    """

    n: int
    sigma_m2: float
    sigma_d2: float
    gamma_T: float
    sigma_x0_2: float

    def __post_init__(self):
        if self.n < 2:
            raise UsageError(f"record length must be at least 2, got {self.n}")
        for name in ("sigma_m2", "sigma_d2", "sigma_x0_2"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive, got {getattr(self, name)}")
        if self.gamma_T < 0:
            raise UsageError(f"gamma_T must be nonnegative, got {self.gamma_T}")

    @classmethod
    def from_physical(cls, chi: float, n_bar: float, quality: float, n: int,
                      k: int = 1, sigma_x0_2: float | None = None) -> "RecordModel":
        """Record model of the half-period protocol at strength chi.

        The prior defaults to the thermal distribution, which also makes the
        analytic route exact.
        """
        if chi <= 0:
            raise UsageError(f"chi must be positive, got {chi}")
        if quality <= 0 or k < 1:
            raise UsageError("need quality > 0 and k >= 1")
        gamma_t = k * math.pi / quality
        sigma_d2 = (n_bar + 0.5) * -math.expm1(-gamma_t)
        return cls(n=n, sigma_m2=1.0 / (2.0 * chi * chi), sigma_d2=sigma_d2,
                   gamma_T=gamma_t,
                   sigma_x0_2=(n_bar + 0.5) if sigma_x0_2 is None else sigma_x0_2)

    @property
    def transfer(self) -> float:
        """Amplitude decay factor between consecutive pulses."""
        return math.exp(-0.5 * self.gamma_T)


@dataclass(frozen=True)
class MeasurementRecord:
    """Readings of one (or a batch of) simulated pulse sequences.

    ``y`` holds the noisy readings and ``x`` the underlying true positions,
    with trailing axis of length n and an optional leading trial axis.
    """

    y: np.ndarray
    x: np.ndarray | None = None

    def __post_init__(self):
        if self.x is not None and self.x.shape != self.y.shape:
            raise UsageError(
                f"x and y shapes differ: {self.x.shape} vs {self.y.shape}")


def build_precision(model: RecordModel) -> tuple[np.ndarray, float]:
    """Diagonal and constant off-diagonal of the posterior precision matrix."""
    n = model.n
    phi = model.transfer
    phi2 = phi * phi
    diag = np.full(n, 1.0 / model.sigma_m2 + (1.0 + phi2) / model.sigma_d2)
    diag[0] = 1.0 / model.sigma_x0_2 + 1.0 / model.sigma_m2 + phi2 / model.sigma_d2
    diag[-1] = 1.0 / model.sigma_m2 + 1.0 / model.sigma_d2
    return diag, -phi / model.sigma_d2


def _inverse_diagonal(diag: np.ndarray, off: float) -> np.ndarray:
    """Diagonal of the inverse of an SPD tridiagonal matrix.

    Runs the pivot recursion from both ends; the i-th inverse entry is
    1 / (forward pivot + backward pivot - diagonal).  Failing pivots mean
    the matrix is not positive definite.
    """
    n = diag.shape[0]
    off2 = off * off
    fwd = np.empty(n)
    bwd = np.empty(n)
    fwd[0] = diag[0]
    for i in range(1, n):
        if fwd[i - 1] <= 0.0:
            raise DomainError("precision matrix is not positive definite")
        fwd[i] = diag[i] - off2 / fwd[i - 1]
    if fwd[-1] <= 0.0:
        raise DomainError("precision matrix is not positive definite")
    bwd[-1] = diag[-1]
    for i in range(n - 2, -1, -1):
        bwd[i] = diag[i] - off2 / bwd[i + 1]
    return 1.0 / (fwd + bwd - diag)


def _banded(diag: np.ndarray, off: float) -> np.ndarray:
    ab = np.zeros((2, diag.shape[0]))
    ab[0, 1:] = off
    ab[1] = diag
    return ab


@dataclass(frozen=True)
class RetrodictionResult:
    """Posterior summary of a smoothed pulse record."""

    posterior_mean: np.ndarray
    posterior_var_diag: np.ndarray
    weights_row1: np.ndarray

    @property
    def initial_mean(self) -> float:
        return float(self.posterior_mean[0])

    @property
    def initial_variance(self) -> float:
        return float(self.posterior_var_diag[0])


def solve_posterior(model: RecordModel, record) -> RetrodictionResult:
    """Full posterior of the position sequence given one record.

    Returns the smoothed means, the posterior variances at every time, and
    the weights with which the readings enter the initial-position estimate.
    ``record`` may be a plain length-n vector or a MeasurementRecord.
    """
    if isinstance(record, MeasurementRecord):
        record = record.y
    record = np.asarray(record, dtype=float)
    if record.shape != (model.n,):
        raise UsageError(f"record must have shape ({model.n},), got {record.shape}")
    diag, off = build_precision(model)
    variance = _inverse_diagonal(diag, off)
    ab = _banded(diag, off)
    mean = solveh_banded(ab, record / model.sigma_m2)
    first_col = np.zeros(model.n)
    first_col[0] = 1.0
    weights = solveh_banded(ab, first_col) / model.sigma_m2
    return RetrodictionResult(posterior_mean=mean, posterior_var_diag=variance,
                              weights_row1=weights)


# ---------------------------------------------------------------------------
# Analytic route


def reduced_coeffs(model: RecordModel) -> tuple[float, float]:
    """Off-diagonal and interior diagonal of the corner-normalized precision.

    Requires the two corner entries to coincide, which holds exactly for the
    stationary thermal prior.
    """
    diag, off = build_precision(model)
    corner = diag[0]
    if abs(diag[-1] - corner) > 1e-10 * corner:
        raise UnsupportedBranchError(
            "the analytic route needs equal corner entries; use the "
            "stationary thermal prior or the numeric route")
    phi = model.transfer
    interior = 1.0 / model.sigma_m2 + (1.0 + phi * phi) / model.sigma_d2
    return off / corner, interior / corner


def _corner(model: RecordModel) -> float:
    return build_precision(model)[0][0]


def _roots(a: float, b: float):
    """Roots of xi^2 = b xi - a^2, complex when the discriminant is negative."""
    disc = b * b - 4.0 * a * a
    if disc >= 0.0:
        sqrt_d = math.sqrt(disc)
    else:
        sqrt_d = cmath.sqrt(complex(disc))
    if abs(sqrt_d) == 0.0:
        raise DomainError(
            "b^2 = 4a^2 makes the tridiagonal matrix singular in the closed "
            "form; the analytic route does not apply at the critical point")
    xi_plus = 0.5 * (b + sqrt_d)
    xi_minus = 0.5 * (b - sqrt_d)
    return xi_plus, xi_minus, sqrt_d


def _nu(k: int, rho, xi_plus, xi_minus):
    return rho ** k * (xi_plus - 1.0) + (1.0 - xi_minus)


def analytic_inverse_entry(a: float, b: float, n: int, i: int, j: int) -> float:
    """Entry (i, j) of the inverse of the unit-corner tridiagonal matrix.

    The matrix has 1 in both corners, ``b`` on the rest of the diagonal and
    ``a`` on the two off-diagonals.  Indices are 0-based.  Works on both the
    monotone and the oscillatory branch of the characteristic roots; the
    result is always real.
    """
    if n < 1:
        raise UsageError(f"matrix size must be positive, got {n}")
    if not (0 <= i < n and 0 <= j < n):
        raise UsageError(f"indices ({i}, {j}) out of range for n = {n}")
    if n == 1:
        return 1.0
    if a == 0.0:
        return 1.0 if i == j else 0.0
    if i > j:
        i, j = j, i
    xi_plus, xi_minus, sqrt_d = _roots(a, b)
    rho = xi_minus / xi_plus
    sign = -1.0 if (i + j) % 2 else 1.0
    numer = (sign * (a / xi_plus) ** (j - i) * xi_plus
             * _nu(i, rho, xi_plus, xi_minus) * _nu(n - 1 - j, rho, xi_plus, xi_minus))
    denom = sqrt_d * (xi_plus * _nu(n - 1, rho, xi_plus, xi_minus)
                      - a * a * _nu(n - 2, rho, xi_plus, xi_minus))
    value = numer / denom
    if isinstance(value, complex):
        if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
            raise UnsupportedBranchError(
                f"inverse entry came out complex ({value}); the matrix may "
                "not be positive definite")
        value = value.real
    return value


def analytic_covariance_entry(model: RecordModel, i: int, j: int) -> float:
    """Entry (i, j) of the posterior covariance from the closed form."""
    a, b = reduced_coeffs(model)
    return analytic_inverse_entry(a, b, model.n, i, j) / _corner(model)


def analytic_variance(model: RecordModel, i: int) -> float:
    """Posterior variance at index i from the closed form."""
    return analytic_covariance_entry(model, i, i)


def initial_variance_limit(model: RecordModel) -> float:
    """Long-record limit of the initial-position posterior variance."""
    a, b = reduced_coeffs(model)
    xi_plus, _, _ = _roots(a, b)
    if isinstance(xi_plus, complex):
        raise UnsupportedBranchError(
            "the long-record limit requires the monotone branch")
    return 1.0 / ((1.0 - a * a / xi_plus) * _corner(model))


def steady_variance_limit(model: RecordModel) -> float:
    """Long-record limit of the posterior variance deep inside the record."""
    a, b = reduced_coeffs(model)
    xi_plus, xi_minus, sqrt_d = _roots(a, b)
    if isinstance(xi_plus, complex):
        raise UnsupportedBranchError(
            "the long-record limit requires the monotone branch")
    return (1.0 - xi_minus) / (sqrt_d * (1.0 - a * a / xi_plus) * _corner(model))


def initial_weights(model: RecordModel) -> np.ndarray:
    """Weights of the readings in the initial-position estimate.

    Exact closed form of the first covariance row, normalized so that
    ``weights @ y`` reproduces the smoothed initial position.  For records
    much longer than the decay length the weights become geometric with
    ratio ``weight_decay_ratio``; reading j then enters with weight
    proportional to (-a / xi_plus)^j, positive since a < 0.
    """
    n = model.n
    a, b = reduced_coeffs(model)
    xi_plus, xi_minus, sqrt_d = _roots(a, b)
    if isinstance(xi_plus, complex):
        raise UnsupportedBranchError(
            "decaying weights exist only on the monotone branch")
    rho = xi_minus / xi_plus
    j = np.arange(n)
    nu_tail = rho ** (n - 1 - j) * (xi_plus - 1.0) + (1.0 - xi_minus)
    denom = sqrt_d * (xi_plus * _nu(n - 1, rho, xi_plus, xi_minus)
                      - a * a * _nu(n - 2, rho, xi_plus, xi_minus))
    row = (-a / xi_plus) ** j * xi_plus * sqrt_d * nu_tail / denom
    return row / (model.sigma_m2 * _corner(model))


def weight_decay_ratio(model: RecordModel) -> float:
    """Factor by which successive readings are discounted in the estimate."""
    a, b = reduced_coeffs(model)
    xi_plus, _, _ = _roots(a, b)
    if isinstance(xi_plus, complex):
        raise UnsupportedBranchError(
            "the decay ratio exists only on the monotone branch")
    return abs(a) / xi_plus


def variance_formulas(model: RecordModel) -> tuple[float, float]:
    """Leading long-record forms of the retrodicted variances.

    Returns (initial, steady): the variance of the smoothed initial position
    and its value deep inside a long record, which is half at leading order.
    The initial value coincides with the steady conditional variance of the
    forward protocol, as it must: with data on one side only, smoothing
    backward in time is filtering in reverse.
    """
    if model.gamma_T <= 0:
        raise UsageError("the leading-order forms require gamma_T > 0")
    thermal = model.sigma_d2 / -math.expm1(-model.gamma_T)
    initial = math.sqrt(model.gamma_T * thermal * model.sigma_m2)
    return initial, 0.5 * initial


# ---------------------------------------------------------------------------
# Sampling and calibration


def simulate_record(model: RecordModel, rng, trials: int | None = None,
                    x0: float | None = None) -> MeasurementRecord:
    """Draw true trajectories and their noisy readings from the model.

    ``rng`` is a numpy Generator or a seed for one.  With ``trials`` set the
    arrays have shape (trials, n); otherwise (n,).  ``x0`` pins the initial
    position instead of sampling it from the prior.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    shape = (1 if trials is None else trials, model.n)
    phi = model.transfer
    x = np.empty(shape)
    if x0 is None:
        x[:, 0] = rng.normal(0.0, math.sqrt(model.sigma_x0_2), size=shape[0])
    else:
        x[:, 0] = x0
    sigma_d = math.sqrt(model.sigma_d2)
    kicks = rng.normal(0.0, sigma_d, size=(shape[0], model.n - 1))
    for i in range(1, model.n):
        x[:, i] = phi * x[:, i - 1] + kicks[:, i - 1]
    y = x + rng.normal(0.0, math.sqrt(model.sigma_m2), size=shape)
    if trials is None:
        return MeasurementRecord(y=y[0], x=x[0])
    return MeasurementRecord(y=y, x=x)


@dataclass(frozen=True)
class CalibrationResult:
    """Monte Carlo check of the predicted posterior variances."""

    trials: int
    seed: int
    mse: np.ndarray
    predicted: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.mse / self.predicted

    @property
    def standard_error(self) -> float:
        """Relative scatter expected of each ratio entry."""
        return math.sqrt(2.0 / self.trials)


def run_calibration(model: RecordModel, trials: int, seed: int) -> CalibrationResult:
    """Compare smoothed-estimate errors against the predicted variances.

    For a correctly specified Gaussian model the mean squared error of the
    posterior mean equals the posterior variance at every index; the ratio
    of the two is 1 up to sampling noise of relative size sqrt(2/trials).
    """
    if trials < 2:
        raise UsageError(f"trials must be at least 2, got {trials}")
    rng = np.random.default_rng(seed)
    record = simulate_record(model, rng, trials=trials)
    diag, off = build_precision(model)
    predicted = _inverse_diagonal(diag, off)
    means = solveh_banded(_banded(diag, off), record.y.T / model.sigma_m2)
    errors = means - record.x.T
    mse = np.mean(errors * errors, axis=1)
    return CalibrationResult(trials=trials, seed=seed, mse=mse, predicted=predicted)
