"""Stroboscopic conditional dynamics of a pulse-probed oscillator.

One cycle of the protocol consists of damped free evolution between pulses
followed by an instantaneous backaction-evading position measurement of
strength chi.  Both pieces act on the 2x2 covariance matrix of the probed
mode in (X, P) order; conditional covariances do not depend on measurement
outcomes, so means are not tracked at this level.

Every map comes in two flavours: ``apply`` returns the new covariance, and
``delta`` returns the increment.  The increment form matters because near the
stroboscopic steady state at high quality factor the per-cycle change of the
momentum variance is some ten orders of magnitude below the variance itself,
and forming ``apply(cov) - cov`` would lose it to cancellation.  The Newton
solver in :func:`fixed_point` works entirely with increments for this reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, UsageError
from .params import PhysicalParams

__all__ = [
    "measurement_map",
    "measurement_delta",
    "thermal_rotation_map",
    "thermal_rotation_delta",
    "Measurement",
    "ThermalRotation",
    "Composition",
    "bae_cycle",
    "cooling_cycle",
    "fixed_point",
    "steady_variance_x",
    "steady_variance_p",
    "bae_steady_exact",
    "bae_steady_largeQ",
    "squeezing_threshold_chi",
    "squeezing_threshold_exact",
    "cooling_steady_leading",
    "cooling_correction_x",
    "cooling_correction_p",
    "cooling_steady_largeQ",
    "ordering_gap_estimate",
]


def _cov2(cov) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2):
        raise UsageError(f"expected a 2x2 covariance matrix, got shape {cov.shape}")
    return cov


def _rot2(phi: float) -> np.ndarray:
    """Rotation matrix with entries snapped at exact quarter turns.

    Stroboscopic protocols evaluate the rotation at multiples of pi/2, where
    cos/sin of the floating-point angle leave residues of order 1e-16 that
    would leak between quadratures scaled by huge variances.  Snapping keeps
    half- and quarter-turn evolution exact.
    """
    c, s = math.cos(phi), math.sin(phi)
    if abs(c) < 1e-15:
        c = 0.0
    if abs(s) < 1e-15:
        s = 0.0
    if abs(abs(c) - 1.0) < 1e-15:
        c = math.copysign(1.0, c)
    if abs(abs(s) - 1.0) < 1e-15:
        s = math.copysign(1.0, s)
    return np.array([[c, s], [-s, c]])


def measurement_map(cov, chi: float) -> np.ndarray:
    """Conditional update of one pulsed position measurement of strength chi.

    The X variance is divided by 1 + 2 chi^2 X, the P variance picks up the
    backaction chi^2 / 2, and correlations are suppressed by the same factor
    as X.
    """
    return _cov2(cov) + measurement_delta(cov, chi)


def measurement_delta(cov, chi: float) -> np.ndarray:
    """Increment produced by :func:`measurement_map`, free of cancellation."""
    cov = _cov2(cov)
    if chi < 0:
        raise UsageError(f"chi must be nonnegative, got {chi}")
    x, p, c = cov[0, 0], cov[1, 1], cov[0, 1]
    chi2 = chi * chi
    denom = 1.0 + 2.0 * chi2 * x
    if denom <= 0.0:
        raise DomainError(
            f"measurement update undefined: 1 + 2 chi^2 sigma_X = {denom} <= 0")
    dx = -2.0 * chi2 * x * x / denom
    dp = 0.5 * chi2 - 2.0 * chi2 * c * c / denom
    dc = -2.0 * chi2 * x * c / denom
    return np.array([[dx, dc], [dc, dp]])


def thermal_rotation_map(cov, phi: float, gamma_t: float, n_bar: float) -> np.ndarray:
    """Free rotation by phi with damping toward the thermal state over gamma_t."""
    return _cov2(cov) + thermal_rotation_delta(cov, phi, gamma_t, n_bar)


def thermal_rotation_delta(cov, phi: float, gamma_t: float, n_bar: float) -> np.ndarray:
    cov = _cov2(cov)
    if gamma_t < 0:
        raise UsageError(f"gamma_t must be nonnegative, got {gamma_t}")
    if n_bar < 0:
        raise UsageError(f"n_bar must be nonnegative, got {n_bar}")
    rot = _rot2(phi)
    rotated = rot @ cov @ rot.T
    rotated = 0.5 * (rotated + rotated.T)
    decay = -math.expm1(-gamma_t)
    thermal = (n_bar + 0.5) * np.eye(2)
    return (rotated - cov) + decay * (thermal - rotated)


@dataclass(frozen=True)
class Measurement:
    """Pulsed position measurement of strength chi as a covariance map."""

    chi: float

    def apply(self, cov) -> np.ndarray:
        return measurement_map(cov, self.chi)

    def delta(self, cov) -> np.ndarray:
        return measurement_delta(cov, self.chi)


@dataclass(frozen=True)
class ThermalRotation:
    """Damped rotation by phi accumulating gamma_t of thermal contact."""

    phi: float
    gamma_t: float
    n_bar: float

    def apply(self, cov) -> np.ndarray:
        return thermal_rotation_map(cov, self.phi, self.gamma_t, self.n_bar)

    def delta(self, cov) -> np.ndarray:
        return thermal_rotation_delta(cov, self.phi, self.gamma_t, self.n_bar)


class Composition:
    """Covariance maps applied in sequence, first element first.

    ``delta`` accumulates the increments of the stages so that the total
    change stays accurate even when it is tiny compared to the covariance.
    """

    def __init__(self, maps):
        self.maps = tuple(maps)
        if not self.maps:
            raise UsageError("Composition needs at least one map")

    def apply(self, cov) -> np.ndarray:
        out = _cov2(cov)
        for stage in self.maps:
            out = stage.apply(out)
        return out

    def delta(self, cov) -> np.ndarray:
        cov = _cov2(cov)
        total = np.zeros((2, 2))
        for stage in self.maps:
            total = total + stage.delta(cov + total)
        return total

    def __repr__(self):
        return f"Composition({list(self.maps)!r})"


def bae_cycle(params: PhysicalParams, k: int = 1,
              order: str = "measure_last") -> Composition:
    """One half-period (times k) cycle of the backaction-evading protocol.

    Pulses arrive every k half-periods of the oscillator, so the rotation
    between them is by k*pi and the same position quadrature is measured each
    time.  ``order`` selects whether the measurement closes the cycle
    ("measure_last", the default) or opens it ("measure_first"); the two
    choices have different fixed points at finite quality factor.
    """
    if k < 1:
        raise UsageError(f"k must be a positive integer, got {k}")
    gamma_t = k * math.pi * params.gamma / params.omega_m
    thermal = ThermalRotation(phi=k * math.pi, gamma_t=gamma_t, n_bar=params.n_bar)
    meas = Measurement(params.chi_effective)
    if order == "measure_last":
        return Composition([thermal, meas])
    if order == "measure_first":
        return Composition([meas, thermal])
    raise UsageError(f"order must be 'measure_last' or 'measure_first', got {order!r}")


def cooling_cycle(params: PhysicalParams) -> Composition:
    """Quarter-period cycle that alternates the measured quadrature.

    With pulses a quarter period apart each measurement squeezes the
    quadrature the previous one anti-squeezed, which cools the mode toward a
    nearly pure, slightly squeezed state instead of evading backaction.
    """
    gamma_t = 0.5 * math.pi * params.gamma / params.omega_m
    thermal = ThermalRotation(phi=0.5 * math.pi, gamma_t=gamma_t, n_bar=params.n_bar)
    return Composition([thermal, Measurement(params.chi_effective)])


def _pack(cov) -> np.ndarray:
    return np.array([cov[0, 0], cov[1, 1], cov[0, 1]])


def _unpack(v) -> np.ndarray:
    return np.array([[v[0], v[2]], [v[2], v[1]]])


def _fd_jacobian(residual, v, f0):
    jac = np.empty((3, 3))
    for j in range(3):
        h = 1.49e-8 * (1.0 + abs(v[j]))
        vj = v.copy()
        vj[j] += h
        jac[:, j] = (residual(vj) - f0) / h
    return jac


def fixed_point(cycle, seed_cov, tol: float = 1e-12, max_iter: int | None = None,
                method: str = "newton", return_info: bool = False):
    """Self-consistent covariance of a cycle map.

    Solves delta(cov) = 0 with either damped Newton iteration on the packed
    (sigma_X, sigma_P, sigma_XP) vector (default) or plain fixed-point
    iteration.  The tolerance is per component: every increment entry must
    drop below ``tol * (1 + |corresponding entry|)``.  Newton keeps stepping
    past that point while the residual still improves substantially, which
    takes each direction, however weakly contracting, down to its arithmetic
    noise floor.
    """
    v = _pack(_cov2(seed_cov)).astype(float)

    def residual(vec):
        return _pack(cycle.delta(_unpack(vec)))

    def within_tol(vec, f):
        return bool(np.all(np.abs(f) <= tol * (1.0 + np.abs(vec))))

    if method == "iterate":
        limit = 10_000_000 if max_iter is None else max_iter
        f0 = residual(v)
        for iteration in range(1, limit + 1):
            if within_tol(v, f0):
                break
            v = v + f0
            f0 = residual(v)
        else:
            raise ConvergenceError(
                f"fixed-point iteration did not converge in {limit} steps",
                residual=float(np.abs(f0).max()), iterations=limit)
        iterations, res = iteration, float(np.abs(f0).max())
    elif method == "newton":
        limit = 200 if max_iter is None else max_iter
        iterations = None
        best_v, best_res = v.copy(), math.inf
        prev_res = math.inf
        for iteration in range(1, limit + 1):
            f0 = residual(v)
            res = float(np.abs(f0).max())
            converged = within_tol(v, f0)
            if res < best_res:
                best_v, best_res = v.copy(), res
            # once inside tolerance, keep polishing only while the residual
            # still drops sharply; a stall means the noise floor is reached
            if converged and (res == 0.0 or res > 0.25 * prev_res):
                iterations = iteration
                break
            jac = _fd_jacobian(residual, v, f0)
            try:
                dv = np.linalg.solve(jac, -f0)
            except np.linalg.LinAlgError:
                if converged:
                    iterations = iteration
                    break
                raise ConvergenceError(
                    "singular Jacobian in Newton iteration",
                    residual=res, iterations=iteration)
            step = 1.0
            for _ in range(40):
                trial = v + step * dv
                if trial[0] > 0.0 and trial[1] > 0.0:
                    break
                step *= 0.5
            else:
                raise ConvergenceError(
                    "Newton step could not keep variances positive",
                    residual=res, iterations=iteration)
            v = v + step * dv
            prev_res = res
        if iterations is None:
            raise ConvergenceError(
                f"Newton iteration did not converge in {limit} steps",
                residual=best_res, iterations=limit)
        v, res = best_v, best_res
    else:
        raise UsageError(f"method must be 'newton' or 'iterate', got {method!r}")

    cov = _unpack(v)
    if return_info:
        return cov, {"iterations": iterations, "residual": res, "method": method}
    return cov


# ---------------------------------------------------------------------------
# Closed forms for the steady state


def steady_variance_x(chi: float, n_bar: float, gamma_t: float) -> float:
    """Exact steady conditional X variance for per-cycle damping gamma_t."""
    if chi < 0 or n_bar < 0 or gamma_t <= 0:
        raise UsageError("need chi >= 0, n_bar >= 0 and gamma_t > 0")
    z = (2.0 * n_bar + 1.0) * chi * chi
    if z == 0.0:
        return n_bar + 0.5
    coth = 1.0 / math.tanh(0.5 * gamma_t)
    return (2.0 * n_bar + 1.0) / (1.0 + z + math.sqrt(1.0 + z * z + 2.0 * z * coth))


def steady_variance_p(chi: float, n_bar: float, gamma_t: float) -> float:
    """Exact steady conditional P variance for per-cycle damping gamma_t."""
    if chi < 0 or n_bar < 0 or gamma_t <= 0:
        raise UsageError("need chi >= 0, n_bar >= 0 and gamma_t > 0")
    return n_bar + 0.5 + chi * chi / (-2.0 * math.expm1(-gamma_t))


def bae_steady_exact(params: PhysicalParams, k: int = 1) -> tuple[float, float]:
    """Exact steady (sigma_X, sigma_P) of the measure-last half-period cycle."""
    if k < 1:
        raise UsageError(f"k must be a positive integer, got {k}")
    gamma_t = k * math.pi / params.quality
    chi = params.chi_effective
    return (steady_variance_x(chi, params.n_bar, gamma_t),
            steady_variance_p(chi, params.n_bar, gamma_t))


def bae_steady_largeQ(params: PhysicalParams, k: int = 1) -> tuple[float, float, float]:
    """High-quality-factor asymptotics (sigma_X, sigma_P, purity).

    Valid once quality/k exceeds roughly 1e3/chi^2; within one percent of the
    exact fixed point from about 1e4/chi^2 onward.
    """
    if k < 1:
        raise UsageError(f"k must be a positive integer, got {k}")
    chi = params.chi_effective
    if chi <= 0:
        raise DomainError("the asymptotic steady state needs chi > 0")
    n_bar = params.n_bar
    q_eff = params.quality / k
    sigma_x = math.sqrt(2.0 * math.pi * (n_bar + 0.5)) / (2.0 * chi * math.sqrt(q_eff))
    sigma_p = n_bar + 0.5 + q_eff * chi * chi / (2.0 * math.pi)
    mu = (math.pi ** 0.25 * (q_eff / (2.0 * n_bar + 1.0)) ** 0.25
          * math.sqrt(chi / (2.0 * math.pi * n_bar + q_eff * chi * chi)))
    return sigma_x, sigma_p, mu


def squeezing_threshold_chi(n_bar: float, quality: float, k: int = 1) -> float:
    """Measurement strength where the asymptotic sigma_X crosses vacuum."""
    if n_bar < 0 or quality <= 0 or k < 1:
        raise UsageError("need n_bar >= 0, quality > 0 and k >= 1")
    return math.sqrt(2.0 * math.pi * (n_bar + 0.5) * k / quality)


def squeezing_threshold_exact(n_bar: float, quality: float, k: int = 1) -> float:
    """Measurement strength where the exact steady sigma_X crosses vacuum.

    Setting the exact steady X variance equal to 1/2 is a quadratic condition
    in z = (2 n_bar + 1) chi^2 with the closed-form root used here.  For
    n_bar = 0 every chi > 0 squeezes, so the threshold is zero.
    """
    if n_bar < 0 or quality <= 0 or k < 1:
        raise UsageError("need n_bar >= 0, quality > 0 and k >= 1")
    if n_bar == 0:
        return 0.0
    gamma_t = k * math.pi / quality
    coth = 1.0 / math.tanh(0.5 * gamma_t)
    big_k = 4.0 * n_bar + 1.0
    z = (big_k * big_k - 1.0) / (2.0 * (coth + big_k))
    return math.sqrt(z / (2.0 * n_bar + 1.0))


def cooling_steady_leading(chi: float) -> tuple[float, float]:
    """Infinite-quality limit (sigma_X, sigma_P) of the quarter-period cycle.

    The product of the two variances equals exactly 1/4, so the limiting
    state is pure: a mildly squeezed vacuum.
    """
    if chi < 0:
        raise UsageError(f"chi must be nonnegative, got {chi}")
    root = math.sqrt(4.0 + chi ** 4)
    return (root - chi * chi) / 4.0, (root + chi * chi) / 4.0


def cooling_correction_x(chi: float, n_bar: float) -> float:
    """Coefficient of 1/quality in the quarter-period steady sigma_X."""
    if chi <= 0:
        raise DomainError("the finite-quality correction needs chi > 0")
    c2 = chi * chi
    c4 = c2 * c2
    c6 = c4 * c2
    root = math.sqrt(c4 + 4.0)
    inner = (-4.0 * n_bar * c2
             + (4.0 * n_bar * (c4 + 2.0) + c6 + 2.0 * c4 + 4.0 * c2 + 4.0) / root
             - c4 - 2.0 * c2 - 2.0)
    return math.pi * inner / (8.0 * c2)


def cooling_correction_p(chi: float, n_bar: float) -> float:
    """Coefficient of 1/quality in the quarter-period steady sigma_P."""
    if chi <= 0:
        raise DomainError("the finite-quality correction needs chi > 0")
    c2 = chi * chi
    c4 = c2 * c2
    root = math.sqrt(c4 + 4.0)
    inner = 2.0 * n_bar * (c4 + 2.0) + c4 - root + 2.0
    return math.pi * inner / (4.0 * c2 * root)


def cooling_steady_largeQ(params: PhysicalParams) -> tuple[float, float]:
    """Quarter-period steady state to first order in 1/quality."""
    chi = params.chi_effective
    sx0, sp0 = cooling_steady_leading(chi)
    q = params.quality
    return (sx0 + cooling_correction_x(chi, params.n_bar) / q,
            sp0 + cooling_correction_p(chi, params.n_bar) / q)


def ordering_gap_estimate(params: PhysicalParams, k: int = 1) -> float:
    """Relative sigma_X difference between measure-last and measure-first.

    The measure-first fixed point is one thermal stage ahead of the
    measure-last one, which at high quality adds k*pi/Q * (n_bar + 1/2) of
    thermal variance to the squeezed quadrature.
    """
    chi = params.chi_effective
    if chi <= 0:
        raise DomainError("the ordering gap estimate needs chi > 0")
    return 2.0 * chi * math.sqrt(
        math.pi * (params.n_bar + 0.5) * k / (2.0 * params.quality))
