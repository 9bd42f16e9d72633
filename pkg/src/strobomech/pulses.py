"""Finite-bandwidth pulse shapes and their effective symplectic action.

A rectangular drive of duration tau fills the cavity with a field that rises
on the timescale 2/kappa and rings down after the drive stops.  The
optomechanical coupling follows that field, so the effective interaction
accumulated over one pulse differs from the ideal instantaneous gate: the
measurement strength is reduced, the cavity picks up a self-phase, and a
small non-evading coupling to the oscillator momentum appears.

The accumulated interaction has a special structure: the second commutator of
the instantaneous generators is a c-number, so the Magnus expansion
terminates at second order and the pulse action is an exact four-by-four
symplectic matrix built from three numbers (chi, zeta and the momentum
admixture ratio).  ``pulse_symplectic_numeric`` integrates the time-ordered
flow directly and exists purely to validate that claim.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import UsageError
from .gaussian import SymplecticTransform, symplectic_form
from .params import PulseParams

__all__ = [
    "cavity_field",
    "coupling_rate",
    "magnus_coefficients",
    "nonqnd_symplectic",
    "pulse_symplectic_numeric",
]


def cavity_field(t, pulse: PulseParams):
    """Cavity field amplitude at time t for a drive centered on [-tau/2, tau/2].

    Accepts scalars or arrays.  The amplitude is normalized so that the
    flat-top value is 2*sqrt(N_p / (kappa tau)).
    """
    t = np.asarray(t, dtype=float)
    kappa, tau = pulse.kappa, pulse.tau
    amp = 2.0 * math.sqrt(pulse.N_p / (kappa * tau))
    rising = amp * -np.expm1(-0.5 * kappa * (t + 0.5 * tau))
    ringdown = amp * 2.0 * math.sinh(0.25 * kappa * tau) * np.exp(-0.5 * kappa * t)
    field = np.where(t <= 0.5 * tau, rising, ringdown)
    field = np.where(t < -0.5 * tau, 0.0, field)
    if field.ndim == 0:
        return float(field)
    return field


def coupling_rate(t, pulse: PulseParams):
    """Linearized optomechanical coupling g0 * field(t)."""
    return pulse.g0 * cavity_field(t, pulse)


def magnus_coefficients(pulse: PulseParams, omega_m: float = 1.0) -> tuple[float, float, float]:
    """Exact accumulated pulse coefficients (chi, zeta, ratio).

    chi    measurement strength of the pulse including the finite-bandwidth
           reduction relative to g_adiabatic * tau
    zeta   cavity self-phase coefficient, the double integral of the coupling
           autocorrelation against sin(omega_m (t1 - t2)); for short pulses it
           reduces to g_ad^2 kappa omega_m tau^2 / (kappa^2 + 4 omega_m^2)
    ratio  admixture of the oscillator momentum into the measured quadrature,
           equal to 2 omega_m / kappa

    The pulse tail is included in full (the field ringdown after the drive is
    integrated to infinity).
    """
    if omega_m <= 0:
        raise UsageError(f"omega_m must be positive, got {omega_m}")
    kappa = pulse.kappa
    tau = pulse.tau
    g_ad = pulse.g_adiabatic
    x = omega_m / kappa
    chi = 2.0 * (g_ad / omega_m) * math.sin(0.5 * omega_m * tau) / (1.0 + 4.0 * x * x)
    den = 4.0 * omega_m * omega_m + kappa * kappa
    zeta = g_ad * g_ad * (
        tau / omega_m
        - (8.0 * omega_m / kappa) * -math.expm1(-0.5 * kappa * tau) / den
        - (kappa / omega_m) ** 2 * math.sin(omega_m * tau) / den)
    ratio = 2.0 * omega_m / kappa
    return chi, zeta, ratio


def nonqnd_symplectic(chi: float, zeta: float, ratio: float) -> SymplecticTransform:
    """Pulse action on (X_c, P_c, X_m, P_m) from the accumulated coefficients.

    The matrix is I + A with A nilpotent, so the expression is exact, not a
    truncation.  ``ratio = 0`` and ``zeta = 0`` recover the ideal
    backaction-evading gate.
    """
    mat = np.eye(4)
    mat[1, 0] = zeta
    mat[1, 2] = chi
    mat[1, 3] = chi * ratio
    mat[2, 0] = -chi * ratio
    mat[3, 0] = chi
    return SymplecticTransform(mat)


def _generator_matrix(g_t: float, cos_th: float, sin_th: float) -> np.ndarray:
    """Flow matrix -Omega g for H = g X_c (cos X_m + sin P_m)."""
    a = np.zeros((4, 4))
    gc = g_t * cos_th
    gs = g_t * sin_th
    a[1, 2] = gc
    a[1, 3] = gs
    a[2, 0] = -gs
    a[3, 0] = gc
    return a


def pulse_symplectic_numeric(pulse: PulseParams, omega_m: float = 1.0,
                             steps_per_pulse: int = 10_000,
                             tail: float | None = None,
                             tail_step_factor: int = 10) -> np.ndarray:
    """Time-ordered pulse action by direct integration, for validation.

    Integrates dS/dt = A(t) S with a fixed-step classical Runge-Kutta scheme
    across the drive window and then down the field ringdown (default tail
    length 30/kappa, by which point the remaining field is below 1e-6 of
    peak).  The carrier phase is referenced to the pulse center.
    """
    if steps_per_pulse < 10:
        raise UsageError("steps_per_pulse must be at least 10")
    if tail is None:
        tail = 30.0 / pulse.kappa
    if tail < 0:
        raise UsageError(f"tail must be nonnegative, got {tail}")

    def a_matrix(t):
        g_t = pulse.g0 * cavity_field(t, pulse)
        return _generator_matrix(g_t, math.cos(omega_m * t), math.sin(omega_m * t))

    def run(s, t0, t1, steps):
        dt = (t1 - t0) / steps
        for i in range(steps):
            t = t0 + i * dt
            a0 = a_matrix(t)
            ah = a_matrix(t + 0.5 * dt)
            a1 = a_matrix(t + dt)
            k1 = a0 @ s
            k2 = ah @ (s + 0.5 * dt * k1)
            k3 = ah @ (s + 0.5 * dt * k2)
            k4 = a1 @ (s + dt * k3)
            s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return s

    s = np.eye(4)
    s = run(s, -0.5 * pulse.tau, 0.5 * pulse.tau, steps_per_pulse)
    if tail > 0.0:
        tail_steps = max(10, int(steps_per_pulse * tail / (pulse.tau * tail_step_factor)))
        s = run(s, 0.5 * pulse.tau, 0.5 * pulse.tau + tail, tail_steps)

    omega = symplectic_form(2)
    defect = np.abs(s @ omega @ s.T - omega).max()
    if defect > 1e-6:
        raise UsageError(
            f"integrated pulse action lost symplecticity (defect {defect:.3g}); "
            "increase steps_per_pulse")
    return s
