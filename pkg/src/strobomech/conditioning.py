"""Conditional dynamics beyond the instantaneous-gate idealization.

Two complementary models live here.

The stroboscopic three-mode model keeps the cavity and one effective input
mode of the probe field per pulse.  Pulse, cavity and oscillator interact
through an exact symplectic map, the outgoing field quadrature is measured,
and the optical modes are discarded afterwards.  Compared with the ideal
gate the measurement strength is renormalized and extra backaction appears;
both renormalizations have closed forms, so the steady state does too.

The continuous model integrates the conditional covariance of cavity plus
oscillator under permanent homodyne detection of the emitted field, with the
drive switched on and off to form a pulse train.  It makes none of the
stroboscopic approximations and is the reference the closed forms are judged
against.  The oscillator is tracked in its rotating frame, with the carrier
phase of the coupling referenced to each window's pulse center; successive
windows are then strictly identical, at the price of a half-turn quadrature
relabeling per window that affects no variance, purity or entanglement
measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import (ConvergenceError, DomainError, InternalError,
                     StepSizeError, UsageError)
from .gaussian import (GaussianState, SymplecticTransform, cov_purity,
                       log_negativity, squeezing_db, symplectic_eigenvalues)
from .params import PhysicalParams, PulseParams
from .strobo import (fixed_point, steady_variance_p, steady_variance_x,
                     thermal_rotation_map)
from .pulses import cavity_field

__all__ = [
    "extended_pulse_unitary",
    "pulse_conditioning_step",
    "strobo_step_extended",
    "chi_meas_extended",
    "chi_back_extended",
    "extended_fixed_point",
    "extended_steady_exact",
    "extended_steady_largeQ",
    "TrajectoryResult",
    "riccati_trajectory",
    "stroboscopic_steady_riccati",
    "Fig4Point",
    "fig4_point",
]


# ---------------------------------------------------------------------------
# Stroboscopic three-mode model


def extended_pulse_unitary(chi: float, kappa_tau: float) -> SymplecticTransform:
    """Joint symplectic action of one pulse on (input, cavity, oscillator).

    Quadrature order is (X_in, P_in, X_c, P_c, X_m, P_m).  The generator
    couples the oscillator position to the cavity with strength chi and
    exchanges input and cavity quadratures at the rate set by kappa*tau.
    """
    if chi < 0:
        raise UsageError(f"chi must be nonnegative, got {chi}")
    if kappa_tau <= 0:
        raise UsageError(f"kappa_tau must be positive, got {kappa_tau}")
    theta = math.sqrt(kappa_tau)
    g = np.zeros((6, 6))
    g[4, 2] = g[2, 4] = chi
    g[3, 0] = g[0, 3] = theta
    g[2, 1] = g[1, 2] = -theta
    return SymplecticTransform.from_quadratic_generator(g)


def chi_meas_extended(chi: float, kappa_tau: float) -> float:
    """Measurement strength actually read out through the input mode."""
    theta = math.sqrt(kappa_tau)
    return chi * (1.0 - math.cos(theta)) / theta


def chi_back_extended(chi: float, kappa_tau: float) -> float:
    """Backaction strength felt by the oscillator momentum.

    Defined so the per-pulse momentum variance increase is chi_back^2 / 2.
    """
    theta = math.sqrt(kappa_tau)
    return chi * math.sqrt(2.0 * (1.0 - math.cos(theta))) / theta


def pulse_conditioning_step(mech_cov, chi: float, kappa_tau: float) -> np.ndarray:
    """One pulse on the oscillator: fresh optics, interact, measure, discard.

    The input and cavity modes start in vacuum, the joint unitary acts, the
    outgoing P quadrature of the input mode is measured, and both optical
    modes are traced out.  Returns the conditioned 2x2 oscillator covariance.
    """
    mech_cov = np.asarray(mech_cov, dtype=float)
    if mech_cov.shape != (2, 2):
        raise UsageError(f"expected a 2x2 oscillator covariance, got {mech_cov.shape}")
    s = extended_pulse_unitary(chi, kappa_tau).matrix
    sigma = 0.5 * np.eye(6)
    sigma[4:, 4:] = mech_cov
    sigma = s @ sigma @ s.T
    b_pp = sigma[1, 1]
    if b_pp <= 0.0:
        raise InternalError(f"measured quadrature has variance {b_pp} <= 0")
    rest = [0, 2, 3, 4, 5]
    u = sigma[rest, 1]
    reduced = sigma[np.ix_(rest, rest)] - np.outer(u, u) / b_pp
    return reduced[3:, 3:]


def strobo_step_extended(mech_cov, physical: PhysicalParams, pulse: PulseParams,
                         k: int = 1) -> np.ndarray:
    """Thermal half-period evolution followed by one finite-bandwidth pulse."""
    if k < 1:
        raise UsageError(f"k must be a positive integer, got {k}")
    gamma_t = k * math.pi * physical.gamma / physical.omega_m
    after_thermal = thermal_rotation_map(mech_cov, k * math.pi, gamma_t, physical.n_bar)
    return pulse_conditioning_step(after_thermal, pulse.chi_adiabatic,
                                   pulse.kappa * pulse.tau)


class _ExtendedCycle:
    """Adapter so the generic fixed-point solver can drive the pulse model.

    The increment is formed by plain subtraction; that limits trustworthy
    quality factors to about 1e7, far beyond where this model is used.
    """

    def __init__(self, physical, pulse, k):
        self.physical = physical
        self.pulse = pulse
        self.k = k

    def apply(self, cov):
        return strobo_step_extended(cov, self.physical, self.pulse, self.k)

    def delta(self, cov):
        return self.apply(cov) - np.asarray(cov, dtype=float)


def extended_fixed_point(physical: PhysicalParams, pulse: PulseParams, k: int = 1,
                         tol: float = 1e-10, return_info: bool = False):
    """Stroboscopic steady covariance of the three-mode pulse model."""
    cycle = _ExtendedCycle(physical, pulse, k)
    seed = np.diag(list(extended_steady_exact(physical, pulse, k)))
    return fixed_point(cycle, seed, tol=tol, return_info=return_info)


def extended_steady_exact(physical: PhysicalParams, pulse: PulseParams,
                          k: int = 1) -> tuple[float, float]:
    """Closed-form steady (sigma_X, sigma_P) of the three-mode pulse model.

    The position variance obeys the ideal-measurement recursion at the
    renormalized strength, while the momentum variance accumulates the
    renormalized backaction, so both follow the same closed forms as the
    ideal protocol with the two strengths substituted.
    """
    if k < 1:
        raise UsageError(f"k must be a positive integer, got {k}")
    gamma_t = k * math.pi / physical.quality
    kt = pulse.kappa * pulse.tau
    chi_m = chi_meas_extended(pulse.chi_adiabatic, kt)
    chi_b = chi_back_extended(pulse.chi_adiabatic, kt)
    return (steady_variance_x(chi_m, physical.n_bar, gamma_t),
            steady_variance_p(chi_b, physical.n_bar, gamma_t))


def extended_steady_largeQ(physical: PhysicalParams, pulse: PulseParams,
                           k: int = 1) -> tuple[float, float]:
    """High-quality asymptotics of the three-mode steady state."""
    if k < 1:
        raise UsageError(f"k must be a positive integer, got {k}")
    q_eff = physical.quality / k
    n_bar = physical.n_bar
    kt = pulse.kappa * pulse.tau
    chi_m = chi_meas_extended(pulse.chi_adiabatic, kt)
    chi_b = chi_back_extended(pulse.chi_adiabatic, kt)
    if chi_m == 0.0:
        raise DomainError(
            "sqrt(kappa tau) is a multiple of 2 pi, so the pulse reads out "
            "nothing and the asymptotic position variance diverges")
    sigma_x = math.sqrt(2.0 * math.pi * (n_bar + 0.5)) / (2.0 * chi_m * math.sqrt(q_eff))
    sigma_p = n_bar + 0.5 + q_eff * chi_b * chi_b / (2.0 * math.pi)
    return sigma_x, sigma_p


# ---------------------------------------------------------------------------
# Continuous conditional covariance dynamics


@dataclass
class _WindowContext:
    """Precomputed coupling samples for one pulse-train window [0, T)."""

    dt: float
    steps: int
    period: float
    pulse_end_step: int
    damping: np.ndarray      # length-4 diagonal of the drift matrix
    diffusion: np.ndarray    # 4x4 diagonal diffusion matrix
    eta_kappa2: float        # 2 * eta * kappa
    gc: np.ndarray           # coupling * cos(carrier) at (start, mid, end) nodes
    gs: np.ndarray           # coupling * sin(carrier), same layout


def _window_context(physical: PhysicalParams, pulse: PulseParams, eta: float,
                    dt: float | None) -> _WindowContext:
    if not 0.0 <= eta <= 1.0:
        raise UsageError(f"eta must lie in [0, 1], got {eta}")
    omega = physical.omega_m
    kappa = pulse.kappa
    period = math.pi / omega
    if pulse.tau >= period:
        raise UsageError("pulse duration must be shorter than the repetition period")
    limit = min(1.0 / kappa, 1.0 / omega) / 50.0
    if dt is None:
        dt = min(1.0 / kappa, 1.0 / omega) / 100.0
    if dt > limit:
        raise UsageError(
            f"dt = {dt:.3g} too coarse; need dt <= min(1/kappa, 1/omega_m)/50 = {limit:.3g}")
    steps = int(math.ceil(period / dt))
    dt = period / steps

    center = 0.5 * period
    ts = dt * np.arange(steps)
    nodes = np.stack([ts, ts + 0.5 * dt, ts + dt])
    amp = np.zeros_like(nodes)
    for j in (-2, -1, 0, 1, 2):
        amp += cavity_field(nodes - center - j * period, pulse)
    carrier = omega * (nodes - center)
    g_t = pulse.g0 * amp
    gamma = physical.gamma
    return _WindowContext(
        dt=dt,
        steps=steps,
        period=period,
        pulse_end_step=min(steps, int(round((center + 0.5 * pulse.tau) / dt))),
        damping=-0.5 * np.array([kappa, kappa, gamma, gamma]),
        diffusion=np.diag([0.5 * kappa, 0.5 * kappa,
                           gamma * (physical.n_bar + 0.5),
                           gamma * (physical.n_bar + 0.5)]),
        eta_kappa2=2.0 * eta * kappa,
        gc=g_t * np.cos(carrier),
        gs=g_t * np.sin(carrier),
    )


def _riccati_rhs(sigma, ctx, gc, gs):
    """Riccati right-hand side; sigma may carry leading batch axes."""
    drift = ctx.damping[:, None] * sigma
    drift[..., 1, :] += gc * sigma[..., 2, :] + gs * sigma[..., 3, :]
    drift[..., 2, :] -= gs * sigma[..., 0, :]
    drift[..., 3, :] += gc * sigma[..., 0, :]
    out = drift + np.swapaxes(drift, -1, -2) + ctx.diffusion
    v = sigma[..., :, 1].copy()
    v[..., 1] -= 0.5
    out -= ctx.eta_kappa2 * (v[..., :, None] * v[..., None, :])
    return out


def _integrate_steps(sigma, ctx, start: int, stop: int) -> np.ndarray:
    dt = ctx.dt
    gc, gs = ctx.gc, ctx.gs
    for i in range(start, stop):
        k1 = _riccati_rhs(sigma, ctx, gc[0, i], gs[0, i])
        k2 = _riccati_rhs(sigma + 0.5 * dt * k1, ctx, gc[1, i], gs[1, i])
        k3 = _riccati_rhs(sigma + 0.5 * dt * k2, ctx, gc[1, i], gs[1, i])
        k4 = _riccati_rhs(sigma + dt * k3, ctx, gc[2, i], gs[2, i])
        sigma = sigma + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (sigma + np.swapaxes(sigma, -1, -2))


def _check_physical(sigma, where: str):
    nu_min = symplectic_eigenvalues(sigma).min()
    if nu_min < 0.5 - 1e-6:
        raise StepSizeError(
            f"conditional covariance became unphysical {where} "
            f"(min symplectic eigenvalue {nu_min:.6g}); reduce dt")


@dataclass
class TrajectoryResult:
    """Sampled conditional covariance along a pulse-train integration."""

    times: np.ndarray
    covs: np.ndarray

    @property
    def mech_covs(self) -> np.ndarray:
        return self.covs[:, 2:, 2:]

    @property
    def sigma_x(self) -> np.ndarray:
        return self.covs[:, 2, 2]

    @property
    def sigma_p(self) -> np.ndarray:
        return self.covs[:, 3, 3]

    def mech_purity(self) -> np.ndarray:
        return np.array([cov_purity(c) for c in self.mech_covs])

    def log_negativity(self) -> np.ndarray:
        return np.array([log_negativity(c, partition=(0,)) for c in self.covs])


def riccati_trajectory(physical: PhysicalParams, pulse: PulseParams,
                       n_periods: int, eta: float = 1.0, dt: float | None = None,
                       initial_cov=None, samples_per_period: int = 1,
                       check_physical: bool = True) -> TrajectoryResult:
    """Integrate the conditional covariance through a train of pulses.

    Each window of length pi/omega_m holds one pulse at its center.  The
    returned samples include the initial state and then
    ``samples_per_period`` points per window, the last of which is the
    window boundary.
    """
    if n_periods < 1:
        raise UsageError(f"n_periods must be positive, got {n_periods}")
    ctx = _window_context(physical, pulse, eta, dt)
    if samples_per_period < 1 or samples_per_period > ctx.steps:
        raise UsageError(f"samples_per_period out of range (1..{ctx.steps})")
    if initial_cov is None:
        sigma = 0.5 * np.eye(4)
        sigma[2:, 2:] *= 2.0 * physical.n_bar + 1.0
    else:
        sigma = np.asarray(initial_cov, dtype=float).copy()
        if sigma.shape != (4, 4):
            raise UsageError(f"initial covariance must be 4x4, got {sigma.shape}")

    marks = [round(j * ctx.steps / samples_per_period) for j in range(1, samples_per_period + 1)]
    times = [0.0]
    covs = [sigma.copy()]
    for period in range(n_periods):
        start = 0
        for mark in marks:
            sigma = _integrate_steps(sigma, ctx, start, mark)
            start = mark
            times.append((period + mark / ctx.steps) * ctx.period)
            covs.append(sigma.copy())
        if check_physical:
            _check_physical(sigma, f"after period {period + 1}")
    return TrajectoryResult(times=np.array(times), covs=np.array(covs))


def _pack4(cov) -> np.ndarray:
    iu = np.triu_indices(4)
    return np.asarray(cov)[iu]


def _unpack4(v) -> np.ndarray:
    iu = np.triu_indices(4)
    cov = np.zeros((4, 4))
    cov[iu] = v
    return cov + np.triu(cov, 1).T


def stroboscopic_steady_riccati(physical: PhysicalParams, pulse: PulseParams,
                                eta: float = 1.0, dt: float | None = None,
                                tol: float = 1e-9, max_iter: int = 60,
                                return_info: bool = False):
    """Periodic steady state of the continuously monitored pulse train.

    Finds the covariance at the window boundary that reproduces itself after
    one window, by quasi-Newton iteration on the period map (the Jacobian is
    estimated once by finite differences and refreshed only when progress
    stalls).  Returns the 4x4 covariance at the window boundary, i.e. midway
    between pulses.
    """
    ctx = _window_context(physical, pulse, eta, dt)
    sx, sp = extended_steady_exact(physical, pulse)
    sigma = 0.5 * np.eye(4)
    sigma[2, 2] = sx
    sigma[3, 3] = sp
    v = _pack4(sigma)

    def residual(vec):
        return _pack4(_integrate_steps(_unpack4(vec), ctx, 0, ctx.steps)) - vec

    def jacobian(vec, base):
        # probe all ten directions in one batched integration
        h = 1e-4 * (1.0 + np.abs(vec))
        probes = np.tile(vec, (10, 1))
        probes[np.arange(10), np.arange(10)] += h
        stacked = np.stack([_unpack4(p) for p in probes])
        mapped = _integrate_steps(stacked, ctx, 0, ctx.steps)
        cols = np.stack([_pack4(m) for m in mapped]) - probes
        return lu_factor(((cols - base) / h[:, None]).T)

    g0 = residual(v)
    factored = jacobian(v, g0)
    since_refresh = 0
    iterations = None
    for iteration in range(1, max_iter + 1):
        res = float(np.abs(g0).max())
        if res <= tol * (1.0 + np.abs(v).max()):
            # polishing step with the current Jacobian estimate
            trial = v - lu_solve(factored, g0)
            g1 = residual(trial)
            if np.abs(g1).max() <= res:
                v, g0, res = trial, g1, float(np.abs(g1).max())
            iterations = iteration
            break
        dv = -lu_solve(factored, g0)
        step = 1.0
        improved = False
        for _ in range(8):
            trial = v + step * dv
            g1 = residual(trial)
            if np.abs(g1).max() < res:
                v, g0 = trial, g1
                improved = True
                break
            step *= 0.5
        since_refresh += 1
        # a stale Jacobian shows up as backtracked or merely linear progress;
        # refresh fairly eagerly since the batched estimate is cheap
        if not improved or (step < 1.0 and since_refresh >= 2) or since_refresh >= 4:
            factored = jacobian(v, g0)
            since_refresh = 0
            if not improved:
                trial = v - lu_solve(factored, g0)
                g1 = residual(trial)
                if np.abs(g1).max() >= res:
                    raise ConvergenceError(
                        "periodic steady state search stalled",
                        residual=res, iterations=iteration)
                v, g0 = trial, g1
    if iterations is None:
        raise ConvergenceError(
            f"periodic steady state not found in {max_iter} iterations",
            residual=float(np.abs(g0).max()), iterations=max_iter)

    steady = _unpack4(v)
    _check_physical(steady, "at the periodic steady state")
    if return_info:
        return steady, {"iterations": iterations,
                        "residual": float(np.abs(g0).max())}
    return steady


@dataclass
class Fig4Point:
    """Steady-state summary of one (quality, photon-number) configuration."""

    quality: float
    n_photons: float
    squeezing_db_sim: float
    squeezing_db_model: float
    purity: float
    log_negativity: float


def fig4_point(physical: PhysicalParams, pulse: PulseParams, eta: float = 1.0,
               dt: float | None = None) -> Fig4Point:
    """Continuous-model steady-state point with its closed-form counterpart.

    Squeezing and purity are averages of the oscillator marginal over one
    full window of the periodic steady state; the logarithmic negativity of
    the cavity-oscillator split is evaluated at the end of the pulse, where
    the intracavity field is still populated.
    """
    ctx = _window_context(physical, pulse, eta, dt)
    steady = stroboscopic_steady_riccati(physical, pulse, eta=eta, dt=dt)

    sigma = steady.copy()
    sum_sx = 0.0
    sum_purity = 0.0
    at_pulse_end = None
    for i in range(ctx.steps):
        sum_sx += sigma[2, 2]
        sum_purity += cov_purity(sigma[2:, 2:])
        sigma = _integrate_steps(sigma, ctx, i, i + 1)
        if i + 1 == ctx.pulse_end_step:
            at_pulse_end = sigma.copy()
    mean_sx = sum_sx / ctx.steps
    mean_purity = sum_purity / ctx.steps

    sx_model, _ = extended_steady_largeQ(physical, pulse)
    return Fig4Point(
        quality=physical.quality,
        n_photons=pulse.N_p,
        squeezing_db_sim=float(10.0 * math.log10(mean_sx / 0.5)),
        squeezing_db_model=float(10.0 * math.log10(sx_model / 0.5)),
        purity=mean_purity,
        log_negativity=log_negativity(at_pulse_end, partition=(0,)),
    )
