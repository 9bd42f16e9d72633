"""Parameter containers for the single- and two-oscillator models.

All dataclasses are frozen and validate on construction.  Frequencies are in
units of the mechanical frequency unless stated otherwise, and time in units
of its inverse; a convenient consequence is that ``omega_m = 1`` almost
everywhere and the quality factor is just ``omega_m / gamma``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .errors import UsageError

__all__ = ["PhysicalParams", "PulseParams", "TwoModeParams"]


@dataclass(frozen=True)
class PhysicalParams:
    """Parameters of a single mechanical mode probed by ideal pulsed measurements.

    chi      dimensionless measurement strength of one pulse
    n_bar    thermal occupation of the mechanical bath
    gamma    mechanical damping rate
    omega_m  mechanical frequency (defaults to 1, fixing the unit system)
    r_pulse  optional squeezing parameter applied to the probe pulse;
             positive values strengthen the measurement
    """

    chi: float
    n_bar: float
    gamma: float
    omega_m: float = 1.0
    r_pulse: float = 0.0

    def __post_init__(self):
        if self.chi < 0:
            raise UsageError(f"chi must be nonnegative, got {self.chi}")
        if self.n_bar < 0:
            raise UsageError(f"n_bar must be nonnegative, got {self.n_bar}")
        if self.gamma <= 0:
            raise UsageError(f"gamma must be positive, got {self.gamma}")
        if self.omega_m <= 0:
            raise UsageError(f"omega_m must be positive, got {self.omega_m}")

    @property
    def quality(self) -> float:
        return self.omega_m / self.gamma

    @classmethod
    def from_quality(cls, chi: float, n_bar: float, quality: float,
                     omega_m: float = 1.0, r_pulse: float = 0.0) -> "PhysicalParams":
        if quality <= 0:
            raise UsageError(f"quality must be positive, got {quality}")
        return cls(chi=chi, n_bar=n_bar, gamma=omega_m / quality,
                   omega_m=omega_m, r_pulse=r_pulse)

    def with_chi(self, chi: float) -> "PhysicalParams":
        return replace(self, chi=chi)

    @property
    def chi_effective(self) -> float:
        """Measurement strength including any probe squeezing."""
        return self.chi * math.exp(self.r_pulse / 2.0)


@dataclass(frozen=True)
class PulseParams:
    """Parameters of one rectangular drive pulse on the optical cavity.

    g0      single-photon optomechanical coupling, in units of omega_m
    N_p     mean photon number delivered by the pulse
    kappa   cavity linewidth, in units of omega_m
    tau     pulse duration, in units of 1/omega_m
    """

    g0: float
    N_p: float
    kappa: float
    tau: float

    def __post_init__(self):
        if self.g0 <= 0:
            raise UsageError(f"g0 must be positive, got {self.g0}")
        if self.N_p <= 0:
            raise UsageError(f"N_p must be positive, got {self.N_p}")
        if self.kappa <= 0:
            raise UsageError(f"kappa must be positive, got {self.kappa}")
        if self.tau <= 0:
            raise UsageError(f"tau must be positive, got {self.tau}")
        if self.kappa * self.tau < 1.0:
            warnings.warn(
                "kappa*tau < 1: the cavity barely responds within the pulse "
                "and the adiabatic coupling formula is unreliable",
                stacklevel=2)
        if self.tau > 1.0:
            warnings.warn(
                "tau > 1/omega_m: the pulse is not short compared to the "
                "mechanical period, so single-quadrature coupling degrades",
                stacklevel=2)

    @property
    def g_adiabatic(self) -> float:
        """Linearized coupling 2*g0*sqrt(N_p/(kappa*tau)) of the filled cavity."""
        return 2.0 * self.g0 * math.sqrt(self.N_p / (self.kappa * self.tau))

    @property
    def chi_adiabatic(self) -> float:
        """Measurement strength g_adiabatic * tau in the short-pulse limit."""
        return self.g_adiabatic * self.tau


@dataclass(frozen=True)
class TwoModeParams:
    """Two mechanical modes read out by a shared pulsed probe.

    Frequencies omega_1 > omega_2 define the mean frequency (which sets the
    pulse spacing) and the relative detuning (which rotates the collective
    quadratures between pulses).
    """

    omega_1: float
    omega_2: float
    gamma: float
    n_bar: float
    chi: float

    def __post_init__(self):
        if self.omega_1 <= 0 or self.omega_2 <= 0:
            raise UsageError("mode frequencies must be positive")
        if self.omega_1 <= self.omega_2:
            raise UsageError(
                f"expected omega_1 > omega_2, got {self.omega_1} <= {self.omega_2}")
        if self.gamma <= 0:
            raise UsageError(f"gamma must be positive, got {self.gamma}")
        if self.n_bar < 0:
            raise UsageError(f"n_bar must be nonnegative, got {self.n_bar}")
        if self.chi < 0:
            raise UsageError(f"chi must be nonnegative, got {self.chi}")

    @property
    def omega_mean(self) -> float:
        return 0.5 * (self.omega_1 + self.omega_2)

    @property
    def omega_rel(self) -> float:
        return 0.5 * (self.omega_1 - self.omega_2)

    @property
    def fundamental_period(self) -> float:
        """Common repetition period 2*T1*T2/(T1+T2) of the two-mode drive."""
        return 2.0 * math.pi / self.omega_mean

    def single_mode(self) -> PhysicalParams:
        """Collective-mode parameters seen by the shared probe.

        The symmetric combination of the two oscillators couples to the pulse
        with strength sqrt(2)*chi while the antisymmetric one decouples.
        """
        return PhysicalParams(chi=math.sqrt(2.0) * self.chi, n_bar=self.n_bar,
                              gamma=self.gamma, omega_m=self.omega_mean)
