"""Two oscillators sharing one pulsed probe.

With pulses spaced by the half-period of the mean frequency, the probe
couples to the symmetric combination of the two positions while the
antisymmetric combination decouples.  In the collective frame, which rotates
at the frequency difference, the symmetric mode therefore undergoes the
familiar single-mode protocol at sqrt(2) times the single-oscillator
strength, and its squeezed steady state translates into Einstein-Podolsky-
Rosen correlations between the physical oscillators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InternalError, UsageError
from .gaussian import GaussianState, SymplecticTransform
from .strobo import bae_cycle, cooling_cycle, fixed_point
from .params import TwoModeParams

__all__ = [
    "collective_transform",
    "CollectiveSteadyState",
    "collective_steady",
    "two_mode_state",
    "is_entangled",
    "log_negativity_collective",
]


def collective_transform(t: float, omega_rel: float) -> SymplecticTransform:
    """Map from local (X1, P1, X2, P2) to collective quadratures at time t.

    The first output mode is the probed symmetric combination, the second
    the decoupled antisymmetric one; both precess at the frequency
    difference omega_rel.  At t = 0 the map is a balanced beamsplitter.
    """
    c = math.cos(omega_rel * t)
    s = math.sin(omega_rel * t)
    mat = np.array([
        [c, s, c, -s],
        [-s, c, s, c],
        [c, s, -c, s],
        [-s, c, -s, -c],
    ]) / math.sqrt(2.0)
    return SymplecticTransform(mat)


@dataclass(frozen=True)
class CollectiveSteadyState:
    """Squeezed-thermal description of the probed collective mode."""

    n_eff: float
    r_eff: float
    sigma_x: float
    sigma_p: float


def _invert_variances(sigma_x: float, sigma_p: float) -> tuple[float, float]:
    if sigma_x <= 0 or sigma_p <= 0:
        raise UsageError("variances must be positive")
    if sigma_x > sigma_p * (1.0 + 1e-9):
        raise InternalError(
            f"expected sigma_x <= sigma_p, got {sigma_x} > {sigma_p}; "
            "the squeezing convention is violated")
    n_eff = max(0.0, math.sqrt(sigma_x * sigma_p) - 0.5)
    r_eff = max(0.0, 0.25 * math.log(sigma_p / sigma_x))
    return n_eff, r_eff


def collective_steady(params: TwoModeParams, spacing: str = "bae",
                      k: int = 1) -> CollectiveSteadyState:
    """Steady state of the probed collective mode.

    ``spacing`` selects half-period pulses ("bae", squeezing the collective
    position) or quarter-period pulses ("cooling", purifying the mode).
    """
    single = params.single_mode()
    if spacing == "bae":
        cycle = bae_cycle(single, k=k)
    elif spacing == "cooling":
        cycle = cooling_cycle(single)
    else:
        raise UsageError(f"spacing must be 'bae' or 'cooling', got {spacing!r}")
    seed = (params.n_bar + 0.5) * np.eye(2)
    cov = fixed_point(cycle, seed)
    n_eff, r_eff = _invert_variances(cov[0, 0], cov[1, 1])
    return CollectiveSteadyState(n_eff=n_eff, r_eff=r_eff,
                                 sigma_x=cov[0, 0], sigma_p=cov[1, 1])


def two_mode_state(n_eff: float, r_eff: float) -> GaussianState:
    """Physical two-oscillator state for matched collective squeezing.

    When both collective modes carry thermal occupation n_eff and squeezing
    r_eff along complementary quadratures, undoing the beamsplitter yields
    the standard symmetric two-mode squeezed thermal state returned here.
    """
    if n_eff < 0:
        raise UsageError(f"n_eff must be nonnegative, got {n_eff}")
    nu = n_eff + 0.5
    a = nu * math.cosh(2.0 * r_eff)
    c = nu * math.sinh(2.0 * r_eff)
    cov = np.diag([a, a, a, a])
    cov[0, 2] = cov[2, 0] = -c
    cov[1, 3] = cov[3, 1] = c
    return GaussianState(np.zeros(4), cov)


def is_entangled(n_eff: float, r_eff: float) -> bool:
    """Whether the matched-squeezing two-oscillator state is entangled.

    Equivalent to a strictly positive logarithmic negativity: the squeezing
    must exceed half the logarithm of 1 + 2 n_eff.
    """
    if n_eff < 0:
        raise UsageError(f"n_eff must be nonnegative, got {n_eff}")
    return r_eff > 0.5 * math.log1p(2.0 * n_eff)


def log_negativity_collective(n_eff: float, r_eff: float) -> float:
    """Logarithmic negativity of :func:`two_mode_state` in closed form."""
    if n_eff < 0:
        raise UsageError(f"n_eff must be nonnegative, got {n_eff}")
    return max(0.0, 2.0 * r_eff - math.log1p(2.0 * n_eff))
