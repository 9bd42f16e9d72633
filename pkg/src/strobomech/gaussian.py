"""Gaussian states and symplectic transformations.

Quadratures are ordered mode by mode, (X1, P1, X2, P2, ...), and the vacuum
variance is 1/2, so [X, P] = i corresponds to the symplectic form

    Omega = (+) [[0, 1], [-1, 0]]

and a covariance matrix sigma is physical iff sigma + i*Omega/2 >= 0,
equivalently iff all symplectic eigenvalues are >= 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, UsageError

__all__ = [
    "VACUUM_VARIANCE",
    "symplectic_form",
    "symplectic_eigenvalues",
    "is_physical_cov",
    "GaussianState",
    "cov_purity",
    "purity",
    "squeezing_db",
    "log_negativity",
    "SymplecticTransform",
    "apply_symplectic",
]

VACUUM_VARIANCE = 0.5

_OMEGA_BLOCK = np.array([[0.0, 1.0], [-1.0, 0.0]])


def symplectic_form(n_modes: int) -> np.ndarray:
    """The 2n x 2n symplectic form in interleaved ordering."""
    if n_modes < 1:
        raise UsageError(f"n_modes must be >= 1, got {n_modes}")
    return np.kron(np.eye(n_modes), _OMEGA_BLOCK)


def _as_cov(cov, n_modes=None):
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise UsageError(f"covariance must be square with even size, got shape {cov.shape}")
    if n_modes is not None and cov.shape[0] != 2 * n_modes:
        raise UsageError(
            f"covariance shape {cov.shape} does not match {n_modes} modes")
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(cov).max())):
        raise UsageError("covariance must be symmetric")
    return 0.5 * (cov + cov.T)


def symplectic_eigenvalues(cov) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix, ascending, one per mode."""
    cov = _as_cov(cov)
    n = cov.shape[0] // 2
    eigs = np.linalg.eigvals(symplectic_form(n) @ cov)
    return np.sort(np.abs(eigs))[::2][:n]


def is_physical_cov(cov, atol: float = 1e-9) -> bool:
    """Whether the symplectic spectrum respects the uncertainty bound 1/2."""
    return bool(symplectic_eigenvalues(cov).min() >= VACUUM_VARIANCE - atol)


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of an n-mode Gaussian state."""

    mean: np.ndarray
    cov: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = _as_cov(self.cov)
        if mean.shape[0] != cov.shape[0]:
            raise UsageError(
                f"mean length {mean.shape[0]} does not match covariance size {cov.shape[0]}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if self.check and not is_physical_cov(cov):
            raise DomainError(
                "covariance violates the uncertainty principle "
                f"(min symplectic eigenvalue {symplectic_eigenvalues(cov).min():.6g} < 1/2)")

    @property
    def n_modes(self) -> int:
        return self.mean.shape[0] // 2

    @classmethod
    def vacuum(cls, n_modes: int = 1) -> "GaussianState":
        return cls(np.zeros(2 * n_modes), VACUUM_VARIANCE * np.eye(2 * n_modes))

    @classmethod
    def thermal(cls, n_bar: float, n_modes: int = 1) -> "GaussianState":
        if n_bar < 0:
            raise UsageError(f"n_bar must be nonnegative, got {n_bar}")
        return cls(np.zeros(2 * n_modes), (n_bar + 0.5) * np.eye(2 * n_modes))

    def mode_subset(self, modes) -> "GaussianState":
        """Marginal state of the listed modes (order preserved)."""
        modes = list(modes)
        if any(m < 0 or m >= self.n_modes for m in modes):
            raise UsageError(f"mode indices {modes} out of range for {self.n_modes} modes")
        idx = np.array([2 * m + q for m in modes for q in (0, 1)])
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)], check=False)

    def to_json_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "GaussianState":
        state = cls(np.array(data["mean"]), np.array(data["cov"]), check=False)
        if state.n_modes != data.get("n_modes", state.n_modes):
            raise UsageError("n_modes field disagrees with array sizes")
        return state


def cov_purity(cov) -> float:
    """Purity 1 / (2^n sqrt(det sigma)) of the state with covariance sigma."""
    cov = _as_cov(cov)
    n = cov.shape[0] // 2
    eigs = np.linalg.eigvalsh(cov)
    if eigs.min() <= 0:
        raise DomainError("covariance must be positive definite to have a purity")
    log_det = np.log(eigs).sum()
    return float(math.exp(-0.5 * log_det - n * math.log(2.0)))


def purity(state: GaussianState) -> float:
    return cov_purity(state.cov)


def squeezing_db(state_or_cov, index: int = 0) -> float:
    """Variance of one quadrature relative to vacuum, in decibels.

    Negative values mean squeezing below the vacuum level.  ``index`` counts
    quadratures in the interleaved order, so X of mode m is ``2*m`` and P of
    mode m is ``2*m + 1``.
    """
    cov = state_or_cov.cov if isinstance(state_or_cov, GaussianState) else _as_cov(state_or_cov)
    if not 0 <= index < cov.shape[0]:
        raise UsageError(f"quadrature index {index} out of range")
    var = cov[index, index]
    if var <= 0:
        raise DomainError(f"variance must be positive, got {var}")
    return float(10.0 * math.log10(var / VACUUM_VARIANCE))


def log_negativity(state_or_cov, partition=(0,)) -> float:
    """Logarithmic negativity of a bipartition of a Gaussian state.

    ``partition`` lists the modes whose momenta get reflected under partial
    transposition.  Returns 0 for separable (and all one-mode) states.
    """
    cov = state_or_cov.cov if isinstance(state_or_cov, GaussianState) else _as_cov(state_or_cov)
    n = cov.shape[0] // 2
    partition = set(partition)
    if not partition or not partition.issubset(range(n)):
        raise UsageError(f"partition {sorted(partition)} invalid for {n} modes")
    flip = np.ones(2 * n)
    for m in partition:
        flip[2 * m + 1] = -1.0
    cov_pt = cov * np.outer(flip, flip)
    nu_min = symplectic_eigenvalues(cov_pt).min()
    return float(max(0.0, -math.log(2.0 * nu_min)))


@dataclass(frozen=True)
class SymplecticTransform:
    """A linear map of quadratures that preserves the commutation relations."""

    matrix: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
            raise UsageError(f"symplectic matrix must be square with even size, got {mat.shape}")
        object.__setattr__(self, "matrix", mat)
        if self.check:
            omega = symplectic_form(mat.shape[0] // 2)
            defect = mat @ omega @ mat.T - omega
            if np.abs(defect).max() > 1e-10:
                raise UsageError(
                    f"matrix is not symplectic (defect {np.abs(defect).max():.3g})")

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def __matmul__(self, other: "SymplecticTransform") -> "SymplecticTransform":
        if not isinstance(other, SymplecticTransform):
            return NotImplemented
        return SymplecticTransform(self.matrix @ other.matrix, check=False)

    def inverse(self) -> "SymplecticTransform":
        omega = symplectic_form(self.n_modes)
        return SymplecticTransform(-omega @ self.matrix.T @ omega, check=False)

    def __call__(self, state: GaussianState) -> GaussianState:
        return apply_symplectic(state, self.matrix)

    @classmethod
    def rotation(cls, phi: float, n_modes: int = 1) -> "SymplecticTransform":
        """Phase-space rotation by phi on every mode, X -> X cos + P sin."""
        c, s = math.cos(phi), math.sin(phi)
        block = np.array([[c, s], [-s, c]])
        return cls(np.kron(np.eye(n_modes), block), check=False)

    @classmethod
    def squeezer(cls, r: float) -> "SymplecticTransform":
        """One-mode squeezer diag(e^-r, e^r); positive r squeezes X."""
        return cls(np.diag([math.exp(-r), math.exp(r)]), check=False)

    @classmethod
    def beamsplitter_balanced(cls) -> "SymplecticTransform":
        """50/50 beamsplitter mixing two modes symmetrically."""
        eye = np.eye(2)
        mat = np.block([[eye, eye], [-eye, eye]]) / math.sqrt(2.0)
        return cls(mat, check=False)

    @classmethod
    def from_quadratic_generator(cls, g: np.ndarray) -> "SymplecticTransform":
        """Heisenberg flow exp(-Omega g) of the quadratic Hamiltonian R^T g R / 2."""
        g = np.asarray(g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise UsageError(f"generator must be square with even size, got {g.shape}")
        if not np.allclose(g, g.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(g).max())):
            raise UsageError("generator must be symmetric")
        omega = symplectic_form(g.shape[0] // 2)
        return cls(expm(-omega @ g))


def apply_symplectic(state: GaussianState, matrix) -> GaussianState:
    """Push a Gaussian state through a symplectic quadrature map."""
    mat = matrix.matrix if isinstance(matrix, SymplecticTransform) else np.asarray(matrix, dtype=float)
    if mat.shape != (state.mean.shape[0],) * 2:
        raise UsageError(
            f"matrix shape {mat.shape} does not match state with {state.n_modes} modes")
    return GaussianState(mat @ state.mean, mat @ state.cov @ mat.T, check=False)
