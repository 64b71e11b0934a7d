"""Equilibrium positions and normal modes of an ion chain in a microtrap array.

Each ion sits in its own harmonic well of frequency omega centred at
``X_i = i * d``; the wells are coupled by the (linearized) Coulomb repulsion
between all ion pairs.  Because every well is identical, the uniform
centre-of-mass displacement is always an exact eigenvector with frequency
omega, and the Coulomb coupling stiffens every other mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import TrapArrayConfig, derive_params

#: Relative force-balance tolerance for the equilibrium Newton solve,
#: in units of the trap force scale M omega^2 d.
EQUILIBRIUM_TOL = 1e-12

_MAX_NEWTON_STEPS = 60


class EquilibriumError(RuntimeError):
    """Equilibrium solve failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class EquilibriumChain:
    """Equilibrium ion positions (m) and the trap centres they fell out of."""

    positions: np.ndarray
    trap_centers: np.ndarray
    residual_force_norm: float


@dataclass(frozen=True)
class ModeSpectrum:
    """Normal-mode spectrum of the coupled chain.

    Attributes
    ----------
    frequencies : ndarray, shape (N,)
        Mode angular frequencies, ascending (rad/s).
    mode_matrix : ndarray, shape (N, N)
        Orthonormal mode amplitudes; column m holds mode m's amplitude on
        each ion.
    lamb_dicke : ndarray, shape (N,)
        Per-mode Lamb-Dicke parameters eta_m = eta * sqrt(omega / omega_m).
    trap_frequency : float
        The bare trap frequency omega (rad/s).
    """

    frequencies: np.ndarray
    mode_matrix: np.ndarray
    lamb_dicke: np.ndarray
    trap_frequency: float

    @property
    def ion_count(self) -> int:
        return len(self.frequencies)


def _coulomb_forces(positions: np.ndarray, alpha: float) -> np.ndarray:
    """Per-ion Coulomb acceleration sum_{j != i} alpha * sgn(x_i - x_j) / r_ij^2."""
    dx = positions[:, None] - positions[None, :]
    np.fill_diagonal(dx, np.inf)
    return np.sum(alpha * np.sign(dx) / dx**2, axis=1)


def _hessian(positions: np.ndarray, omega: float, alpha: float) -> np.ndarray:
    """Mass-scaled Hessian of the total potential at the given positions (1/s^2)."""
    dx = positions[:, None] - positions[None, :]
    np.fill_diagonal(dx, np.inf)
    coupling = 2.0 * alpha / np.abs(dx) ** 3
    a = -coupling
    np.fill_diagonal(a, omega**2 + coupling.sum(axis=1))
    return a


def solve_equilibrium(
    config: TrapArrayConfig, shift_positions: bool = True
) -> EquilibriumChain:
    """Find the static ion positions balancing trap and Coulomb forces.

    Newton iteration on the acceleration residual
    ``omega^2 (x_i - X_i) - sum_j alpha sgn(x_i - x_j)/(x_i - x_j)^2``,
    started from the trap centres.  With ``shift_positions=False`` the ions
    are pinned to the trap centres (zero-displacement comparison model) and
    the reported residual is the Coulomb force they would feel there.

    Raises
    ------
    EquilibriumError
        If the residual does not drop below ``EQUILIBRIUM_TOL`` times the
        trap force scale within the iteration cap.
    """
    omega = config.trap_frequency
    alpha = derive_params(config).alpha
    centers = np.arange(config.ion_count) * config.spacing
    scale = omega**2 * config.spacing  # trap acceleration scale

    if not shift_positions:
        residual = float(np.max(np.abs(_coulomb_forces(centers, alpha)))) / scale
        return EquilibriumChain(
            positions=centers.copy(), trap_centers=centers, residual_force_norm=residual
        )

    x = centers.astype(float).copy()
    residual = np.inf
    for _ in range(_MAX_NEWTON_STEPS):
        f = omega**2 * (x - centers) - _coulomb_forces(x, alpha)
        residual = float(np.max(np.abs(f))) / scale
        if residual < EQUILIBRIUM_TOL:
            if np.any(np.diff(x) <= 0):
                raise EquilibriumError("ion ordering lost during solve", residual)
            return EquilibriumChain(
                positions=x, trap_centers=centers, residual_force_norm=residual
            )
        x = x - np.linalg.solve(_hessian(x, omega, alpha), f)
    raise EquilibriumError(
        f"equilibrium solve did not converge (residual {residual:.3e})", residual
    )


def mode_spectrum(config: TrapArrayConfig, shift_positions: bool = True) -> ModeSpectrum:
    """Normal-mode frequencies and amplitudes of the coupled chain.

    Diagonalizes the mass-scaled Hessian at the equilibrium positions.
    Frequencies come out ascending; the lowest is the centre-of-mass mode at
    exactly omega.  Eigenvector signs are fixed so that each column's
    largest-magnitude entry is positive, keeping output deterministic.
    """
    omega = config.trap_frequency
    params = derive_params(config)
    chain = solve_equilibrium(config, shift_positions=shift_positions)
    a = _hessian(chain.positions, omega, params.alpha)
    if not np.allclose(a, a.T, rtol=0.0, atol=0.0):
        raise RuntimeError("Hessian lost symmetry; equilibrium solve is suspect")
    eigvals, eigvecs = np.linalg.eigh(a)
    if eigvals[0] <= 0.0:
        raise RuntimeError(
            f"Hessian not positive definite (min eigenvalue {eigvals[0]:.3e}); "
            "equilibrium solve is suspect"
        )
    for m in range(eigvecs.shape[1]):
        col = eigvecs[:, m]
        if col[np.argmax(np.abs(col))] < 0:
            eigvecs[:, m] = -col
    freqs = np.sqrt(eigvals)
    return ModeSpectrum(
        frequencies=freqs,
        mode_matrix=eigvecs,
        lamb_dicke=params.eta * np.sqrt(omega / freqs),
        trap_frequency=omega,
    )


def two_ion_spectrum(chi: float, eta: float, omega: float) -> ModeSpectrum:
    """Synthetic two-ion spectrum {omega, omega (1 + chi)}.

    The common mode (1,1)/sqrt(2) sits at omega and the stretch mode
    (1,-1)/sqrt(2) at omega (1 + chi).  This is the model the pulse-sequence
    optimizer works against; it matches :func:`mode_spectrum` for a two-ion
    array up to the (tiny) equilibrium displacement correction.
    """
    if chi <= 0:
        raise ValueError(f"chi must be positive, got {chi!r}")
    if eta <= 0 or omega <= 0:
        raise ValueError("eta and omega must be positive")
    freqs = np.array([omega, omega * (1.0 + chi)])
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    matrix = np.array([[inv_sqrt2, inv_sqrt2], [inv_sqrt2, -inv_sqrt2]])
    return ModeSpectrum(
        frequencies=freqs,
        mode_matrix=matrix,
        lamb_dicke=eta * np.sqrt(omega / freqs),
        trap_frequency=omega,
    )
