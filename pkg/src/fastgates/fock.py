"""Brute-force kick-sequence simulation in a truncated number basis.

Ground truth for the closed-form dynamics: per qubit branch and per mode the
sequence is played as alternating free evolution ``exp(-i w_m n t)`` and
displacement kicks ``D(i eta_m B_m(s) z_j)``, with the displacement realized
as the matrix exponential of its truncated generator (computed exactly via
the eigendecomposition of ``a + a^dag``, hence exactly unitary on the
truncated space).  Branches stay product states over modes, so each mode is
an independent K-dimensional vector and the full amplitudes are products.

This module exists to certify formulas, not to run studies: it is limited to
three modes and modest kick weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics import BASIS_STATES, TARGET_PHASE, PulseSequence, _check_pair
from .modes import ModeSpectrum

MAX_ORACLE_MODES = 3


class TruncationError(RuntimeError):
    """Population reached the top of the truncated basis."""


class OracleConvergenceError(RuntimeError):
    """Fidelity did not converge before hitting the truncation cap."""


@dataclass(frozen=True)
class FockConfig:
    truncation: int = 32
    convergence_tolerance: float = 1e-9
    max_truncation: int = 4096
    tail_tolerance: float = 1e-8  # allowed population in the top two levels

    def __post_init__(self):
        if self.truncation < 8:
            raise ValueError("truncation must be at least 8")
        if self.convergence_tolerance <= 0 or self.tail_tolerance <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class FockSimResult:
    """Final motional vectors and ground-state amplitudes per qubit branch.

    ``branch_states[b][m]`` is the final state of mode m in branch
    ``BASIS_STATES[b]``; ``branch_overlaps[b]`` is the product over modes of
    the ground-state overlap and carries the accumulated kick phase.
    """

    branch_states: list
    branch_overlaps: np.ndarray
    max_tail_population: float
    truncation: int


@lru_cache(maxsize=8)
def _displacement_basis(truncation: int):
    """Eigendecomposition of the position quadrature a + a^dag."""
    off = np.sqrt(np.arange(1, truncation, dtype=float))
    quad = np.diag(off, 1) + np.diag(off, -1)
    evals, evecs = np.linalg.eigh(quad)
    return evals, evecs


def _displace(state: np.ndarray, kappa: float) -> np.ndarray:
    """Apply D(i kappa) = exp(i kappa (a + a^dag)) to a truncated state."""
    evals, evecs = _displacement_basis(state.size)
    return evecs @ (np.exp(1j * kappa * evals) * (evecs.conj().T @ state))


def simulate(
    seq: PulseSequence, spectrum: ModeSpectrum, cfg: FockConfig
) -> FockSimResult:
    """Play the sequence exactly in a truncated basis, per qubit branch.

    Raises :class:`TruncationError` if any intermediate state puts more than
    ``cfg.tail_tolerance`` population in the top two Fock levels.
    """
    _check_pair(seq, spectrum)
    n_modes = spectrum.ion_count
    if n_modes > MAX_ORACLE_MODES:
        raise ValueError(
            f"oracle supports at most {MAX_ORACLE_MODES} modes, got {n_modes}"
        )
    k = cfg.truncation
    i, j = seq.addressed_pair
    b = spectrum.mode_matrix
    levels = np.arange(k)

    branch_states: list = []
    overlaps = np.empty(4, dtype=complex)
    max_tail = 0.0
    for idx, (s1, s2) in enumerate(BASIS_STATES):
        mode_states = []
        amp = 1.0 + 0j
        for m in range(n_modes):
            freq = spectrum.frequencies[m]
            coupling = spectrum.lamb_dicke[m] * (b[i, m] * s1 + b[j, m] * s2)
            psi = np.zeros(k, dtype=complex)
            psi[0] = 1.0
            t_prev = seq.times[0] if seq.times.size else 0.0
            for t, z in zip(seq.times, seq.weights):
                psi *= np.exp(-1j * freq * levels * (t - t_prev))
                psi = _displace(psi, coupling * z)
                tail = float(np.sum(np.abs(psi[-2:]) ** 2))
                max_tail = max(max_tail, tail)
                t_prev = t
            mode_states.append(psi)
            amp *= psi[0]
        branch_states.append(mode_states)
        overlaps[idx] = amp

    if max_tail > cfg.tail_tolerance:
        raise TruncationError(
            f"top-level population {max_tail:.3e} exceeds {cfg.tail_tolerance:.1e} "
            f"at truncation {k}"
        )
    return FockSimResult(
        branch_states=branch_states,
        branch_overlaps=overlaps,
        max_tail_population=max_tail,
        truncation=k,
    )


def _fidelity_from_overlaps(overlaps: np.ndarray, target_phase: float) -> float:
    s1s2 = np.array([s1 * s2 for s1, s2 in BASIS_STATES])
    amps = overlaps * np.exp(-1j * target_phase * s1s2)
    return float((np.sum(np.abs(amps) ** 2) + np.abs(np.sum(amps)) ** 2) / 20.0)


def conditional_phase_oracle(result: FockSimResult) -> float:
    """s1 s2 component of the branch phases, from basis-state interference."""
    angles = np.angle(result.branch_overlaps)
    s1s2 = np.array([s1 * s2 for s1, s2 in BASIS_STATES])
    return 0.25 * float(np.sum(s1s2 * angles))


def fidelity_oracle(
    seq: PulseSequence,
    spectrum: ModeSpectrum,
    cfg: FockConfig,
    target_phase: float = TARGET_PHASE,
) -> float:
    """State-averaged fidelity from the Fock simulation.

    Doubles the truncation until two successive estimates agree to
    ``cfg.convergence_tolerance``; raises :class:`OracleConvergenceError` if
    the cap ``cfg.max_truncation`` is reached first.
    """
    k = cfg.truncation
    previous = None
    while k <= cfg.max_truncation:
        run_cfg = FockConfig(
            truncation=k,
            convergence_tolerance=cfg.convergence_tolerance,
            max_truncation=cfg.max_truncation,
            tail_tolerance=cfg.tail_tolerance,
        )
        try:
            result = simulate(seq, spectrum, run_cfg)
        except TruncationError:
            k *= 2
            previous = None
            continue
        fid = _fidelity_from_overlaps(result.branch_overlaps, target_phase)
        if previous is not None and abs(fid - previous) < cfg.convergence_tolerance:
            return fid
        previous = fid
        k *= 2
    raise OracleConvergenceError(
        f"fidelity not converged to {cfg.convergence_tolerance:.1e} below "
        f"truncation {cfg.max_truncation}"
    )
