import math

import numpy as np
import pytest

from fastgates import (
    FockConfig,
    MotionalState,
    PulseSequence,
    conditional_phase,
    fidelity_oracle,
    simulate,
    state_averaged_fidelity,
    two_ion_spectrum,
)
from fastgates.fock import (
    OracleConvergenceError,
    TruncationError,
    conditional_phase_oracle,
)
from fastgates.studies import oracle_check_cases
from tests.conftest import REF_OMEGA
from tests.test_dynamics import exact_closed_gate

PERIOD = 2 * math.pi / REF_OMEGA


def test_zero_kicks_ground_state():
    spec = two_ion_spectrum(0.1, 0.2, REF_OMEGA)
    seq = PulseSequence(np.array([]), np.array([]), (0, 1))
    res = simulate(seq, spec, FockConfig(truncation=8))
    assert np.allclose(res.branch_overlaps, 1.0)
    for states in res.branch_states:
        for psi in states:
            assert abs(np.linalg.norm(psi) - 1.0) < 1e-12
            assert abs(psi[0] - 1.0) < 1e-12


def test_single_kick_coherent_occupation():
    spec = two_ion_spectrum(0.1, 0.2, REF_OMEGA)
    z = 3
    seq = PulseSequence(np.array([0.0]), np.array([z]), (0, 1))
    res = simulate(seq, spec, FockConfig(truncation=64))
    levels = np.arange(64)
    for b, (s1, s2) in enumerate(((1, 1), (1, -1), (-1, 1), (-1, -1))):
        for m in range(2):
            coupling = spec.lamb_dicke[m] * (
                spec.mode_matrix[0, m] * s1 + spec.mode_matrix[1, m] * s2
            )
            expected = (coupling * z) ** 2  # coherent state: <n> = |amp|^2
            measured = float(np.sum(levels * np.abs(res.branch_states[b][m]) ** 2))
            assert measured == pytest.approx(expected, abs=1e-8)


def test_norm_preserved_per_branch():
    spec = two_ion_spectrum(0.3, 0.2, REF_OMEGA)
    rng = np.random.default_rng(2)
    seq = PulseSequence(
        np.sort(rng.uniform(0, 2, 5)) * PERIOD, rng.choice([-2, 1, 2], 5), (0, 1)
    )
    res = simulate(seq, spec, FockConfig(truncation=64))
    for states in res.branch_states:
        for psi in states:
            assert abs(np.linalg.norm(psi) - 1.0) < 1e-10


def test_closed_sequence_returns_to_ground():
    spec, seq = exact_closed_gate()
    res = simulate(seq, spec, FockConfig(truncation=64))
    for amp in res.branch_overlaps:
        assert abs(amp) > 1 - 1e-8


def test_perfect_gate_oracle_fidelity():
    spec, seq = exact_closed_gate()
    fid = fidelity_oracle(seq, spec, FockConfig(truncation=32))
    assert fid > 1 - 1e-6


def test_unclosed_sequence_damps_fidelity():
    # single kick leaving |Delta|^2 = 1 on the common mode of both even
    # branches (and the stretch mode on the odd branches)
    eta = 1.0 / math.sqrt(2.0)
    spec = two_ion_spectrum(0.25, eta, REF_OMEGA)
    seq = PulseSequence(np.array([0.0]), np.array([1]), (0, 1))
    closed = state_averaged_fidelity(seq, spec, MotionalState.ground(2))
    fid = fidelity_oracle(seq, spec, FockConfig(truncation=32))
    assert fid < 1 - 0.1
    assert fid == pytest.approx(closed.fidelity, abs=1e-7)


def test_truncation_error_raised():
    spec = two_ion_spectrum(0.1, 0.9, REF_OMEGA)
    seq = PulseSequence(np.array([0.0]), np.array([9]), (0, 1))
    with pytest.raises(TruncationError):
        simulate(seq, spec, FockConfig(truncation=8))


def test_oracle_convergence_cap():
    spec = two_ion_spectrum(0.1, 0.9, REF_OMEGA)
    seq = PulseSequence(np.array([0.0]), np.array([9]), (0, 1))
    with pytest.raises(OracleConvergenceError):
        fidelity_oracle(seq, spec, FockConfig(truncation=8, max_truncation=16))


def test_three_mode_limit():
    spec = two_ion_spectrum(0.1, 0.2, REF_OMEGA)
    big = type(spec)(
        frequencies=np.concatenate([spec.frequencies, spec.frequencies * 1.7,
                                    spec.frequencies]),
        mode_matrix=np.eye(6),
        lamb_dicke=np.full(6, 0.1),
        trap_frequency=spec.trap_frequency,
    )
    seq = PulseSequence(np.array([0.0]), np.array([1]), (0, 1))
    with pytest.raises(ValueError):
        simulate(seq, big, FockConfig(truncation=8))


def test_truncation_convergence_is_monotone():
    spec = two_ion_spectrum(0.2, 0.22, REF_OMEGA)
    rng = np.random.default_rng(8)
    seq = PulseSequence(
        np.sort(rng.uniform(0, 1.5, 4)) * PERIOD, rng.choice([-2, 1, 2], 4), (0, 1)
    )
    exact = state_averaged_fidelity(seq, spec, MotionalState.ground(2)).fidelity
    errors = []
    for k in (12, 24, 48):
        res = simulate(seq, spec, FockConfig(truncation=k, tail_tolerance=1.0))
        from fastgates.fock import _fidelity_from_overlaps

        errors.append(abs(_fidelity_from_overlaps(res.branch_overlaps, math.pi / 4)
                          - exact))
    assert errors[0] >= errors[1] >= errors[2]
    assert errors[2] < 1e-9


def test_phase_extraction_matches_closed_form():
    spec = two_ion_spectrum(0.15, 0.18, REF_OMEGA)
    rng = np.random.default_rng(17)
    seq = PulseSequence(
        np.sort(rng.uniform(0, 1.8, 4)) * PERIOD, rng.choice([-1, 1, 2], 4), (0, 1)
    )
    res = simulate(seq, spec, FockConfig(truncation=48))
    assert conditional_phase_oracle(res) == pytest.approx(
        conditional_phase(seq, spec), abs=1e-6
    )


def test_randomized_equivalence_suite_sample():
    # the full >= 100-case suite runs in the acceptance tests
    for case, chi, eta, n, times, weights in oracle_check_cases(20, 4, seed=77):
        spec = two_ion_spectrum(chi, eta, REF_OMEGA)
        seq = PulseSequence(times * PERIOD, weights, (0, 1))
        closed = state_averaged_fidelity(seq, spec, MotionalState.ground(2)).fidelity
        oracle = fidelity_oracle(
            seq, spec, FockConfig(truncation=16, convergence_tolerance=1e-9)
        )
        assert abs(closed - oracle) < 1e-6, f"case {case} diverged"
