import math

import numpy as np
import pytest

from fastgates import (
    JitterConfig,
    OverlapError,
    RepRateConfig,
    discretize_pulses,
    discretize_sequence,
    jitter_sweep,
    mc_mean_infidelity,
    min_resolvable_rate,
    rep_rate_scan,
    two_ion_infidelity,
)
from fastgates.robustness import picker_min_gaps
from tests.conftest import REF_OMEGA

PERIOD = 2 * math.pi / REF_OMEGA


def test_zero_sigma_reproduces_noiseless(quick_gate):
    stats = mc_mean_infidelity(quick_gate, JitterConfig(sigma=0.0, samples=20, seed=1))
    assert stats.mean_infidelity == pytest.approx(
        stats.noiseless_infidelity, abs=1e-14
    )
    assert stats.standard_error == pytest.approx(0.0, abs=1e-16)


def test_jitter_reproducible(quick_gate):
    cfg = JitterConfig(sigma=1e-4, samples=300, seed=5)
    a = mc_mean_infidelity(quick_gate, cfg)
    b = mc_mean_infidelity(quick_gate, cfg)
    assert a == b


def test_jitter_sweep_monotone_with_common_randoms(quick_gate):
    stats = jitter_sweep(
        quick_gate, [1e-5, 3e-5, 1e-4, 3e-4, 1e-3], samples=1500, seed=3
    )
    for a, b in zip(stats, stats[1:]):
        slack = 3 * math.hypot(a.standard_error, b.standard_error)
        assert b.mean_infidelity >= a.mean_infidelity - slack


def test_jitter_estimator_consistency(quick_gate):
    small = mc_mean_infidelity(quick_gate, JitterConfig(1e-4, samples=500, seed=11))
    large = mc_mean_infidelity(quick_gate, JitterConfig(1e-4, samples=5000, seed=12))
    combined = 3 * math.hypot(small.standard_error, large.standard_error)
    assert abs(small.mean_infidelity - large.mean_infidelity) <= combined


def test_per_pulse_jitter_mode(quick_gate):
    per_group = mc_mean_infidelity(quick_gate, JitterConfig(1e-4, 400, seed=2))
    per_pulse = mc_mean_infidelity(
        quick_gate, JitterConfig(1e-4, 400, seed=2, per_pulse=True)
    )
    # independent pulse noise within a group averages down: milder than
    # moving whole groups coherently
    assert per_pulse.mean_infidelity < per_group.mean_infidelity
    assert per_pulse.mean_infidelity > per_group.noiseless_infidelity


def test_jitter_config_validation():
    with pytest.raises(ValueError):
        JitterConfig(sigma=-1e-4)
    with pytest.raises(ValueError):
        JitterConfig(sigma=1e-4, samples=0)
    with pytest.raises(ValueError):
        RepRateConfig(rep_rate=0.0)


# ---- pulse-picker discretization ----


def _toy(times_periods, weights):
    return np.asarray(times_periods) * PERIOD, np.asarray(weights)


def test_discretization_preserves_group_weights():
    times, weights = _toy([0.0, 0.5], [5, -5])
    seq = discretize_sequence(times, weights, RepRateConfig(rep_rate=40 / PERIOD))
    assert seq.total_pulse_pairs() == 10
    assert np.sum(seq.weights[:5]) == 5
    assert np.sum(seq.weights[5:]) == -5


def test_toy_threshold_by_hand():
    # two groups of 5 pulses, centres 0.5 trap periods apart: the picker
    # resolves them iff the slot spacing fits 5 slots per group into the gap,
    # i.e. rate >= (pulses per group)/(gap) = 10 per trap period
    times, weights = _toy([0.0, 0.5], [5, 5])
    threshold = 10.0 / PERIOD

    discretize_sequence(times, weights, RepRateConfig(rep_rate=threshold * 1.0001))
    with pytest.raises(OverlapError):
        discretize_sequence(times, weights, RepRateConfig(rep_rate=threshold * 0.98))


def test_doubling_gap_halves_threshold(quick_gate):
    t1, w = _toy([0.0, 0.5], [5, 5])
    t2, _ = _toy([0.0, 1.0], [5, 5])

    def threshold(times):
        lo, hi = 1.0 / PERIOD, 1e4 / PERIOD
        while hi / lo > 1 + 1e-9:
            mid = math.sqrt(lo * hi)
            try:
                discretize_sequence(times, w, RepRateConfig(rep_rate=mid))
                hi = mid
            except OverlapError:
                lo = mid
        return hi

    assert threshold(t2) == pytest.approx(threshold(t1) / 2, rel=1e-6)


def test_continuum_limit_recovers_ideal(quick_gate):
    # slot spacing below 1e-6 trap periods: discretized infidelity within
    # 1e-8 of the ideal kick model (the gate sits at a local optimum, so the
    # residual center shifts only enter quadratically)
    seq = discretize_pulses(quick_gate, RepRateConfig(rep_rate=1e6 / PERIOD))
    spread = two_ion_infidelity(
        seq.times / PERIOD, seq.weights, quick_gate.chi, quick_gate.eta
    )
    assert abs(spread - quick_gate.infidelity) < 1e-8


def test_discretization_error_scales_quadratically(quick_gate):
    ideal = quick_gate.infidelity
    rates = np.array([1e3, 3.16e3, 1e4]) / PERIOD  # a decade
    errors = []
    for rate in rates:
        seq = discretize_pulses(quick_gate, RepRateConfig(rep_rate=rate))
        val = two_ion_infidelity(
            seq.times / PERIOD, seq.weights, quick_gate.chi, quick_gate.eta
        )
        errors.append(abs(val - ideal))
    slope = np.polyfit(np.log10(rates), np.log10(errors), 1)[0]
    assert -3.0 < slope < -1.5


def test_rep_rate_scan_marks_unresolvable(quick_gate):
    thr = min_resolvable_rate(quick_gate)
    records = rep_rate_scan(quick_gate, [thr * 0.5, thr * 1.5, thr * 50])
    assert not records[0].resolvable and records[0].infidelity is None
    assert records[1].resolvable and records[1].infidelity is not None
    assert records[2].max_center_shift <= records[1].max_center_shift * 1.01


def test_explicit_alignment_override():
    times, weights = _toy([0.0, 0.5], [2, 2])
    spacing = PERIOD / 100
    seq = discretize_sequence(
        times, weights, RepRateConfig(rep_rate=1 / spacing, alignment=spacing / 2)
    )
    offsets = (seq.times - spacing / 2) / spacing
    assert np.allclose(offsets, np.round(offsets), atol=1e-9)


def test_picker_min_gaps_match_block_packing():
    weights = np.array([-24, 48, -48, 48, -48, 24])
    rate = 150e6
    gaps = picker_min_gaps(weights, rate, REF_OMEGA, slack=1.0)
    spacing_periods = REF_OMEGA / (2 * math.pi * rate)
    assert gaps[0] == pytest.approx((24 + 48) / 2 * spacing_periods)
    # sequences honouring these gaps are resolvable at the target rate
    times = np.concatenate([[0.0], np.cumsum(gaps * 1.05)]) * PERIOD
    discretize_sequence(times, weights, RepRateConfig(rep_rate=rate))
