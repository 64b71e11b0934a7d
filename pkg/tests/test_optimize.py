import itertools
import math

import numpy as np
import pytest

from fastgates import (
    DEFAULT_ORDERING_FAMILY,
    DEFAULT_RATIO_PATTERN,
    PulseSequence,
    Scheme,
    enumerate_orderings,
    landscape_scan,
    optimize_kick_times,
    optimize_timings,
    state_averaged_fidelity,
    sweep_time_caps,
    two_ion_infidelity,
    two_ion_log_fidelity,
    two_ion_spectrum,
)
from fastgates.optimize import _times_from_params
from tests.conftest import REF_OMEGA

CHI = 1.759524730569e-4
ETA = 0.1937608577977


def test_scheme_validation():
    with pytest.raises(ValueError):
        Scheme((1, 2, 3, 1, 2, 1), 10)
    with pytest.raises(ValueError):
        Scheme((1, 2, 1, 2, 1), 10)
    with pytest.raises(ValueError):
        Scheme(DEFAULT_RATIO_PATTERN, 0)
    s = Scheme(DEFAULT_RATIO_PATTERN, 3)
    assert s.weights.tolist() == [-3, 6, -6, 6, -6, 3]
    assert s.label == "-1,2,-2,2,-2,1"


def test_determinism_bitwise(quick_gate, ref_params):
    again = optimize_timings(
        Scheme((-2, -2, 2, 2, 1, -1), 50), ref_params.chi, ref_params.eta, 1.4,
        seeds=4, seed=12,
    )
    assert again.timings_periods.tolist() == quick_gate.timings_periods.tolist()
    assert again.infidelity == quick_gate.infidelity
    assert again.achieved_tau == quick_gate.achieved_tau


def test_feasibility(quick_gate):
    t = quick_gate.timings_periods
    assert np.all(t >= 0.0) and np.all(t <= quick_gate.tau_cap)
    assert quick_gate.achieved_tau == pytest.approx(t.max() - t.min(), abs=1e-12)
    assert quick_gate.achieved_tau <= quick_gate.tau_cap


def test_seconds_and_periods_consistent(quick_gate):
    period = 2 * math.pi / quick_gate.omega
    assert np.allclose(quick_gate.timings, quick_gate.timings_periods * period)


def test_time_parameterization_reaches_cap_and_interior():
    u = np.array([1.0, 1.0, 1.0, 1.0, 1.0])
    t = _times_from_params(u, 2.0)
    assert t[-1] == pytest.approx(2.0)  # saturated: exactly the cap
    u = np.array([0.1, 0.1, 0.1, 0.1, 0.1])
    t = _times_from_params(u, 2.0)
    assert t[-1] == pytest.approx(2.0 * 0.05)  # interior: gaps = cap * u^2
    assert np.all(np.diff(t) >= 0)


def test_min_gap_constraint_respected():
    gaps = np.full(5, 0.12)
    sol = optimize_timings(
        Scheme(DEFAULT_RATIO_PATTERN, 30), CHI, ETA, 1.4,
        seeds=3, seed=4, min_gaps=gaps,
    )
    assert np.all(np.diff(sol.timings_periods) >= 0.12 - 1e-12)
    with pytest.raises(ValueError):
        optimize_timings(
            Scheme(DEFAULT_RATIO_PATTERN, 30), CHI, ETA, 0.5,
            seeds=1, seed=4, min_gaps=np.full(5, 0.12),
        )


def test_toy_single_mode_closure_recovered():
    # two unit kicks close a single mode iff they sit half a period apart
    def objective(times):
        return abs(np.exp(2j * np.pi * times[0]) + np.exp(2j * np.pi * times[1])) ** 2

    times, value = optimize_kick_times(objective, 2, 1.0, seeds=6, seed=3)
    assert value < 1e-6
    assert abs((times[1] - times[0]) - 0.5) < 1e-4


def test_reference_point_solution_quality(quick_gate):
    # chi = 1.8e-4, n = 50, cap = 1.4: gates below 1e-3 infidelity exist
    assert quick_gate.infidelity < 1e-3
    assert quick_gate.report.conditional_phase == pytest.approx(
        math.pi / 4, abs=0.05
    )


def test_solution_matches_direct_evaluation(quick_gate):
    spectrum = two_ion_spectrum(quick_gate.chi, quick_gate.eta, quick_gate.omega)
    report = state_averaged_fidelity(quick_gate.sequence(), spectrum)
    assert report.infidelity == pytest.approx(quick_gate.infidelity, rel=1e-9)


def test_envelope_monotone_over_caps():
    sols = sweep_time_caps(
        DEFAULT_ORDERING_FAMILY[:3], 30, CHI, ETA, caps=[0.5, 0.8, 1.2],
        seeds=3, seed=7,
    )
    infids = [s.infidelity for s in sols]
    for a, b in zip(infids, infids[1:]):
        assert b <= a + 1e-12
    with pytest.raises(ValueError):
        sweep_time_caps(DEFAULT_ORDERING_FAMILY[:1], 30, CHI, ETA, caps=[1.0, 0.5])


def test_tiny_cap_is_near_no_gate_floor():
    sol = optimize_timings(
        Scheme(DEFAULT_RATIO_PATTERN, 50), CHI, ETA, 0.05, seeds=3, seed=5
    )
    assert abs(sol.infidelity - 0.4) < 0.1


def test_weight_rescaling_trivial():
    # z -> 2z at fixed times: conditional phase and |Delta|^2 both quadruple
    sol = optimize_timings(Scheme(DEFAULT_RATIO_PATTERN, 10), CHI, ETA, 1.0,
                           seeds=2, seed=2)
    spec = two_ion_spectrum(CHI, ETA, REF_OMEGA)
    seq1 = sol.sequence()
    seq2 = PulseSequence(seq1.times, 2 * seq1.weights, (0, 1))
    r1, r2 = (state_averaged_fidelity(s, spec) for s in (seq1, seq2))
    assert r2.conditional_phase == pytest.approx(4 * r1.conditional_phase, rel=1e-12)


# ---- ordering enumeration ----


def test_reversal_maps_to_same_class():
    classes = enumerate_orderings(DEFAULT_RATIO_PATTERN)
    reversed_classes = enumerate_orderings(tuple(reversed(DEFAULT_RATIO_PATTERN)))
    assert classes == reversed_classes
    as_set = set(classes)
    for p in classes:
        assert tuple(reversed(p)) not in as_set or tuple(reversed(p)) == p


def test_uniform_pattern_single_class():
    assert enumerate_orderings((1, 1, 1, 1, 1, 1)) == [(-1,) * 6]


def test_default_pattern_class_count_by_fidelity_dedup():
    """Brute-force check: permutations producing identical fidelity
    signatures (over a mirror-closed set of random timings) group exactly
    into the enumerated classes."""
    classes = enumerate_orderings(DEFAULT_RATIO_PATTERN)
    rng = np.random.default_rng(42)
    cap = 1.3
    draws = [np.sort(rng.uniform(0, cap, 6)) for _ in range(3)]
    draws += [np.sort(cap - t) for t in list(draws)]  # close under mirroring

    def signature(perm):
        w = 7 * np.asarray(perm, dtype=float)
        vals = [round(two_ion_log_fidelity(t, w, 0.37, 0.2), 9) for t in draws]
        return tuple(sorted(vals))

    signatures = {signature(p) for p in set(itertools.permutations(DEFAULT_RATIO_PATTERN))}
    assert len(signatures) == len(classes)


def test_symmetry_invariances_of_fidelity():
    rng = np.random.default_rng(6)
    t = np.sort(rng.uniform(0, 1.2, 6))
    w = 11.0 * np.asarray(DEFAULT_RATIO_PATTERN, dtype=float)
    base = two_ion_infidelity(t, w, 0.05, 0.2)
    assert two_ion_infidelity(t, -w, 0.05, 0.2) == base
    mirrored = np.sort(1.2 - t)
    assert two_ion_infidelity(mirrored, w[::-1], 0.05, 0.2) == pytest.approx(
        base, rel=1e-9, abs=1e-15
    )


# ---- landscape scan ----


def test_landscape_scan_shapes_and_order():
    records, solutions = landscape_scan(
        [10, 20], [1e-4, 1e-3], [0.6], ETA,
        orderings=DEFAULT_ORDERING_FAMILY[:2], seeds=1, seed=3, maxfev=400,
    )
    assert len(records) == 4 == len(solutions)
    keys = [(r.tau_cap, r.n, r.chi) for r in records]
    assert keys == sorted(keys)
    for r in records:
        assert r.n2chi == pytest.approx(r.n**2 * r.chi)
        assert r.n2_over_chi == pytest.approx(r.n**2 / r.chi)
        assert 0 <= r.infidelity <= 1


def test_landscape_scan_empty_grid_rejected():
    with pytest.raises(ValueError):
        landscape_scan([], [1e-4], [0.6], ETA)
