"""Gate degradation under timing jitter and finite laser repetition rate.

Two error models for how kick-group times are realized in hardware:

* delay loops -- Gaussian timing noise on each group (optionally on each
  individual pulse pair), studied by seeded Monte Carlo;
* pulse picker -- group times snap onto a slot grid of spacing
  1/rep_rate, spreading each group of |z_j| pulse pairs over consecutive
  slots and shifting its mean time, which fails outright once two groups
  would need the same slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .dynamics import PulseSequence, two_ion_infidelity
from .optimize import GateSolution


class OverlapError(RuntimeError):
    """Two kick groups need the same slot: rep rate below threshold."""


@dataclass(frozen=True)
class JitterConfig:
    sigma: float  # standard deviation of the group-time noise, trap periods
    samples: int = 10_000
    seed: int = 0
    per_pulse: bool = False  # jitter each pulse pair instead of each group

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")


@dataclass(frozen=True)
class RepRateConfig:
    rep_rate: float  # counter-propagating pulse-pair rate, Hz
    alignment: float | None = None  # slot-grid offset (s); None = auto

    def __post_init__(self):
        if self.rep_rate <= 0:
            raise ValueError("rep_rate must be positive")


@dataclass(frozen=True)
class JitterStats:
    sigma: float
    samples: int
    mean_infidelity: float
    standard_error: float
    noiseless_infidelity: float
    exponential_rate: float  # MLE rate of the excess-infidelity distribution
    ks_statistic: float  # KS distance of the excess from the fitted exponential
    cv: float  # std/mean of the excess; 1 for an exponential


def _jittered_times(
    sol: GateSolution, cfg: JitterConfig, normals: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(times, weights) template in trap periods; normals shape (samples, k)."""
    if cfg.per_pulse:
        counts = np.abs(sol.scheme.weights).astype(int)
        base = np.repeat(sol.timings_periods, counts)
        weights = np.repeat(np.sign(sol.scheme.weights), counts)
    else:
        base = sol.timings_periods
        weights = sol.scheme.weights
    return base[None, :] + cfg.sigma * normals, weights


def _jitter_normals(sol: GateSolution, cfg: JitterConfig) -> np.ndarray:
    k = sol.scheme.weights.size if not cfg.per_pulse else int(
        np.sum(np.abs(sol.scheme.weights))
    )
    return np.random.default_rng(cfg.seed).standard_normal((cfg.samples, k))


def mc_mean_infidelity(
    sol: GateSolution, cfg: JitterConfig, normals: np.ndarray | None = None
) -> JitterStats:
    """Mean infidelity under Gaussian timing noise, with distribution shape.

    ``normals`` may carry pre-drawn standard normals (common random numbers
    for sweeps over sigma); by default they are drawn from ``cfg.seed``.
    The reported figure of merit is the mean of the per-sample infidelity
    distribution; the excess over the noiseless infidelity is fitted with an
    exponential and the Kolmogorov-Smirnov distance to that fit is returned
    as a shape diagnostic.
    """
    if normals is None:
        normals = _jitter_normals(sol, cfg)
    times, weights = _jittered_times(sol, cfg, normals)
    vals = np.array(
        [two_ion_infidelity(t, weights, sol.chi, sol.eta) for t in times]
    )
    noiseless = sol.infidelity
    mean = float(vals.mean())
    sem = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    excess = np.clip(vals - noiseless, 0.0, None)
    mean_excess = float(excess.mean())
    if mean_excess > 0:
        rate = 1.0 / mean_excess
        ks = float(stats.kstest(excess, "expon", args=(0.0, mean_excess)).statistic)
        cv = float(excess.std(ddof=1) / mean_excess) if len(excess) > 1 else 0.0
    else:
        rate, ks, cv = math.inf, 0.0, 0.0
    return JitterStats(
        sigma=cfg.sigma,
        samples=cfg.samples,
        mean_infidelity=mean,
        standard_error=sem,
        noiseless_infidelity=noiseless,
        exponential_rate=rate,
        ks_statistic=ks,
        cv=cv,
    )


def jitter_sweep(
    sol: GateSolution, sigmas, samples: int = 10_000, seed: int = 0,
    per_pulse: bool = False,
) -> list[JitterStats]:
    """Jitter study over several sigmas with common random numbers."""
    sigmas = list(sigmas)
    base = _jitter_normals(
        sol, JitterConfig(sigma=0.0, samples=samples, seed=seed, per_pulse=per_pulse)
    )
    return [
        mc_mean_infidelity(
            sol,
            JitterConfig(sigma=s, samples=samples, seed=seed, per_pulse=per_pulse),
            normals=base,
        )
        for s in sigmas
    ]


def _auto_alignment(targets: np.ndarray, counts: np.ndarray, spacing: float) -> float:
    """Slot-grid offset minimizing the worst group-center shift.

    The worst shift is a maximum of unit-slope sawtooths of period
    ``spacing``; its minimum lies either at an offset that centres some group
    exactly or midway between two adjacent such offsets on the period torus.
    """
    zeros = np.sort(np.mod(targets - (counts - 1) * spacing / 2.0, spacing))
    candidates = list(zeros)
    ring = np.concatenate([zeros, [zeros[0] + spacing]])
    candidates.extend((ring[:-1] + ring[1:]) / 2.0 % spacing)

    def worst(a: float) -> float:
        centers_off = np.mod(targets - (counts - 1) * spacing / 2.0 - a, spacing)
        return float(np.max(np.minimum(centers_off, spacing - centers_off)))

    best = min(sorted(set(candidates)), key=lambda a: (worst(a), a))
    return float(best)


def discretize_sequence(
    times: np.ndarray, weights: np.ndarray, cfg: RepRateConfig
) -> PulseSequence:
    """Expand kick groups (times in seconds) onto the pulse-picker slot grid.

    Group j becomes |z_j| unit-weight kicks of sign sgn(z_j) on consecutive
    slots of spacing 1/rep_rate, centred as closely as the grid allows on the
    ideal group time (ties resolved toward the later slot).  Raises
    :class:`OverlapError` if two groups would share a slot.
    """
    spacing = 1.0 / cfg.rep_rate
    targets = np.asarray(times, dtype=float)
    weights = np.asarray(weights)
    counts = np.abs(weights).astype(int)
    signs = np.sign(weights)

    # resolvability is alignment-independent: each group ideally spans
    # counts * spacing around its centre, so adjacent groups need centre
    # separations of at least the mean of their pulse counts times the
    # spacing (and the feasible set grows monotonically with the rate)
    order = np.argsort(targets, kind="stable")
    for a, b in zip(order[:-1], order[1:]):
        need = (counts[a] + counts[b]) / 2.0 * spacing
        if (targets[b] - targets[a]) * (1 + 1e-12) < need:
            raise OverlapError(
                f"groups at {targets[a]:.3e}s and {targets[b]:.3e}s overlap at "
                f"rep rate {cfg.rep_rate:.4g} Hz"
            )

    align = (
        cfg.alignment
        if cfg.alignment is not None
        else _auto_alignment(targets, counts, spacing)
    )
    # first slot index of each group; round half toward the later slot
    starts = np.floor((targets - align) / spacing - (counts - 1) / 2.0 + 0.5).astype(
        int
    )
    for a, b in zip(order[:-1], order[1:]):
        if starts[b] < starts[a] + counts[a]:  # rounding collision: nudge apart
            starts[b] = starts[a] + counts[a]
    slot_times = np.concatenate(
        [align + (start + np.arange(c)) * spacing for start, c in zip(starts, counts)]
    )
    slot_weights = np.concatenate([np.full(c, s) for s, c in zip(signs, counts)])
    return PulseSequence(slot_times, slot_weights, (0, 1))


def discretize_pulses(sol: GateSolution, cfg: RepRateConfig) -> PulseSequence:
    """Discretize an optimized gate's kick groups; see :func:`discretize_sequence`."""
    return discretize_sequence(sol.timings, sol.scheme.weights, cfg)


@dataclass(frozen=True)
class RepRateRecord:
    rep_rate: float
    resolvable: bool
    infidelity: float | None
    max_center_shift: float | None  # seconds


def _group_center_shift(sol: GateSolution, seq: PulseSequence) -> float:
    counts = np.abs(sol.scheme.weights).astype(int)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    shifts = [
        abs(float(np.mean(seq.times[offsets[j] : offsets[j + 1]])) - t)
        for j, t in enumerate(np.sort(sol.timings))
    ]
    return max(shifts)


def rep_rate_scan(sol: GateSolution, rates) -> list[RepRateRecord]:
    """Discretize and re-evaluate the gate at each repetition rate."""
    records = []
    period = 2 * math.pi / sol.omega
    for rate in rates:
        try:
            seq = discretize_pulses(sol, RepRateConfig(rep_rate=rate))
        except OverlapError:
            records.append(RepRateRecord(rate, False, None, None))
            continue
        infid = two_ion_infidelity(seq.times / period, seq.weights, sol.chi, sol.eta)
        records.append(
            RepRateRecord(rate, True, infid, _group_center_shift(sol, seq))
        )
    return records


def picker_min_gaps(
    weights: np.ndarray, rep_rate: float, omega: float, slack: float = 1.05
) -> np.ndarray:
    """Minimum adjacent-group separations (trap periods) resolvable by a
    pulse picker of the given repetition rate.

    Two groups of p and q pulses need their centres at least (p + q)/2 slots
    apart; ``slack`` adds margin for grid-alignment rounding."""
    counts = np.abs(np.asarray(weights, dtype=float))
    spacing_periods = omega / (2 * math.pi * rep_rate)
    return slack * (counts[:-1] + counts[1:]) / 2.0 * spacing_periods


def min_resolvable_rate(
    sol: GateSolution, lo: float = 1e6, hi: float = 1e12, rel_tol: float = 1e-6
) -> float:
    """Lowest repetition rate at which the groups discretize without overlap."""

    def resolvable(rate: float) -> bool:
        try:
            discretize_pulses(sol, RepRateConfig(rep_rate=rate))
            return True
        except OverlapError:
            return False

    if not resolvable(hi):
        raise OverlapError(f"gate unresolvable even at {hi:.3g} Hz")
    if resolvable(lo):
        return lo
    while hi / lo > 1 + rel_tol:
        mid = math.sqrt(lo * hi)
        if resolvable(mid):
            hi = mid
        else:
            lo = mid
    return hi
