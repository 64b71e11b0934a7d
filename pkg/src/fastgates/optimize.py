"""Pulse-scheme definitions and timing optimization under a gate-time cap.

A scheme is six kick groups with fixed ratio pattern (entries of magnitude 1
or 2) scaled by a positive integer n; the optimizer searches the six group
times within ``[0, tau_cap]`` trap periods for the best state-averaged
fidelity on the two-ion spectrum ``{omega, omega (1 + chi)}``.

Timings are parameterized as five non-negative gaps after pinning the first
kick to t = 0 (the fidelity is exactly time-translation invariant): with
``w = u^2`` the gaps are ``cap * w`` when ``sum(w) <= 1`` and
``cap * w / sum(w)`` otherwise, so both interior solutions and solutions
taking exactly the full allowed time are representable.  Local searches are
multi-start Nelder-Mead refined by a Powell polish, on log-fidelity so that
strongly unclosed trial sequences keep usable structure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .dynamics import (
    TARGET_PHASE,
    FidelityReport,
    MotionalState,
    PulseSequence,
    state_averaged_fidelity,
    two_ion_log_fidelity,
)
from .modes import two_ion_spectrum

REFERENCE_OMEGA = 2 * math.pi * 1e6  # rad/s, for reporting timings in seconds

GROUP_COUNT = 6

#: Base kick-ratio pattern: antisymmetric, zero total weight, trains of n or 2n.
DEFAULT_RATIO_PATTERN = (-1, 2, -2, 2, -2, 1)

#: Orderings used by scans when none are specified: a small family that
#: covers the observed optimal schemes across the (n, chi, cap) landscape.
#: Patterns are data, not code; pass your own list to widen the search.
DEFAULT_ORDERING_FAMILY = (
    (-2, -2, 2, -1, 1, 2),
    (-2, -2, 2, 2, 1, -1),
    (-2, 1, -2, 2, 2, -1),
    (-1, 2, -2, 2, -2, 1),
    (-2, 2, -2, 2, -1, 1),
    (-2, -1, 2, -2, 2, 1),
)


def _validate_pattern(ratios) -> tuple[int, ...]:
    ratios = tuple(int(r) for r in ratios)
    if len(ratios) != GROUP_COUNT:
        raise ValueError(f"ratio pattern needs {GROUP_COUNT} entries, got {len(ratios)}")
    if any(abs(r) not in (1, 2) for r in ratios):
        raise ValueError(f"ratio entries must have magnitude 1 or 2, got {ratios}")
    return ratios


@dataclass(frozen=True)
class Scheme:
    """An ordered kick-ratio pattern and its integer scale n.

    ``ratios`` is the pattern in the order the groups are applied, so it
    encodes both the multiset of ratios and the ordering; group weights are
    ``n * ratios``.
    """

    ratios: tuple[int, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "ratios", _validate_pattern(self.ratios))
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")

    @property
    def weights(self) -> np.ndarray:
        return self.n * np.asarray(self.ratios, dtype=float)

    @property
    def label(self) -> str:
        return ",".join(str(r) for r in self.ratios)


@dataclass(frozen=True)
class GateSolution:
    """Optimized timings for a scheme and the resulting fidelity record."""

    scheme: Scheme
    timings: np.ndarray  # seconds
    timings_periods: np.ndarray
    chi: float
    eta: float
    omega: float
    tau_cap: float
    achieved_tau: float
    report: FidelityReport
    seed: int

    @property
    def infidelity(self) -> float:
        return self.report.infidelity

    def sequence(self) -> PulseSequence:
        return PulseSequence(self.timings, self.scheme.weights, (0, 1))

    def full_time(self, rel_tol: float = 1e-9) -> bool:
        return self.tau_cap - self.achieved_tau <= rel_tol * self.tau_cap


@dataclass(frozen=True)
class LandscapeRecord:
    n: int
    chi: float
    n2chi: float
    n2_over_chi: float
    tau_cap: float
    achieved_tau: float
    infidelity: float
    ordering: str
    full_time: bool


def _times_from_params(
    u: np.ndarray, cap: float, min_gaps: np.ndarray | None = None
) -> np.ndarray:
    w = u * u
    if min_gaps is None:
        budget = cap
        base = 0.0
    else:
        base = np.asarray(min_gaps, dtype=float)
        budget = cap - base.sum()
    total = w.sum()
    gaps = base + (budget * w if total <= 1.0 else budget * w / total)
    times = np.empty(len(u) + 1)
    times[0] = 0.0
    times[1:] = np.cumsum(gaps)
    return times


def _params_from_times(
    times: np.ndarray, cap: float, min_gaps: np.ndarray | None = None
) -> np.ndarray:
    gaps = np.diff(np.sort(np.asarray(times, dtype=float)))
    if min_gaps is not None:
        budget = cap - np.sum(min_gaps)
        gaps = gaps - np.asarray(min_gaps, dtype=float)
        return np.sqrt(np.clip(gaps / budget, 0.0, 1.0))
    return np.sqrt(np.clip(gaps / cap, 0.0, 1.0))


def _antisymmetric_start(rng: np.random.Generator, cap: float) -> np.ndarray:
    """Six times mirror-symmetric about the sequence midpoint."""
    half = rng.uniform(0.05, 0.5, size=3)
    half = half / half.sum() * rng.uniform(0.3, 0.5) * cap
    gaps = np.array([half[0], half[1], 2 * half[2], half[1], half[0]])
    return np.sqrt(gaps / cap)


def optimize_kick_times(
    objective,
    group_count: int,
    tau_cap: float,
    seeds: int = 8,
    seed: int = 0,
    warm_starts: tuple = (),
    extra_starts: tuple = (),
    maxfev: int = 4000,
    min_gaps: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Multi-start local search over ordered kick times in [0, tau_cap].

    ``objective`` maps a time array (trap periods, sorted, first entry 0) to
    the value to minimize.  ``min_gaps`` (trap periods, one per adjacent
    group pair) constrains the search to sequences with at least that much
    separation, e.g. so a pulse picker of a given repetition rate can resolve
    the groups.  Returns (times, value) of the best start after a Powell
    polish.  Deterministic for a fixed seed.
    """
    if tau_cap <= 0:
        raise ValueError(f"tau_cap must be positive, got {tau_cap!r}")
    if min_gaps is not None:
        min_gaps = np.asarray(min_gaps, dtype=float)
        if min_gaps.shape != (group_count - 1,) or np.any(min_gaps < 0):
            raise ValueError("min_gaps needs one non-negative entry per gap")
        if min_gaps.sum() >= tau_cap:
            raise ValueError("min_gaps exceed the gate-time cap")
    rng = np.random.default_rng(seed)

    def wrapped(u: np.ndarray) -> float:
        return objective(_times_from_params(u, tau_cap, min_gaps))

    starts = [_params_from_times(np.asarray(w), tau_cap, min_gaps) for w in warm_starts]
    starts.extend(np.asarray(s, dtype=float) for s in extra_starts)
    starts.extend(rng.normal(0.0, 0.45, size=group_count - 1) for _ in range(seeds))

    best_u, best_val = None, np.inf
    for u0 in starts:
        res = minimize(
            wrapped,
            u0,
            method="Nelder-Mead",
            options=dict(maxfev=maxfev, xatol=1e-11, fatol=1e-15, adaptive=True),
        )
        if res.fun < best_val:
            best_u, best_val = res.x, res.fun
    res = minimize(
        wrapped,
        best_u,
        method="Powell",
        options=dict(maxfev=4 * maxfev, xtol=1e-12, ftol=1e-15),
    )
    if res.fun < best_val:
        best_u, best_val = res.x, res.fun
    return _times_from_params(best_u, tau_cap, min_gaps), best_val


def optimize_timings(
    scheme: Scheme,
    chi: float,
    eta: float,
    tau_cap: float,
    seeds: int = 8,
    seed: int = 0,
    omega: float = REFERENCE_OMEGA,
    target_phase: float = TARGET_PHASE,
    warm_starts: tuple = (),
    maxfev: int = 4000,
    min_gaps: np.ndarray | None = None,
) -> GateSolution:
    """Best-found kick timings for one scheme under a gate-time cap.

    Runs ``seeds`` random Nelder-Mead starts plus one antisymmetric-timing
    start and any ``warm_starts`` (timings in trap periods from previous
    solutions), then polishes the winner with Powell.  Deterministic for a
    fixed seed.  ``tau_cap`` is in trap periods; ``min_gaps`` optionally
    keeps adjacent groups separated (pulse-picker-friendly solutions).
    """
    if chi <= 0:
        raise ValueError(f"chi must be positive, got {chi!r}")
    weights = scheme.weights
    rng = np.random.default_rng(seed)

    def objective(times: np.ndarray) -> float:
        return -two_ion_log_fidelity(times, weights, chi, eta, target_phase)

    times_periods, _ = optimize_kick_times(
        objective,
        GROUP_COUNT,
        tau_cap,
        seeds=seeds,
        seed=seed,
        warm_starts=warm_starts,
        extra_starts=(_antisymmetric_start(rng, tau_cap),),
        maxfev=maxfev,
        min_gaps=min_gaps,
    )
    return _solution_from_times(
        scheme, times_periods, chi, eta, omega, tau_cap, target_phase, seed
    )


def _solution_from_times(
    scheme, times_periods, chi, eta, omega, tau_cap, target_phase, seed
) -> GateSolution:
    spectrum = two_ion_spectrum(chi, eta, omega)
    period = 2 * math.pi / omega
    seq = PulseSequence(times_periods * period, scheme.weights, (0, 1))
    report = state_averaged_fidelity(
        seq, spectrum, MotionalState.ground(2), target_phase
    )
    return GateSolution(
        scheme=scheme,
        timings=seq.times,
        timings_periods=np.sort(times_periods),
        chi=chi,
        eta=eta,
        omega=omega,
        tau_cap=tau_cap,
        achieved_tau=float(times_periods.max() - times_periods.min()),
        report=report,
        seed=seed,
    )


def _better(a: GateSolution, b: GateSolution) -> GateSolution:
    """Tie-break equal fidelities by smaller gate time, then by timings."""
    if a.report.log_fidelity != b.report.log_fidelity:
        return a if a.report.log_fidelity > b.report.log_fidelity else b
    if a.achieved_tau != b.achieved_tau:
        return a if a.achieved_tau < b.achieved_tau else b
    return a if tuple(a.timings_periods) <= tuple(b.timings_periods) else b


def optimize_over_orderings(
    orderings,
    n: int,
    chi: float,
    eta: float,
    tau_cap: float,
    seeds: int = 8,
    seed: int = 0,
    omega: float = REFERENCE_OMEGA,
    warm_starts: tuple = (),
    maxfev: int = 4000,
    min_gaps_for=None,
) -> GateSolution:
    """Best solution across a family of orderings at one (n, chi, cap) point.

    ``min_gaps_for`` optionally maps an ordering's weights to per-gap minimum
    separations (trap periods), for repetition-rate-aware searches.
    """
    best = None
    for ratios in orderings:
        scheme = Scheme(tuple(ratios), n)
        sol = optimize_timings(
            scheme,
            chi,
            eta,
            tau_cap,
            seeds=seeds,
            seed=seed,
            omega=omega,
            warm_starts=warm_starts,
            maxfev=maxfev,
            min_gaps=None if min_gaps_for is None else min_gaps_for(scheme.weights),
        )
        best = sol if best is None else _better(best, sol)
    return best


def sweep_time_caps(
    orderings,
    n: int,
    chi: float,
    eta: float,
    caps,
    seeds: int = 8,
    seed: int = 0,
    omega: float = REFERENCE_OMEGA,
) -> list[GateSolution]:
    """Optimize per cap over an ascending list of caps, warm-starting each cap
    with every previous best so the infidelity envelope is non-increasing."""
    caps = list(caps)
    if any(b <= a for a, b in zip(caps, caps[1:])):
        raise ValueError("caps must be strictly ascending")
    solutions: list[GateSolution] = []
    warm: list[np.ndarray] = []
    for cap in caps:
        sol = optimize_over_orderings(
            orderings, n, chi, eta, cap, seeds=seeds, seed=seed, omega=omega,
            warm_starts=tuple(warm),
        )
        # keep the warm-start pool small: best timings seen so far
        warm.append(sol.timings_periods)
        solutions.append(sol)
    return solutions


def enumerate_orderings(ratio_pattern) -> list[tuple[int, ...]]:
    """Distinct orderings of a ratio pattern modulo the symmetries of F.

    Time reversal (with mirrored timings) and a global sign flip both leave
    the fidelity invariant, so orderings related by reversal or negation are
    one scheme class.  Returns each class's lexicographically smallest
    representative, sorted.
    """
    pattern = _validate_pattern(ratio_pattern)
    classes = set()
    for p in set(itertools.permutations(pattern)):
        rev = tuple(reversed(p))
        neg = tuple(-x for x in p)
        neg_rev = tuple(-x for x in rev)
        classes.add(min(p, rev, neg, neg_rev))
    return sorted(classes)


def landscape_scan(
    n_values,
    chi_values,
    caps,
    eta: float,
    orderings=DEFAULT_ORDERING_FAMILY,
    seeds: int = 6,
    seed: int = 0,
    omega: float = REFERENCE_OMEGA,
    pool_map=map,
    maxfev: int = 4000,
) -> tuple[list[LandscapeRecord], list[GateSolution]]:
    """Optimize over a (cap, n, chi) grid; one record per point, best over
    orderings.  ``pool_map`` may be a parallel map; records are assembled in
    grid order regardless of completion order."""
    points = [
        (cap, n, chi)
        for cap in sorted(caps)
        for n in sorted(n_values)
        for chi in sorted(chi_values)
    ]
    if not points:
        raise ValueError("landscape grids must be non-empty")
    tasks = [
        _LandscapeTask(n, chi, cap, eta, tuple(tuple(o) for o in orderings),
                       seeds, seed, omega, maxfev)
        for cap, n, chi in points
    ]
    solutions = list(pool_map(_run_landscape_task, tasks))
    records = [
        LandscapeRecord(
            n=sol.scheme.n,
            chi=sol.chi,
            n2chi=sol.scheme.n**2 * sol.chi,
            n2_over_chi=sol.scheme.n**2 / sol.chi,
            tau_cap=sol.tau_cap,
            achieved_tau=sol.achieved_tau,
            infidelity=sol.infidelity,
            ordering=sol.scheme.label,
            full_time=sol.full_time(),
        )
        for sol in solutions
    ]
    return records, solutions


@dataclass(frozen=True)
class _LandscapeTask:
    n: int
    chi: float
    cap: float
    eta: float
    orderings: tuple
    seeds: int
    seed: int
    omega: float
    maxfev: int


def _run_landscape_task(task: _LandscapeTask) -> GateSolution:
    return optimize_over_orderings(
        task.orderings,
        task.n,
        task.chi,
        task.eta,
        task.cap,
        seeds=task.seeds,
        seed=task.seed,
        omega=task.omega,
        maxfev=task.maxfev,
    )
