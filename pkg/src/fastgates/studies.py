"""Study execution and deterministic result persistence.

Every study writes one CSV data file (RFC 4180, ``.`` decimal, scientific
notation with 17 significant digits) plus a JSON metadata sidecar echoing the
fully resolved configuration, seed, package version and schema version, so
any output can be re-run from its own sidecar.  CSVs are byte-identical for
identical config and seed, independent of the worker count; files are
written to a temporary name and promoted atomically.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .dynamics import MotionalState, PulseSequence, state_averaged_fidelity
from .fock import FockConfig, fidelity_oracle
from .modes import mode_spectrum, two_ion_spectrum
from .optimize import (
    GateSolution,
    Scheme,
    landscape_scan,
    optimize_over_orderings,
)
from .params import derive_params
from .robustness import jitter_sweep, rep_rate_scan
from .scaling import chain_infidelity, innermost_pair, outermost_pair, scaling_ratio_scan

SCHEMA_VERSIONS = {
    "modes": 1,
    "optimize": 1,
    "landscape": 1,
    "robustness-jitter": 1,
    "robustness-reprate": 1,
    "scaling": 1,
    "oracle-check": 1,
}


class ArchiveError(RuntimeError):
    """An archive key was re-written with different contents."""


class StudyFailure(RuntimeError):
    """A study finished but failed its own pass criterion."""


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    if value is None:
        return ""
    return str(value)


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)  # RFC 4180 line endings
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _write_atomic(path, buf.getvalue().encode())


class SolutionArchive:
    """Append-only store of optimized gates, keyed by
    (scheme, n, chi, eta, tau_cap, seed)."""

    def __init__(self, path: Path):
        self.path = Path(path)

    @staticmethod
    def key(sol: GateSolution) -> str:
        return "|".join(
            [
                sol.scheme.label,
                f"n={sol.scheme.n}",
                f"chi={sol.chi:.16e}",
                f"eta={sol.eta:.16e}",
                f"cap={sol.tau_cap:.16e}",
                f"seed={sol.seed}",
            ]
        )

    @staticmethod
    def record(sol: GateSolution) -> dict:
        return {
            "key": SolutionArchive.key(sol),
            "ratios": list(sol.scheme.ratios),
            "n": sol.scheme.n,
            "chi": sol.chi,
            "eta": sol.eta,
            "omega": sol.omega,
            "tau_cap": sol.tau_cap,
            "achieved_tau": sol.achieved_tau,
            "timings_periods": [float(t) for t in sol.timings_periods],
            "infidelity": sol.infidelity,
            "conditional_phase": sol.report.conditional_phase,
            "seed": sol.seed,
        }

    def load(self) -> dict:
        records = {}
        if self.path.exists():
            with open(self.path) as fh:
                for line in fh:
                    rec = json.loads(line)
                    records[rec["key"]] = rec
        return records

    def append(self, solutions) -> int:
        """Append new solutions; re-appending an identical record is a no-op,
        a conflicting one is an error.  Returns the number actually added."""
        existing = self.load()
        added = 0
        with open(self.path, "a") as fh:
            for sol in solutions:
                rec = self.record(sol)
                old = existing.get(rec["key"])
                if old is not None:
                    if old != json.loads(json.dumps(rec)):
                        raise ArchiveError(
                            f"archive key {rec['key']} already exists with "
                            "different contents"
                        )
                    continue
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
                existing[rec["key"]] = rec
                added += 1
        return added


def _gate_params(cfg: RunConfig, chi=None, eta=None) -> tuple[float, float]:
    """(chi, eta), with the physical configuration filling in the blanks."""
    params = derive_params(cfg.physical.trap_array(ion_count=2))
    return (
        chi if chi is not None else params.chi,
        eta if eta is not None else params.eta,
    )


def _optimize_gate(cfg: RunConfig, gate) -> GateSolution:
    chi, eta = _gate_params(cfg, gate.chi, gate.eta)
    omega = cfg.physical.trap_array(ion_count=2).trap_frequency
    return optimize_over_orderings(
        gate.orderings, gate.n, chi, eta, gate.tau_cap,
        seeds=gate.seeds, seed=cfg.seed, omega=omega,
    )


def _study_modes(cfg: RunConfig, workers: int):
    trap = cfg.physical.trap_array()
    spec = mode_spectrum(trap, shift_positions=cfg.modes["shift_positions"])
    omega = trap.trap_frequency
    header = ["mode", "frequency_mhz", "chi_m", "lamb_dicke"] + [
        f"amp_{i}" for i in range(trap.ion_count)
    ]
    rows = [
        [m, spec.frequencies[m] / (2 * math.pi * 1e6),
         spec.frequencies[m] / omega - 1.0, spec.lamb_dicke[m]]
        + list(spec.mode_matrix[:, m])
        for m in range(trap.ion_count)
    ]
    return header, rows, {}, []


def _study_optimize(cfg: RunConfig, workers: int):
    sol = _optimize_gate(cfg, cfg.optimize["gate"])
    header = [
        "n", "chi", "eta", "tau_cap", "achieved_tau", "infidelity",
        "conditional_phase", "ordering",
    ] + [f"t{i}_periods" for i in range(6)] + ["seed"]
    row = [
        sol.scheme.n, sol.chi, sol.eta, sol.tau_cap, sol.achieved_tau,
        sol.infidelity, sol.report.conditional_phase, sol.scheme.label,
        *sol.timings_periods, sol.seed,
    ]
    return header, [row], {"infidelity": sol.infidelity}, [sol]


def _study_landscape(cfg: RunConfig, workers: int):
    sc = cfg.landscape
    _, eta = _gate_params(cfg)
    pool_map = map
    executor = None
    if workers > 1:
        executor = ProcessPoolExecutor(max_workers=workers)
        pool_map = executor.map
    try:
        records, solutions = landscape_scan(
            sc["n_values"], sc["chi_values"], sc["caps"], eta,
            orderings=sc["orderings"], seeds=sc["seeds"], seed=cfg.seed,
            pool_map=pool_map, maxfev=sc["maxfev"],
        )
    finally:
        if executor is not None:
            executor.shutdown()
    header = [
        "tau_cap", "n", "chi", "n2chi", "n2_over_chi", "achieved_tau",
        "full_time", "infidelity", "ordering",
    ]
    rows = [
        [r.tau_cap, r.n, r.chi, r.n2chi, r.n2_over_chi, r.achieved_tau,
         r.full_time, r.infidelity, r.ordering]
        for r in records
    ]
    return header, rows, {"points": len(rows)}, solutions


def _study_jitter(cfg: RunConfig, workers: int):
    sc = cfg.jitter
    sol = _optimize_gate(cfg, sc["gate"])
    stats = jitter_sweep(
        sol, sc["sigmas"], samples=sc["samples"], seed=cfg.seed,
        per_pulse=sc["per_pulse"],
    )
    header = [
        "sigma_periods", "samples", "mean_infidelity", "standard_error",
        "noiseless_infidelity", "exponential_rate", "ks_statistic", "cv",
    ]
    rows = [
        [s.sigma, s.samples, s.mean_infidelity, s.standard_error,
         s.noiseless_infidelity, s.exponential_rate, s.ks_statistic, s.cv]
        for s in stats
    ]
    return header, rows, {"noiseless_infidelity": sol.infidelity}, [sol]


def _study_reprate(cfg: RunConfig, workers: int):
    sc = cfg.reprate
    sol = _optimize_gate(cfg, sc["gate"])
    period = 2 * math.pi / sol.omega
    records = rep_rate_scan(sol, [r * 1e6 for r in sc["rates_mhz"]])
    header = ["rate_mhz", "resolvable", "infidelity", "max_center_shift_periods"]
    rows = [
        [r.rep_rate / 1e6, r.resolvable, r.infidelity,
         None if r.max_center_shift is None else r.max_center_shift / period]
        for r in records
    ]
    return header, rows, {"noiseless_infidelity": sol.infidelity}, [sol]


def _study_scaling(cfg: RunConfig, workers: int):
    sc = cfg.scaling
    if sc["mode"] == "plateau":
        sol = _optimize_gate(cfg, sc["gate"])
        header = ["ion_count", "pair_kind", "pair_lo", "pair_hi", "infidelity"]
        rows = []
        for n_ions in sc["ion_counts"]:
            for kind, pairfn in (("innermost", innermost_pair), ("outermost", outermost_pair)):
                pair = pairfn(n_ions)
                ev = chain_infidelity(sol, n_ions, pair)
                rows.append([n_ions, kind, pair[0], pair[1], ev.infidelity])
        return header, rows, {"two_ion_infidelity": sol.infidelity}, [sol]

    gate = sc["gate"]
    _, eta = _gate_params(cfg, gate.chi, gate.eta)
    omega = cfg.physical.trap_array(ion_count=2).trap_frequency
    rng = np.random.default_rng(cfg.seed)
    gates: list[GateSolution] = []
    lo, hi = sc["chi_range"]
    n_lo, n_hi = sc["n_range"]
    for _ in range(sc["max_tries"]):
        if len(gates) >= sc["gate_count"]:
            break
        chi = 10 ** rng.uniform(math.log10(lo), math.log10(hi))
        n = int(round(10 ** rng.uniform(math.log10(n_lo), math.log10(n_hi))))
        cap = float(rng.choice(sc["caps"]))
        sol = optimize_over_orderings(
            gate.orderings, n, chi, eta, cap, seeds=gate.seeds,
            seed=int(rng.integers(2**31)), omega=omega,
        )
        if 1e-11 < sol.infidelity < 1e-2:
            gates.append(sol)
    scan = scaling_ratio_scan(gates, sc["ion_count"])
    header = ["chi", "n", "tau_cap", "two_ion_infidelity", "chain_infidelity", "ratio"]
    rows = [
        [g.chi, g.scheme.n, g.tau_cap, i2, i_n, ratio]
        for g, i2, i_n, ratio in zip(
            gates, scan.two_ion_infidelities, scan.chain_infidelities, scan.ratios
        )
    ]
    meta = {"slope": scan.slope, "intercept": scan.intercept, "gates": len(gates)}
    return header, rows, meta, gates


def oracle_check_cases(cases: int, max_n: int, seed: int):
    """Randomized small two-ion sequences for closed-form vs oracle checks."""
    rng = np.random.default_rng(seed)
    for case in range(cases):
        chi = 10 ** rng.uniform(-3.0, -0.7)
        eta = rng.uniform(0.08, 0.24)
        n = int(rng.integers(1, max_n + 1))
        count = int(rng.integers(2, 7))
        ratios = rng.choice([-2, -1, 1, 2], size=count)
        times = np.sort(rng.uniform(0.0, 2.0, size=count))
        yield case, chi, eta, n, times, n * ratios


def _study_oracle(cfg: RunConfig, workers: int):
    sc = cfg.oracle
    omega = 2 * math.pi * 1e6
    period = 2 * math.pi / omega
    header = ["case", "chi", "eta", "kicks", "f_closed", "f_oracle", "abs_diff"]
    rows = []
    worst = 0.0
    for case, chi, eta, n, times, weights in oracle_check_cases(
        sc["cases"], sc["max_n"], cfg.seed
    ):
        spectrum = two_ion_spectrum(chi, eta, omega)
        seq = PulseSequence(times * period, weights, (0, 1))
        f_closed = state_averaged_fidelity(
            seq, spectrum, MotionalState.ground(2)
        ).fidelity
        f_oracle = fidelity_oracle(
            seq, spectrum, FockConfig(truncation=16, convergence_tolerance=1e-9)
        )
        diff = abs(f_closed - f_oracle)
        worst = max(worst, diff)
        rows.append([case, chi, eta, len(times), f_closed, f_oracle, diff])
    meta = {
        "worst_abs_diff": worst,
        "tolerance": sc["tolerance"],
        "passed": worst < sc["tolerance"],
    }
    return header, rows, meta, []


_RUNNERS = {
    "modes": _study_modes,
    "optimize": _study_optimize,
    "landscape": _study_landscape,
    "robustness-jitter": _study_jitter,
    "robustness-reprate": _study_reprate,
    "scaling": _study_scaling,
    "oracle-check": _study_oracle,
}


def run_study(cfg: RunConfig, out_dir, workers: int = 1) -> Path:
    """Execute the configured study and persist its outputs.

    Returns the CSV path.  Raises :class:`StudyFailure` if the study ran but
    failed its own criterion (currently only oracle-check).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.output or cfg.kind
    started = time.time()
    header, rows, meta, solutions = _RUNNERS[cfg.kind](cfg, workers)
    csv_path = out_dir / f"{stem}.csv"
    write_csv(csv_path, header, rows)
    sidecar = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "kind": cfg.kind,
        "schema_version": SCHEMA_VERSIONS[cfg.kind],
        "version": __version__,
        "wall_time_s": time.time() - started,
        "rows": len(rows),
        **meta,
    }
    _write_atomic(
        out_dir / f"{stem}.meta.json", (json.dumps(sidecar, indent=1) + "\n").encode()
    )
    if solutions:
        SolutionArchive(out_dir / "archive.jsonl").append(solutions)
    if cfg.kind == "oracle-check" and not meta["passed"]:
        raise StudyFailure(
            f"oracle check failed: worst |F_closed - F_oracle| = "
            f"{meta['worst_abs_diff']:.3e} >= {meta['tolerance']:.1e}"
        )
    return csv_path
