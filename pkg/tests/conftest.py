import math

import numpy as np
import pytest

from fastgates import (
    CA40,
    Scheme,
    TrapArrayConfig,
    derive_params,
    optimize_timings,
)

# Reference operating point: Ca40, d = 100 um, omega = 2 pi x 1 MHz, 729 nm.
REF_OMEGA = 2 * math.pi * 1e6


@pytest.fixture(scope="session")
def ref_config() -> TrapArrayConfig:
    return TrapArrayConfig(ion_count=2, spacing=100e-6, trap_frequency=REF_OMEGA)


@pytest.fixture(scope="session")
def ref_params(ref_config):
    return derive_params(ref_config)


@pytest.fixture(scope="session")
def quick_gate(ref_params):
    """A cheap but real optimized gate at the reference point, for tests that
    need some plausible solution rather than the best one."""
    return optimize_timings(
        Scheme((-2, -2, 2, 2, 1, -1), 50),
        ref_params.chi,
        ref_params.eta,
        1.4,
        seeds=4,
        seed=12,
    )


def haar_average_fidelity(amps: np.ndarray, samples: int, seed: int) -> tuple:
    """Monte-Carlo Haar average of |sum_s |c_s|^2 A_s|^2 over pure two-qubit
    states; returns (mean, standard_error).  Independent oracle for the
    closed-form state-averaged fidelity."""
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(samples, 4)) + 1j * rng.normal(size=(samples, 4))
    probs = np.abs(c) ** 2
    probs /= probs.sum(axis=1, keepdims=True)
    vals = np.abs(probs @ amps) ** 2
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))
