"""Fast controlled-phase gates between ions in microtrap arrays.

Simulation and optimization of kick-sequence entangling gates: normal-mode
analysis of coupled microtraps, closed-form gate fidelities with a
Fock-space oracle, timing optimization under gate-time caps, multi-ion
scaling, and timing-noise / repetition-rate robustness studies.
"""

from .params import (
    CA40,
    DerivedParams,
    IonSpecies,
    TrapArrayConfig,
    chi_from_xi,
    derive_params,
)
from .modes import (
    EquilibriumChain,
    EquilibriumError,
    ModeSpectrum,
    mode_spectrum,
    solve_equilibrium,
    two_ion_spectrum,
)
from .dynamics import (
    BASIS_STATES,
    TARGET_PHASE,
    FidelityReport,
    MotionalState,
    PulseSequence,
    conditional_phase,
    mode_kick_sum,
    state_averaged_fidelity,
    two_ion_infidelity,
    two_ion_log_fidelity,
)
from .fock import FockConfig, fidelity_oracle, simulate
from .optimize import (
    DEFAULT_ORDERING_FAMILY,
    DEFAULT_RATIO_PATTERN,
    GateSolution,
    LandscapeRecord,
    Scheme,
    enumerate_orderings,
    landscape_scan,
    optimize_kick_times,
    optimize_over_orderings,
    optimize_timings,
    sweep_time_caps,
)
from .robustness import (
    JitterConfig,
    OverlapError,
    RepRateConfig,
    discretize_pulses,
    discretize_sequence,
    jitter_sweep,
    mc_mean_infidelity,
    min_resolvable_rate,
    rep_rate_scan,
)
from .scaling import (
    ChainGateEvaluation,
    chain_infidelity,
    chain_infidelity_from,
    innermost_pair,
    outermost_pair,
    scaling_ratio_scan,
)

__version__ = "0.1.0"
