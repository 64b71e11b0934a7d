"""Run configuration: TOML ingestion, validation, and round-trippable echo.

Human-edited inputs use friendly units (lengths in micrometres, ordinary
frequencies in MHz, times in trap periods); they are converted to coherent
SI/angular quantities at parse time.  Unknown keys are errors -- a typo in a
config should never silently fall back to a default.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .optimize import DEFAULT_ORDERING_FAMILY, DEFAULT_RATIO_PATTERN, enumerate_orderings
from .params import SPECIES, ATOMIC_MASS, IonSpecies, TrapArrayConfig

STUDY_KINDS = (
    "modes",
    "optimize",
    "landscape",
    "robustness-jitter",
    "robustness-reprate",
    "scaling",
    "oracle-check",
)


class ConfigError(ValueError):
    """Invalid run configuration; message carries the offending field path."""


def _fail(path: str, message: str) -> None:
    raise ConfigError(f"{path}: {message}")


class _Section:
    """Dict wrapper that tracks consumed keys and reports leftovers."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            _fail(path, f"expected a table, got {type(data).__name__}")
        self.data = data
        self.path = path
        self.seen: set[str] = set()

    def get(self, key, default=None, required=False):
        self.seen.add(key)
        if key not in self.data:
            if required:
                _fail(f"{self.path}.{key}", "required field is missing")
            return default
        return self.data[key]

    def subsection(self, key, required=False):
        raw = self.get(key, required=required)
        if raw is None:
            return None
        return _Section(raw, f"{self.path}.{key}")

    def finish(self):
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            _fail(f"{self.path}.{unknown[0]}", "unknown key (possible typo)")


def _number(sec: _Section, key, default=None, required=False, positive=False):
    val = sec.get(key, default=default, required=required)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(f"{sec.path}.{key}", f"expected a number, got {val!r}")
    val = float(val)
    if not math.isfinite(val):
        _fail(f"{sec.path}.{key}", "must be finite")
    if positive and val <= 0:
        _fail(f"{sec.path}.{key}", f"must be positive, got {val}")
    return val


def _integer(sec: _Section, key, default=None, required=False, minimum=None):
    val = sec.get(key, default=default, required=required)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, int):
        _fail(f"{sec.path}.{key}", f"expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        _fail(f"{sec.path}.{key}", f"must be at least {minimum}, got {val}")
    return val


def _number_list(sec: _Section, key, default=None, required=False, positive=False):
    val = sec.get(key, default=default, required=required)
    if val is None:
        return None
    if not isinstance(val, list) or not val:
        _fail(f"{sec.path}.{key}", "expected a non-empty list of numbers")
    out = []
    for i, x in enumerate(val):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            _fail(f"{sec.path}.{key}[{i}]", f"expected a number, got {x!r}")
        if positive and x <= 0:
            _fail(f"{sec.path}.{key}[{i}]", f"must be positive, got {x}")
        out.append(float(x))
    return out


def _int_list(sec: _Section, key, default=None, required=False, minimum=None):
    val = sec.get(key, default=default, required=required)
    if val is None:
        return None
    if not isinstance(val, list) or not val:
        _fail(f"{sec.path}.{key}", "expected a non-empty list of integers")
    for i, x in enumerate(val):
        if isinstance(x, bool) or not isinstance(x, int):
            _fail(f"{sec.path}.{key}[{i}]", f"expected an integer, got {x!r}")
        if minimum is not None and x < minimum:
            _fail(f"{sec.path}.{key}[{i}]", f"must be at least {minimum}, got {x}")
    return list(val)


def _bool(sec: _Section, key, default=None):
    val = sec.get(key, default=default)
    if not isinstance(val, bool):
        _fail(f"{sec.path}.{key}", f"expected true/false, got {val!r}")
    return val


@dataclass(frozen=True)
class PhysicalConfig:
    """Boundary-unit description of the trap array."""

    ion_count: int = 2
    spacing_um: float = 100.0
    frequency_mhz: float = 1.0
    species: str = "Ca40"
    species_mass_amu: float | None = None
    wavelength_nm: float = 729.0

    def trap_array(self, ion_count: int | None = None) -> TrapArrayConfig:
        if self.species_mass_amu is not None:
            species = IonSpecies(self.species, self.species_mass_amu * ATOMIC_MASS)
        else:
            species = SPECIES[self.species]
        return TrapArrayConfig(
            ion_count=ion_count if ion_count is not None else self.ion_count,
            spacing=self.spacing_um * 1e-6,
            trap_frequency=2 * math.pi * self.frequency_mhz * 1e6,
            species=species,
            effective_wavenumber=2 * (2 * math.pi / (self.wavelength_nm * 1e-9)),
        )


@dataclass(frozen=True)
class GateSpec:
    """How to obtain the base gate a study operates on."""

    n: int = 50
    tau_cap: float = 1.4
    seeds: int = 8
    orderings: tuple = DEFAULT_ORDERING_FAMILY
    chi: float | None = None  # default: derived from the physical config
    eta: float | None = None


@dataclass(frozen=True)
class RunConfig:
    kind: str
    physical: PhysicalConfig
    seed: int = 0
    output: str | None = None
    # study sections; exactly the one matching `kind` is populated
    modes: dict = field(default_factory=dict)
    optimize: dict = field(default_factory=dict)
    landscape: dict = field(default_factory=dict)
    jitter: dict = field(default_factory=dict)
    reprate: dict = field(default_factory=dict)
    scaling: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["physical"] = {
            k: v for k, v in asdict(self.physical).items() if v is not None
        }
        return out


def _parse_physical(sec: _Section | None) -> PhysicalConfig:
    if sec is None:
        return PhysicalConfig()
    ion_count = _integer(sec, "ion_count", default=2, minimum=2)
    spacing = _number(sec, "spacing_um", default=100.0, positive=True)
    freq = _number(sec, "frequency_mhz", default=1.0, positive=True)
    wavelength = _number(sec, "wavelength_nm", default=729.0, positive=True)
    species = sec.get("species", default="Ca40")
    mass_amu = _number(sec, "species_mass_amu", default=None, positive=True)
    if not isinstance(species, str):
        _fail(f"{sec.path}.species", f"expected a species name, got {species!r}")
    if mass_amu is None and species not in SPECIES:
        _fail(
            f"{sec.path}.species",
            f"unknown species {species!r}; give species_mass_amu for custom ions",
        )
    sec.finish()
    return PhysicalConfig(
        ion_count=ion_count,
        spacing_um=spacing,
        frequency_mhz=freq,
        species=species,
        species_mass_amu=mass_amu,
        wavelength_nm=wavelength,
    )


def _parse_orderings(sec: _Section):
    raw = sec.get("orderings", default="default")
    if raw == "default":
        return DEFAULT_ORDERING_FAMILY
    if raw == "all":
        pattern = sec.data.get("pattern", list(DEFAULT_RATIO_PATTERN))
        try:
            return tuple(enumerate_orderings(tuple(pattern)))
        except (TypeError, ValueError) as exc:
            _fail(f"{sec.path}.pattern", str(exc))
    if isinstance(raw, list):
        try:
            return tuple(tuple(int(r) for r in row) for row in raw)
        except (TypeError, ValueError):
            _fail(f"{sec.path}.orderings", "expected lists of 6 signed integers")
    _fail(f"{sec.path}.orderings", f"expected 'default', 'all' or a list, got {raw!r}")


def _parse_gate(sec: _Section | None, path_hint: str) -> GateSpec:
    if sec is None:
        return GateSpec()
    spec = GateSpec(
        n=_integer(sec, "n", default=50, minimum=1),
        tau_cap=_number(sec, "tau_cap", default=1.4, positive=True),
        seeds=_integer(sec, "seeds", default=8, minimum=1),
        orderings=_parse_orderings(sec),
        chi=_number(sec, "chi", default=None, positive=True),
        eta=_number(sec, "eta", default=None, positive=True),
    )
    sec.get("pattern")  # consumed by _parse_orderings when orderings == "all"
    sec.finish()
    return spec


def _parse_study(kind: str, root: _Section) -> dict:
    if kind == "modes":
        sec = root.subsection("modes")
        if sec is None:
            return {"shift_positions": True}
        out = {"shift_positions": _bool(sec, "shift_positions", default=True)}
        sec.finish()
        return out

    if kind == "optimize":
        sec = root.subsection("optimize")
        return {"gate": _parse_gate(sec, "optimize")}

    if kind == "landscape":
        sec = root.subsection("landscape", required=True)
        out = {
            "n_values": _int_list(sec, "n_values", required=True, minimum=1),
            "chi_values": _number_list(sec, "chi_values", required=True, positive=True),
            "caps": _number_list(sec, "caps", required=True, positive=True),
            "seeds": _integer(sec, "seeds", default=6, minimum=1),
            "orderings": _parse_orderings(sec),
            "maxfev": _integer(sec, "maxfev", default=4000, minimum=100),
        }
        sec.get("pattern")
        sec.finish()
        return out

    if kind == "robustness-jitter":
        sec = root.subsection("jitter", required=True)
        out = {
            "sigmas": _number_list(sec, "sigmas", required=True, positive=True),
            "samples": _integer(sec, "samples", default=10_000, minimum=1),
            "per_pulse": _bool(sec, "per_pulse", default=False),
            "gate": _parse_gate(sec.subsection("gate"), "jitter.gate"),
        }
        sec.finish()
        return out

    if kind == "robustness-reprate":
        sec = root.subsection("reprate", required=True)
        out = {
            "rates_mhz": _number_list(sec, "rates_mhz", required=True, positive=True),
            "gate": _parse_gate(sec.subsection("gate"), "reprate.gate"),
        }
        sec.finish()
        return out

    if kind == "scaling":
        sec = root.subsection("scaling", required=True)
        mode = sec.get("mode", default="plateau")
        if mode not in ("plateau", "ratio"):
            _fail(f"{sec.path}.mode", f"expected 'plateau' or 'ratio', got {mode!r}")
        out = {
            "mode": mode,
            "gate": _parse_gate(sec.subsection("gate"), "scaling.gate"),
        }
        if mode == "plateau":
            out["ion_counts"] = _int_list(
                sec, "ion_counts", default=[2, 3, 4, 6, 8, 10, 14, 20, 30, 40, 50],
                minimum=2,
            )
        else:
            out["ion_count"] = _integer(sec, "ion_count", default=50, minimum=2)
            out["gate_count"] = _integer(sec, "gate_count", default=12, minimum=1)
            out["chi_range"] = _number_list(
                sec, "chi_range", default=[1e-5, 1e-3], positive=True
            )
            out["n_range"] = _int_list(sec, "n_range", default=[30, 400], minimum=1)
            out["caps"] = _number_list(sec, "caps", default=[1.0, 1.4, 2.0], positive=True)
            out["max_tries"] = _integer(sec, "max_tries", default=40, minimum=1)
        sec.finish()
        return out

    if kind == "oracle-check":
        sec = root.subsection("oracle")
        if sec is None:
            return {"cases": 100, "max_n": 4, "tolerance": 1e-6}
        out = {
            "cases": _integer(sec, "cases", default=100, minimum=1),
            "max_n": _integer(sec, "max_n", default=4, minimum=1),
            "tolerance": _number(sec, "tolerance", default=1e-6, positive=True),
        }
        sec.finish()
        return out

    _fail("kind", f"unknown study kind {kind!r}; expected one of {STUDY_KINDS}")


_STUDY_FIELD = {
    "modes": "modes",
    "optimize": "optimize",
    "landscape": "landscape",
    "robustness-jitter": "jitter",
    "robustness-reprate": "reprate",
    "scaling": "scaling",
    "oracle-check": "oracle",
}


def config_from_dict(data: dict, source: str = "<config>") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: expected a table at the top level")
    # an echoed config carries empty sections for the other study kinds
    data = {k: v for k, v in data.items() if v not in ({}, None)}
    root = _Section(data, source)
    kind = root.get("kind", required=True)
    if kind not in STUDY_KINDS:
        _fail(f"{source}.kind", f"unknown study kind {kind!r}; expected one of {STUDY_KINDS}")
    seed = _integer(root, "seed", default=0, minimum=0)
    output = root.get("output", default=None)
    if output is not None and not isinstance(output, str):
        _fail(f"{source}.output", f"expected a string, got {output!r}")
    physical = _parse_physical(root.subsection("physical"))
    study = _parse_study(kind, root)
    root.finish()
    kwargs = {_STUDY_FIELD[kind]: study}
    return RunConfig(kind=kind, physical=physical, seed=seed, output=output, **kwargs)


def parse_config(path) -> RunConfig:
    """Load and validate a TOML (or echoed JSON) run configuration."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".json":
        data = json.loads(path.read_text())
    else:
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data, source=str(path))
