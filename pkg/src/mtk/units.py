"""Physical parameters, constants, unit conversions and the reduction to
dimensionless form.

Everything public here takes and returns SI values. Debye, Angstrom and eV
appear only at the file boundary (JSON keys ending in ``_debye``,
``_angstrom``, ``_ev``) and in the explicit conversion helpers.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .errors import DegeneratePotential, InvalidInput, SupersonicFrame

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "ReferenceTimescales",
    "MTParameters",
    "CavityConfig",
    "ParameterSet",
    "DimensionlessSystem",
    "ferroelectric_A",
    "debye_to_si",
    "si_to_debye",
    "angstrom_to_m",
    "ev_to_joule",
    "joule_to_ev",
    "nondimensionalize",
    "redimensionalize",
    "field_sigma",
    "load_parameter_set",
    "default_parameter_set",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values (exact where the SI defines them)."""

    hbar: float = 1.054571817e-34  # J s
    kB: float = 1.380649e-23  # J/K
    c: float = 299792458.0  # m/s
    e: float = 1.602176634e-19  # C
    eps0: float = 8.8541878128e-12  # F/m
    debye: float = 3.33564e-30  # C m
    angstrom: float = 1e-10  # m


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class ReferenceTimescales:
    """Literature time scales the estimates are compared against, in seconds."""

    froehlich_low: float = 1e-12
    froehlich_high: float = 1e-11
    tegmark_low: float = 1e-20
    tegmark_high: float = 1e-13
    algae_decoherence: float = 4e-13
    soliton_transfer: float = 5e-7
    soliton_collapse_low: float = 1e-7
    soliton_collapse_high: float = 1e-6


def debye_to_si(p, constants: PhysicalConstants = CONSTANTS):
    return p * constants.debye


def si_to_debye(p, constants: PhysicalConstants = CONSTANTS):
    return p / constants.debye


def angstrom_to_m(x, constants: PhysicalConstants = CONSTANTS):
    return x * constants.angstrom


def ev_to_joule(E, constants: PhysicalConstants = CONSTANTS):
    return E * constants.e


def joule_to_ev(E, constants: PhysicalConstants = CONSTANTS):
    return E / constants.e


def ferroelectric_A(T: float, Tc: float, ferro_const: float) -> float:
    """Quadratic potential coefficient from the linear law A = -|c| (T - Tc).

    Positive below the critical temperature (double well), negative above.
    """
    if ferro_const <= 0:
        raise InvalidInput("ferro_const must be positive")
    return -ferro_const * (T - Tc)


@dataclass(frozen=True)
class MTParameters:
    """Protofilament chain parameters, SI units.

    ``A`` carries its sign as it enters the equation of motion
    ``M u_tt - k R0^2 u_xx - A u + B u^3 + gamma u_t - q E = 0``;
    the double-well (ferroelectric) regime is ``A > 0``.
    """

    M: float
    k: float
    R0: float
    A: float
    B: float
    gamma: float = 0.0
    q: float = 36 * CONSTANTS.e
    E_field: float = 0.0
    T: float = 300.0
    Tc: float = 310.0
    ferro_const: float = 0.0

    def __post_init__(self):
        bad = [
            name
            for name, ok in [
                ("M", self.M > 0),
                ("k", self.k > 0),
                ("R0", self.R0 > 0),
                ("B", self.B > 0),
                ("gamma", self.gamma >= 0),
                ("T", self.T >= 0),
            ]
            if not ok
        ]
        if bad:
            raise InvalidInput(f"invalid MTParameters fields: {', '.join(bad)}")
        values = dataclasses.astuple(self)
        if not all(math.isfinite(v) for v in values):
            raise InvalidInput("MTParameters must be finite")

    @property
    def v0(self) -> float:
        """Sound velocity sqrt(k/M) R0."""
        return math.sqrt(self.k / self.M) * self.R0

    @property
    def amplitude(self) -> float:
        """Vacuum displacement sqrt(A/B)."""
        return math.sqrt(abs(self.A) / self.B)

    def replace(self, **changes) -> "MTParameters":
        return dataclasses.replace(self, **changes)

    def at_temperature(self, T: float) -> "MTParameters":
        """Copy with ``A`` recomputed from the ferroelectric temperature law."""
        return self.replace(T=T, A=ferroelectric_A(T, self.Tc, self.ferro_const))

    @classmethod
    def default(cls) -> "MTParameters":
        return default_parameter_set().mt


@dataclass(frozen=True)
class CavityConfig:
    """Cavity-model inputs as stored in the parameter file (SI)."""

    omega0: float = 1.0e12
    omega_c: float = 6.0e12
    eps_rel: float = 80.0
    eps_rel_protein: float = 10.0
    mt_inner_radius: float = 7.5e-9
    L: float = 1.0e-6
    dimer_length: float = 8e-9
    n_protofilaments: int = 1
    dimer_charge_units: float = 36
    dimer_pocket_separation: float = 4e-9
    water_dipole: float = 0.2e-10
    water_charge_units: float = 2
    N_w: float = 1.0e8
    n_quanta: int = 4
    detuning_ratio: float = 85.0
    E_c_quoted: float = 1.0e4
    T_r: float = 1.0e-4
    interaction_time: float = 1.0e-4
    T: float = 300.0

    @property
    def volume(self) -> float:
        """Interior volume of a cylinder of radius ``mt_inner_radius`` and length ``L``."""
        return math.pi * self.mt_inner_radius**2 * self.L

    def replace(self, **changes) -> "CavityConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ParameterSet:
    mt: MTParameters
    cavity: CavityConfig = field(default_factory=CavityConfig)
    constants: PhysicalConstants = CONSTANTS
    timescales: ReferenceTimescales = field(default_factory=ReferenceTimescales)


@dataclass(frozen=True)
class DimensionlessSystem:
    """The reduced (rho, sigma) system and the scales back to SI.

    ``rho`` is the friction coefficient of the traveling-wave ODE at speed
    ``v``; ``rho_tilde = gamma / sqrt(M A)`` is the damping of the
    dimensionless field equation, whose unit length is ``length_scale`` at
    ``v = 0`` and whose unit time is ``time_scale``.
    """

    rho: float
    sigma: float
    rho_tilde: float
    length_scale: float
    time_scale: float
    amplitude_scale: float
    velocity_scale: float
    energy_scale: float
    v: float = 0.0

    def __post_init__(self):
        if self.rho < 0:
            raise InvalidInput("rho must be non-negative")
        scales = (
            self.length_scale,
            self.time_scale,
            self.amplitude_scale,
            self.velocity_scale,
            self.energy_scale,
        )
        if not all(s > 0 for s in scales):
            raise InvalidInput("all scale factors must be positive")

    @property
    def alpha(self) -> float:
        return 1.0 / self.length_scale

    @property
    def rest_length(self) -> float:
        """Unit length of the dimensionless field equation (the v = 0 width)."""
        return self.velocity_scale * self.time_scale


def field_sigma(p: MTParameters) -> float:
    """Dimensionless drive q sqrt(B) |A|^(-3/2) E."""
    if p.A == 0:
        raise DegeneratePotential("A = 0: no double well")
    return p.q * math.sqrt(p.B) * abs(p.A) ** -1.5 * p.E_field


def nondimensionalize(p: MTParameters, v: float = 0.0) -> DimensionlessSystem:
    """Reduce chain parameters to the traveling-frame system at speed ``v``."""
    if p.A <= 0 or p.B <= 0:
        raise DegeneratePotential(f"double well requires A > 0 and B > 0 (A={p.A}, B={p.B})")
    v0 = p.v0
    if abs(v) >= v0:
        raise SupersonicFrame(f"|v| = {abs(v)} >= v0 = {v0}")
    MA = p.M * p.A
    gap = v0**2 - v**2
    rho = p.gamma * abs(v) / math.sqrt(MA * gap)
    time_scale = math.sqrt(p.M / p.A)
    length_scale = math.sqrt(p.M * gap / p.A)
    # energy of the chain in units of (A^2/B) per site over one rest length
    energy_scale = (p.A**2 / p.B) * (v0 * time_scale) / p.R0
    return DimensionlessSystem(
        rho=rho,
        sigma=field_sigma(p),
        rho_tilde=p.gamma / math.sqrt(MA),
        length_scale=length_scale,
        time_scale=time_scale,
        amplitude_scale=math.sqrt(p.A / p.B),
        velocity_scale=v0,
        energy_scale=energy_scale,
        v=v,
    )


def redimensionalize(ds: DimensionlessSystem, M: float) -> dict[str, float]:
    """Recover the SI coefficient combinations from a reduced system.

    The reduction loses the split between ``k`` and ``R0`` and between ``q``
    and ``E``; what comes back is ``A``, ``B``, ``k R0^2``, ``gamma``,
    ``q E``, ``v0``, ``alpha`` and the vacuum amplitude.
    """
    A = M / ds.time_scale**2
    B = A / ds.amplitude_scale**2
    v0 = ds.velocity_scale
    return {
        "A": A,
        "B": B,
        "kR0sq": M * v0**2,
        "gamma": ds.rho_tilde * math.sqrt(M * A),
        "qE": ds.sigma * A**1.5 / math.sqrt(B),
        "v0": v0,
        "alpha": 1.0 / (ds.time_scale * math.sqrt(v0**2 - ds.v**2)),
        "amplitude": math.sqrt(A / B),
    }


_SUFFIXES = {
    "_debye": lambda x, c: x * c.debye,
    "_angstrom": lambda x, c: x * c.angstrom,
    "_ev": lambda x, c: x * c.e,
}


def _to_si(section: Mapping[str, Any], constants: PhysicalConstants, where: str) -> dict:
    out = {}
    for key, value in section.items():
        for suffix, conv in _SUFFIXES.items():
            if key.endswith(suffix):
                key, value = key[: -len(suffix)], conv(value, constants)
                break
        if key in out:
            raise InvalidInput(f"{where}.{key} given twice (with and without unit suffix)")
        out[key] = value
    return out


def _build(cls, values: Mapping[str, Any], where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - names)
    if unknown:
        raise InvalidInput(f"unknown keys in {where}: {', '.join(unknown)}")
    return cls(**values)


def parameter_set_from_dict(doc: Mapping[str, Any], base: ParameterSet | None = None) -> ParameterSet:
    """Build a `ParameterSet` from a parsed JSON document.

    Sections missing from ``doc`` are taken from ``base`` (or the dataclass
    defaults). Sections present in ``doc`` override ``base`` key by key.
    """
    allowed = {"mt_parameters", "cavity_parameters", "constants_override", "reference_timescales"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise InvalidInput(f"unknown top-level keys: {', '.join(unknown)}")

    constants = CONSTANTS if base is None else base.constants
    if "constants_override" in doc:
        override = dict(doc["constants_override"])
        unknown = sorted(set(override) - {f.name for f in dataclasses.fields(PhysicalConstants)})
        if unknown:
            raise InvalidInput(f"unknown keys in constants_override: {', '.join(unknown)}")
        constants = dataclasses.replace(constants, **override)

    def section(name, cls, current):
        given = _to_si(doc.get(name, {}), constants, name)
        if current is not None:
            given = dataclasses.asdict(current) | given
        return _build(cls, given, name)

    mt_base = None if base is None else base.mt
    if mt_base is None and "mt_parameters" not in doc:
        raise InvalidInput("parameter document needs an mt_parameters section")
    return ParameterSet(
        mt=section("mt_parameters", MTParameters, mt_base),
        cavity=section("cavity_parameters", CavityConfig, None if base is None else base.cavity),
        constants=constants,
        timescales=section(
            "reference_timescales", ReferenceTimescales, None if base is None else base.timescales
        ),
    )


def load_parameter_set(path: str | Path | None = None, base: ParameterSet | None = None) -> ParameterSet:
    """Load a parameter JSON file; ``None`` returns the shipped defaults."""
    if path is None:
        return default_parameter_set()
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read parameter file {path}: {exc}") from exc
    return parameter_set_from_dict(doc, base=base)


def default_parameter_set() -> ParameterSet:
    text = resources.files("mtk").joinpath("data/biological.json").read_text()
    return parameter_set_from_dict(json.loads(text))
