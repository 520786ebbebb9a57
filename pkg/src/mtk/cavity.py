"""Cavity-QED order-of-magnitude estimates for dimers coupled to water dipole quanta.

Dipole-dipole energetics, the vacuum field of the microtubule interior,
vacuum Rabi splitting, the dipole-quanta lifetime, the collapse time of a
coherent state leaking through the cavity, and MT dipole aggregation.

All inputs and outputs are SI unless a name says otherwise. Every function
is pure.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DivergentCollapse, InvalidInput, ZeroSeparation
from .units import CONSTANTS, CavityConfig, ParameterSet, PhysicalConstants, si_to_debye

DETUNING_CONVENTIONS = ("paper", "spectroscopic")
FIELD_CONVENTIONS = ("si", "gaussian-as-printed")
UNIT_SYSTEMS = ("si", "gaussian")
DIVERGENCE_TOL = 1e-12


def _positive(**values):
    for name, v in values.items():
        if not (np.isfinite(v) and v > 0):
            raise InvalidInput(f"{name} must be positive and finite, got {v}")


# -- dipoles -----------------------------------------------------------------


@dataclass(frozen=True)
class DipoleVector:
    """Electric dipole moment in C m."""

    components: tuple[float, float, float]

    def __post_init__(self):
        c = tuple(float(x) for x in self.components)
        if len(c) != 3 or not all(math.isfinite(x) for x in c):
            raise InvalidInput("a dipole needs three finite components")
        object.__setattr__(self, "components", c)

    @classmethod
    def from_debye(cls, px, py, pz, constants: PhysicalConstants = CONSTANTS) -> "DipoleVector":
        return cls(tuple(constants.debye * p for p in (px, py, pz)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.components)

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.array))

    @property
    def debye(self) -> float:
        return si_to_debye(self.magnitude)


def _vec(d) -> np.ndarray:
    if isinstance(d, DipoleVector):
        return d.array
    a = np.asarray(d, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise InvalidInput("expected a finite 3-vector")
    return a


def dipole_dipole_energy(d_i, d_j, r_vec, eps: float) -> float:
    """Interaction energy (J) of two point dipoles a displacement ``r_vec`` apart.

    ``eps`` is the absolute permittivity of the medium (F/m).
    """
    _positive(eps=eps)
    di, dj, r = _vec(d_i), _vec(d_j), _vec(r_vec)
    dist = float(np.linalg.norm(r))
    if dist == 0.0:
        raise ZeroSeparation("dipoles must be separated")
    eta = r / dist
    angular = 3.0 * np.dot(eta, di) * np.dot(eta, dj) - np.dot(di, dj)
    return float(-angular / (4.0 * math.pi * eps * dist**3))


def _magnitude(d) -> float:
    if isinstance(d, DipoleVector):
        return d.magnitude
    if np.ndim(d) == 0:
        return abs(float(d))
    return float(np.linalg.norm(_vec(d)))


def thermal_crossover_radius(d_i, d_j, eps: float, T: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Distance (m) at which the best-case (collinear) dipole energy equals ``kB T``.

    Dipoles may be given as magnitudes or vectors; only magnitudes matter.
    """
    pi, pj = _magnitude(d_i), _magnitude(d_j)
    _positive(d_i=pi, d_j=pj, eps=eps, T=T)
    return (2.0 * pi * pj / (4.0 * math.pi * eps * constants.kB * T)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class DipoleMoment:
    si: float
    debye: float

    @classmethod
    def of(cls, p: float, constants: PhysicalConstants = CONSTANTS) -> "DipoleMoment":
        return cls(si=p, debye=si_to_debye(p, constants))


def dimer_dipole_estimate(
    charge_units: float, separation: float, eps_rel: float, constants: PhysicalConstants = CONSTANTS
) -> DipoleMoment:
    """Screened dipole of ``charge_units`` electrons displaced by ``separation``."""
    if charge_units < 0:
        raise InvalidInput("charge_units must be non-negative")
    _positive(separation=separation, eps_rel=eps_rel)
    return DipoleMoment.of(charge_units * constants.e * separation / eps_rel, constants)


@dataclass(frozen=True)
class AggregateDipole:
    """All-aligned dipole of a microtubule segment.

    ``n_dimers`` is the count used for ``total``; ``n_from_geometry`` is the
    count implied by the length, which differs when an explicit count is
    passed.
    """

    n_dimers: int
    n_from_geometry: int
    p_dimer: float
    total: float

    @property
    def total_debye(self) -> float:
        return si_to_debye(self.total)


def mt_total_dipole(
    length: float,
    n_protofilaments: int,
    dimer_length: float,
    p_dimer_axial: float,
    n_dimers: int | None = None,
) -> AggregateDipole:
    """``N = round(length / dimer_length) * n_protofilaments`` aligned dimers.

    Rounding is half-up with a relative guard against representation
    error, so a length of 437.5 dimers gives 438.
    """
    _positive(dimer_length=dimer_length)
    if length < 0 or n_protofilaments < 0:
        raise InvalidInput("length and protofilament count must be non-negative")
    n_geom = math.floor(length / dimer_length * (1 + 1e-12) + 0.5) * int(n_protofilaments)
    n = n_geom if n_dimers is None else int(n_dimers)
    if n < 0:
        raise InvalidInput("n_dimers must be non-negative")
    return AggregateDipole(n_dimers=n, n_from_geometry=n_geom, p_dimer=p_dimer_axial, total=n * p_dimer_axial)


def min_alignment_dipole(E_field: float, T: float, constants: PhysicalConstants = CONSTANTS) -> DipoleMoment:
    """Dipole whose field energy ``p E`` equals ``kB T``."""
    _positive(E_field=E_field, T=T)
    return DipoleMoment.of(constants.kB * T / E_field, constants)


def quality_factor(omega_c: float, T_r: float) -> float:
    _positive(omega_c=omega_c, T_r=T_r)
    return omega_c * T_r


# -- cavity field and Rabi splitting ------------------------------------------


@dataclass(frozen=True)
class FieldAmplitude:
    """Zero-point field amplitude (V/m) in both conventions; ``value`` is the selected one."""

    value: float
    convention: str
    si: float
    gaussian_as_printed: float


def vacuum_field_amplitude(
    omega_c: float, eps_rel: float, V: float, convention: str = "si", constants: PhysicalConstants = CONSTANTS
) -> FieldAmplitude:
    """Single-mode vacuum field in a cavity of volume ``V``.

    ``si`` is ``sqrt(hbar omega / (2 eps V))``; ``gaussian-as-printed``
    keeps the ``2 pi`` of the Gaussian-unit expression with ``eps`` read as
    an SI permittivity.
    """
    if convention not in FIELD_CONVENTIONS:
        raise InvalidInput(f"convention must be one of {FIELD_CONVENTIONS}")
    _positive(omega_c=omega_c, eps_rel=eps_rel, V=V)
    eps = eps_rel * constants.eps0
    si = math.sqrt(constants.hbar * omega_c / (2.0 * eps * V))
    gauss = math.sqrt(2.0 * math.pi * constants.hbar * omega_c / (eps * V))
    return FieldAmplitude(value=si if convention == "si" else gauss, convention=convention, si=si, gaussian_as_printed=gauss)


def rabi_coupling(E_c: float, d: float, cos_theta: float = 1.0, constants: PhysicalConstants = CONSTANTS) -> float:
    """Single-emitter coupling ``E_c d cos(theta) / hbar`` (rad/s)."""
    if abs(cos_theta) > 1.0:
        raise InvalidInput("|cos_theta| must not exceed 1")
    if E_c < 0 or d < 0:
        raise InvalidInput("E_c and d must be non-negative")
    return E_c * d * cos_theta / constants.hbar


@dataclass(frozen=True)
class CavityParameters:
    omega0: float
    omega_c: float
    N_dimers: int
    n_quanta: int = 1
    eps_rel: float = 80.0
    V: float = 1.0
    d_dimer: float = 0.0
    d_water: float = 0.0
    N_w: float = 1.0
    L: float = 1.0
    T_r: float = 1e-4
    T: float = 300.0
    convention: str = "paper"

    def __post_init__(self):
        if self.convention not in DETUNING_CONVENTIONS:
            raise InvalidInput(f"convention must be one of {DETUNING_CONVENTIONS}")
        if self.N_dimers < 1:
            raise InvalidInput("N_dimers must be >= 1")
        if self.eps_rel <= 0:
            raise InvalidInput("eps_rel must be positive")
        for name in ("omega0", "omega_c", "V", "d_dimer", "d_water", "N_w", "L", "T_r", "T"):
            if getattr(self, name) < 0:
                raise InvalidInput(f"{name} must be non-negative")

    @property
    def Delta(self) -> float:
        if self.convention == "paper":
            return self.omega_c - self.omega0
        return self.omega0 - self.omega_c

    @classmethod
    def from_config(cls, cfg: CavityConfig, constants: PhysicalConstants = CONSTANTS, convention: str = "paper") -> "CavityParameters":
        # the dimer count comes from the same geometry as mt_total_dipole
        d = dimer_dipole_estimate(cfg.dimer_charge_units, cfg.dimer_pocket_separation, cfg.eps_rel, constants)
        agg = mt_total_dipole(cfg.L, cfg.n_protofilaments, cfg.dimer_length, d.si)
        return cls(
            omega0=cfg.omega0,
            omega_c=cfg.omega_c,
            N_dimers=agg.n_dimers,
            n_quanta=cfg.n_quanta,
            eps_rel=cfg.eps_rel,
            V=cfg.volume,
            d_dimer=d.si,
            d_water=cfg.water_charge_units * constants.e * cfg.water_dipole,
            N_w=cfg.N_w,
            L=cfg.L,
            T_r=cfg.T_r,
            T=cfg.T,
            convention=convention,
        )


@dataclass(frozen=True)
class RabiSpectrum:
    omega_plus: float
    omega_minus: float
    weight_plus: float
    weight_minus: float
    lam: float
    lambda_collective: float
    Delta: float

    @property
    def splitting(self) -> float:
        return self.omega_plus - self.omega_minus

    @property
    def weights(self) -> tuple[float, float]:
        return (self.weight_plus, self.weight_minus)


def _emitter_weight(g: float, E: float) -> float:
    # squared emitter amplitude of the one-excitation eigenvector with eigenvalue E
    denom = g * g + E * E
    return 1.0 if denom == 0.0 else g * g / denom


def rabi_peaks_from(omega0: float, Delta: float, N: float, lam: float) -> RabiSpectrum:
    """Peaks ``omega0 - Delta/2 +- sqrt(Delta^2 + 4 N lam^2) / 2``."""
    if N < 1:
        raise InvalidInput("N must be >= 1")
    if lam < 0:
        raise InvalidInput("lambda must be non-negative")
    g = lam * math.sqrt(N)
    half = 0.5 * math.hypot(Delta, 2.0 * g)
    e_plus, e_minus = -0.5 * Delta + half, -0.5 * Delta - half
    return RabiSpectrum(
        omega_plus=omega0 + e_plus,
        omega_minus=omega0 + e_minus,
        weight_plus=_emitter_weight(g, e_plus),
        weight_minus=_emitter_weight(g, e_minus),
        lam=lam,
        lambda_collective=g,
        Delta=Delta,
    )


def rabi_peaks(params: CavityParameters, lam: float) -> RabiSpectrum:
    """Two-peak spectrum using the parameters' detuning convention."""
    return rabi_peaks_from(params.omega0, params.Delta, params.N_dimers, lam)


def rabi_matrix_oracle(omega0: float, Delta: float, N: float, lam: float) -> tuple[float, float]:
    """(upper, lower) eigenvalues of the one-excitation coupling matrix, shifted by ``omega0``."""
    g = lam * math.sqrt(N)
    w = np.linalg.eigvalsh(np.array([[0.0, g], [g, -Delta]]))
    return float(omega0 + w[1]), float(omega0 + w[0])


# -- lifetime and collapse ----------------------------------------------------


@dataclass(frozen=True)
class DimensionAudit:
    """Exponents of base units carried by a formula's result."""

    unit_system: str
    exponents: Mapping[str, int]

    @property
    def is_time(self) -> bool:
        return {k: v for k, v in self.exponents.items() if v} == {"s": 1}

    def describe(self) -> str:
        parts = [f"{k}^{v}" if v != 1 else k for k, v in self.exponents.items() if v]
        return " ".join(parts) or "dimensionless"


def _dim(system: str, **exps) -> dict[str, int]:
    base = ("kg", "m", "s", "A") if system == "si" else ("g", "cm", "s")
    return {b: exps.get(b, 0) for b in base}


def _combine(*terms: tuple[dict[str, int], int]) -> dict[str, int]:
    out: dict[str, int] = {}
    for dims, power in terms:
        for k, v in dims.items():
            out[k] = out.get(k, 0) + power * v
    return out


@dataclass(frozen=True)
class LifetimeEstimate:
    value: float
    unit_system: str
    audit: DimensionAudit
    quoted: float


def dipole_quanta_lifetime(
    params: CavityParameters,
    unit_system: str = "si",
    quoted: float = 1e-4,
    constants: PhysicalConstants = CONSTANTS,
) -> LifetimeEstimate:
    """Evaluate ``c hbar^2 V / (4 pi d_w^2 eps N_w L)`` literally.

    In ``si`` the permittivity is ``eps_rel * eps0``; in ``gaussian`` every
    input is converted to CGS and ``eps`` is the bare ``eps_rel``. The
    accompanying audit gives the dimensions of the result, which is not a
    time in either system; ``quoted`` is carried along for downstream use.
    """
    if unit_system not in UNIT_SYSTEMS:
        raise InvalidInput(f"unit_system must be one of {UNIT_SYSTEMS}")
    _positive(V=params.V, d_water=params.d_water, N_w=params.N_w, L=params.L)
    c, hbar = constants.c, constants.hbar
    if unit_system == "si":
        eps = params.eps_rel * constants.eps0
        V, d, L = params.V, params.d_water, params.L
        d_c = _dim("si", m=1, s=-1)
        d_hbar = _dim("si", kg=1, m=2, s=-1)
        d_V, d_L = _dim("si", m=3), _dim("si", m=1)
        d_d = _dim("si", A=1, s=1, m=1)
        d_eps = _dim("si", A=2, s=4, kg=-1, m=-3)
    else:
        c, hbar = c * 1e2, hbar * 1e7
        eps = params.eps_rel
        V, L = params.V * 1e6, params.L * 1e2
        d = params.d_water * (constants.c * 10.0) * 1e2  # C m -> statC cm
        d_c = _dim("gaussian", cm=1, s=-1)
        d_hbar = _dim("gaussian", g=1, cm=2, s=-1)
        d_V, d_L = _dim("gaussian", cm=3), _dim("gaussian", cm=1)
        # statC = g^1/2 cm^3/2 s^-1, so d^2 has integer exponents
        d_d2 = _dim("gaussian", g=1, cm=5, s=-2)
        d_eps = _dim("gaussian")
    value = c * hbar**2 * V / (4.0 * math.pi * d * d * eps * params.N_w * L)
    d_sq = (d_d, 2) if unit_system == "si" else (d_d2, 1)
    exps = _combine((d_c, 1), (d_hbar, 2), (d_V, 1), (d_sq[0], -d_sq[1]), (d_eps, -1), (d_L, -1))
    return LifetimeEstimate(value=value, unit_system=unit_system, audit=DimensionAudit(unit_system, exps), quoted=quoted)


@dataclass(frozen=True)
class CollapseEstimate:
    value: float
    lower_bound: float
    phase: float
    sin2: float


def collapse_time(T_r: float, n: int, N: int, lam: float, Delta: float, t: float) -> CollapseEstimate:
    """``T_r / (2 n N sin^2(N n lam^2 t / Delta))`` and its bound ``T_r / (2 n N)``."""
    _positive(T_r=T_r)
    if n < 1 or N < 1:
        raise InvalidInput("n and N must be >= 1")
    if Delta == 0:
        raise InvalidInput("Delta must be non-zero")
    phase = float(N * n * lam * lam * t / Delta)
    s2 = math.sin(phase) ** 2
    if s2 < DIVERGENCE_TOL:
        raise DivergentCollapse(f"sin^2 of the interaction phase is {s2:.3g}")
    bound = T_r / (2.0 * n * N)
    return CollapseEstimate(value=bound / s2, lower_bound=bound, phase=phase, sin2=s2)


@dataclass(frozen=True)
class CollapseWitness:
    n: int
    detuning_ratio: float
    estimate: CollapseEstimate


def collapse_witness(
    T_r: float,
    N: int,
    lam: float,
    t: float,
    n_values: Iterable[int] = range(1, 11),
    ratios: Iterable[float] | None = None,
    window: tuple[float, float] = (1e-7, 1e-6),
) -> CollapseWitness:
    """Grid search for ``(n, Delta/lam)`` placing the collapse time in ``window``.

    Among the hits the one closest (in log) to the window's geometric
    centre wins; ties go to the smaller ``n`` then the smaller ratio.
    """
    if ratios is None:
        ratios = np.round(np.linspace(10.0, 100.0, 91), 12)
    lo, hi = window
    centre = 0.5 * (math.log10(lo) + math.log10(hi))
    best, best_score = None, math.inf
    for n in n_values:
        for r in ratios:
            try:
                est = collapse_time(T_r, n, N, lam, r * lam, t)
            except DivergentCollapse:
                continue
            if lo <= est.value <= hi:
                score = abs(math.log10(est.value) - centre)
                if score < best_score:
                    best, best_score = CollapseWitness(int(n), float(r), est), score
    if best is None:
        raise InvalidInput("no grid point lands in the target window")
    return best


# -- full chain ---------------------------------------------------------------


@dataclass(frozen=True)
class PipelineStep:
    name: str
    value: float
    unit: str
    note: str = ""


@dataclass(frozen=True)
class PipelineResult:
    steps: tuple[PipelineStep, ...]
    field_convention: str
    detuning_convention: str
    audits: Mapping[str, str] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        for s in self.steps:
            if s.name == name:
                return s.value
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "field_convention": self.field_convention,
            "detuning_convention": self.detuning_convention,
            "steps": [asdict(s) for s in self.steps],
            "audits": dict(self.audits),
        }


def cavity_pipeline(
    pset: ParameterSet,
    field_convention: str = "si",
    detuning_convention: str = "paper",
    pair_separation: float = 3e-10,
) -> PipelineResult:
    """Run dimer dipole -> N -> E_c -> lambda -> lambda sqrt(N) -> collapse time.

    Downstream of the field amplitude the quoted ``E_c`` and ``T_r`` of the
    configuration are used; computed alternatives are reported beside them.
    """
    cfg, k = pset.cavity, pset.constants
    params = CavityParameters.from_config(cfg, k, detuning_convention)
    steps: list[PipelineStep] = []

    def add(name, value, unit, note=""):
        steps.append(PipelineStep(name, float(value), unit, note))

    add("d_dimer", params.d_dimer, "C m", "screened charge separation")
    add("d_dimer_debye", si_to_debye(params.d_dimer, k), "D")
    add("N_dimers", params.N_dimers, "1", "round(L / dimer_length) * protofilaments")
    amp = vacuum_field_amplitude(cfg.omega_c, cfg.eps_rel, params.V, field_convention, k)
    add("cavity_volume", params.V, "m^3")
    add("E_c_si", amp.si, "V/m")
    add("E_c_gaussian_as_printed", amp.gaussian_as_printed, "V/m")
    add("E_c_computed", amp.value, "V/m", f"selected convention: {field_convention}")
    add("E_c_used", cfg.E_c_quoted, "V/m", "quoted magnitude used downstream")
    lam = rabi_coupling(cfg.E_c_quoted, params.d_dimer, 1.0, k)
    add("lambda", lam, "rad/s")
    add("lambda_collective", lam * math.sqrt(params.N_dimers), "rad/s")
    resonant = rabi_peaks_from(cfg.omega0, 0.0, params.N_dimers, lam)
    add("omega_plus_resonant", resonant.omega_plus, "rad/s")
    add("omega_minus_resonant", resonant.omega_minus, "rad/s")
    spec = rabi_peaks(params, lam)
    add("Delta", spec.Delta, "rad/s", f"{detuning_convention} detuning convention")
    add("omega_plus", spec.omega_plus, "rad/s")
    add("omega_minus", spec.omega_minus, "rad/s")

    audits = {}
    for system in UNIT_SYSTEMS:
        life = dipole_quanta_lifetime(params, system, cfg.T_r, k)
        unit = "kg^3 m^8 s^-9 A^-4" if system == "si" else "g cm^2 s^-1"
        add(f"lifetime_formula_{system}", life.value, unit, "not a time; see audit")
        audits[f"lifetime_{system}"] = life.audit.describe()
    add("T_r", cfg.T_r, "s", "quoted dissipation time used downstream")
    add("quality_factor", quality_factor(cfg.omega_c, cfg.T_r), "1")

    coll = collapse_time(cfg.T_r, cfg.n_quanta, params.N_dimers, lam, cfg.detuning_ratio * lam, cfg.interaction_time)
    add("collapse_n", cfg.n_quanta, "1")
    add("collapse_detuning_ratio", cfg.detuning_ratio, "1")
    add("collapse_time", coll.value, "s")
    add("collapse_lower_bound", coll.lower_bound, "s")

    eps_p = cfg.eps_rel_protein * k.eps0
    add("d_water", params.d_water, "C m")
    add("crossover_radius", thermal_crossover_radius(params.d_dimer, params.d_water, eps_p, cfg.T, k), "m")
    e_dd = dipole_dipole_energy((0, 0, params.d_dimer), (0, 0, params.d_water), (0, 0, pair_separation), eps_p)
    add("dipole_pair_energy_ev", abs(e_dd) / k.e, "eV", f"collinear pair at {pair_separation:g} m")
    add("thermal_energy_ev", k.kB * cfg.T / k.e, "eV")
    return PipelineResult(tuple(steps), field_convention, detuning_convention, audits)
