"""Golden-value table: named quantities, tolerances and the comparison report.

The table is a JSON file ``golden.json`` in the package data directory, or
in ``$MTK_GOLDEN_DIR`` when that is set. Each entry names a quantity from
`QUANTITIES`, an expected value, a tolerance and a provenance tag
(``PAPER`` for published magnitudes, ``DERIVED`` for values frozen from an
independent oracle). Entries flagged ``informational`` are reported but
never fail the run.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterable, TextIO

from .cavity import (
    CavityParameters,
    cavity_pipeline,
    collapse_time,
    dimer_dipole_estimate,
    min_alignment_dipole,
    mt_total_dipole,
    quality_factor,
    rabi_peaks_from,
    thermal_crossover_radius,
)
from .errors import InvalidInput
from .lattice import Grid1D, PhiFourChain, init_kink
from .tdva import modified_soliton_solve
from .traveling_wave import kink_energy, selected_velocity, transfer_time
from .units import ParameterSet, debye_to_si, si_to_debye

TOLERANCE_MODES = ("rel", "abs", "order", "factor", "range")


def _pipeline(p: ParameterSet, name: str) -> float:
    return cavity_pipeline(p)[name]


def _lattice_static_energy(p: ParameterSet) -> float:
    grid = Grid1D.spanning(-20.0, 20.0, 0.05)
    chain = PhiFourChain()
    return chain.total_energy(init_kink(grid, chain.roots))


def _collapse(p: ParameterSet) -> float:
    c = p.cavity
    params = CavityParameters.from_config(c, p.constants)
    lam = _pipeline(p, "lambda")
    return collapse_time(c.T_r, c.n_quanta, params.N_dimers, lam, c.detuning_ratio * lam, c.interaction_time).value


def _rabi_splitting(p: ParameterSet) -> float:
    s = rabi_peaks_from(1e12, 0.0, 100, 1e10)
    return s.splitting


QUANTITIES: dict[str, Callable[[ParameterSet], float]] = {
    "transfer_time": lambda p: transfer_time(1e-6, 2.0),
    "selected_velocity": lambda p: selected_velocity(p.mt),
    "kink_binding_eV": lambda p: kink_energy(p.mt).binding / p.constants.e,
    "kink_M_star": lambda p: kink_energy(p.mt).M_star,
    "printed_binding_deviation": lambda p: kink_energy(p.mt).binding_deviation,
    "lattice_static_kink_energy": _lattice_static_energy,
    "dimer_dipole_debye": lambda p: dimer_dipole_estimate(36, 4e-9, 80, p.constants).debye,
    "dimer_dipole_unscreened_debye": lambda p: dimer_dipole_estimate(36, 4e-9, 1, p.constants).debye,
    "mt_dimers_3p5um": lambda p: mt_total_dipole(3.5e-6, 12, 8e-9, 0.0).n_dimers,
    "mt_total_dipole_5280_debye": lambda p: si_to_debye(
        mt_total_dipole(3.5e-6, 12, 8e-9, debye_to_si(15.0, p.constants), n_dimers=5280).total, p.constants
    ),
    "mt_total_dipole_1um_13pf_debye": lambda p: si_to_debye(
        mt_total_dipole(1e-6, 13, 8e-9, debye_to_si(90.0, p.constants)).total, p.constants
    ),
    "min_alignment_debye": lambda p: min_alignment_dipole(2.1e5, 294.0, p.constants).debye,
    "quality_factor": lambda p: quality_factor(p.cavity.omega_c, p.cavity.T_r),
    "E_c_si": lambda p: _pipeline(p, "E_c_si"),
    "E_c_gaussian_as_printed": lambda p: _pipeline(p, "E_c_gaussian_as_printed"),
    "lambda_collective": lambda p: _pipeline(p, "lambda_collective"),
    "collapse_time": _collapse,
    "rabi_splitting_reference": _rabi_splitting,
    "quantum_kink_vacuum_0p1": lambda p: modified_soliton_solve(0.1).vacua[1],
    "crossover_radius": lambda p: thermal_crossover_radius(
        dimer_dipole_estimate(36, 4e-9, 80, p.constants).si,
        p.cavity.water_charge_units * p.constants.e * p.cavity.water_dipole,
        p.cavity.eps_rel_protein * p.constants.eps0,
        p.cavity.T,
        p.constants,
    ),
}


@dataclass(frozen=True)
class Tolerance:
    mode: str
    value: Any

    def __post_init__(self):
        if self.mode not in TOLERANCE_MODES:
            raise InvalidInput(f"tolerance mode must be one of {TOLERANCE_MODES}")

    def check(self, expected, actual: float) -> bool:
        if not math.isfinite(actual):
            return False
        if self.mode == "range":
            lo, hi = expected
            return lo <= actual <= hi
        if self.mode == "rel":
            return abs(actual - expected) <= self.value * abs(expected)
        if self.mode == "abs":
            return abs(actual - expected) <= self.value
        if actual <= 0 or expected <= 0:
            return False
        if self.mode == "order":
            return abs(math.log10(actual) - math.log10(expected)) <= self.value
        return max(actual / expected, expected / actual) <= self.value


@dataclass(frozen=True)
class GoldenEntry:
    id: str
    quantity: str
    expected: Any
    tolerance: Tolerance
    tag: str
    informational: bool = False
    note: str = ""

    @classmethod
    def from_dict(cls, d: dict) -> "GoldenEntry":
        try:
            tol = Tolerance(**d["tolerance"])
            entry = cls(
                id=d["id"],
                quantity=d["quantity"],
                expected=d["expected"],
                tolerance=tol,
                tag=d["tag"],
                informational=bool(d.get("informational", False)),
                note=d.get("note", ""),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed golden entry {d!r}: {exc}") from exc
        if entry.quantity not in QUANTITIES:
            raise InvalidInput(f"golden entry {entry.id}: unknown quantity {entry.quantity}")
        if entry.tag not in ("PAPER", "DERIVED"):
            raise InvalidInput(f"golden entry {entry.id}: tag must be PAPER or DERIVED")
        return entry


@dataclass(frozen=True)
class Comparison:
    id: str
    tag: str
    expected: Any
    actual: float
    ratio: float
    tolerance: str
    passed: bool
    informational: bool
    note: str


def golden_path() -> Path | None:
    override = os.environ.get("MTK_GOLDEN_DIR")
    if override:
        return Path(override) / "golden.json"
    return None


def load_golden(path: str | Path | None = None) -> list[GoldenEntry]:
    path = golden_path() if path is None else Path(path)
    try:
        if path is None:
            text = resources.files("mtk").joinpath("data/golden/golden.json").read_text()
        else:
            text = Path(path).read_text()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read golden table {path}: {exc}") from exc
    return [GoldenEntry.from_dict(d) for d in doc["entries"]]


def _ratio(expected, actual) -> float:
    if isinstance(expected, (list, tuple)):
        expected = math.sqrt(expected[0] * expected[1]) if min(expected) > 0 else 0.5 * sum(expected)
    return actual / expected if expected else math.nan


def evaluate(entries: Iterable[GoldenEntry], pset: ParameterSet) -> list[Comparison]:
    cache: dict[str, float] = {}
    out = []
    for e in entries:
        if e.quantity not in cache:
            cache[e.quantity] = float(QUANTITIES[e.quantity](pset))
        actual = cache[e.quantity]
        out.append(
            Comparison(
                id=e.id,
                tag=e.tag,
                expected=e.expected,
                actual=actual,
                ratio=_ratio(e.expected, actual),
                tolerance=f"{e.tolerance.mode}:{e.tolerance.value}",
                passed=e.tolerance.check(e.expected, actual),
                informational=e.informational,
                note=e.note,
            )
        )
    return out


def all_passed(comparisons: Iterable[Comparison]) -> bool:
    return all(c.passed or c.informational for c in comparisons)


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(f"{x:.4g}" for x in v) + "]"
    return f"{v:.6g}"


def emit_report(manifest, comparisons: list[Comparison], stream: TextIO | None = None) -> dict:
    """Print the comparison table to ``stream`` and return the machine-readable form."""
    lines = [f"{'id':34s} {'tag':8s} {'expected':>22s} {'computed':>13s} {'ratio':>10s}  status"]
    for c in comparisons:
        status = "PASS" if c.passed else ("INFO" if c.informational else "FAIL")
        lines.append(
            f"{c.id:34s} {c.tag:8s} {_fmt(c.expected):>22s} {_fmt(c.actual):>13s} {c.ratio:10.4g}  {status}"
        )
    ok = all_passed(comparisons)
    lines.append(f"{sum(c.passed for c in comparisons)}/{len(comparisons)} within tolerance; overall {'PASS' if ok else 'FAIL'}")
    if stream is not None:
        stream.write("\n".join(lines) + "\n")
    return {
        "manifest": None if manifest is None else asdict(manifest),
        "comparisons": [asdict(c) for c in comparisons],
        "passed": ok,
    }
