"""Scenario files, batch runs and deterministic output.

A scenario is a JSON document::

    {
      "kind": "simulate",
      "parameters": {"mt_parameters": {"gamma": 2e-9}},
      "options": {"dx": 0.05, "t_end": 500},
      "output_prefix": "out/run1",
      "seed": 0
    }

``parameters`` overrides the shipped parameter set section by section;
``options`` holds the run settings of the chosen kind. A ``sweep`` scenario
adds ``run_kind`` and ``sweep_axis = {"path": "...", "values": [...]}``,
where the path addresses either a parameter (``mt_parameters.gamma``) or an
option (``options.sigma``).

Floats in CSV files use 17 significant digits; JSON summaries are written
with sorted keys. Timestamps live only in the manifest.
"""
from __future__ import annotations

import copy
import csv
import dataclasses
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import jsonschema
import numpy as np

from . import __version__
from .cavity import FIELD_CONVENTIONS, cavity_pipeline
from .errors import MTKError, ScenarioParseError, ScenarioValidationError
from .lattice import Grid1D, PhiFourChain, init_kink, measure_speed, predicted_speed
from .tdva import (
    KernelPair,
    canonical_potential,
    energy_functional,
    modified_soliton_solve,
    quantum_kink_state,
)
from .traveling_wave import kink_energy, kink_from_parameters, kink_profile, residual_profile, transfer_time
from .units import (
    CavityConfig,
    MTParameters,
    ParameterSet,
    ReferenceTimescales,
    default_parameter_set,
    nondimensionalize,
    parameter_set_from_dict,
)

KINDS = ("kink-analytic", "simulate", "tdva", "cavity-pipeline", "sweep")
RUN_KINDS = KINDS[:-1]

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 1}

OPTION_SCHEMAS: dict[str, dict] = {
    "kink-analytic": {
        "sigma": _NUM,
        "v": _NUM,
        "span": _POS,
        "n_points": _INT,
        "transfer_length": _POS,
    },
    "simulate": {
        "sigma": _NUM,
        "rho_tilde": {"type": "number", "minimum": 0},
        "dx": _POS,
        "dt": _POS,
        "n_sites": {"type": "integer", "minimum": 16},
        "x_min": _NUM,
        "x_max": _NUM,
        "t_end": _POS,
        "center": _NUM,
        "v_init_factor": {"type": "number", "minimum": 0, "maximum": 50},
        "boundary": {"enum": ["dirichlet", "periodic"]},
        "observer_stride": _INT,
        "discard_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    },
    "tdva": {
        "sigma_width": {"type": "number", "minimum": 0},
        "drive": _NUM,
        "rho": {"type": ["number", "null"]},
        "mode": {"enum": ["profile", "energy"]},
        "span": _POS,
        "dx": _POS,
    },
    "cavity-pipeline": {
        "field_convention": {"enum": list(FIELD_CONVENTIONS)},
        "detuning_convention": {"enum": ["paper", "spectroscopic"]},
        "pair_separation": _POS,
    },
}

DEFAULT_OPTIONS: dict[str, dict] = {
    "kink-analytic": {"span": 20.0, "n_points": 401, "transfer_length": 1e-6},
    "simulate": {
        "sigma": 0.2,
        "dx": 0.05,
        "dt": 0.025,
        "x_min": -50.0,
        "x_max": 50.0,
        "t_end": 1000.0,
        "center": 0.0,
        "v_init_factor": 0.0,
        "boundary": "dirichlet",
        "observer_stride": 2000,
        "discard_fraction": 0.2,
    },
    "tdva": {"sigma_width": 0.1, "drive": 0.0, "rho": None, "mode": "profile", "span": 20.0, "dx": 0.05},
    "cavity-pipeline": {"field_convention": "si", "detuning_convention": "paper", "pair_separation": 3e-10},
}

_SECTION_CLASSES = {
    "mt_parameters": MTParameters,
    "cavity_parameters": CavityConfig,
    "reference_timescales": ReferenceTimescales,
}
_UNIT_SUFFIXES = ("_debye", "_angstrom", "_ev")


def _section_schema(cls) -> dict:
    names = [f.name for f in dataclasses.fields(cls)]
    props = {n: _NUM for n in names}
    props.update({n + s: _NUM for n in names for s in _UNIT_SUFFIXES})
    return {"type": "object", "properties": props, "additionalProperties": False}


def _parameters_schema() -> dict:
    props = {name: _section_schema(cls) for name, cls in _SECTION_CLASSES.items()}
    props["constants_override"] = {"type": "object", "additionalProperties": _POS}
    return {"type": "object", "properties": props, "additionalProperties": False}


def scenario_schema() -> dict:
    """JSON schema of a scenario document."""
    kind_rules = []
    for kind, opts in OPTION_SCHEMAS.items():
        kind_rules.append(
            {
                "if": {"properties": {"kind": {"const": kind}}, "required": ["kind"]},
                "then": {
                    "properties": {"options": {"type": "object", "properties": opts, "additionalProperties": False}}
                },
            }
        )
    return {
        "type": "object",
        "required": ["kind"],
        "properties": {
            "kind": {"enum": list(KINDS)},
            "parameters": _parameters_schema(),
            "options": {"type": "object"},
            "output_prefix": {"type": "string", "minLength": 1},
            "seed": {"type": "integer"},
            "run_kind": {"enum": list(RUN_KINDS)},
            "sweep_axis": {
                "type": "object",
                "required": ["path", "values"],
                "properties": {
                    "path": {"type": "string", "pattern": r"^[a-z_]+\.[A-Za-z0-9_]+$"},
                    "values": {"type": "array", "minItems": 1, "items": {"type": ["number", "string"]}},
                },
                "additionalProperties": False,
            },
            "description": {"type": "string"},
        },
        "additionalProperties": False,
        "allOf": kind_rules
        + [
            {
                "if": {"properties": {"kind": {"const": "sweep"}}, "required": ["kind"]},
                "then": {"required": ["run_kind", "sweep_axis"]},
            }
        ],
    }


@dataclass(frozen=True)
class Scenario:
    kind: str
    parameters: Mapping[str, Any] = field(default_factory=dict)
    options: Mapping[str, Any] = field(default_factory=dict)
    output_prefix: str = "mtk"
    seed: int = 0
    run_kind: str | None = None
    sweep_axis: Mapping[str, Any] | None = None
    description: str = ""

    def to_dict(self) -> dict:
        doc = {
            "kind": self.kind,
            "parameters": copy.deepcopy(dict(self.parameters)),
            "options": copy.deepcopy(dict(self.options)),
            "output_prefix": self.output_prefix,
            "seed": self.seed,
        }
        if self.run_kind is not None:
            doc["run_kind"] = self.run_kind
        if self.sweep_axis is not None:
            doc["sweep_axis"] = copy.deepcopy(dict(self.sweep_axis))
        if self.description:
            doc["description"] = self.description
        return doc

    @property
    def digest(self) -> str:
        return scenario_digest(self.to_dict())

    def effective_kind(self) -> str:
        return self.run_kind if self.kind == "sweep" else self.kind


def scenario_digest(doc: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical (sorted-key, compact) JSON form."""
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode()).hexdigest()


def _path_str(path) -> str:
    return "/".join(str(p) for p in path) or "<root>"


def validate_scenario(doc: Any) -> Scenario:
    """Validate a parsed document, reporting every offending path at once."""
    validator = jsonschema.Draft202012Validator(scenario_schema())
    problems = []
    for err in sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message)):
        problems.append(f"{_path_str(err.absolute_path)}: {err.message}")
    if isinstance(doc, dict) and doc.get("kind") == "sweep" and isinstance(doc.get("sweep_axis"), dict):
        problems.extend(_check_sweep_axis(doc))
    if problems:
        raise ScenarioValidationError(problems)
    return Scenario(
        kind=doc["kind"],
        parameters=doc.get("parameters", {}),
        options=doc.get("options", {}),
        output_prefix=doc.get("output_prefix", "mtk"),
        seed=doc.get("seed", 0),
        run_kind=doc.get("run_kind"),
        sweep_axis=doc.get("sweep_axis"),
        description=doc.get("description", ""),
    )


def _check_sweep_axis(doc) -> list[str]:
    axis, run_kind = doc["sweep_axis"], doc.get("run_kind")
    path = axis.get("path", "")
    problems = []
    if "." not in path:
        return problems
    section, key = path.split(".", 1)
    if section == "options":
        if run_kind in OPTION_SCHEMAS and key not in OPTION_SCHEMAS[run_kind]:
            problems.append(f"sweep_axis/path: option '{key}' does not exist for kind '{run_kind}'")
        valid = jsonschema.Draft202012Validator(OPTION_SCHEMAS.get(run_kind, {}).get(key, {}))
        for i, v in enumerate(axis.get("values", [])):
            if not valid.is_valid(v):
                problems.append(f"sweep_axis/values/{i}: {v!r} is not a valid '{key}'")
    elif section in _SECTION_CLASSES:
        names = {f.name for f in dataclasses.fields(_SECTION_CLASSES[section])}
        base = next((key[: -len(s)] for s in _UNIT_SUFFIXES if key.endswith(s)), key)
        if base not in names:
            problems.append(f"sweep_axis/path: parameter '{path}' does not exist")
    else:
        problems.append(f"sweep_axis/path: unknown section '{section}'")
    for i, v in enumerate(axis.get("values", [])):
        if isinstance(v, float) and not math.isfinite(v):
            problems.append(f"sweep_axis/values/{i}: must be finite")
        if section != "options" and not isinstance(v, (int, float)):
            problems.append(f"sweep_axis/values/{i}: parameter values must be numbers")
    return problems


def _reject_constant(token):
    raise ValueError(f"non-finite number {token} is not allowed")


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except ValueError as exc:
        raise ScenarioParseError(f"{path}: invalid JSON: {exc}") from exc
    return validate_scenario(doc)


# -- running ------------------------------------------------------------------


@dataclass
class Table:
    header: list[str]
    rows: list[list[Any]]

    @classmethod
    def from_columns(cls, columns: Mapping[str, Sequence[Any]]) -> "Table":
        header = list(columns)
        rows = [list(r) for r in zip(*columns.values())]
        return cls(header, rows)


@dataclass
class RunResult:
    kind: str
    summary: dict[str, Any]
    tables: dict[str, Table] = field(default_factory=dict)


def resolve_parameters(scn: Scenario, base: ParameterSet | None = None) -> ParameterSet:
    base = default_parameter_set() if base is None else base
    return parameter_set_from_dict(dict(scn.parameters), base=base) if scn.parameters else base


def _options(kind: str, given: Mapping[str, Any]) -> dict:
    return DEFAULT_OPTIONS[kind] | dict(given)


def with_sigma(p: MTParameters, sigma: float) -> MTParameters:
    """Copy of ``p`` whose field gives the dimensionless drive ``sigma``."""
    return p.replace(E_field=sigma * abs(p.A) ** 1.5 / (p.q * math.sqrt(p.B)))


def _run_kink_analytic(pset: ParameterSet, opts: dict) -> RunResult:
    p = pset.mt if opts.get("sigma") is None else with_sigma(pset.mt, opts["sigma"])
    sol = kink_from_parameters(p)
    if opts.get("v") is not None:
        # a prescribed speed: the profile is unchanged, rho follows the frame
        sol = kink_profile(sol.roots, p, opts["v"], sol.orientation)
    ds = nondimensionalize(p, sol.v)
    rho = math.copysign(ds.rho, sol.rho_selected) if sol.v else 0.0
    e = kink_energy(p)
    xi = np.linspace(-opts["span"], opts["span"], opts["n_points"]) * sol.width
    psi = sol.psi(xi)
    res = residual_profile(sol, rho, ds.sigma, xi)
    summary = {
        "sigma": ds.sigma,
        "rho": rho,
        "rho_selected": sol.rho_selected,
        "max_residual": float(np.max(np.abs(res))),
        "rho_tilde": ds.rho_tilde,
        "root_a": sol.roots.a,
        "root_d": sol.roots.d,
        "root_b": sol.roots.b,
        "v0": p.v0,
        "velocity": sol.v,
        "velocity_ratio": sol.v / p.v0,
        "width_m": sol.width / sol.alpha,
        "binding_energy_J": e.binding,
        "binding_energy_eV": e.binding / pset.constants.e,
        "kinetic_energy_J": e.kinetic,
        "M_star": e.M_star,
        "printed_binding_J": e.printed_binding,
        "binding_deviation": e.binding_deviation,
        "transfer_time": transfer_time(opts["transfer_length"], sol.v),
    }
    table = Table.from_columns(
        {"xi": xi, "psi": psi, "residual": res, "x_m": xi / sol.alpha, "u_m": psi * sol.amplitude}
    )
    return RunResult("kink-analytic", summary, {"profile": table})


def _run_simulate(pset: ParameterSet, opts: dict) -> RunResult:
    ds = nondimensionalize(pset.mt)
    damping = ds.rho_tilde if opts.get("rho_tilde") is None else opts["rho_tilde"]
    drive = ds.sigma if opts.get("sigma") is None else opts["sigma"]
    chain = PhiFourChain(damping=damping, drive=drive)
    if opts.get("n_sites") is not None:
        grid = Grid1D(opts["n_sites"], opts["dx"], opts["x_min"], opts["boundary"])
    else:
        grid = Grid1D.spanning(opts["x_min"], opts["x_max"], opts["dx"], opts["boundary"])
    w = predicted_speed(damping, drive)
    state = init_kink(grid, chain.roots, v_init=opts["v_init_factor"] * w, center=opts["center"])
    traj = chain.evolve(state, opts["t_end"], opts["dt"], observer_stride=opts["observer_stride"])
    fit = measure_speed(traj, discard_fraction=opts["discard_fraction"])
    summary = {
        "sigma": drive,
        "rho_tilde": damping,
        "predicted_speed": w,
        "fitted_speed": fit.fitted_speed,
        "fit_stderr": fit.fit_stderr,
        "relative_error": fit.fitted_speed / w - 1.0 if w else math.nan,
        "fitted_speed_m_per_s": fit.fitted_speed * ds.velocity_scale,
        "energy_initial": float(traj.energies[0]),
        "energy_final": float(traj.energies[-1]),
        "n_sites": grid.n_sites,
        "n_steps": int(round(opts["t_end"] / opts["dt"])),
    }
    stride = max(1, traj.track_times.size // 2000)
    n_snap = traj.times.size
    tables = {
        "front": Table.from_columns({"t": traj.track_times[::stride], "position": traj.track_positions[::stride]}),
        "energy": Table.from_columns({"t": traj.times, "energy": traj.energies}),
        "snapshots": Table.from_columns(
            {
                "t": np.repeat(traj.times, grid.n_sites),
                "x": np.tile(grid.x, n_snap),
                "u": traj.u.ravel(),
                "u_t": traj.u_t.ravel(),
            }
        ),
    }
    return RunResult("simulate", summary, tables)


def _run_tdva(pset: ParameterSet, opts: dict) -> RunResult:
    qk = modified_soliton_solve(opts["sigma_width"], opts["drive"], opts["rho"])
    summary = {
        "Sigma": qk.Sigma,
        "drive": qk.drive,
        "m2": qk.m2,
        "vacuum_left": qk.vacua[0],
        "vacuum_right": qk.vacua[1],
        "rho_selected": qk.rho_selected + 0.0,
        "residual": qk.residual,
        "mode": opts["mode"],
    }
    if opts["mode"] == "profile":
        xi = np.arange(-opts["span"], opts["span"] + 0.5 * opts["dx"], opts["dx"])
        uq, uc = qk.solution.psi(xi), qk.classical.psi(xi)
        table = Table.from_columns({"xi": xi, "u_q": uq, "classical_u": uc, "difference": uq - uc})
        return RunResult("tdva", summary, {"profile": table})
    grid = Grid1D.spanning(-opts["span"], opts["span"], opts["dx"])
    kernels = KernelPair.from_smearing(grid, qk.Sigma)
    state = quantum_kink_state(grid, qk, kernels)
    total, density = energy_functional(state, canonical_potential(qk.drive))
    summary.update({"energy_total": total, "cond_G": kernels.cond_G, "cond_G0": kernels.cond_G0})
    return RunResult("tdva", summary, {"energy": Table.from_columns({"x": grid.x, "density": density})})


def _run_cavity(pset: ParameterSet, opts: dict) -> RunResult:
    res = cavity_pipeline(pset, opts["field_convention"], opts["detuning_convention"], opts["pair_separation"])
    summary = {s.name: s.value for s in res.steps}
    summary["field_convention"] = res.field_convention
    summary["detuning_convention"] = res.detuning_convention
    for k, v in res.audits.items():
        summary[f"audit_{k}"] = v
    table = Table(["name", "value", "unit", "note"], [[s.name, s.value, s.unit, s.note] for s in res.steps])
    return RunResult("cavity-pipeline", summary, {"pipeline": table})


RUNNERS: dict[str, Callable[[ParameterSet, dict], RunResult]] = {
    "kink-analytic": _run_kink_analytic,
    "simulate": _run_simulate,
    "tdva": _run_tdva,
    "cavity-pipeline": _run_cavity,
}


def run_single(kind: str, parameters: Mapping[str, Any], options: Mapping[str, Any], base: ParameterSet | None = None) -> RunResult:
    scn = Scenario(kind=kind, parameters=parameters, options=options)
    return RUNNERS[kind](resolve_parameters(scn, base), _options(kind, options))


def run_scenario(scn: Scenario, base: ParameterSet | None = None, jobs: int = 1, execution_order=None) -> RunResult:
    if scn.kind == "sweep":
        return run_sweep(scn, base, jobs=jobs, execution_order=execution_order)
    return run_single(scn.kind, scn.parameters, scn.options, base)


def _sweep_point(scn: Scenario, value) -> tuple[dict, str]:
    section, key = scn.sweep_axis["path"].split(".", 1)
    params = copy.deepcopy(dict(scn.parameters))
    opts = dict(scn.options)
    if section == "options":
        opts[key] = value
    else:
        params.setdefault(section, {})[key] = value
    return params, opts


def _sweep_task(args):
    kind, params, opts, base = args
    try:
        res = run_single(kind, params, opts, base)
    except MTKError as exc:
        return {}, f"{type(exc).__name__}: {exc}"
    scalars = {k: v for k, v in res.summary.items() if isinstance(v, (int, float)) and not isinstance(v, bool)}
    return scalars, ""


def run_sweep(scn: Scenario, base: ParameterSet | None = None, jobs: int = 1, execution_order=None) -> RunResult:
    """One independent run per axis value; rows keep the axis order.

    ``execution_order`` permutes the order in which points are computed
    (used to check that output does not depend on it). Errors are recorded
    per point in the ``error`` column.
    """
    if scn.kind != "sweep":
        raise ScenarioValidationError(["kind: run_sweep needs a sweep scenario"])
    values = list(scn.sweep_axis["values"])
    order = list(range(len(values))) if execution_order is None else list(execution_order)
    if sorted(order) != list(range(len(values))):
        raise ScenarioValidationError(["execution_order must be a permutation of the axis indices"])
    tasks = {i: (scn.run_kind, *_sweep_point(scn, values[i]), base) for i in order}
    results: dict[int, tuple[dict, str]] = {}
    if jobs <= 1:
        for i in order:
            results[i] = _sweep_task(tasks[i])
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {i: pool.submit(_sweep_task, tasks[i]) for i in order}
            for i in order:
                results[i] = futures[i].result()
    columns: list[str] = []
    for i in range(len(values)):
        for k in results[i][0]:
            if k not in columns:
                columns.append(k)
    header = ["index", scn.sweep_axis["path"]] + columns + ["error"]
    rows = []
    for i, v in enumerate(values):
        scalars, err = results[i]
        rows.append([i, v] + [scalars.get(k, math.nan) for k in columns] + [err])
    n_err = sum(1 for i in results if results[i][1])
    summary = {"run_kind": scn.run_kind, "axis": scn.sweep_axis["path"], "n_points": len(values), "n_errors": n_err}
    return RunResult("sweep", summary, {"sweep": Table(header, rows)})


# -- serialization ------------------------------------------------------------


def format_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def table_to_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def dumps_json(doc: Any) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


@dataclass
class RunManifest:
    tool_version: str
    scenario_digest: str
    started: str
    finished: str
    outputs: list[str] = field(default_factory=list)
    golden: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return dumps_json(dataclasses.asdict(self))


def _stamp(t: float) -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def write_outputs(result: RunResult, prefix: str | Path) -> list[str]:
    """Write ``<prefix>_<table>.csv`` files and ``<prefix>_summary.json``."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in result.tables.items():
        path = prefix.with_name(f"{prefix.name}_{name}.csv")
        path.write_bytes(table_to_csv(table).encode())
        written.append(str(path))
    path = prefix.with_name(f"{prefix.name}_summary.json")
    path.write_bytes(dumps_json({"kind": result.kind, "summary": result.summary}).encode())
    written.append(str(path))
    return written


def execute(
    scn: Scenario,
    prefix: str | Path | None = None,
    jobs: int = 1,
    execution_order=None,
    base: ParameterSet | None = None,
) -> tuple[RunResult, RunManifest]:
    """Run a scenario, write its outputs and a manifest next to them."""
    start = time.time()
    result = run_scenario(scn, base, jobs=jobs, execution_order=execution_order)
    prefix = Path(prefix or scn.output_prefix)
    outputs = write_outputs(result, prefix)
    manifest = RunManifest(__version__, scn.digest, _stamp(start), _stamp(time.time()), outputs)
    mpath = prefix.with_name(f"{prefix.name}_manifest.json")
    mpath.write_text(manifest.to_json())
    return result, manifest
