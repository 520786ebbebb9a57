"""Command-line entry point ``mtk``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 golden mismatch.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .cavity import (
    CavityParameters,
    DipoleVector,
    collapse_time,
    dimer_dipole_estimate,
    dipole_dipole_energy,
    min_alignment_dipole,
    mt_total_dipole,
    rabi_coupling,
    rabi_peaks,
    thermal_crossover_radius,
)
from .errors import InvalidInput, NumericalFailure, ScenarioValidationError
from .report import all_passed, emit_report, evaluate, load_golden
from .scenario import RunManifest, _stamp, dumps_json, execute, load_scenario, run_single, table_to_csv, write_outputs
from .units import debye_to_si, default_parameter_set, load_parameter_set

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_GOLDEN = 0, 2, 3, 4


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--params", type=Path, help="parameter JSON overriding the shipped defaults")
    p.add_argument("--out-prefix", help="prefix for output files (directories are created)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    p.add_argument(
        "--convention",
        choices=["si", "gaussian-as-printed"],
        default="si",
        help="vacuum-field convention of the cavity chain",
    )
    return p


def _parameters(args):
    base = default_parameter_set()
    return base if args.params is None else load_parameter_set(args.params, base=base)


def _param_doc(args) -> dict:
    if args.params is None:
        return {}
    try:
        return json.loads(args.params.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read parameter file {args.params}: {exc}") from exc


def _with_gamma(doc: dict, gamma) -> dict:
    if gamma is not None:
        doc = dict(doc)
        doc["mt_parameters"] = dict(doc.get("mt_parameters", {})) | {"gamma": gamma}
    return doc


def _emit(result, args):
    written = []
    prefix = args.out_prefix
    if prefix:
        written = write_outputs(result, prefix)
    print(dumps_json({"kind": result.kind, "summary": result.summary, "outputs": written}), end="")


def cmd_kink(args) -> int:
    opts = {k: v for k, v in {"sigma": args.sigma, "v": args.v, "span": args.grid_span}.items() if v is not None}
    result = run_single("kink-analytic", _with_gamma(_param_doc(args), args.gamma), opts)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_bytes(table_to_csv(result.tables["profile"]).encode())
    _emit(result, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    opts = {
        k: v
        for k, v in {
            "sigma": args.sigma,
            "rho_tilde": args.rho_tilde,
            "dx": args.dx,
            "dt": args.dt,
            "x_min": args.x_min,
            "x_max": args.x_max,
            "t_end": args.t_end,
            "center": args.center,
            "v_init_factor": args.v_init_factor,
            "boundary": args.boundary,
            "n_sites": args.n_sites,
            "observer_stride": args.stride,
        }.items()
        if v is not None
    }
    _emit(run_single("simulate", _with_gamma(_param_doc(args), args.gamma), opts), args)
    return EXIT_OK


def cmd_tdva(args) -> int:
    mode = "energy" if args.command == "tdva-energy" else args.mode
    opts = {"sigma_width": args.sigma_width, "drive": args.drive, "rho": args.rho, "mode": mode}
    result = run_single("tdva", _param_doc(args), opts)
    if args.out is not None:
        table = next(iter(result.tables.values()))
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_bytes(table_to_csv(table).encode())
    _emit(result, args)
    return EXIT_OK


def _debye(x: float) -> float:
    return debye_to_si(x)


def cmd_cavity(args) -> int:
    pset = _parameters(args)
    cfg, k = pset.cavity, pset.constants
    out: dict
    if args.verb == "dipole":
        d = dimer_dipole_estimate(args.charge_units, args.separation, args.eps_rel, k)
        p_axial = d.si if args.p_dimer_debye is None else _debye(args.p_dimer_debye)
        agg = mt_total_dipole(args.length, args.protofilaments, args.dimer_length, p_axial, args.n_dimers)
        out = {
            "dimer_dipole_C_m": d.si,
            "dimer_dipole_debye": d.debye,
            "n_dimers": agg.n_dimers,
            "n_from_geometry": agg.n_from_geometry,
            "total_dipole_C_m": agg.total,
            "total_dipole_debye": agg.total_debye,
        }
        if args.align_field is not None:
            m = min_alignment_dipole(args.align_field, args.align_T, k)
            out |= {"min_alignment_C_m": m.si, "min_alignment_debye": m.debye}
    elif args.verb == "crossover":
        eps = args.eps_rel * k.eps0
        d1, d2 = _debye(args.d1_debye), _debye(args.d2_debye)
        r = thermal_crossover_radius(d1, d2, eps, args.T, k)
        sep = r if args.r is None else args.r
        e = dipole_dipole_energy(DipoleVector((0, 0, d1)), DipoleVector((0, 0, d2)), (0, 0, sep), eps)
        out = {"crossover_radius_m": r, "separation_m": sep, "collinear_energy_J": e, "collinear_energy_eV": e / k.e}
    elif args.verb == "rabi":
        params = CavityParameters.from_config(cfg, k, args.detuning_convention)
        if args.N is not None:
            params = CavityParameters(**{**params.__dict__, "N_dimers": args.N})
        lam = args.lam if args.lam is not None else rabi_coupling(cfg.E_c_quoted, params.d_dimer, 1.0, k)
        s = rabi_peaks(params, lam)
        out = {
            "omega_plus": s.omega_plus,
            "omega_minus": s.omega_minus,
            "weight_plus": s.weight_plus,
            "weight_minus": s.weight_minus,
            "lambda": s.lam,
            "lambda_collective": s.lambda_collective,
            "Delta": s.Delta,
            "N": params.N_dimers,
        }
    elif args.verb == "collapse":
        params = CavityParameters.from_config(cfg, k)
        N = params.N_dimers if args.N is None else args.N
        lam = args.lam if args.lam is not None else rabi_coupling(cfg.E_c_quoted, params.d_dimer, 1.0, k)
        n = cfg.n_quanta if args.n is None else args.n
        ratio = cfg.detuning_ratio if args.detuning_ratio is None else args.detuning_ratio
        c = collapse_time(cfg.T_r, n, N, lam, ratio * lam, cfg.interaction_time if args.t is None else args.t)
        out = {"collapse_time": c.value, "lower_bound": c.lower_bound, "phase": c.phase, "sin2": c.sin2, "n": n, "N": N}
    else:
        result = run_single(
            "cavity-pipeline",
            _param_doc(args),
            {"field_convention": args.convention, "detuning_convention": args.detuning_convention},
        )
        if args.out_prefix:
            write_outputs(result, args.out_prefix)
        table = result.tables["pipeline"]
        width = max(len(r[0]) for r in table.rows)
        for name, value, unit, note in table.rows:
            print(f"{name:{width}s}  {value:14.6g}  {unit:20s} {note}", file=sys.stderr)
        out = result.summary
    print(dumps_json(out), end="")
    return EXIT_OK


def cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    if args.command == "sweep" and scn.kind != "sweep":
        raise ScenarioValidationError([f"kind: expected a sweep scenario, got '{scn.kind}'"])
    base = None if args.params is None else _parameters(args)
    result, manifest = execute(scn, args.out_prefix, jobs=args.jobs, base=base)
    print(dumps_json({"kind": result.kind, "summary": result.summary, "outputs": manifest.outputs}), end="")
    return EXIT_OK


def cmd_report(args) -> int:
    start = time.time()
    pset = _parameters(args)
    comparisons = evaluate(load_golden(args.golden), pset)
    manifest = RunManifest(__version__, "", _stamp(start), _stamp(time.time()))
    manifest.golden = [c.__dict__ for c in comparisons]
    doc = emit_report(manifest, comparisons, sys.stdout)
    if args.out_prefix:
        path = Path(f"{args.out_prefix}_report.json")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps_json(doc))
    return EXIT_OK if all_passed(comparisons) else EXIT_GOLDEN


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="mtk", description="Microtubule kink and cavity estimates.")
    parser.add_argument("--version", action="version", version=f"mtk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kink-analytic", parents=[common], help="selected kink, energy and transfer time")
    p.add_argument("--sigma", type=float, help="override the dimensionless drive")
    p.add_argument("--gamma", type=float, help="override the friction coefficient (kg/s)")
    p.add_argument("--v", type=float, help="frame speed (m/s) instead of the selected one")
    p.add_argument("--grid-span", type=float, help="half-width of the profile table in front widths")
    p.add_argument("--out", type=Path, help="profile CSV destination")
    p.set_defaults(func=cmd_kink)

    p = sub.add_parser("simulate", parents=[common], help="dimensionless lattice run with speed fit")
    for flag in ("--sigma", "--rho-tilde", "--dx", "--dt", "--x-min", "--x-max", "--t-end", "--center", "--v-init-factor"):
        p.add_argument(flag, type=float)
    p.add_argument("--gamma", type=float, help="override the friction coefficient (kg/s)")
    p.add_argument("--n-sites", type=int)
    p.add_argument("--stride", type=int, help="snapshot every this many steps")
    p.add_argument("--boundary", choices=["dirichlet", "periodic"])
    p.set_defaults(func=cmd_simulate)

    for name in ("tdva", "tdva-energy"):
        p = sub.add_parser(name, parents=[common], help="quantum-corrected kink profile or energy density")
        p.add_argument("--sigma-width", type=float, default=0.1, help="smearing width Sigma")
        p.add_argument("--drive", type=float, default=0.0, help="dimensionless drive sigma")
        p.add_argument("--rho", type=float, default=None, help="friction for the residual (default: selected)")
        p.add_argument("--mode", choices=["profile", "energy"], default="profile")
        p.add_argument("--out", type=Path, help="CSV destination")
        p.set_defaults(func=cmd_tdva)

    p = sub.add_parser("cavity", parents=[common], help="cavity-QED estimates")
    p.add_argument("verb", choices=["dipole", "crossover", "rabi", "collapse", "pipeline"])
    p.add_argument("--detuning-convention", choices=["paper", "spectroscopic"], default="paper")
    p.add_argument("--charge-units", type=float, default=36)
    p.add_argument("--separation", type=float, default=4e-9)
    p.add_argument("--eps-rel", type=float, default=None)
    p.add_argument("--length", type=float, default=1e-6)
    p.add_argument("--protofilaments", type=int, default=13)
    p.add_argument("--dimer-length", type=float, default=8e-9)
    p.add_argument("--p-dimer-debye", type=float)
    p.add_argument("--n-dimers", type=int)
    p.add_argument("--align-field", type=float)
    p.add_argument("--align-T", type=float, default=294.0)
    p.add_argument("--d1-debye", type=float, default=90.0)
    p.add_argument("--d2-debye", type=float, default=1.92)
    p.add_argument("--T", type=float, default=300.0)
    p.add_argument("--r", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--detuning-ratio", type=float)
    p.add_argument("--t", type=float)
    p.set_defaults(func=cmd_cavity)

    for name, helptext in (("sweep", "run a sweep scenario"), ("run", "run any scenario file")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("scenario", type=Path)
        p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", parents=[common], help="compare against the golden table")
    p.add_argument("--golden", type=Path, help="golden table file (default: $MTK_GOLDEN_DIR or shipped)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "verb", None) is not None and args.eps_rel is None:
        args.eps_rel = 80.0 if args.verb == "dipole" else 10.0
    try:
        return args.func(args)
    except ScenarioValidationError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_INVALID
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
