"""``rhs`` command-line front end.

Subcommands: scan, peakfit, invert, ratio, vapor, validate. Exit codes are
0 on success, 1 for usage errors, 2 for invalid configurations and 3 for
numerical failures; errors print one line ``rhs: error[<kind>]: <message>``
to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .atomsys import TWO_PI, vapor_density
from .config import Scenario, dump_scenario, load_scenario, parse_scenario
from .efftl import effective_two_level, im_re_ratio, peak_chi_approx, resonant_coupling_detuning
from .errors import (
    ConfigError,
    DegenerateKernelError,
    DomainError,
    FitPreconditionError,
    QuadratureError,
    SingularEliminationError,
)
from .scan import (
    DEFAULT_POINTS,
    detuning_grid,
    gaussian_fit,
    overlay_lines,
    read_spectrum_csv,
    scan_spectrum,
)
from .sigchain import MeasurementChain, invert_population, lockin, lockin_invert, phase_from_chi

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
MHZ = TWO_PI * 1e6
NUMERICAL_ERRORS = (QuadratureError, DegenerateKernelError, SingularEliminationError,
                    FitPreconditionError, np.linalg.LinAlgError)


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(x: float) -> str:
    return f"{x:.8e}"


def _write_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_manifest(out: Path, name: str, args, subcommand: str, parameters: dict,
                    outputs: list[Path], scenario: Scenario | None, seed) -> Path:
    manifest = {
        "tool": "rhs",
        "tool_version": __version__,
        "subcommand": subcommand,
        "config_path": str(args.config) if getattr(args, "config", None) else None,
        "parameters": parameters,
        "scenario": dump_scenario(scenario) if scenario is not None else None,
        "outputs": [str(p) for p in outputs],
        "seed": seed,
    }
    path = out / f"{name}.manifest.json"
    _write_json(path, manifest)
    return path


def _scenario(args) -> Scenario:
    if getattr(args, "config", None) is None:
        raise UsageError("--config is required")
    return load_scenario(args.config)


def _noise_settings(args, scenario: Scenario):
    seed = args.seed
    noise = args.noise_urad
    if scenario.chain is not None:
        if seed is None:
            seed = scenario.chain.rng_seed
        if noise is None:
            noise = scenario.chain.phase_noise_floor * 1e6
    return seed, (noise or 0.0)


def spectrum_csv(spectrum, phase_urad) -> str:
    lines = ["delta_c_MHz,re_chi,im_chi,phase_urad"]
    for d, c, p in zip(spectrum.delta_c, spectrum.chi, phase_urad):
        lines.append(f"{fmt(d / MHZ)},{fmt(c.real)},{fmt(c.imag)},{fmt(p)}")
    return "\n".join(lines) + "\n"


def cmd_scan(args) -> int:
    if args.manifest is not None:
        try:
            manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([(str(args.manifest), f"cannot read manifest: {exc}")]) from exc
        if manifest.get("subcommand") != "scan" or not manifest.get("scenario"):
            raise ConfigError([(str(args.manifest), "not a scan manifest")])
        scenario = parse_scenario(manifest["scenario"], source=str(args.manifest))
        params = manifest["parameters"]
    else:
        scenario = _scenario(args)
        seed, noise = _noise_settings(args, scenario)
        system = scenario.system
        center = args.center_mhz * MHZ if args.center_mhz is not None else -system.probe.detuning
        params = {
            "engine": args.engine,
            "span_mhz": args.span_mhz,
            "points": args.points,
            "center_mhz": center / MHZ,
            "rel_tol": args.rel_tol,
            "overlay": bool(args.overlay),
            "seed": seed,
            "noise_urad": noise if seed is not None else 0.0,
        }
        if args.points < 8:
            raise UsageError("--points must be >= 8")
    system = scenario.system
    grid = detuning_grid(system, params["span_mhz"] * MHZ, params["points"],
                         params["center_mhz"] * MHZ)
    if params["overlay"] and scenario.lines:
        spectrum = overlay_lines(system, scenario.lines, grid, engine=params["engine"],
                                 rel_tol=params["rel_tol"])
    else:
        spectrum = scan_spectrum(system, grid, engine=params["engine"], rel_tol=params["rel_tol"])
    phase = spectrum.phase
    if params["seed"] is not None and params["noise_urad"] > 0:
        chain = MeasurementChain(phase_noise_floor=params["noise_urad"] * 1e-6,
                                 rng_seed=int(params["seed"]))
        phase = lockin_invert(lockin(phase, chain, noisy=True), chain)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "scan.csv"
    csv_path.write_text(spectrum_csv(spectrum, np.asarray(phase) * 1e6), encoding="utf-8")
    _write_manifest(out, "scan", args, "scan", params, [csv_path], scenario, params["seed"])
    print(f"wrote {csv_path} ({len(spectrum)} points, engine={params['engine']})")
    return EXIT_OK


def cmd_peakfit(args) -> int:
    try:
        spectrum = read_spectrum_csv(args.spectrum)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError([(str(args.spectrum), str(exc))]) from exc
    fit = gaussian_fit(spectrum)
    payload = {
        "amplitude_rad": fit.amplitude,
        "amplitude_urad": fit.amplitude * 1e6,
        "center_MHz": fit.center / MHZ,
        "width_MHz": fit.width / MHZ,
        "rms_residual_urad": fit.rms_residual * 1e6,
        "converged": fit.converged,
        "evaluations": fit.n_evaluations,
    }
    out = Path(args.out)
    path = out / "peakfit.json"
    _write_json(path, payload)
    _write_manifest(out, "peakfit", args, "peakfit", {"spectrum": str(args.spectrum)},
                    [path], None, None)
    print(json.dumps(payload, indent=2, sort_keys=True))
    if not fit.converged:
        raise NumericalFailure("Gaussian fit did not converge")
    return EXIT_OK


def cmd_invert(args) -> int:
    scenario = _scenario(args)
    system = scenario.system
    p = system.probe
    if args.delta_c_mhz is not None:
        delta_c = args.delta_c_mhz * MHZ
    else:
        delta_c = resonant_coupling_detuning(p.detuning, p.peak_rabi)
    eff = effective_two_level(system, 0.0, delta_c)
    phi = args.phase_urad * 1e-6
    rho = invert_population(phi, system, eff.omega_eff)
    payload = {
        "phase_urad": args.phase_urad,
        "rho_rr": rho,
        "omega_eff_MHz": eff.omega_eff / MHZ,
        "delta_c_MHz": delta_c / MHZ,
    }
    out = Path(args.out)
    path = out / "invert.json"
    _write_json(path, payload)
    _write_manifest(out, "invert", args, "invert",
                    {"phase_urad": args.phase_urad, "delta_c_mhz": delta_c / MHZ},
                    [path], scenario, None)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_ratio(args) -> int:
    scenario = load_scenario(args.config) if args.config else None
    sys_ = scenario.system if scenario else None
    dp = args.delta_p_mhz if args.delta_p_mhz is not None else (sys_.probe.detuning / MHZ if sys_ else None)
    op = args.omega_p_mhz if args.omega_p_mhz is not None else (sys_.probe.peak_rabi / MHZ if sys_ else None)
    grg = args.gamma_rg_mhz if args.gamma_rg_mhz is not None else (
        sys_.rates.gamma_rg / MHZ if sys_ else None)
    if None in (dp, op, grg):
        raise UsageError("give --delta-p-mhz, --omega-p-mhz and --gamma-rg-mhz, or --config")
    if op <= 0:
        raise UsageError("--omega-p-mhz must be > 0")
    ratio = im_re_ratio(dp * MHZ, op * MHZ, grg * MHZ)
    payload = {
        "delta_p_MHz": dp,
        "omega_p_MHz": op,
        "gamma_rg_MHz": grg,
        "im_over_re": ratio,
        "phase_over_absorption": (1.0 / ratio) if ratio else None,
    }
    if sys_ is not None:
        s = sys_.replace(probe=sys_.probe.replace(detuning=dp * MHZ, peak_rabi=op * MHZ),
                         rates=type(sys_.rates)(sys_.rates.gamma_eg, sys_.rates.gamma_re,
                                                grg * MHZ, sys_.rates.gamma_rel))
        peak = peak_chi_approx(s)
        payload["phase_rad"] = float(phase_from_chi(peak.re_chi, s.probe.wavevector, s.cell_length))
        payload["absorption"] = s.probe.wavevector * s.cell_length * peak.im_chi
    out = Path(args.out)
    path = out / "ratio.json"
    _write_json(path, payload)
    _write_manifest(out, "ratio", args, "ratio", {"delta_p_mhz": dp, "omega_p_mhz": op,
                                                  "gamma_rg_mhz": grg}, [path], scenario, None)
    print("quantity               value")
    print(f"im_over_re             {ratio:.6g}")
    if ratio:
        print(f"phase_over_absorption  {1.0 / ratio:.6g}")
    if "phase_rad" in payload:
        print(f"phase_rad              {payload['phase_rad']:.6g}")
        print(f"absorption             {payload['absorption']:.6g}")
    return EXIT_OK


def cmd_vapor(args) -> int:
    if args.t_step <= 0 or args.t_max < args.t_min:
        raise UsageError("need t_step > 0 and t_max >= t_min")
    species = load_scenario(args.config).system.species if args.config else None
    n = int(round((args.t_max - args.t_min) / args.t_step)) + 1
    temps = args.t_min + args.t_step * np.arange(n)
    rows = ["temperature_K,density_m3"]
    for t in temps:
        rows.append(f"{fmt(t)},{fmt(vapor_density(float(t), species))}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "vapor.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    _write_manifest(out, "vapor", args, "vapor",
                    {"t_min": args.t_min, "t_max": args.t_max, "t_step": args.t_step},
                    [path], None, None)
    print("\n".join(rows))
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.config is None:
        raise UsageError("--config is required")
    scenario = load_scenario(args.config)
    s = scenario.system
    print(f"config {args.config}: OK")
    print(f"  species            {s.species.name}")
    print(f"  probe   Rabi {s.probe.peak_rabi / MHZ:.6g} MHz, detuning {s.probe.detuning / MHZ:.6g} MHz")
    print(f"  coupling Rabi {s.coupling.peak_rabi / MHZ:.6g} MHz, detuning {s.coupling.detuning / MHZ:.6g} MHz")
    print(f"  density            {s.density:.6g} m^-3 at {s.temperature:.6g} K")
    print(f"  v_p                {s.most_probable_speed:.6g} m/s")
    print(f"  delta_k            {s.delta_k:.6g} rad/m")
    print(f"  lines              {len(scenario.lines)}")
    out = Path(args.out)
    _write_manifest(out, "validate", args, "validate", {}, [], scenario, None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rhs", description="Rydberg heterodyne spectroscopy simulator")
    parser.add_argument("--version", action="version", version=f"rhs {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, config=True):
        if config:
            p.add_argument("--config", type=Path, help="scenario INI file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")

    p = sub.add_parser("scan", help="coupling-detuning spectrum to CSV")
    common(p)
    p.add_argument("--engine", choices=("full", "eff2l"), default="full")
    p.add_argument("--span-mhz", type=float, default=400.0)
    p.add_argument("--points", type=int, default=DEFAULT_POINTS)
    p.add_argument("--center-mhz", type=float, default=None,
                   help="scan centre (coupling detuning, MHz); default -Delta_p")
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.add_argument("--overlay", action="store_true", help="sum the [line:*] sections")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise-urad", type=float, default=None)
    p.add_argument("--manifest", type=Path, default=None, help="rerun a previous scan")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("peakfit", help="Gaussian fit of a spectrum CSV")
    common(p, config=False)
    p.add_argument("--spectrum", type=Path, required=True)
    p.set_defaults(func=cmd_peakfit)

    p = sub.add_parser("invert", help="phase shift to Rydberg population")
    common(p)
    p.add_argument("--phase-urad", type=float, required=True)
    p.add_argument("--delta-c-mhz", type=float, default=None)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("ratio", help="Im/Re susceptibility ratio at the peak")
    common(p)
    p.add_argument("--delta-p-mhz", type=float)
    p.add_argument("--omega-p-mhz", type=float)
    p.add_argument("--gamma-rg-mhz", type=float)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("vapor", help="vapour density against temperature")
    common(p)
    p.add_argument("--t-min", type=float, default=300.0)
    p.add_argument("--t-max", type=float, default=410.0)
    p.add_argument("--t-step", type=float, default=10.0)
    p.set_defaults(func=cmd_vapor)

    p = sub.add_parser("validate", help="check a scenario file")
    common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand (scan|peakfit|invert|ratio|vapor|validate)")
        return args.func(args)
    except UsageError as exc:
        print(f"rhs: error[usage]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError) as exc:
        print(f"rhs: error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS + (NumericalFailure,) as exc:
        print(f"rhs: error[numerical]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
