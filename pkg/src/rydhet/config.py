"""INI-style scenario files.

Sections ``[species]``, ``[probe]``, ``[coupling]``, ``[rates]``, ``[cell]``
and the optional ``[chain]`` and ``[line:NAME]`` sections. Frequencies are
linear MHz in the file and angular rad/s in memory; lengths are metres,
temperature kelvin. ``density_m3 = auto`` evaluates the vapour density at
the cell temperature.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .atomsys import (
    TWO_PI,
    AtomSpecies,
    DecoherenceRates,
    LaserField,
    SystemConfig,
    ValidatedSystem,
    validate,
    vapor_density,
)
from .errors import ConfigError, DomainError
from .sigchain import MeasurementChain

MHZ = TWO_PI * 1e6


def mhz_to_angular(value_mhz: float) -> float:
    return value_mhz * MHZ


def angular_to_mhz(value: float) -> float:
    return value / MHZ


@dataclass(frozen=True)
class LineSpec:
    """One two-photon line in a multi-line spectrum.

    ``offset`` (rad/s) is added to the coupling detuning; ``weight`` scales
    the line's contribution.
    """

    offset: float
    weight: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not self.weight > 0:
            raise ConfigError([(f"line:{self.name}.weight", "must be > 0")])


@dataclass(frozen=True)
class Scenario:
    system: ValidatedSystem
    chain: MeasurementChain | None = None
    lines: tuple[LineSpec, ...] = field(default_factory=tuple)


class _Reader:
    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser
        self.issues: list[tuple[str, str]] = []

    def get(self, section, key, default=None, kind=float):
        # Missing required floats come back as NaN so construction can
        # continue and every problem is reported together.
        path = f"{section}.{key}"
        missing = math.nan if kind is float else None
        if not self.parser.has_section(section):
            if default is None:
                self.issues.append((section, "missing section"))
                return missing
            return default
        raw = self.parser.get(section, key, fallback=None)
        if raw is None:
            if default is None:
                self.issues.append((path, "missing key"))
                return missing
            return default
        raw = raw.strip()
        if kind is str:
            return raw
        try:
            value = kind(raw)
        except ValueError:
            self.issues.append((path, f"cannot parse {raw!r} as {kind.__name__}"))
            return math.nan if kind is float else default
        return value


def _read_field(r: _Reader, section: str, wavelength: float) -> LaserField:
    direction = r.get(section, "direction", default=1.0 if section == "probe" else -1.0)
    k_explicit = r.get(section, "wavevector_rad_per_m", default=math.nan)
    k = k_explicit if math.isfinite(k_explicit) else math.copysign(TWO_PI / wavelength, direction)
    return LaserField(
        peak_rabi=mhz_to_angular(r.get(section, "rabi_mhz")),
        detuning=mhz_to_angular(r.get(section, "detuning_mhz")),
        wavevector=k,
        waist=r.get(section, "waist_m"),
        rayleigh_range=r.get(section, "rayleigh_range_m"),
    )


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse scenario text; raises :class:`ConfigError` listing every problem."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str.lower
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([(source, str(exc).splitlines()[0])]) from exc
    r = _Reader(parser)

    default = AtomSpecies()
    species = AtomSpecies(
        atomic_mass=r.get("species", "atomic_mass_kg", default.atomic_mass),
        transition_wavelength_probe=r.get("species", "wavelength_probe_m", default.transition_wavelength_probe),
        transition_wavelength_coupling=r.get("species", "wavelength_coupling_m",
                                             default.transition_wavelength_coupling),
        dipole_moment=r.get("species", "dipole_moment_cm", default.dipole_moment),
        isotope_abundance=r.get("species", "isotope_abundance", default.isotope_abundance),
        name=r.get("species", "name", default.name, kind=str),
    )
    probe = _read_field(r, "probe", species.transition_wavelength_probe)
    coupling = _read_field(r, "coupling", species.transition_wavelength_coupling)
    d = DecoherenceRates()
    rates = DecoherenceRates(
        gamma_eg=mhz_to_angular(r.get("rates", "gamma_eg_mhz", angular_to_mhz(d.gamma_eg))),
        gamma_re=mhz_to_angular(r.get("rates", "gamma_re_mhz", angular_to_mhz(d.gamma_re))),
        gamma_rg=mhz_to_angular(r.get("rates", "gamma_rg_mhz", angular_to_mhz(d.gamma_rg))),
        gamma_rel=mhz_to_angular(r.get("rates", "gamma_rel_mhz", angular_to_mhz(d.gamma_rel))),
    )
    temperature = r.get("cell", "temperature_k")
    length = r.get("cell", "length_m")
    raw_density = r.get("cell", "density_m3", kind=str)
    density = math.nan
    if raw_density is not None:
        if raw_density.lower() == "auto":
            try:
                density = vapor_density(temperature, species)
            except (DomainError, TypeError) as exc:
                r.issues.append(("cell.density_m3", f"auto density failed: {exc}"))
        else:
            try:
                density = float(raw_density)
            except ValueError:
                r.issues.append(("cell.density_m3", f"cannot parse {raw_density!r}"))

    chain = None
    if parser.has_section("chain"):
        seed_raw = r.get("chain", "seed", "none", kind=str)
        seed = None
        if seed_raw.lower() not in ("", "none"):
            try:
                seed = int(seed_raw)
            except ValueError:
                r.issues.append(("chain.seed", f"cannot parse {seed_raw!r}"))
        try:
            chain = MeasurementChain(
                lockin_gain=r.get("chain", "gain", 1.0),
                mixer_sensitivity=r.get("chain", "mixer_sensitivity_v_per_rad", 1.0),
                phase_noise_floor=r.get("chain", "phase_noise_urad", 0.0) * 1e-6,
                rng_seed=seed,
            )
        except ValueError as exc:
            r.issues.append(("chain", str(exc)))

    lines = []
    for section in parser.sections():
        if section.startswith("line:"):
            name = section.split(":", 1)[1]
            try:
                lines.append(LineSpec(
                    offset=mhz_to_angular(r.get(section, "offset_mhz", 0.0)),
                    weight=r.get(section, "weight", 1.0),
                    name=name,
                ))
            except ConfigError as exc:
                r.issues.extend(exc.issues)

    if r.issues:
        raise ConfigError(list(dict.fromkeys(r.issues)))
    system = validate(SystemConfig(
        species=species, probe=probe, coupling=coupling, rates=rates,
        density=density, temperature=temperature, cell_length=length,
    ))
    return Scenario(system=system, chain=chain, lines=tuple(lines))


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([(str(path), f"cannot read: {exc.strerror}")]) from exc
    return parse_scenario(text, source=str(path))


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_scenario(scenario: Scenario) -> str:
    """Serialise a scenario so that :func:`parse_scenario` rebuilds it."""
    s = scenario.system
    sp = s.species
    out = [
        "[species]",
        f"name = {sp.name}",
        f"atomic_mass_kg = {_fmt(sp.atomic_mass)}",
        f"wavelength_probe_m = {_fmt(sp.transition_wavelength_probe)}",
        f"wavelength_coupling_m = {_fmt(sp.transition_wavelength_coupling)}",
        f"dipole_moment_cm = {_fmt(sp.dipole_moment)}",
        f"isotope_abundance = {_fmt(sp.isotope_abundance)}",
    ]
    for name, f in (("probe", s.probe), ("coupling", s.coupling)):
        out += [
            "",
            f"[{name}]",
            f"rabi_mhz = {_fmt(angular_to_mhz(f.peak_rabi))}",
            f"detuning_mhz = {_fmt(angular_to_mhz(f.detuning))}",
            f"wavevector_rad_per_m = {_fmt(f.wavevector)}",
            f"waist_m = {_fmt(f.waist)}",
            f"rayleigh_range_m = {_fmt(f.rayleigh_range)}",
        ]
    rt = s.rates
    out += [
        "",
        "[rates]",
        f"gamma_eg_mhz = {_fmt(angular_to_mhz(rt.gamma_eg))}",
        f"gamma_re_mhz = {_fmt(angular_to_mhz(rt.gamma_re))}",
        f"gamma_rg_mhz = {_fmt(angular_to_mhz(rt.gamma_rg))}",
        f"gamma_rel_mhz = {_fmt(angular_to_mhz(rt.gamma_rel))}",
        "",
        "[cell]",
        f"temperature_k = {_fmt(s.temperature)}",
        f"density_m3 = {_fmt(s.density)}",
        f"length_m = {_fmt(s.cell_length)}",
    ]
    if scenario.chain is not None:
        c = scenario.chain
        out += [
            "",
            "[chain]",
            f"gain = {_fmt(c.lockin_gain)}",
            f"mixer_sensitivity_v_per_rad = {_fmt(c.mixer_sensitivity)}",
            f"phase_noise_urad = {_fmt(c.phase_noise_floor * 1e6)}",
            f"seed = {'none' if c.rng_seed is None else c.rng_seed}",
        ]
    for i, line in enumerate(scenario.lines):
        out += [
            "",
            f"[line:{line.name or i}]",
            f"offset_mhz = {_fmt(angular_to_mhz(line.offset))}",
            f"weight = {_fmt(line.weight)}",
        ]
    return "\n".join(out) + "\n"


def default_config_path() -> Path:
    """The shipped example scenario (403 K, 1.3 GHz probe detuning)."""
    return Path(__file__).with_name("data") / "rb85_403K.ini"
