"""Physical scenario: species data, laser fields, decay rates and vapour models.

All frequencies held by these types are angular (rad/s). Wavevectors are
signed projections on the probe propagation axis, so the probe always has
``wavevector > 0`` and a counter-propagating coupling beam has
``wavevector < 0``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from scipy import constants

from .errors import ConfigError, DomainError

TWO_PI = 2.0 * math.pi
K_B = constants.k
HBAR = constants.hbar
EPS0 = constants.epsilon_0
AMU = constants.atomic_mass
TORR = constants.torr

# Rb-85 D2 line; the dipole is the effective far-detuned value for the
# 5S1/2 -> 5P3/2 transition (D. A. Steck, "Rubidium 85 D Line Data").
RB85_MASS = 84.911789738 * AMU
RB85_D2_WAVELENGTH = 780.241209686e-9
RB85_D2_DIPOLE = 2.5377e-29
RB85_ABUNDANCE = 0.72
RYDBERG_COUPLING_WAVELENGTH = 480.0e-9

# Nesmeyanov vapour-pressure fits for rubidium, log10(P / torr).
_SOLID = (-94.04826, -1961.258, -0.03771687, 42.57526)
_LIQUID = (15.88253, -4529.635, 0.00058663, -2.99138)
# Temperature where the two fits intersect (0.13 K above the 312.45 K melting
# point); switching there keeps the density continuous and increasing.
RB_BRANCH_TEMPERATURE = 312.5824275826347
VAPOR_T_MIN = 250.0
VAPOR_T_MAX = 500.0


@dataclass(frozen=True)
class AtomSpecies:
    """Constants for the |g> -> |e> -> |r> ladder of one isotope."""

    atomic_mass: float = RB85_MASS
    transition_wavelength_probe: float = RB85_D2_WAVELENGTH
    transition_wavelength_coupling: float = RYDBERG_COUPLING_WAVELENGTH
    dipole_moment: float = RB85_D2_DIPOLE
    isotope_abundance: float = RB85_ABUNDANCE
    name: str = "Rb85"


@dataclass(frozen=True)
class LaserField:
    """A focused Gaussian beam driving one leg of the ladder.

    ``peak_rabi`` and ``detuning`` are angular frequencies; ``wavevector`` is
    the signed projection on the probe axis (rad/m).
    """

    peak_rabi: float
    detuning: float
    wavevector: float
    waist: float
    rayleigh_range: float

    def replace(self, **changes) -> "LaserField":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DecoherenceRates:
    gamma_eg: float = TWO_PI * 6.0e6
    gamma_re: float = TWO_PI * 0.01e6
    gamma_rg: float = TWO_PI * 0.5e6
    gamma_rel: float = TWO_PI * 0.5e6


@dataclass(frozen=True)
class SystemConfig:
    """Unvalidated scenario; pass through :func:`validate` before use."""

    species: AtomSpecies
    probe: LaserField
    coupling: LaserField
    rates: DecoherenceRates
    density: float
    temperature: float
    cell_length: float


@dataclass(frozen=True)
class ValidatedSystem(SystemConfig):
    """Scenario whose invariants hold, with derived kinematic fields.

    ``delta_k`` is the two-photon Doppler coefficient: the Rydberg level
    detuning of an atom moving at ``v`` is ``Delta_2 + delta_k * v``.
    """

    most_probable_speed: float
    delta_k: float

    @property
    def two_photon_detuning(self) -> float:
        return self.probe.detuning + self.coupling.detuning

    def replace(self, **changes) -> "ValidatedSystem":
        """Copy with some scenario fields changed, re-validated."""
        base = {f.name: getattr(self, f.name) for f in dataclasses.fields(SystemConfig)}
        base.update(changes)
        return validate(SystemConfig(**base))

    def with_probe(self, **changes) -> "ValidatedSystem":
        return self.replace(probe=self.probe.replace(**changes))

    def with_coupling(self, **changes) -> "ValidatedSystem":
        return self.replace(coupling=self.coupling.replace(**changes))


def _log10_torr(temperature: float) -> float:
    a, b, c, d = _SOLID if temperature < RB_BRANCH_TEMPERATURE else _LIQUID
    return a + b / temperature + c * temperature + d * math.log10(temperature)


def vapor_density(temperature: float, species: AtomSpecies | None = None) -> float:
    """Number density (m^-3) of the chosen isotope in saturated Rb vapour.

    Uses the solid/liquid Nesmeyanov correlation for total rubidium pressure
    and the ideal-gas law, scaled by ``species.isotope_abundance``.
    """
    if species is None:
        species = AtomSpecies()
    if not (VAPOR_T_MIN <= temperature <= VAPOR_T_MAX):
        raise DomainError(
            f"temperature {temperature!r} K outside [{VAPOR_T_MIN}, {VAPOR_T_MAX}] K"
        )
    pressure = TORR * 10.0 ** _log10_torr(temperature)
    return species.isotope_abundance * pressure / (K_B * temperature)


def most_probable_speed(temperature: float, mass: float) -> float:
    """Width ``sqrt(k_B T / m)`` of the 1-D Maxwell-Boltzmann distribution.

    With this choice the weight ``exp(-v^2 / 2 v_p^2) / (sqrt(2 pi) v_p)``
    is exactly the axial thermal distribution.
    """
    if not temperature > 0 or not mass > 0:
        raise DomainError(f"temperature and mass must be positive, got {temperature!r}, {mass!r}")
    return math.sqrt(K_B * temperature / mass)


def two_photon_wavevector(probe: LaserField, coupling: LaserField) -> float:
    """Doppler coefficient of the two-photon detuning.

    An atom moving at ``v`` sees the probe shifted by ``-k_p v`` and the
    coupling by ``-k_c v`` (signed projections), so the Rydberg detuning
    moves by ``-(k_p + k_c) v``. For the counter-propagating geometry this is
    ``|k_c| - |k_p|``; equal wavelengths counter-propagating give zero.
    """
    return -(probe.wavevector + coupling.wavevector)


def _field_issues(prefix: str, field: LaserField) -> list[tuple[str, str]]:
    issues = []
    for name in ("peak_rabi", "detuning", "wavevector", "waist", "rayleigh_range"):
        value = getattr(field, name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            issues.append((f"{prefix}.{name}", f"must be a finite number, got {value!r}"))
    if issues:
        return issues
    if field.peak_rabi < 0:
        issues.append((f"{prefix}.peak_rabi", "must be >= 0"))
    if field.waist <= 0:
        issues.append((f"{prefix}.waist", "must be > 0"))
    if field.rayleigh_range <= 0:
        issues.append((f"{prefix}.rayleigh_range", "must be > 0"))
    if field.wavevector == 0:
        issues.append((f"{prefix}.wavevector", "must be nonzero"))
    return issues


def _positive(issues, path, value, strict=True):
    ok = isinstance(value, (int, float)) and math.isfinite(value)
    ok = ok and (value > 0 if strict else value >= 0)
    if not ok:
        issues.append((path, f"must be {'>' if strict else '>='} 0 and finite, got {value!r}"))


def validate(config: SystemConfig) -> ValidatedSystem:
    """Check every scenario invariant and attach derived fields.

    Raises :class:`ConfigError` listing all violations by field path.
    Validating a :class:`ValidatedSystem` returns the same object.
    """
    issues: list[tuple[str, str]] = []
    sp = config.species
    for name in ("atomic_mass", "transition_wavelength_probe",
                 "transition_wavelength_coupling", "dipole_moment", "isotope_abundance"):
        _positive(issues, f"species.{name}", getattr(sp, name))
    if isinstance(sp.isotope_abundance, (int, float)) and sp.isotope_abundance > 1:
        issues.append(("species.isotope_abundance", "must be <= 1"))

    issues += _field_issues("probe", config.probe)
    issues += _field_issues("coupling", config.coupling)
    if not any(p.startswith("probe.wavevector") for p, _ in issues) and config.probe.wavevector < 0:
        issues.append(("probe.wavevector", "probe defines the +z axis; must be > 0"))

    for name in ("gamma_eg", "gamma_re", "gamma_rg", "gamma_rel"):
        _positive(issues, f"rates.{name}", getattr(config.rates, name), strict=False)

    _positive(issues, "density", config.density)
    _positive(issues, "temperature", config.temperature)
    _positive(issues, "cell_length", config.cell_length)
    if issues:
        raise ConfigError(issues)

    v_p = most_probable_speed(config.temperature, sp.atomic_mass)
    dk = two_photon_wavevector(config.probe, config.coupling)
    if isinstance(config, ValidatedSystem):
        if abs(config.most_probable_speed - v_p) > 1e-12 * v_p:
            issues.append(("most_probable_speed", "inconsistent with temperature and mass"))
        if config.delta_k != dk:
            issues.append(("delta_k", "inconsistent with the beam wavevectors"))
        if issues:
            raise ConfigError(issues)
        return config

    base = {f.name: getattr(config, f.name) for f in dataclasses.fields(SystemConfig)}
    return ValidatedSystem(**base, most_probable_speed=v_p, delta_k=dk)


def reference_system(
    probe_rabi_mhz: float = 60.0,
    coupling_rabi_mhz: float = 24.0,
    probe_detuning_mhz: float = 1300.0,
    coupling_detuning_mhz: float | None = None,
    temperature: float = 403.15,
    density: float | None = 3.0e19,
    cell_length: float = 0.05,
    rates: DecoherenceRates | None = None,
    species: AtomSpecies | None = None,
) -> ValidatedSystem:
    """Counter-propagating Rb-85 scenario with the beam geometry of the experiment.

    Rabi frequencies and detunings are linear MHz. ``density=None`` evaluates
    the saturated vapour density at ``temperature``. The coupling detuning
    defaults to the bare two-photon resonance of the zero-velocity class.
    """
    species = species or AtomSpecies()
    if coupling_detuning_mhz is None:
        coupling_detuning_mhz = -probe_detuning_mhz
    probe = LaserField(
        peak_rabi=TWO_PI * probe_rabi_mhz * 1e6,
        detuning=TWO_PI * probe_detuning_mhz * 1e6,
        wavevector=TWO_PI / species.transition_wavelength_probe,
        waist=35e-6,
        rayleigh_range=12e-3,
    )
    coupling = LaserField(
        peak_rabi=TWO_PI * coupling_rabi_mhz * 1e6,
        detuning=TWO_PI * coupling_detuning_mhz * 1e6,
        wavevector=-TWO_PI / species.transition_wavelength_coupling,
        waist=50e-6,
        rayleigh_range=10e-3,
    )
    if density is None:
        density = vapor_density(temperature, species)
    return validate(SystemConfig(
        species=species, probe=probe, coupling=coupling,
        rates=rates or DecoherenceRates(), density=density,
        temperature=temperature, cell_length=cell_length,
    ))
