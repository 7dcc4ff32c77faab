"""Measurement chain: beam profiles, phase from susceptibility, lock-in, inversion.

The probe-reference frequency offset is treated as perfect channel
separation. The reference beam picks up no two-photon phase, so the mixer
output is exactly the differential phase of the probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .atomsys import EPS0, HBAR, ValidatedSystem
from .errors import DomainError, SingularEliminationError

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class MeasurementChain:
    """Lock-in gain G (V/V), mixer sensitivity eta_m (V/rad), phase noise (rad RMS)."""

    lockin_gain: float = 1.0
    mixer_sensitivity: float = 1.0
    phase_noise_floor: float = 0.0
    rng_seed: int | None = None

    def __post_init__(self):
        if not self.lockin_gain > 0:
            raise ValueError("lockin_gain must be > 0")
        if not self.mixer_sensitivity > 0:
            raise ValueError("mixer_sensitivity must be > 0")
        if not self.phase_noise_floor >= 0:
            raise ValueError("phase_noise_floor must be >= 0")


@dataclass(frozen=True)
class PhaseShiftResult:
    phi_s: float
    chi_real: float
    flags: dict = field(default_factory=dict)


def rabi_profile(peak_rabi, z, rayleigh_range):
    """On-axis Rabi frequency of a Gaussian beam focused at ``z = 0``."""
    if not rayleigh_range > 0:
        raise DomainError("rayleigh_range must be > 0")
    z = np.asarray(z, dtype=float)
    out = peak_rabi / np.sqrt(1.0 + (z / rayleigh_range) ** 2)
    return float(out) if out.ndim == 0 else out


def phase_from_chi(chi_real, k_p: float, cell_length: float):
    """Uniform medium: ``phi_s = k_p l Re(chi) / 2``."""
    if not cell_length > 0:
        raise DomainError("cell_length must be > 0")
    out = 0.5 * k_p * cell_length * np.asarray(chi_real, dtype=float)
    return float(out) if out.ndim == 0 else out


def phase_from_chi_profile(
    re_chi_of_rabi: Callable[[float, float], float],
    system: ValidatedSystem,
    n_panels: int = 64,
    focus: float = 0.0,
) -> PhaseShiftResult:
    """``phi_s = (k_p / 2) int_0^l Re chi(z) dz`` along a focused cell.

    Both beams are focused at ``focus`` measured from the cell centre; the
    local Rabi frequencies follow :func:`rabi_profile`. ``re_chi_of_rabi``
    maps ``(probe_rabi, coupling_rabi)`` to Re chi. Midpoint rule.
    """
    if n_panels < 64:
        raise ValueError("n_panels must be >= 64")
    length = system.cell_length
    dz = length / n_panels
    z = -0.5 * length + dz * (np.arange(n_panels) + 0.5) - focus
    op = rabi_profile(system.probe.peak_rabi, z, system.probe.rayleigh_range)
    oc = rabi_profile(system.coupling.peak_rabi, z, system.coupling.rayleigh_range)
    chi = np.array([re_chi_of_rabi(a, b) for a, b in zip(op, oc)], dtype=float)
    phi = 0.5 * system.probe.wavevector * float(np.sum(chi)) * dz
    return PhaseShiftResult(phi, float(np.mean(chi)), {"n_panels": n_panels, "focus": focus})


def lockin(phi_s, chain: MeasurementChain, noisy: bool = False):
    """Lock-in output ``V_o = G eta_m (phi_s + noise)``.

    With ``noisy=True`` Gaussian phase noise of RMS ``chain.phase_noise_floor``
    is drawn from ``numpy.random.default_rng(chain.rng_seed)``; a seed is
    required so that every run is reproducible.
    """
    phi = np.asarray(phi_s, dtype=float)
    if noisy and chain.phase_noise_floor > 0:
        if chain.rng_seed is None:
            raise ValueError("noisy lock-in output needs an explicit rng_seed")
        rng = np.random.default_rng(chain.rng_seed)
        phi = phi + rng.normal(0.0, chain.phase_noise_floor, size=phi.shape)
    v = chain.lockin_gain * chain.mixer_sensitivity * phi
    return float(v) if v.ndim == 0 else v


def lockin_invert(v_o, chain: MeasurementChain):
    """``phi_s = V_o / (G eta_m)``."""
    phi = np.asarray(v_o, dtype=float) / (chain.lockin_gain * chain.mixer_sensitivity)
    return float(phi) if phi.ndim == 0 else phi


def invert_population(phi_s, system: ValidatedSystem, omega_eff: float):
    """Rydberg population at the dispersion peak from the measured phase.

    ``rho_rr = (2 eps0 hbar Dp / N mu^2) (|dk| v_p / (sqrt(pi) O_eff)) (lambda_p / l) phi_s``
    with ``lambda_p = 2 pi / k_p``, the exact inverse of the peak
    approximation followed by :func:`phase_from_chi`.
    """
    if omega_eff == 0:
        raise SingularEliminationError("omega_eff must be nonzero")
    if np.any(np.asarray(phi_s) < 0):
        raise DomainError("phi_s must be >= 0")
    mu = system.species.dipole_moment
    wavelength = 2.0 * math.pi / system.probe.wavevector
    a = 2.0 * EPS0 * HBAR * system.probe.detuning / (system.density * mu * mu)
    b = abs(system.delta_k) * system.most_probable_speed / (SQRT_PI * omega_eff)
    c = wavelength / system.cell_length
    out = a * b * c * np.asarray(phi_s, dtype=float)
    return float(out) if out.ndim == 0 else out
