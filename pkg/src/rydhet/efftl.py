"""Closed forms from adiabatic elimination of the intermediate state.

For a single-photon detuning large against the probe Rabi frequency and the
intermediate linewidth, the ladder behaves as a two-level system |g>-|r>
with effective Rabi frequency and (light-shifted) detuning

    O_eff = Op Oc / (2 (Dp - Dc))
    D_eff = 2 (Dp + Dc) + 2 dk v + Op^2 / (Dp - Dc)

and Rydberg population ``O_eff^2 / (D_eff^2 + 2 O_eff^2 + G_rg^2)``. These
conventions are kept exactly as published; see the tests for how they
compare with the full three-level steady state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .atomsys import EPS0, HBAR, ValidatedSystem
from .errors import SingularEliminationError

SQRT_PI = math.sqrt(math.pi)
# |Dp - kp v| / max(G_eg, Op) below this marks the far-detuned dispersion as unreliable.
ADIABATICITY_LIMIT = 10.0


@dataclass(frozen=True)
class EffectiveTL:
    omega_eff: float
    delta_eff: float
    rho_rr: float
    re_rho_rg: float


class Eq2Estimate(NamedTuple):
    value: np.ndarray | float
    valid: np.ndarray | bool


def effective_params(omega_p, omega_c, delta_p, delta_c, delta_k, v=0.0):
    """Effective Rabi frequency and detuning of the eliminated two-level atom."""
    dpc = delta_p - delta_c
    if np.any(np.asarray(dpc) == 0):
        raise SingularEliminationError("adiabatic elimination needs Delta_p != Delta_c")
    omega_eff = omega_p * omega_c / (2.0 * dpc)
    delta_eff = 2.0 * (delta_p + delta_c) + 2.0 * delta_k * np.asarray(v) + omega_p ** 2 / dpc
    if np.ndim(delta_eff) == 0:
        delta_eff = float(delta_eff)
    return omega_eff, delta_eff


def rho_rr_analytic(omega_eff, delta_eff, gamma_rg):
    return omega_eff ** 2 / (delta_eff ** 2 + 2.0 * omega_eff ** 2 + gamma_rg ** 2)


def re_rho_rg_analytic(omega_eff, delta_eff, gamma_rg):
    """Real part of the |r><g| coherence of the effective two-level atom.

    Same denominator as :func:`rho_rr_analytic`; the sign follows the
    effective coupling ``+O_eff/2`` produced by eliminating |e>.
    """
    return omega_eff * delta_eff / (delta_eff ** 2 + 2.0 * omega_eff ** 2 + gamma_rg ** 2)


def effective_two_level(system: ValidatedSystem, velocity=0.0,
                        delta_c: float | None = None) -> EffectiveTL:
    p, c = system.probe, system.coupling
    dc = c.detuning if delta_c is None else delta_c
    o_eff, d_eff = effective_params(p.peak_rabi, c.peak_rabi, p.detuning, dc,
                                    system.delta_k, velocity)
    g = system.rates.gamma_rg
    return EffectiveTL(o_eff, d_eff, rho_rr_analytic(o_eff, d_eff, g),
                       re_rho_rg_analytic(o_eff, d_eff, g))


def dispersion_eq2(omega_p, omega_c, delta_p, k_p, v, eff: EffectiveTL,
                   gamma_eg: float = 0.0) -> Eq2Estimate:
    """Two-photon part of Re(rho_eg) in the far-detuned limit.

    ``[Op rho_rr - Oc Re(rho_rg)] / (2 (Dp - kp v))``. ``valid`` is False
    where ``|Dp - kp v| < 10 max(G_eg, Op)``.
    """
    detuning = delta_p - k_p * np.asarray(v, dtype=float)
    if np.any(detuning == 0):
        raise SingularEliminationError("probe resonant with the intermediate state (Dp = kp v)")
    value = (omega_p * eff.rho_rr - omega_c * eff.re_rho_rg) / (2.0 * detuning)
    valid = np.abs(detuning) >= ADIABATICITY_LIMIT * max(gamma_eg, omega_p)
    if np.ndim(value) == 0:
        return Eq2Estimate(float(value), bool(valid))
    return Eq2Estimate(value, valid)


def rho_eg_3l_eff_function(system: ValidatedSystem, regularize: bool = True):
    """Velocity-resolved two-photon coherence from the closed forms.

    The real part is :func:`dispersion_eq2`; the imaginary part is the
    photon-flux balance ``G_rg rho_rr / Op`` (one probe photon absorbed per
    Rydberg decay), which reproduces Im/Re = 2 G_rg Dp / Op^2.

    The far-detuned denominator has a pole at ``kp v = Dp`` that no
    quadrature can resolve. With ``regularize`` it is given the intermediate
    linewidth, ``1/D -> D / (D^2 + G_eg^2 / 4)``, which changes the result by
    less than ``(G_eg / 2 D)^2`` wherever the closed form is valid.
    """
    p, c, rt = system.probe, system.coupling, system.rates

    def integrand(v):
        v = np.asarray(v, dtype=float)
        if c.peak_rabi == 0.0:
            return np.zeros(v.shape, dtype=complex)
        eff = effective_two_level(system, v)
        if regularize:
            d = p.detuning - p.wavevector * v
            numer = p.peak_rabi * eff.rho_rr - c.peak_rabi * eff.re_rho_rg
            re = numer * d / (2.0 * (d * d + 0.25 * rt.gamma_eg ** 2))
        else:
            re = dispersion_eq2(p.peak_rabi, c.peak_rabi, p.detuning, p.wavevector, v, eff,
                                rt.gamma_eg).value
        im = rt.gamma_rg * eff.rho_rr / p.peak_rabi
        return re + 1j * np.broadcast_to(im, np.shape(re))

    return integrand


def resonant_coupling_detuning(delta_p: float, omega_p: float) -> float:
    """Coupling detuning with D_eff = 0 for the zero-velocity class.

    Solves ``2 (Dp + Dc) + Op^2 / (Dp - Dc) = 0`` on the branch next to
    ``Dc = -Dp``: ``Dc = -sign(Dp) sqrt(Dp^2 + Op^2 / 2)``.
    """
    return -math.copysign(math.sqrt(delta_p ** 2 + 0.5 * omega_p ** 2), delta_p)


def im_re_ratio(delta_p: float, omega_p: float, gamma_rg: float) -> float:
    """``Im(chi) / Re(chi) = 2 G_rg Dp / Op^2`` at the dispersion peak."""
    return 2.0 * gamma_rg * delta_p / omega_p ** 2


@dataclass(frozen=True)
class PeakChi:
    re_chi: float
    im_chi: float
    ratio: float
    omega_eff: float
    rho_rr: float
    delta_c: float


def peak_chi_approx(system: ValidatedSystem, delta_c_at_peak: float | None = None) -> PeakChi:
    """Peak Re and Im of the two-photon susceptibility from the zero-velocity class.

    ``Re chi ~ O_eff / (2 sqrt(pi) |dk| v_p) * N mu^2 / (eps0 hbar Dp) * rho_rr``
    and ``Im chi ~ O_eff / (sqrt(pi) |dk| v_p) * N mu^2 / (eps0 hbar) *
    (G_rg / Op^2) * rho_rr``. With ``delta_c_at_peak=None`` the population
    is taken on effective resonance (D_eff = 0); otherwise at the given
    coupling detuning, e.g. the peak of a computed spectrum.
    """
    p = system.probe
    dk = abs(system.delta_k)
    if dk == 0.0:
        raise SingularEliminationError("peak approximation needs a residual Doppler width (dk != 0)")
    dc = resonant_coupling_detuning(p.detuning, p.peak_rabi) if delta_c_at_peak is None \
        else delta_c_at_peak
    eff = effective_two_level(system, 0.0, dc)
    mu = system.species.dipole_moment
    scale = system.density * mu * mu / (EPS0 * HBAR)
    doppler = SQRT_PI * dk * system.most_probable_speed
    re = eff.omega_eff / (2.0 * doppler) * scale / p.detuning * eff.rho_rr
    im = eff.omega_eff / doppler * scale * (system.rates.gamma_rg / p.peak_rabi ** 2) * eff.rho_rr
    ratio = im / re if re != 0 else im_re_ratio(p.detuning, p.peak_rabi, system.rates.gamma_rg)
    return PeakChi(re, im, ratio, eff.omega_eff, eff.rho_rr, dc)
