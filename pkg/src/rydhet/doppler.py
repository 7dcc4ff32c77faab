"""Thermal (Doppler) averaging of the two-photon probe coherence.

The two-photon part of the probe coherence is the full ladder value minus
the value with the coupling beam off. Its thermal average is weighted by the
normalised Gaussian ``exp(-v^2 / 2 v_p^2) / (sqrt(2 pi) v_p)`` and computed
with a globally adaptive 7/15-point Gauss-Kronrod rule. Panels are seeded
around the velocity classes that are two-photon resonant, whose features are
a few m/s wide against a thermal width of ~200 m/s.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .atomsys import EPS0, HBAR, ValidatedSystem
from .errors import DomainError, QuadratureError
from .obe import liouvillian_stack, steady_state_stack, two_level_rho_eg

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
# 15 abscissae on [-1, 1] and the matching Kronrod / embedded Gauss weights.
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
W_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
W_GAUSS = np.zeros(15)
W_GAUSS[[1, 3, 5]] = _WG[:3]
W_GAUSS[[9, 11, 13]] = _WG[2::-1]
W_GAUSS[7] = _WG[3]

DOMAIN_HALF_WIDTH = 6.0
DEFAULT_REL_TOL = 1e-6
# Seeded panel edges at center + half_width * (+-GRADING).
GRADING = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


@dataclass(frozen=True)
class ThermalAverage:
    value: complex
    error: float
    tolerance: float
    n_nodes: int
    n_panels: int


@dataclass(frozen=True)
class Susceptibility:
    """Doppler-averaged two-photon susceptibility with its provenance."""

    value: complex
    parameters: dict
    diagnostics: ThermalAverage | None = None

    @property
    def real(self) -> float:
        return self.value.real

    @property
    def imag(self) -> float:
        return self.value.imag


def default_workers() -> int:
    env = os.environ.get("RHS_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _evaluate(f, x: np.ndarray, workers: int) -> np.ndarray:
    if workers <= 1 or x.size < 2048:
        return np.asarray(f(x), dtype=complex)
    chunks = np.array_split(x, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: np.asarray(f(c), dtype=complex), chunks))
    return np.concatenate(parts)


def _seed_edges(lo, hi, min_panels, windows, breakpoints):
    edges = [np.linspace(lo, hi, min_panels + 1)]
    for center, half_width in windows:
        if not (math.isfinite(center) and half_width > 0):
            continue
        g = np.asarray(GRADING) * half_width
        edges.append(center + np.concatenate([-g, [0.0], g]))
    edges.append(np.asarray(list(breakpoints), dtype=float))
    e = np.concatenate(edges)
    e = np.unique(np.clip(e[np.isfinite(e)], lo, hi))
    keep = np.concatenate([[True], np.diff(e) > 1e-9 * (hi - lo)])
    e = e[keep]
    e[-1] = hi
    return e


def thermal_average(
    f: Callable[[np.ndarray], np.ndarray],
    v_p: float,
    rel_tol: float = DEFAULT_REL_TOL,
    windows: Sequence[tuple[float, float]] = (),
    breakpoints: Sequence[float] = (),
    min_panels: int = 16,
    max_panels: int = 20000,
    abs_floor: float = 1e-3,
    workers: int | None = None,
) -> ThermalAverage:
    """Average ``f(v)`` over the 1-D Maxwell-Boltzmann distribution of width ``v_p``.

    ``f`` must accept an array of velocities. The domain is ``+-6 v_p``.
    ``windows`` are ``(center, half_width)`` pairs that receive graded seed
    panels. Refinement stops once the summed |Kronrod - Gauss| estimate is
    below ``rel_tol * max(|I|, abs_floor * I_abs)``, where ``I_abs`` is the
    average of ``|f|``; the floor keeps near-zero averages finite.

    Raises
    ------
    QuadratureError
        If ``max_panels`` is exceeded before the tolerance is met.
    """
    if not v_p > 0:
        raise DomainError("v_p must be > 0")
    workers = default_workers() if workers is None else workers
    lo, hi = -DOMAIN_HALF_WIDTH * v_p, DOMAIN_HALF_WIDTH * v_p
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * v_p)

    def panels(a, b):
        half = 0.5 * (b - a)
        x = 0.5 * (a + b)[:, None] + half[:, None] * NODES[None, :]
        w = norm * np.exp(-0.5 * (x / v_p) ** 2) * half[:, None]
        fx = _evaluate(f, x.ravel(), workers).reshape(x.shape) * w
        k = fx @ W_KRONROD
        g = fx @ W_GAUSS
        return k, np.abs(k - g), np.abs(fx) @ W_KRONROD

    edges = _seed_edges(lo, hi, min_panels, windows, breakpoints)
    a, b = edges[:-1], edges[1:]
    k, err, kabs = panels(a, b)
    n_nodes = 15 * a.size
    while True:
        total = complex(k.sum())
        scale = max(abs(total), abs_floor * float(kabs.sum()))
        tol = rel_tol * scale
        e_tot = float(err.sum())
        if e_tot <= tol or scale == 0.0:
            break
        if a.size >= max_panels:
            raise QuadratureError(
                f"no convergence after {a.size} panels (error {e_tot:.3g} > {tol:.3g})",
                diagnostics={"panels": int(a.size), "error": e_tot, "tolerance": tol,
                             "value": total},
            )
        order = np.argsort(-err, kind="stable")
        remaining = e_tot - np.cumsum(err[order])
        n_split = int(np.searchsorted(-remaining, -0.5 * tol)) + 1
        n_split = min(n_split, order.size, max_panels - a.size)
        split = np.zeros(a.size, dtype=bool)
        split[order[:n_split]] = True
        mid = 0.5 * (a[split] + b[split])
        na = np.concatenate([a[split], mid])
        nb = np.concatenate([mid, b[split]])
        nk, nerr, nkabs = panels(na, nb)
        n_nodes += 15 * na.size
        keep = ~split
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        k = np.concatenate([k[keep], nk])
        err = np.concatenate([err[keep], nerr])
        kabs = np.concatenate([kabs[keep], nkabs])
        order = np.argsort(a, kind="stable")
        a, b, k, err, kabs = a[order], b[order], k[order], err[order], kabs[order]
    return ThermalAverage(
        value=complex(k.sum()), error=float(err.sum()), tolerance=tol,
        n_nodes=int(n_nodes), n_panels=int(a.size),
    )


def _reference_rho_eg(system: ValidatedSystem, v: np.ndarray, two_level: str) -> np.ndarray:
    probe = system.probe
    if two_level == "analytic":
        return two_level_rho_eg(probe.peak_rabi, probe.detuning - probe.wavevector * v,
                                system.rates.gamma_eg)
    if two_level == "numeric":
        off = system.coupling.replace(peak_rabi=0.0)
        return steady_state_stack(liouvillian_stack(probe, off, system.rates, v))[:, 1, 0]
    raise ValueError(f"two_level must be 'analytic' or 'numeric', got {two_level!r}")


def rho_eg_3l_function(system: ValidatedSystem, two_level: str = "analytic"):
    """Vectorised ``v -> rho_eg(v) - rho_eg^(2L)(v)`` for ``system``."""
    if system.coupling.peak_rabi == 0.0:
        return lambda v: np.zeros(np.shape(v), dtype=complex)

    def integrand(v):
        v = np.asarray(v, dtype=float).reshape(-1)
        full = steady_state_stack(
            liouvillian_stack(system.probe, system.coupling, system.rates, v))[:, 1, 0]
        return full - _reference_rho_eg(system, v, two_level)

    return integrand


def rho_eg_3L(system: ValidatedSystem, velocity: float, delta_c: float | None = None,
              two_level: str = "analytic") -> complex:
    """Two-photon part of the probe coherence for one velocity class."""
    if delta_c is not None:
        system = system.with_coupling(detuning=delta_c)
    return complex(rho_eg_3l_function(system, two_level)(np.array([velocity]))[0])


def resonance_windows(system: ValidatedSystem) -> list[tuple[float, float]]:
    """Velocity classes where the integrand has narrow structure.

    The bare and light-shifted two-photon resonant velocities, with half
    width ``max(2 |O_eff|, G_rg + g_rel) / |dk|``, and the intermediate
    resonance ``v = Dp / kp``.
    """
    p, c, rt = system.probe, system.coupling, system.rates
    out = []
    dk = system.delta_k
    d2 = p.detuning + c.detuning
    dpc = p.detuning - c.detuning
    if dk != 0.0:
        o_eff = p.peak_rabi * c.peak_rabi / (2.0 * dpc) if dpc != 0 else 0.0
        light = p.peak_rabi ** 2 / (2.0 * dpc) if dpc != 0 else 0.0
        hw = max(2.0 * abs(o_eff), rt.gamma_rg + rt.gamma_rel, 1e-3 * rt.gamma_eg) / abs(dk)
        out.append((-d2 / dk, hw))
        out.append((-(d2 + light) / dk, hw))
    if p.wavevector != 0.0:
        hw = max(rt.gamma_eg, p.peak_rabi) / abs(p.wavevector)
        out.append((p.detuning / p.wavevector, hw))
    return out


def chi_prefactor(system: ValidatedSystem) -> float:
    """``2 N |mu_eg|^2 / (eps0 hbar O_p)``."""
    if not system.probe.peak_rabi > 0:
        raise DomainError("probe Rabi frequency must be > 0")
    mu = system.species.dipole_moment
    return 2.0 * system.density * mu * mu / (EPS0 * HBAR * system.probe.peak_rabi)


def chi_3L(system: ValidatedSystem, delta_c: float | None = None,
           rel_tol: float = DEFAULT_REL_TOL, min_panels: int = 16,
           two_level: str = "analytic", workers: int | None = None) -> Susceptibility:
    """Doppler-averaged two-photon susceptibility at coupling detuning ``delta_c``.

    ``delta_c=None`` keeps the coupling detuning stored in ``system``.
    """
    if delta_c is not None:
        system = system.with_coupling(detuning=delta_c)
    pref = chi_prefactor(system)
    params = {
        "delta_p": system.probe.detuning,
        "delta_c": system.coupling.detuning,
        "omega_p": system.probe.peak_rabi,
        "omega_c": system.coupling.peak_rabi,
        "density": system.density,
        "temperature": system.temperature,
    }
    if system.coupling.peak_rabi == 0.0:
        return Susceptibility(0j, params, ThermalAverage(0j, 0.0, 0.0, 0, 0))
    avg = thermal_average(
        rho_eg_3l_function(system, two_level),
        system.most_probable_speed,
        rel_tol=rel_tol,
        windows=resonance_windows(system),
        min_panels=min_panels,
        workers=workers,
    )
    return Susceptibility(pref * avg.value, params, avg)
