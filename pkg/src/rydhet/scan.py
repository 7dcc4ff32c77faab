"""Coupling-detuning scans, multi-line overlays, peak fits and lineshape analysis."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .atomsys import TWO_PI, ValidatedSystem
from .config import LineSpec
from .doppler import (
    DEFAULT_REL_TOL,
    chi_3L,
    chi_prefactor,
    default_workers,
    resonance_windows,
    thermal_average,
)
from .efftl import rho_eg_3l_eff_function
from .errors import FitPreconditionError
from .sigchain import phase_from_chi

__all__ = [
    "ENGINES", "FitResult", "LineSpec", "PeakHeightCurves", "Spectrum",
    "detuning_grid", "fit_gain", "gaussian_fit", "overlay_lines", "peak_height_curve",
    "read_spectrum_csv", "scan_spectrum", "symmetry_decompose", "find_center",
]

ENGINES = ("full", "eff2l")
DEFAULT_SPAN = TWO_PI * 400e6
DEFAULT_POINTS = 401
MIN_POINTS = 8
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class Spectrum:
    """Scan over coupling detuning: complex chi and phase shift per point."""

    delta_c: np.ndarray
    chi: np.ndarray
    phase: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.delta_c.ndim != 1 or self.delta_c.size < MIN_POINTS:
            raise ValueError(f"spectrum needs at least {MIN_POINTS} points")
        if not np.all(np.diff(self.delta_c) > 0):
            raise ValueError("delta_c must be strictly increasing")
        if self.chi.shape != self.delta_c.shape or self.phase.shape != self.delta_c.shape:
            raise ValueError("delta_c, chi and phase must have equal length")

    def __len__(self):
        return self.delta_c.size


@dataclass(frozen=True)
class FitResult:
    amplitude: float
    center: float
    width: float
    rms_residual: float
    converged: bool
    n_evaluations: int = 0
    initial: tuple = ()


def detuning_grid(system: ValidatedSystem, span: float = DEFAULT_SPAN,
                  n_points: int = DEFAULT_POINTS, center: float | None = None) -> np.ndarray:
    """``n_points`` coupling detunings over ``span`` (rad/s).

    Centred by default on the bare two-photon resonance ``Dc = -Dp``.
    """
    if n_points < MIN_POINTS:
        raise ValueError(f"n_points must be >= {MIN_POINTS}")
    if center is None:
        center = -system.probe.detuning
    return center + np.linspace(-0.5 * span, 0.5 * span, n_points)


def _chi_point(system: ValidatedSystem, delta_c: float, engine: str, rel_tol: float) -> complex:
    if engine == "full":
        return chi_3L(system, delta_c, rel_tol=rel_tol, workers=1).value
    s = system.with_coupling(detuning=delta_c)
    if s.coupling.peak_rabi == 0.0:
        return 0j
    avg = thermal_average(rho_eg_3l_eff_function(s), s.most_probable_speed,
                          rel_tol=rel_tol, windows=resonance_windows(s), workers=1)
    return chi_prefactor(s) * avg.value


def _evaluate_chi(system, detunings, engine, rel_tol, workers):
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    workers = default_workers() if workers is None else workers
    task = lambda d: _chi_point(system, float(d), engine, rel_tol)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(task, detunings))
    else:
        values = [task(d) for d in detunings]
    return np.array(values, dtype=complex)


def scan_spectrum(system: ValidatedSystem, delta_c_range=None, n_points: int = DEFAULT_POINTS,
                  engine: str = "full", rel_tol: float = DEFAULT_REL_TOL,
                  workers: int | None = None) -> Spectrum:
    """Susceptibility and phase shift across a coupling-detuning scan.

    ``delta_c_range`` is either ``(start, stop)`` in rad/s, an explicit
    increasing array, or None for :func:`detuning_grid` defaults.
    """
    detunings = _grid(system, delta_c_range, n_points)
    chi = _evaluate_chi(system, detunings, engine, rel_tol, workers)
    phase = phase_from_chi(chi.real, system.probe.wavevector, system.cell_length)
    return Spectrum(detunings, chi, np.asarray(phase), {
        "engine": engine, "rel_tol": rel_tol, "n_points": int(detunings.size),
        "system": system,
    })


def overlay_lines(system: ValidatedSystem, lines: Sequence[LineSpec], delta_c_range=None,
                  n_points: int = DEFAULT_POINTS, engine: str = "full",
                  rel_tol: float = DEFAULT_REL_TOL, workers: int | None = None) -> Spectrum:
    """Weighted sum of shifted copies of the single-line spectrum.

    Line ``i`` contributes ``weight_i * chi(Dc - offset_i)``.
    """
    if not lines:
        raise ValueError("overlay_lines needs at least one line")
    detunings = _grid(system, delta_c_range, n_points)
    chi = np.zeros(detunings.size, dtype=complex)
    for line in lines:
        chi += line.weight * _evaluate_chi(system, detunings - line.offset, engine, rel_tol, workers)
    phase = phase_from_chi(chi.real, system.probe.wavevector, system.cell_length)
    return Spectrum(detunings, chi, np.asarray(phase), {
        "engine": engine, "rel_tol": rel_tol, "n_points": int(detunings.size),
        "system": system, "lines": tuple(lines),
    })


def _grid(system, delta_c_range, n_points):
    if delta_c_range is None:
        return detuning_grid(system, n_points=n_points)
    if np.ndim(delta_c_range) == 1 and len(delta_c_range) == 2 and n_points != 2:
        return np.linspace(delta_c_range[0], delta_c_range[1], n_points)
    return np.asarray(delta_c_range, dtype=float)


def count_peaks(values: np.ndarray, floor: float) -> int:
    """Local maxima of ``|values|`` that rise above ``floor``."""
    a = np.abs(np.asarray(values))
    inner = (a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:]) & (a[1:-1] > floor)
    return int(np.count_nonzero(inner))


def _initial_guess(x, y):
    i = int(np.argmax(np.abs(y)))
    amp = y[i]
    half = 0.5 * abs(amp)
    lo = i
    while lo > 0 and abs(y[lo - 1]) >= half:
        lo -= 1
    hi = i
    while hi < y.size - 1 and abs(y[hi + 1]) >= half:
        hi += 1

    def crossing(j_in, j_out):
        y_in, y_out = abs(y[j_in]), abs(y[j_out])
        if y_in == y_out:
            return x[j_in]
        return x[j_in] + (x[j_out] - x[j_in]) * (y_in - half) / (y_in - y_out)

    left = crossing(lo, lo - 1) if lo > 0 else x[0]
    right = crossing(hi, hi + 1) if hi < y.size - 1 else x[-1]
    width = (right - left) / FWHM_PER_SIGMA
    if not width > 0:
        width = 5.0 * float(np.median(np.diff(x)))
    return float(amp), float(x[i]), float(width)


def gaussian_fit(spectrum: Spectrum, max_evaluations: int = 200, xtol: float = 1e-8) -> FitResult:
    """Least-squares fit of ``A exp(-(x - c)^2 / 2 w^2)`` to the phase spectrum.

    Raises :class:`FitPreconditionError` unless the largest ``|phase|`` exceeds
    three times the median. Non-convergence is reported through
    ``FitResult.converged`` with the last iterate.
    """
    x = np.asarray(spectrum.delta_c, dtype=float)
    y = np.asarray(spectrum.phase, dtype=float)
    peak = float(np.max(np.abs(y)))
    if not np.all(np.isfinite(y)) or not peak > 3.0 * float(np.median(np.abs(y))):
        raise FitPreconditionError("spectrum has no dominant peak (max |phase| <= 3 x median)")
    a0, c0, w0 = _initial_guess(x, y)
    # Fit in units of the initial guess to keep the Jacobian well scaled.
    xs = (x - c0) / w0
    ys = y / abs(a0)

    def model(p):
        return p[0] * np.exp(-0.5 * ((xs - p[1]) / p[2]) ** 2)

    def residual(p):
        return model(p) - ys

    def jac(p):
        u = (xs - p[1]) / p[2]
        g = np.exp(-0.5 * u * u)
        return np.column_stack([g, p[0] * g * u / p[2], p[0] * g * u * u / p[2]])

    p0 = np.array([math.copysign(1.0, a0), 0.0, 1.0])
    res = least_squares(residual, p0, jac=jac, method="lm", xtol=xtol, ftol=1e-15,
                        gtol=1e-15, max_nfev=max_evaluations)
    amp, cen, wid = res.x
    rms = abs(a0) * float(np.sqrt(np.mean(res.fun ** 2)))
    return FitResult(
        amplitude=float(amp * abs(a0)),
        center=float(c0 + cen * w0),
        width=float(abs(wid) * w0),
        rms_residual=rms,
        converged=bool(res.status > 0 and abs(wid) > 0),
        n_evaluations=int(res.nfev),
        initial=(a0, c0, w0),
    )


def gaussian_rms_residual(spectrum: Spectrum, amplitude, center, width) -> float:
    x = spectrum.delta_c
    model = amplitude * np.exp(-0.5 * ((x - center) / width) ** 2)
    return float(np.sqrt(np.mean((model - spectrum.phase) ** 2)))


def find_center(spectrum: Spectrum) -> float:
    """Extremum of ``|phase|`` after a 5-point moving average.

    Ties go to the point with the smaller ``|delta_c|``.
    """
    a = np.abs(spectrum.phase)
    smooth = np.convolve(a, np.ones(5) / 5.0, mode="same")
    best = np.flatnonzero(smooth == smooth.max())
    return float(spectrum.delta_c[best[np.argmin(np.abs(spectrum.delta_c[best]))]])


def symmetry_decompose(spectrum: Spectrum, center: float | None = None) -> tuple[float, float]:
    """Energy shares of the even and odd parts of the phase about ``center``.

    The spectrum is linearly resampled on a grid symmetric about ``center``
    that spans the largest window inside the scan.
    """
    x, y = spectrum.delta_c, spectrum.phase
    if center is None:
        center = find_center(spectrum)
    half = min(center - x[0], x[-1] - center)
    if not half > 0:
        raise ValueError("center must lie strictly inside the scan")
    inside = np.count_nonzero(np.abs(x - center) <= half)
    n = max(inside, MIN_POINTS + 1) | 1
    u = np.linspace(-half, half, n)
    plus = np.interp(center + u, x, y)
    minus = np.interp(center - u, x, y)
    even = 0.5 * (plus + minus)
    odd = 0.5 * (plus - minus)
    e_even = float(np.sum(even * even))
    e_odd = float(np.sum(odd * odd))
    total = e_even + e_odd
    if total == 0.0:
        raise ValueError("cannot decompose an all-zero spectrum")
    return e_even / total, e_odd / total


@dataclass(frozen=True)
class PeakHeightCurves:
    probe_rabi: np.ndarray
    densities: np.ndarray
    heights: np.ndarray
    normalized: np.ndarray


def peak_height_curve(system: ValidatedSystem, probe_rabi_list: Sequence[float],
                      densities: Sequence[float], engine: str = "full",
                      span: float = DEFAULT_SPAN, n_points: int = 81,
                      rel_tol: float = DEFAULT_REL_TOL,
                      workers: int | None = None) -> PeakHeightCurves:
    """Peak |Re chi| against probe Rabi frequency, one curve per density.

    The first Rabi frequency is the weak-probe reference; ``normalized``
    divides each curve by its value there.
    """
    rabis = np.asarray(probe_rabi_list, dtype=float)
    dens = np.asarray(densities, dtype=float)
    if rabis.size == 0 or dens.size == 0:
        raise ValueError("probe_rabi_list and densities must be nonempty")
    heights = np.zeros((dens.size, rabis.size))
    for i, n in enumerate(dens):
        for j, rabi in enumerate(rabis):
            s = system.replace(density=float(n), probe=system.probe.replace(peak_rabi=float(rabi)))
            spec = scan_spectrum(s, detuning_grid(s, span, n_points), engine=engine,
                                 rel_tol=rel_tol, workers=workers)
            heights[i, j] = float(np.max(np.abs(spec.chi.real)))
    return PeakHeightCurves(rabis, dens, heights, heights / heights[:, :1])


def fit_gain(model, data) -> float:
    """Single multiplicative gain minimising ``sum (g * model - data)^2``."""
    m = np.asarray(model, dtype=float)
    d = np.asarray(data, dtype=float)
    denom = float(np.dot(m, m))
    if denom == 0.0:
        raise ValueError("model curve is identically zero")
    return float(np.dot(m, d)) / denom


def read_spectrum_csv(path: str | Path) -> Spectrum:
    """Load a phase spectrum.

    Accepts this package's scan output (``delta_c_MHz, re_chi, im_chi,
    phase_urad``) and measured files (``detuning_MHz, phase_urad``). Rows are
    sorted by detuning.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        names = {n.strip(): n for n in reader.fieldnames}
        det_key = names.get("delta_c_MHz") or names.get("detuning_MHz")
        ph_key = names.get("phase_urad")
        if det_key is None or ph_key is None:
            raise ValueError(f"{path}: need columns (delta_c_MHz|detuning_MHz, phase_urad)")
        rows = [(float(r[det_key]), float(r[ph_key]),
                 float(r[names["re_chi"]]) if "re_chi" in names else math.nan,
                 float(r[names["im_chi"]]) if "im_chi" in names else math.nan)
                for r in reader]
    rows.sort(key=lambda r: r[0])
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    return Spectrum(
        delta_c=TWO_PI * 1e6 * arr[:, 0],
        chi=arr[:, 2] + 1j * arr[:, 3],
        phase=1e-6 * arr[:, 1],
        metadata={"source": str(path)},
    )
