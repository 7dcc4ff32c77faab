"""Optical-heterodyne detection of Rydberg population in thermal vapour.

Steady-state three-level optical Bloch equations, Doppler-averaged
two-photon susceptibility, effective two-level closed forms, and the
phase-measurement chain that maps a measured phase shift back to a Rydberg
population.
"""

__version__ = "0.1.0"

from .atomsys import (  # noqa: E402
    AtomSpecies,
    DecoherenceRates,
    LaserField,
    SystemConfig,
    ValidatedSystem,
    most_probable_speed,
    reference_system,
    validate,
    vapor_density,
)
from .doppler import Susceptibility, chi_3L, rho_eg_3L, thermal_average  # noqa: E402
from .efftl import (  # noqa: E402
    EffectiveTL,
    dispersion_eq2,
    effective_params,
    peak_chi_approx,
    rho_rr_analytic,
)
from .obe import (  # noqa: E402
    DensityMatrix,
    Liouvillian,
    build_hamiltonian,
    build_liouvillian,
    steady_state,
    time_evolve,
)

__all__ = [
    "AtomSpecies", "DecoherenceRates", "DensityMatrix", "EffectiveTL", "LaserField",
    "Liouvillian", "Susceptibility", "SystemConfig", "ValidatedSystem",
    "build_hamiltonian", "build_liouvillian", "chi_3L", "dispersion_eq2",
    "effective_params", "most_probable_speed", "reference_system", "peak_chi_approx",
    "rho_eg_3L", "rho_rr_analytic", "steady_state", "thermal_average", "time_evolve",
    "validate", "vapor_density",
]
