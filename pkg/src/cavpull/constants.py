"""Physical constants and package-wide defaults.

All energies are in meV and temperatures in K; hbar = 1 throughout, so
angular frequencies are expressed directly as energies.
"""

from dataclasses import dataclass

K_B = 0.08617333  # Boltzmann constant (meV/K)


@dataclass(frozen=True)
class PhysicalConstants:
    """Immutable constants bundle (hbar = 1, energies in meV)."""

    k_b: float = K_B


CONSTANTS = PhysicalConstants()

# Absolute positions sit near this reference so that detunings of a few meV
# dominate the arithmetic; ~1350 meV is the usual InGaAs dot emission range.
DEFAULT_REFERENCE_ENERGY = 1350.0  # meV

DEFAULT_GRID_HALF_SPAN = 10.0  # meV on each side of the reference
DEFAULT_GRID_POINTS = 8001     # 2.5 ueV step on the default span

DEFAULT_HUANG_RHYS = 0.05      # dimensionless exciton-phonon coupling
DEFAULT_CUTOFF = 0.9           # meV, sideband cutoff energy nu_c
DEFAULT_ZPL_FWHM = 0.05        # meV, resolution-limited zero-phonon linewidth

DEFAULT_Q = 1000.0             # cavity quality factor
