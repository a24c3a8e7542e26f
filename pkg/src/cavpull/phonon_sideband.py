"""Phonon-dressed emission of a single quantum-dot line.

The dot couples to an acoustic-phonon bath with a superohmic spectral
density and a Gaussian cutoff. Its emission splits into a sharp
zero-phonon line (ZPL) and a broad one-phonon sideband: emitting a
phonon along with the photon builds the red wing, absorbing one builds
the blue wing, and Bose occupation sets the balance. Multi-phonon
processes are dropped, which restricts the model to weak coupling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from math import exp, sqrt
from typing import NamedTuple

import numpy as np

from . import kernels
from .constants import DEFAULT_CUTOFF, DEFAULT_HUANG_RHYS, DEFAULT_ZPL_FWHM, K_B
from .errors import ParameterError
from .spectral_core import SpectralGrid, Spectrum, sampled_lorentzian

LINE_LABELS = ("X", "CX", "XX")

# One-phonon truncation budget: the sideband may carry at most this
# fraction of the total emission before the model is meaningless.
MAX_SIDEBAND_FRACTION = 0.3

SUPPORT_HALF_WIDTH = 5.0  # sideband support extent, in units of nu_c


class SidebandTruncationWarning(UserWarning):
    """The grid clips part of the one-phonon sideband support."""


@dataclass(frozen=True)
class PhononModel:
    """Exciton-phonon coupling parameters of a single dot.

    alpha scales the bath spectral density J(nu) = alpha * nu^3 *
    exp(-nu^2/nu_c^2) (nu in meV, J in meV), nu_c is the sideband cutoff
    energy and zpl_fwhm the lifetime/resolution width of the ZPL.
    """

    alpha: float
    nu_c: float
    zpl_fwhm: float = DEFAULT_ZPL_FWHM

    def __post_init__(self):
        for name in ("alpha", "nu_c", "zpl_fwhm"):
            v = getattr(self, name)
            if not (v > 0.0 and np.isfinite(v)):
                raise ParameterError(f"{name} must be positive and finite")
        s = self.huang_rhys
        if s * exp(-s) >= MAX_SIDEBAND_FRACTION:
            raise ParameterError(
                "coupling too strong for the one-phonon truncation: "
                f"zero-T sideband fraction S*exp(-S) = {s * exp(-s):.3f} "
                f"exceeds {MAX_SIDEBAND_FRACTION}")

    @classmethod
    def from_huang_rhys(cls, huang_rhys: float = DEFAULT_HUANG_RHYS,
                        nu_c: float = DEFAULT_CUTOFF,
                        zpl_fwhm: float = DEFAULT_ZPL_FWHM) -> "PhononModel":
        """Build from the dimensionless coupling S instead of alpha."""
        if not (huang_rhys > 0.0 and np.isfinite(huang_rhys)):
            raise ParameterError("huang_rhys must be positive and finite")
        if not (nu_c > 0.0 and np.isfinite(nu_c)):
            raise ParameterError("nu_c must be positive and finite")
        return cls(alpha=2.0 * huang_rhys / nu_c**2, nu_c=nu_c,
                   zpl_fwhm=zpl_fwhm)

    @property
    def huang_rhys(self) -> float:
        # closed form of integral(J(nu)/nu^2, nu=0..inf)
        return 0.5 * self.alpha * self.nu_c**2

    @property
    def bath_peak_energy(self) -> float:
        """Phonon energy where the bath spectral density J peaks."""
        return sqrt(1.5) * self.nu_c

    def spectral_density(self, nu) -> "float | np.ndarray":
        """Bath spectral density J(nu), defined for nu >= 0."""
        arr = np.asarray(nu, dtype=np.float64)
        if arr.size and arr.min() < 0.0:
            raise ParameterError("phonon energy nu must be non-negative")
        out = self.alpha * arr**3 * np.exp(-(arr / self.nu_c) ** 2)
        if arr.ndim == 0:
            return float(out)
        return out

    def zpl_exponent(self, temperature: float) -> float:
        """Thermal Debye-Waller exponent S*(2*n+1), n at the bath peak."""
        n = bose_occupation(self.bath_peak_energy, temperature)
        return self.huang_rhys * (2.0 * n + 1.0)

    def zpl_weight(self, temperature: float) -> float:
        """Fraction of the emission left in the ZPL at this temperature."""
        return exp(-self.zpl_exponent(temperature))

    def weak_coupling_valid(self, temperature: float) -> bool:
        return self.zpl_exponent(temperature) <= MAX_SIDEBAND_FRACTION


def default_phonon_model() -> PhononModel:
    return PhononModel.from_huang_rhys()


@dataclass(frozen=True)
class QDLine:
    """One emission line of the dot with a linear temperature drift.

    weight is the relative occupation of this transition within a line
    set; sets are normalized where they are assembled, not here.
    """

    label: str
    e0_ref: float
    shift_rate: float
    weight: float = 1.0
    t_ref: float = 10.0

    def __post_init__(self):
        canonical = str(self.label).upper()
        if canonical not in LINE_LABELS:
            raise ParameterError(
                f"unknown line label {self.label!r}; expected one of "
                f"{', '.join(LINE_LABELS)}")
        object.__setattr__(self, "label", canonical)
        for name in ("e0_ref", "shift_rate", "t_ref"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if not (0.0 <= self.weight <= 1.0):
            raise ParameterError("line weight must lie in [0, 1]")

    def energy_at(self, temperature: float) -> float:
        return self.e0_ref + self.shift_rate * (temperature - self.t_ref)


def bose_occupation(nu, temperature: float):
    """Thermal phonon occupation at energy nu (meV) and temperature (K).

    Exactly zero at T = 0. nu must be strictly positive: the nu -> 0
    divergence is integrable only together with the sideband shape, so
    callers handle that limit themselves.
    """
    if temperature < 0.0 or not np.isfinite(temperature):
        raise ParameterError("temperature must be non-negative and finite")
    arr = np.asarray(nu, dtype=np.float64)
    if arr.size == 0 or arr.min() <= 0.0 or not np.all(np.isfinite(arr)):
        raise ParameterError("phonon energy nu must be positive and finite")
    if temperature == 0.0:
        out = np.zeros_like(arr)
    else:
        out = 1.0 / np.expm1(arr / (K_B * temperature))
    if arr.ndim == 0:
        return float(out)
    return out


def one_phonon_line(pm: PhononModel, e0: float, temperature: float,
                    grid: SpectralGrid) -> Spectrum:
    """One-phonon sideband density around a line at e0, unnormalized.

    Red of e0 the density is (n(nu,T)+1) * phi(nu), blue of e0 it is
    n(nu,T) * phi(nu), with nu the distance from e0 and phi = J/nu^2 the
    per-mode coupling shape. The two wings mirror each other up to the
    occupation factors. The removable point at e0 itself is set to 0.
    """
    if temperature < 0.0 or not np.isfinite(temperature):
        raise ParameterError("temperature must be non-negative and finite")
    if not grid.contains(e0):
        raise ParameterError(f"line energy {e0!r} lies outside the grid")
    half_support = SUPPORT_HALF_WIDTH * pm.nu_c
    if not (grid.contains(e0 - half_support, slack=1e-9)
            and grid.contains(e0 + half_support, slack=1e-9)):
        warnings.warn(
            "grid clips the one-phonon sideband support "
            f"(+/- {half_support:g} meV around {e0:g} meV)",
            SidebandTruncationWarning, stacklevel=2)
    values = kernels.sideband_profile(grid.energies, e0, pm.alpha, pm.nu_c,
                                      K_B * temperature)
    return Spectrum(grid, values)


@dataclass(frozen=True, eq=False)
class QDEmission(Spectrum):
    """Normalized dot emission with its ZPL and sideband parts kept apart.

    values = zpl_part + pl1_part; the parts integrate (on-grid) to
    zpl_weight and 1 - zpl_weight exactly, which downstream filtering
    relies on for branching-ratio bookkeeping.
    """

    zpl_part: np.ndarray = field(default=None, repr=False)
    pl1_part: np.ndarray = field(default=None, repr=False)
    zpl_weight: float = float("nan")
    e0: float = float("nan")
    temperature: float = float("nan")
    weak_coupling_valid: bool = True

    def __post_init__(self):
        super().__post_init__()
        for name in ("zpl_part", "pl1_part"):
            part = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            part.flags.writeable = False
            object.__setattr__(self, name, part)


def qd_spectrum(pm: PhononModel, line: QDLine, temperature: float,
                grid: SpectralGrid) -> QDEmission:
    """Full normalized emission spectrum of one line at temperature T.

    A unit-area Lorentzian ZPL at the line's drifted energy carries the
    thermal Debye-Waller weight; the one-phonon sideband carries the
    rest. Both parts are renormalized against their on-grid trapezoid
    integrals so the total is exactly 1 on this grid.
    """
    e0 = line.energy_at(temperature)
    w_zpl = pm.zpl_weight(temperature)

    zpl = sampled_lorentzian(grid, e0, pm.zpl_fwhm)
    zpl *= w_zpl / kernels.trapezoid_uniform(zpl, grid.step)

    side = one_phonon_line(pm, e0, temperature, grid).values.copy()
    side_mass = kernels.trapezoid_uniform(side, grid.step)
    if side_mass > 0.0:
        side *= (1.0 - w_zpl) / side_mass
    else:
        # coupling underflowed to nothing: keep the spectrum normalized
        # by handing the full weight to the ZPL
        side = np.zeros_like(side)
        zpl *= 1.0 / w_zpl
        w_zpl = 1.0

    return QDEmission(grid=grid, values=zpl + side, normalized=True,
                      zpl_part=zpl, pl1_part=side, zpl_weight=w_zpl,
                      e0=e0, temperature=temperature,
                      weak_coupling_valid=pm.weak_coupling_valid(temperature))


class SidebandWidth(NamedTuple):
    fwhm: float
    multimodal: bool


EFFECTIVE_WIDTH_POINTS = 4001


def effective_1pl_fwhm(pm: PhononModel, temperature: float) -> SidebandWidth:
    """Scan-based FWHM of the sideband alone, for Lorentzian surrogates.

    The sideband is evaluated on a dedicated grid spanning its support,
    the half-maximum set is located, and the outer crossings are found
    by linear interpolation. The single-point dip at the line energy is
    ignored when it splits the half-maximum set; genuinely disjoint
    half-maximum regions (a deep thermal valley between the red and
    blue wings) flag the result as multimodal, and the outer full width
    is returned in that case.
    """
    half_support = SUPPORT_HALF_WIDTH * pm.nu_c
    grid = SpectralGrid(-half_support, half_support, EFFECTIVE_WIDTH_POINTS)
    v = one_phonon_line(pm, 0.0, temperature, grid).values
    vmax = v.max()
    if vmax <= 0.0:
        return SidebandWidth(0.0, False)
    half = 0.5 * vmax
    above = np.flatnonzero(v >= half)

    # contiguous runs of above-half samples; a gap of exactly one bin is
    # the removable dip at nu = 0, so it does not split a region
    breaks = np.flatnonzero(np.diff(above) > 2)
    runs = np.split(above, breaks + 1)
    multimodal = len(runs) > 1

    x = grid.energies
    step = grid.step
    i = int(above[0])
    j = int(above[-1])
    if i > 0:
        left = x[i] - step * (v[i] - half) / (v[i] - v[i - 1])
    else:
        left = x[0]
    if j < v.size - 1:
        right = x[j] + step * (v[j] - half) / (v[j] - v[j + 1])
    else:
        right = x[-1]
    return SidebandWidth(float(right - left), multimodal)
