"""Uniform energy grids, sampled spectra, and the quadrature/convolution ops.

Energies are meV everywhere. Spectra are densities (1/meV) sampled on a
uniform grid and integrated with the trapezoid rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .constants import (DEFAULT_GRID_HALF_SPAN, DEFAULT_GRID_POINTS,
                        DEFAULT_REFERENCE_ENERGY)
from .errors import ParameterError

NORMALIZATION_TOL = 1e-6


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform energy axis [e_min, e_max] with n_points samples."""

    e_min: float
    e_max: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.e_min) and np.isfinite(self.e_max)):
            raise ParameterError("grid bounds must be finite")
        if self.e_max <= self.e_min:
            raise ParameterError("grid requires e_max > e_min")
        if self.n_points < 2:
            raise ParameterError("grid requires at least 2 points")

    @cached_property
    def energies(self) -> np.ndarray:
        e = np.linspace(self.e_min, self.e_max, self.n_points)
        e.flags.writeable = False
        return e

    @property
    def step(self) -> float:
        return (self.e_max - self.e_min) / (self.n_points - 1)

    def contains(self, energy: float, slack: float = 0.0) -> bool:
        return self.e_min - slack <= energy <= self.e_max + slack

    def nearest_index(self, energy: float) -> int:
        i = int(round((energy - self.e_min) / self.step))
        return min(max(i, 0), self.n_points - 1)


def default_grid(reference: float = DEFAULT_REFERENCE_ENERGY,
                 half_span: float = DEFAULT_GRID_HALF_SPAN,
                 n_points: int = DEFAULT_GRID_POINTS) -> SpectralGrid:
    """Grid centered on the reference energy (default: 1350 meV +/- 10 meV)."""
    return SpectralGrid(reference - half_span, reference + half_span, n_points)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Non-negative spectral density sampled on a SpectralGrid.

    A spectrum constructed with normalized=True asserts a unit trapezoid
    integral to within NORMALIZATION_TOL.
    """

    grid: SpectralGrid
    values: np.ndarray = field(repr=False)
    normalized: bool = False

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.n_points,):
            raise ParameterError("values length does not match the grid")
        if not np.all(np.isfinite(v)):
            raise ParameterError("spectrum values must be finite")
        if v.size and v.min() < 0.0:
            raise ParameterError("spectrum values must be non-negative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.normalized and abs(self.integral() - 1.0) > NORMALIZATION_TOL:
            raise ParameterError("spectrum flagged normalized but integral is "
                                 f"{self.integral()!r}")

    def integral(self) -> float:
        return kernels.trapezoid_uniform(self.values, self.grid.step)


def lorentzian(omega, center: float, fwhm: float):
    """Unit-area Lorentzian density at omega (scalar or array).

    L(omega) = (fwhm/(2*pi)) / ((fwhm/2)^2 + (omega-center)^2); the peak
    value is 2/(pi*fwhm) and the full integral over the real line is 1.
    """
    if not (fwhm > 0.0 and np.isfinite(fwhm)):
        raise ParameterError("lorentzian fwhm must be positive and finite")
    arr = np.asarray(omega, dtype=np.float64)
    out = kernels.lorentzian_profile(arr.ravel(), center, fwhm).reshape(arr.shape)
    if np.isscalar(omega) or arr.ndim == 0:
        return float(out)
    return out


def sampled_lorentzian(grid: SpectralGrid, center: float, fwhm: float) -> np.ndarray:
    if not (fwhm > 0.0 and np.isfinite(fwhm)):
        raise ParameterError("lorentzian fwhm must be positive and finite")
    return kernels.lorentzian_profile(grid.energies, center, fwhm)


def trapezoid_integral(spectrum: Spectrum) -> float:
    """Trapezoid-rule integral of a sampled spectrum."""
    return spectrum.integral()


def gaussian_kernel(step: float, sigma: float) -> np.ndarray:
    """Discrete Gaussian taps on the grid step, truncated at +/-5 sigma and
    normalized to unit sum (so convolution conserves total mass)."""
    m = int(np.ceil(5.0 * sigma / step))
    offsets = np.arange(-m, m + 1) * step
    k = np.exp(-0.5 * (offsets / sigma) ** 2)
    return k / k.sum()


def gaussian_convolve(spectrum: Spectrum, sigma: float) -> Spectrum:
    """Instrument response: convolve with a unit-norm Gaussian of width sigma.

    sigma = 0 returns the input unchanged. Boundaries are handled by
    reflection, which conserves the integral of spectra that decay toward
    the grid edges. Models a 50-100 ueV spectrometer resolution when needed.
    """
    if sigma < 0.0 or not np.isfinite(sigma):
        raise ParameterError("convolution sigma must be non-negative and finite")
    if sigma == 0.0:
        return spectrum
    kernel = gaussian_kernel(spectrum.grid.step, sigma)
    m = (kernel.size - 1) // 2
    if m >= spectrum.grid.n_points:
        raise ParameterError("convolution kernel wider than the grid; "
                             "reduce sigma or widen the grid")
    out = kernels.convolve_reflect(spectrum.values, kernel)
    # reflection can produce values below zero only through float noise
    np.clip(out, 0.0, None, out=out)
    return Spectrum(spectrum.grid, out, normalized=spectrum.normalized)
