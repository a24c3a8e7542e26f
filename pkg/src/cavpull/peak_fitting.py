"""Multi-Lorentzian decomposition of sampled spectra.

Mirrors the workflow used on measured spectra: seed peak guesses from
local maxima, refine with damped least squares, then label each fitted
peak as dot-like or cavity-like. Deliberately fits Lorentzians even
though the cavity-like feature is really a sideband-weighted product;
the extracted apparent energies and widths are defined by that model
choice, exactly as they are for the measured data this imitates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import exp, log
from typing import Sequence

import numpy as np

from . import kernels
from .constants import DEFAULT_ZPL_FWHM
from .errors import ParameterError
from .spectral_core import SpectralGrid, Spectrum

MAX_PEAKS = 4
GRADIENT_RTOL = 1e-10
STEP_TOL = 1e-12
MAX_ITERATIONS = 500
MAX_DAMPING = 1e12
# |log width| or |log area| beyond this leaves the double-precision
# range when exponentiated; steps out there are rejected outright
LOG_PARAM_LIMIT = 600.0


@dataclass(frozen=True)
class LorentzPeak:
    center: float
    fwhm: float
    area: float

    def __post_init__(self):
        if not np.isfinite(self.center):
            raise ParameterError("peak center must be finite")
        if not (self.fwhm > 0.0 and np.isfinite(self.fwhm)):
            raise ParameterError("peak fwhm must be positive and finite")
        if not (self.area >= 0.0 and np.isfinite(self.area)):
            raise ParameterError("peak area must be non-negative and finite")


@dataclass(frozen=True)
class PeakModel:
    """Sum of Lorentzian peaks over a constant baseline.

    baseline participates in the fit only when fit_baseline is set; for
    simulated spectra it stays fixed at zero. shortfall records that an
    initializer could not place as many peaks as requested.
    """

    peaks: "tuple[LorentzPeak, ...]"
    baseline: float = 0.0
    fit_baseline: bool = False
    shortfall: bool = False

    def __post_init__(self):
        object.__setattr__(self, "peaks", tuple(self.peaks))
        if len(self.peaks) > MAX_PEAKS:
            raise ParameterError(f"at most {MAX_PEAKS} peaks are supported")
        if len(self.peaks) == 0 and not self.shortfall:
            raise ParameterError("empty model requires the shortfall flag")
        if not np.isfinite(self.baseline):
            raise ParameterError("baseline must be finite")

    @property
    def n_peaks(self) -> int:
        return len(self.peaks)

    def centers(self) -> np.ndarray:
        return np.array([p.center for p in self.peaks])

    def fwhms(self) -> np.ndarray:
        return np.array([p.fwhm for p in self.peaks])

    def areas(self) -> np.ndarray:
        return np.array([p.area for p in self.peaks])

    def evaluate(self, grid: SpectralGrid) -> np.ndarray:
        return kernels.multi_lorentz_model(
            grid.energies, self.centers(), self.fwhms(), self.areas(),
            self.baseline)


STALL_MESSAGE = "step size below tolerance"


@dataclass(frozen=True)
class FitResult:
    model: PeakModel
    residual_rms: float
    n_iterations: int
    converged: bool
    covariance_diag: np.ndarray = field(repr=False, default=None)
    message: str = ""

    @property
    def usable(self) -> bool:
        """True when the parameters are trustworthy for classification.

        converged covers the gradient criterion. A stop at the step
        tolerance means the parameters are stationary to 1e-12 while
        the gradient cannot reach its relative tolerance; that is the
        generic terminal state when the Lorentzian model cannot
        represent the data exactly (noise, or the sideband-weighted
        mode shape), and such fits are as good as this model gets.
        """
        return self.converged or self.message == STALL_MESSAGE


def _as_grid_values(data) -> "tuple[SpectralGrid, np.ndarray]":
    """Accept a Spectrum or a (grid, values) pair.

    The pair form exists for measured or noise-injected data, which may
    dip below zero and therefore cannot be a Spectrum.
    """
    if isinstance(data, Spectrum):
        return data.grid, data.values
    grid, values = data
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.shape != (grid.n_points,):
        raise ParameterError("values length does not match the grid")
    return grid, values


def _noise_scale(v: np.ndarray) -> float:
    """Robust per-sample noise sigma, from the second difference.

    For iid noise the second difference has variance 6 sigma^2; the
    median absolute deviation makes the estimate ignore the few bins
    where genuine peaks curve. Smooth data give a near-zero estimate,
    so thresholds built on this stay inert for noiseless spectra.
    """
    if v.size < 3:
        return 0.0
    d2 = np.diff(v, n=2)
    mad = float(np.median(np.abs(d2 - np.median(d2))))
    return 1.4826 * mad / np.sqrt(6.0)


def initialize_peaks(data, n: int) -> PeakModel:
    """Seed an n-peak model from the n most prominent local maxima.

    Candidates are taken tallest first; height ties resolve toward
    lower energy. A candidate is skipped when it is closer than 3 grid
    steps to an already chosen peak, or when it fails to rise above its
    connecting saddle to a chosen peak by at least 5 noise sigmas
    (estimated from the data), which keeps noise spikes riding on a
    real peak from claiming a slot. Initial widths come from a local
    half-maximum walk and initial areas from twice the mass between the
    half-maximum crossings (half a Lorentzian's area lies inside its
    FWHM). If fewer than n maxima qualify the model comes back smaller,
    with the shortfall flag set.
    """
    if n < 1:
        raise ParameterError("at least one peak must be requested")
    grid, v = _as_grid_values(data)
    x = grid.energies
    step = grid.step

    interior = np.arange(1, grid.n_points - 1)
    is_max = (v[interior] > v[interior - 1]) & (v[interior] >= v[interior + 1])
    candidates = interior[is_max]
    order = np.lexsort((candidates, -v[candidates]))

    min_prominence = 5.0 * _noise_scale(v)
    chosen: "list[int]" = []
    for raw_idx in candidates[order]:
        if len(chosen) == n:
            break
        idx = int(raw_idx)
        if any(abs(idx - j) < 3 for j in chosen):
            continue
        if min_prominence > 0.0 and chosen:
            # chosen peaks are all at least this tall, so the highest
            # valley floor toward any of them is the connecting saddle
            saddle = max(float(v[min(idx, j):max(idx, j) + 1].min())
                         for j in chosen)
            if v[idx] - saddle < min_prominence:
                continue
        chosen.append(idx)

    peaks = []
    for i in chosen:
        half = 0.5 * v[i]
        j = i
        while j > 0 and half < v[j] <= v[i]:
            j -= 1
        left = x[j]
        if v[j] <= half < v[j + 1]:
            left = x[j + 1] - step * (v[j + 1] - half) / (v[j + 1] - v[j])
        k = i
        while k < v.size - 1 and half < v[k] <= v[i]:
            k += 1
        right = x[k]
        if v[k] <= half < v[k - 1]:
            right = x[k - 1] + step * (v[k - 1] - half) / (v[k - 1] - v[k])
        fwhm = max(right - left, step)
        area = max(2.0 * kernels.trapezoid_uniform(v[j:k + 1], step),
                   v[i] * step)
        peaks.append(LorentzPeak(center=x[i], fwhm=fwhm, area=area))

    peaks.sort(key=lambda p: p.center)
    return PeakModel(peaks=tuple(peaks), shortfall=len(peaks) < n)


def _pack(model: PeakModel) -> np.ndarray:
    p = []
    for pk in model.peaks:
        if pk.area <= 0.0:
            raise ParameterError(
                "fit initialization requires strictly positive areas")
        p.extend((pk.center, log(pk.fwhm), log(pk.area)))
    if model.fit_baseline:
        p.append(model.baseline)
    return np.array(p)


def _unpack(p: np.ndarray, template: PeakModel) -> PeakModel:
    peaks = []
    for k in range(template.n_peaks):
        c, lw, la = p[3 * k:3 * k + 3]
        peaks.append(LorentzPeak(center=float(c), fwhm=exp(lw), area=exp(la)))
    baseline = float(p[-1]) if template.fit_baseline else template.baseline
    return replace(template, peaks=tuple(peaks), baseline=baseline)


def _model_values(p, template, x):
    m = template.n_peaks
    centers = p[0:3 * m:3]
    fwhms = np.exp(p[1:3 * m:3])
    areas = np.exp(p[2:3 * m:3])
    baseline = p[-1] if template.fit_baseline else template.baseline
    return kernels.multi_lorentz_model(x, centers, fwhms, areas, baseline)


def _jacobian(p, template, x):
    """Jacobian in internal coordinates (center, ln fwhm, ln area)."""
    m = template.n_peaks
    centers = p[0:3 * m:3]
    fwhms = np.exp(p[1:3 * m:3])
    areas = np.exp(p[2:3 * m:3])
    jac = kernels.multi_lorentz_jacobian(x, centers, fwhms, areas)
    # chain rule for the log-reparameterized columns
    jac[:, 1:3 * m:3] *= fwhms
    jac[:, 2:3 * m:3] *= areas
    if template.fit_baseline:
        jac = np.hstack([jac, np.ones((x.size, 1))])
    return jac


def fit(data, init: PeakModel) -> FitResult:
    """Refine a peak model by damped least squares.

    Levenberg-style iteration on the analytic Jacobian: solve
    (J'J + damping * diag(J'J)) step = -J'residual, grow the damping
    tenfold when a step raises the residual and shrink it tenfold when
    a step is accepted. Width and area move in log space, which keeps
    them positive without constraint handling. Convergence means the
    gradient norm fell to 1e-10 of its initial value; stalling at the
    step tolerance or hitting the iteration cap reports converged=False
    with the reason in the message.
    """
    if init.n_peaks == 0:
        raise ParameterError("cannot fit an empty model")
    grid, y = _as_grid_values(data)
    if not np.all(np.isfinite(y)):
        raise ParameterError("spectrum contains non-finite values")
    for pk in init.peaks:
        if not grid.contains(pk.center):
            raise ParameterError("initial center outside the grid")
    x = grid.energies

    p = _pack(init)
    log_idx = np.arange(p.size)[
        np.isin(np.arange(p.size) % 3, (1, 2))
        & (np.arange(p.size) < 3 * init.n_peaks)]
    r = _model_values(p, init, x) - y
    ssr = float(r @ r)
    jac = _jacobian(p, init, x)
    g = jac.T @ r
    g0_norm = float(np.linalg.norm(g))
    gtol = GRADIENT_RTOL * g0_norm

    damping = 1e-3
    n_iter = 0
    converged = g0_norm == 0.0
    message = "gradient already zero at start" if converged else ""

    while not converged and n_iter < MAX_ITERATIONS:
        a = jac.T @ jac
        n_iter += 1
        try:
            step = np.linalg.solve(a + damping * np.diag(np.diag(a)), -g)
        except np.linalg.LinAlgError:
            message = "singular normal equations"
            break
        trial = p + step
        # a wild trial step can overflow exp() in the log-space unpack;
        # the inf/nan residual fails the acceptance check below, which
        # is the intended rejection, so silence the transient warning
        with np.errstate(over="ignore", invalid="ignore"):
            r_trial = _model_values(trial, init, x) - y
            ssr_trial = float(r_trial @ r_trial)
        if log_idx.size and float(
                np.max(np.abs(trial[log_idx]))) > LOG_PARAM_LIMIT:
            # a width or area left the representable scale (a peak
            # collapsing onto a noise spike does this); never accept
            ssr_trial = float("inf")
        if ssr_trial <= ssr:
            p, r, ssr = trial, r_trial, ssr_trial
            damping /= 10.0
            jac = _jacobian(p, init, x)
            g = jac.T @ r
            if float(np.linalg.norm(g)) <= gtol:
                converged = True
                message = "gradient tolerance reached"
            elif float(np.max(np.abs(step))) <= STEP_TOL:
                message = STALL_MESSAGE
                break
        else:
            damping *= 10.0
            if damping > MAX_DAMPING:
                message = "damping limit reached without progress"
                break
    if not converged and not message:
        message = "iteration limit reached"

    cov = _external_covariance(p, init, jac, ssr, y.size)
    model = _unpack(p, init)
    order = np.argsort([pk.center for pk in model.peaks], kind="stable")
    model = replace(model, peaks=tuple(model.peaks[i] for i in order))
    cov_order = np.concatenate([3 * order + k for k in range(3)]).reshape(
        3, -1).T.ravel()
    if init.fit_baseline:
        cov_order = np.append(cov_order, cov.size - 1)
    return FitResult(model=model, residual_rms=float(np.sqrt(ssr / y.size)),
                     n_iterations=n_iter, converged=converged,
                     covariance_diag=cov[cov_order], message=message)


def _external_covariance(p, template, jac, ssr, n_samples):
    """Per-parameter variance in external units (center, fwhm, area)."""
    n_params = p.size
    out = np.full(n_params, np.nan)
    dof = n_samples - n_params
    if dof <= 0:
        return out
    try:
        cov_int = (ssr / dof) * np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        return out
    d = np.diag(cov_int).copy()
    m = template.n_peaks
    # var(w) = w^2 var(ln w), likewise for area
    d[1:3 * m:3] *= np.exp(p[1:3 * m:3]) ** 2
    d[2:3 * m:3] *= np.exp(p[2:3 * m:3]) ** 2
    return d


@dataclass(frozen=True)
class PeakLabels:
    """Outcome of the dot-like vs cavity-like assignment."""

    labels: "tuple[str, ...]"          # one of "qd", "cavity" per peak
    cavity_index: "int | None"
    ambiguous: bool


def classify_peaks(result: FitResult, zpl_centers: Sequence[float],
                   omega_c: float,
                   zpl_fwhm: float = DEFAULT_ZPL_FWHM) -> PeakLabels:
    """Label fitted peaks by proximity to the predicted dot lines.

    A peak is dot-like when some predicted ZPL sits within
    max(3 * zpl_fwhm, 0.2 meV) of its center, cavity-like otherwise.
    Exactly one cavity-like peak is the expected outcome; zero or
    several set the ambiguity flag, and the one nearest the bare mode
    is reported as the mode in that case.
    """
    if not result.usable:
        raise ParameterError("classification requires a usable fit")
    tol = max(3.0 * zpl_fwhm, 0.2)
    centers = [float(c) for c in zpl_centers]
    labels = []
    for pk in result.model.peaks:
        near_zpl = centers and min(abs(pk.center - c) for c in centers) <= tol
        labels.append("qd" if near_zpl else "cavity")
    cavity_like = [i for i, lab in enumerate(labels) if lab == "cavity"]
    if len(cavity_like) == 1:
        return PeakLabels(tuple(labels), cavity_like[0], False)
    if not cavity_like:
        return PeakLabels(tuple(labels), None, True)
    nearest = min(cavity_like,
                  key=lambda i: abs(result.model.peaks[i].center - omega_c))
    return PeakLabels(tuple(labels), nearest, True)


def load_spectrum_text(path) -> "tuple[SpectralGrid, np.ndarray]":
    """Read a two-column (energy_meV, counts) text file.

    Lines starting with '#' are comments. Energies must increase on a
    uniform step; counts may be negative (measured noise), so the data
    come back as a (grid, values) pair rather than a Spectrum.
    """
    raw = np.loadtxt(path, comments="#", dtype=np.float64, ndmin=2)
    if raw.ndim != 2 or raw.shape[1] != 2:
        raise ParameterError("expected two numeric columns")
    if raw.shape[0] < 2:
        raise ParameterError("need at least two samples")
    e = raw[:, 0]
    steps = np.diff(e)
    if steps.min() <= 0.0:
        raise ParameterError("energies must be strictly increasing")
    step = (e[-1] - e[0]) / (e.size - 1)
    if np.max(np.abs(steps - step)) > 1e-6 * step:
        raise ParameterError("energy axis is not uniform")
    grid = SpectralGrid(float(e[0]), float(e[-1]), e.size)
    return grid, np.ascontiguousarray(raw[:, 1])
