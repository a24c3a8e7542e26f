"""Detuning and temperature sweeps through the filter-and-fit pipeline.

A sweep walks one control variable (cavity detuning at fixed
temperature, or temperature with the cavity held in place), builds the
dot emission, pushes it through the cavity filter, optionally degrades
it with instrument resolution and synthetic noise, and then extracts
apparent line parameters with the multi-Lorentzian fitter.  Each point
also carries exact branching intensities taken from the filter itself,
so the intensity curves never depend on fit quality.

Fitted quantities are only reported where they mean something: a point
whose dot and mode features cannot be separated is recorded with its
flags set and the fit-derived fields left empty, and a fit that cannot
be classified (no clearly cavity-like component) is treated the same
way.  The sweep itself never aborts on a bad point.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .cavity_filter import CavityMode, cavity_spectrum, filter_emission
from .errors import ParameterError
from .peak_fitting import (
    MAX_PEAKS,
    LorentzPeak,
    PeakModel,
    classify_peaks,
    fit,
    initialize_peaks,
)
from .phonon_sideband import PhononModel, QDLine, effective_1pl_fwhm, qd_spectrum
from .spectral_core import SpectralGrid, Spectrum, default_grid, gaussian_convolve

SWEEP_MODES = ("detuning", "temperature")

# Default control axes: detuning in meV around the dot line, temperature
# in kelvin.
DETUNING_DEFAULT_RANGE = (-3.0, 3.0, 121)
TEMPERATURE_DEFAULT_RANGE = (10.0, 50.0, 81)

# |omega_c - omega_qd| beyond half the smaller linewidth is outside the
# regime where the weighted-mean estimate is trustworthy.
EQ1_VALIDITY_FACTOR = 0.5

# Initial width of a seeded mode component, as a fraction of the bare
# cavity linewidth.  The transmitted feature is never broader than the
# bare mode here, so starting below it keeps the first iterations sane.
MODE_GUESS_WIDTH_FACTOR = 0.7

# A dot line narrower than a couple of grid steps cannot be represented;
# seeds are floored accordingly.
MIN_SEED_AREA = 1e-6


class Eq1Prediction(NamedTuple):
    """Weighted-mean mode-energy estimate plus its small-detuning flag."""

    value: float
    within_validity: bool


def pulled_mode_energy(omega_qd: float, omega_c: float, kappa: float,
                       kappa_1pl: float) -> Eq1Prediction:
    """Estimate the apparent mode energy as a linewidth-weighted mean.

    The two linewidths act as inverse lever arms: the narrower the
    effective dot line relative to the cavity, the closer the apparent
    mode sits to the bare cavity, and vice versa.  The estimate is
    derived for detunings small compared to both widths; the returned
    flag is False once |detuning| exceeds half the smaller width.
    """
    kappa = float(kappa)
    kappa_1pl = float(kappa_1pl)
    if not (np.isfinite(kappa) and kappa > 0.0):
        raise ParameterError(f"kappa must be positive and finite, got {kappa}")
    if not (np.isfinite(kappa_1pl) and kappa_1pl > 0.0):
        raise ParameterError(
            f"kappa_1pl must be positive and finite, got {kappa_1pl}")
    value = (kappa * omega_qd + kappa_1pl * omega_c) / (kappa + kappa_1pl)
    delta = abs(omega_c - omega_qd)
    return Eq1Prediction(value, delta <= EQ1_VALIDITY_FACTOR * min(kappa, kappa_1pl))


def mode_channel_peak(pm: PhononModel, line: QDLine, temperature: float,
                      cav: CavityMode, grid: Optional[SpectralGrid] = None) -> float:
    """Emission maximum of the cavity-fed sideband channel.

    Multiplies the bare cavity profile with the phonon-assisted part of
    the dot emission and returns the energy of the product's maximum,
    refined to sub-grid precision by a local parabola.  The thermal
    tilt of the sideband places this maximum slightly red of the dot
    line even at zero detuning, so pulling is best quantified as the
    shift of this maximum relative to its zero-detuning position.
    """
    if grid is None:
        grid = default_grid()
    em = qd_spectrum(pm, line, temperature, grid)
    values = cavity_spectrum(cav, grid).values * em.pl1_part
    i = int(np.argmax(values))
    if 0 < i < grid.n_points - 1:
        y0, y1, y2 = values[i - 1], values[i], values[i + 1]
        curvature = y0 - 2.0 * y1 + y2
        if curvature < 0.0:
            return float(grid.energies[i] + 0.5 * grid.step * (y0 - y2) / curvature)
    return float(grid.energies[i])


@dataclass(frozen=True)
class SweepSpec:
    """Full description of one sweep scenario.

    ``cavities`` lists one bare mode per quality-factor scenario; the
    sweep drivers run one cavity at a time (``cavity_index``).  In
    detuning mode the single dot line stays at its nominal energy and
    the cavity is displaced by the control value; in temperature mode
    every line moves with its own linear slope and the cavity stays
    put unless ``cavity_drift`` (meV per kelvin, referenced to the
    start of the sweep) says otherwise.
    """

    mode: str
    cavities: "tuple[CavityMode, ...]"
    lines: "tuple[QDLine, ...]"
    phonon: PhononModel
    sweep_range: "tuple[float, float, int]"
    t_fixed: float = 40.0
    instrument_sigma: float = 0.0
    noise_sigma: float = 0.0
    noise_seed: int = 0
    cavity_drift: float = 0.0
    grid: SpectralGrid = field(default_factory=default_grid)

    def __post_init__(self) -> None:
        if self.mode not in SWEEP_MODES:
            raise ParameterError(
                f"mode must be one of {SWEEP_MODES}, got {self.mode!r}")
        object.__setattr__(self, "cavities", tuple(self.cavities))
        object.__setattr__(self, "lines", tuple(self.lines))
        if not self.cavities:
            raise ParameterError("at least one cavity scenario is required")
        if not self.lines:
            raise ParameterError("at least one dot line is required")
        if self.mode == "detuning" and len(self.lines) != 1:
            raise ParameterError(
                f"a detuning sweep uses exactly one dot line, got {len(self.lines)}")
        if len(self.lines) + 1 > MAX_PEAKS:
            raise ParameterError(
                f"at most {MAX_PEAKS - 1} dot lines are supported, got {len(self.lines)}")
        labels = [ln.label for ln in self.lines]
        if len(set(labels)) != len(labels):
            raise ParameterError(f"duplicate line labels: {labels}")
        start, stop, n_steps = self.sweep_range
        if not (np.isfinite(start) and np.isfinite(stop)):
            raise ParameterError(f"sweep range must be finite, got {self.sweep_range}")
        if int(n_steps) != n_steps or int(n_steps) < 2:
            raise ParameterError(f"n_steps must be an integer >= 2, got {n_steps}")
        object.__setattr__(
            self, "sweep_range", (float(start), float(stop), int(n_steps)))
        if self.mode == "detuning":
            if not (np.isfinite(self.t_fixed) and self.t_fixed >= 0.0):
                raise ParameterError(
                    f"t_fixed must be a non-negative temperature, got {self.t_fixed}")
        else:
            if start <= 0.0 or stop <= 0.0:
                raise ParameterError(
                    "temperature sweeps need strictly positive bounds, "
                    f"got {self.sweep_range}")
        if not (np.isfinite(self.instrument_sigma) and self.instrument_sigma >= 0.0):
            raise ParameterError(
                f"instrument_sigma must be >= 0, got {self.instrument_sigma}")
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0.0):
            raise ParameterError(
                f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not np.isfinite(self.cavity_drift):
            raise ParameterError(
                f"cavity_drift must be finite, got {self.cavity_drift}")

    def control_values(self) -> np.ndarray:
        start, stop, n_steps = self.sweep_range
        return np.linspace(start, stop, n_steps)

    def total_line_weight(self) -> float:
        return float(sum(ln.weight for ln in self.lines))


@dataclass(frozen=True)
class SweepPoint:
    """One analysed spectrum along a sweep.

    ``qd_intensities`` pairs each line label with its exact collected
    fraction; together with ``mode_intensity`` these always sum to one
    up to rounding.  The fit-derived fields (``apparent_mode_energy``,
    ``apparent_mode_fwhm``) are None whenever the point is flagged
    unresolvable or ambiguous.
    """

    control_value: float
    apparent_mode_energy: "float | None"
    apparent_mode_fwhm: "float | None"
    mode_intensity: float
    qd_intensities: "tuple[tuple[str, float], ...]"
    eq1_prediction: "float | None"
    resolvable: bool
    ambiguous: bool
    failed: bool = False

    def qd_intensity(self, label: str) -> "float | None":
        for name, value in self.qd_intensities:
            if name == label:
                return value
        return None


def apparent_q(point: SweepPoint, omega_c: float) -> "float | None":
    """Quality factor implied by the fitted mode width, if any."""
    if not point.resolvable or point.apparent_mode_fwhm is None:
        return None
    if point.apparent_mode_fwhm <= 0.0:
        return None
    return float(omega_c) / float(point.apparent_mode_fwhm)


def swept_cavity_energy(spec: "SweepSpec", control: float,
                        cavity_index: int = 0) -> float:
    """Bare mode energy at one control value, before any pulling.

    Mirrors the placement the sweep drivers use: detuning puts the mode
    at line energy plus control, temperature drifts it linearly from
    the sweep start.
    """
    cav = spec.cavities[cavity_index]
    if spec.mode == "detuning":
        return spec.lines[0].energy_at(spec.t_fixed) + control
    return cav.omega_c + spec.cavity_drift * (control - spec.sweep_range[0])


def _noisy_values(values: np.ndarray, spec: SweepSpec, index: int) -> np.ndarray:
    if spec.noise_sigma <= 0.0:
        return values
    rng = np.random.default_rng((spec.noise_seed, index))
    scale = spec.noise_sigma * float(values.max())
    return values + rng.normal(0.0, scale, values.size)


def _prepare_values(spectrum, spec: SweepSpec, index: int) -> np.ndarray:
    if spec.instrument_sigma > 0.0:
        spectrum = gaussian_convolve(spectrum, spec.instrument_sigma)
    return _noisy_values(spectrum.values, spec, index)


def _augment_init(init: PeakModel, expected: "list[tuple[float, float, float]]",
                  match_radius: float) -> PeakModel:
    """Seed starting peaks for expected features the scan missed.

    ``expected`` lists (center, fwhm, area) candidates; a candidate is
    added only when no located peak sits within ``match_radius`` of its
    center.  Seeding fills the model to the requested component count
    without disturbing peaks the data itself produced.
    """
    peaks = list(init.peaks)
    for center, fwhm, area in expected:
        if len(peaks) >= MAX_PEAKS:
            break
        if any(abs(pk.center - center) <= match_radius for pk in peaks):
            continue
        peaks.append(LorentzPeak(center=center, fwhm=fwhm,
                                 area=max(area, MIN_SEED_AREA)))
    return PeakModel(peaks=tuple(peaks), baseline=init.baseline,
                     fit_baseline=init.fit_baseline, shortfall=False)


def _null_point(control: float, mode_intensity: float,
                qd_intensities: "tuple[tuple[str, float], ...]",
                eq1: "float | None", resolvable: bool,
                ambiguous: bool, failed: bool = False) -> SweepPoint:
    return SweepPoint(
        control_value=control,
        apparent_mode_energy=None,
        apparent_mode_fwhm=None,
        mode_intensity=mode_intensity,
        qd_intensities=qd_intensities,
        eq1_prediction=eq1,
        resolvable=resolvable,
        ambiguous=ambiguous,
        failed=failed,
    )


def _bare_separation_ok(separation: float, mode_fwhm: float,
                        qd_fwhm: float) -> bool:
    return separation > 0.25 * (mode_fwhm + qd_fwhm)


def _analyse_point(spec: SweepSpec, index: int, control: float,
                   cav: CavityMode, line_energies: "list[float]",
                   composite, mode_intensity: float,
                   qd_intensities: "tuple[tuple[str, float], ...]",
                   eq1: "float | None",
                   mode_guess_center: float) -> SweepPoint:
    """Fit, classify and flag one prepared spectrum."""
    zpl_fwhm = spec.phonon.zpl_fwhm
    separation = min(abs(cav.omega_c - e) for e in line_energies)
    if separation == 0.0:
        # A mode exactly on a line merges into a single feature; no fit
        # can split it.
        return _null_point(control, mode_intensity, qd_intensities, eq1,
                           resolvable=False, ambiguous=False)

    n_components = len(line_energies) + 1
    try:
        values = _prepare_values(composite, spec, index)
        init = initialize_peaks((spec.grid, values), n_components)
        if init.n_peaks < n_components:
            expected = [(e, max(zpl_fwhm, 2.0 * spec.grid.step),
                         dict(qd_intensities).get(lbl, 0.0))
                        for lbl, e in zip([ln.label for ln in spec.lines],
                                          line_energies)]
            expected.append((mode_guess_center,
                             MODE_GUESS_WIDTH_FACTOR * cav.kappa,
                             mode_intensity))
            init = _augment_init(init, expected, match_radius=max(3.0 * zpl_fwhm, 0.2))
        result = fit((spec.grid, values), init)
    except Exception:
        return _null_point(control, mode_intensity, qd_intensities, eq1,
                           resolvable=False, ambiguous=False, failed=True)
    if not result.usable:
        return _null_point(control, mode_intensity, qd_intensities, eq1,
                           resolvable=False, ambiguous=False, failed=True)

    labels = classify_peaks(result, line_energies, cav.omega_c, zpl_fwhm)
    if labels.ambiguous or labels.cavity_index is None:
        # No single mode-like component: judge resolvability against the
        # bare widths so the flag stays deterministic.
        resolvable = _bare_separation_ok(separation, cav.kappa, zpl_fwhm)
        return _null_point(control, mode_intensity, qd_intensities, eq1,
                           resolvable=resolvable, ambiguous=True)

    mode_peak = result.model.peaks[labels.cavity_index]
    qd_like = [pk for i, pk in enumerate(result.model.peaks)
               if labels.labels[i] == "qd"]
    if qd_like:
        nearest_qd = min(qd_like, key=lambda pk: abs(pk.center - mode_peak.center))
        qd_width = nearest_qd.fwhm
    else:
        qd_width = zpl_fwhm
    resolvable = _bare_separation_ok(separation, mode_peak.fwhm, qd_width)
    if not resolvable:
        return _null_point(control, mode_intensity, qd_intensities, eq1,
                           resolvable=False, ambiguous=False)
    return SweepPoint(
        control_value=control,
        apparent_mode_energy=mode_peak.center,
        apparent_mode_fwhm=mode_peak.fwhm,
        mode_intensity=mode_intensity,
        qd_intensities=qd_intensities,
        eq1_prediction=eq1,
        resolvable=True,
        ambiguous=False,
    )


class _DetuningInputs(NamedTuple):
    cav: CavityMode
    composite: Spectrum
    line_energies: "list[float]"
    mode_intensity: float
    qd_intensities: "tuple[tuple[str, float], ...]"
    eq1: float


def _detuning_inputs(spec: SweepSpec, base_cav: CavityMode, emission,
                     e0: float, kappa_1pl: float, delta: float) -> _DetuningInputs:
    cav = CavityMode(omega_c=e0 + delta, kappa=base_cav.kappa)
    filtered = filter_emission(cav, emission)
    eq1 = pulled_mode_energy(e0, cav.omega_c, cav.kappa, kappa_1pl)
    return _DetuningInputs(
        cav=cav,
        composite=filtered.spectrum,
        line_energies=[e0],
        mode_intensity=filtered.pl1_fraction,
        qd_intensities=((spec.lines[0].label, filtered.zpl_fraction),),
        eq1=eq1.value,
    )


class _TemperatureInputs(NamedTuple):
    cav: CavityMode
    composite: Spectrum
    line_energies: "list[float]"
    mode_intensity: float
    qd_intensities: "tuple[tuple[str, float], ...]"


def _temperature_inputs(spec: SweepSpec, base_cav: CavityMode,
                        temperature: float) -> _TemperatureInputs:
    """Filter every line independently and combine by collected light.

    Each line is pushed through the mode on its own (no competition for
    the cavity) and the composite averages the raw transmitted spectra:
    a line's contribution carries its total transmitted mass, so a line
    far from the mode is dim no matter how bright its bare emission.
    The per-line intensities are the same masses split into their dot
    and sideband channels, normalized to unit total collected light.
    """
    t_start = spec.sweep_range[0]
    omega_c = base_cav.omega_c + spec.cavity_drift * (temperature - t_start)
    cav = CavityMode(omega_c=omega_c, kappa=base_cav.kappa)
    line_energies = [ln.energy_at(temperature) for ln in spec.lines]
    raw = np.zeros(spec.grid.n_points)
    collected = []
    zpl_collected = []
    for ln in spec.lines:
        emission = qd_spectrum(spec.phonon, ln, temperature, spec.grid)
        filtered = filter_emission(cav, emission)
        amount = ln.weight * filtered.gamma_norm
        raw += amount * filtered.spectrum.values
        collected.append(amount)
        zpl_collected.append(amount * filtered.zpl_fraction)
    total = float(sum(collected))
    if total <= 0.0:
        raise ParameterError(
            "no light is collected from any line at "
            f"T={temperature} K; check line positions against the grid")
    composite = Spectrum(grid=spec.grid, values=raw / total, normalized=True)
    qd_intensities = tuple(
        (ln.label, z / total) for ln, z in zip(spec.lines, zpl_collected))
    mode_intensity = float(sum(c - z for c, z in zip(collected, zpl_collected))) / total
    return _TemperatureInputs(
        cav=cav,
        composite=composite,
        line_energies=line_energies,
        mode_intensity=mode_intensity,
        qd_intensities=qd_intensities,
    )


def detuning_sweep(spec: SweepSpec, cavity_index: int = 0,
                   threads: int = 1) -> "list[SweepPoint]":
    """Sweep the cavity across a single dot line at fixed temperature.

    The control value is the bare mode energy minus the dot line
    energy, in meV.  The dot emission is computed once; each point
    filters it through a mode displaced by the control value (linewidth
    held at the scenario value) and fits two components.
    """
    if spec.mode != "detuning":
        raise ParameterError(f"spec.mode is {spec.mode!r}, expected 'detuning'")
    base_cav = spec.cavities[cavity_index]
    line = spec.lines[0]
    e0 = line.energy_at(spec.t_fixed)
    emission = qd_spectrum(spec.phonon, line, spec.t_fixed, spec.grid)
    kappa_1pl = effective_1pl_fwhm(spec.phonon, spec.t_fixed).fwhm

    def run_one(item: "tuple[int, float]") -> SweepPoint:
        index, delta = item
        inp = _detuning_inputs(spec, base_cav, emission, e0, kappa_1pl,
                               float(delta))
        return _analyse_point(
            spec, index, float(delta), inp.cav, inp.line_energies,
            inp.composite,
            mode_intensity=inp.mode_intensity,
            qd_intensities=inp.qd_intensities,
            eq1=inp.eq1,
            mode_guess_center=inp.eq1,
        )

    items = list(enumerate(spec.control_values()))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_one, items))
    return [run_one(item) for item in items]


def temperature_sweep(spec: SweepSpec, cavity_index: int = 0,
                      threads: int = 1) -> "list[SweepPoint]":
    """Sweep temperature while the dot lines drift through the mode.

    Lines move linearly with temperature; the cavity stays fixed unless
    a drift rate is configured.  See ``_temperature_inputs`` for how the
    per-line filtered spectra combine.
    """
    if spec.mode != "temperature":
        raise ParameterError(f"spec.mode is {spec.mode!r}, expected 'temperature'")
    base_cav = spec.cavities[cavity_index]
    if spec.total_line_weight() <= 0.0:
        raise ParameterError("line weights must sum to a positive value")

    def run_one(item: "tuple[int, float]") -> SweepPoint:
        index, temperature = item
        inp = _temperature_inputs(spec, base_cav, float(temperature))
        return _analyse_point(
            spec, index, float(temperature), inp.cav, inp.line_energies,
            inp.composite,
            mode_intensity=inp.mode_intensity,
            qd_intensities=inp.qd_intensities,
            eq1=None,
            mode_guess_center=inp.cav.omega_c,
        )

    items = list(enumerate(spec.control_values()))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_one, items))
    return [run_one(item) for item in items]


def point_spectrum(spec: SweepSpec, index: int, cavity_index: int = 0
                   ) -> "tuple[np.ndarray, np.ndarray]":
    """Reconstruct the exact values the analysis saw at one sweep point.

    Returns (energies, values) including instrument smoothing and, when
    enabled, the seeded synthetic noise for that point index, so dumps
    match what the fitter consumed bit for bit.
    """
    controls = spec.control_values()
    if not 0 <= index < controls.size:
        raise ParameterError(
            f"point index {index} outside 0..{controls.size - 1}")
    base_cav = spec.cavities[cavity_index]
    control = float(controls[index])
    if spec.mode == "detuning":
        line = spec.lines[0]
        e0 = line.energy_at(spec.t_fixed)
        emission = qd_spectrum(spec.phonon, line, spec.t_fixed, spec.grid)
        kappa_1pl = effective_1pl_fwhm(spec.phonon, spec.t_fixed).fwhm
        composite = _detuning_inputs(spec, base_cav, emission, e0,
                                     kappa_1pl, control).composite
    else:
        composite = _temperature_inputs(spec, base_cav, control).composite
    return spec.grid.energies.copy(), _prepare_values(composite, spec, index)


def run_sweep(spec: SweepSpec, threads: int = 1
              ) -> "list[tuple[CavityMode, list[SweepPoint]]]":
    """Run the configured sweep for every cavity scenario, in order."""
    driver = detuning_sweep if spec.mode == "detuning" else temperature_sweep
    return [(cav, driver(spec, cavity_index=i, threads=threads))
            for i, cav in enumerate(spec.cavities)]
