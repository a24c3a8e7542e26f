"""cavpull: spectra of a quantum dot filtered by a lossy optical cavity.

The package simulates phonon-assisted feeding of a low-Q microcavity
by a detuned quantum dot and reproduces what a spectrometer plus
multi-Lorentzian analysis would report: an apparent mode line that is
pulled toward the dot, narrower or broader than the bare cavity, and
anticorrelated in intensity with the dot lines.

Typical entry points: :func:`qd_spectrum` builds the emission,
:func:`filter_emission` passes it through a cavity,
:func:`run_sweep` drives a whole detuning or temperature series, and
:mod:`cavpull.cli` wraps everything behind a config file.
"""

from .constants import CONSTANTS, K_B, PhysicalConstants
from .errors import ConfigError, DegenerateOverlapError, ParameterError
from .spectral_core import (
    SpectralGrid,
    Spectrum,
    default_grid,
    gaussian_convolve,
    lorentzian,
    sampled_lorentzian,
    trapezoid_integral,
)
from .phonon_sideband import (
    LINE_LABELS,
    PhononModel,
    QDEmission,
    QDLine,
    SidebandTruncationWarning,
    SidebandWidth,
    bose_occupation,
    default_phonon_model,
    effective_1pl_fwhm,
    one_phonon_line,
    qd_spectrum,
)
from .cavity_filter import (
    CavityMode,
    FilteredEmission,
    cavity_spectrum,
    filter_emission,
    zpl_vs_cavity_intensities,
)
from .peak_fitting import (
    FitResult,
    LorentzPeak,
    PeakLabels,
    PeakModel,
    classify_peaks,
    fit,
    initialize_peaks,
    load_spectrum_text,
)
from .sweep_analysis import (
    Eq1Prediction,
    SweepPoint,
    SweepSpec,
    apparent_q,
    detuning_sweep,
    mode_channel_peak,
    point_spectrum,
    pulled_mode_energy,
    run_sweep,
    swept_cavity_energy,
    temperature_sweep,
)
from .config import (
    PRESETS,
    RunConfig,
    config_reference_markdown,
    default_config,
    load_config,
    resolve_config,
)

__version__ = "0.1.0"

__all__ = [
    "CONSTANTS",
    "CavityMode",
    "ConfigError",
    "DegenerateOverlapError",
    "Eq1Prediction",
    "FilteredEmission",
    "FitResult",
    "K_B",
    "LINE_LABELS",
    "LorentzPeak",
    "PRESETS",
    "ParameterError",
    "PeakLabels",
    "PeakModel",
    "PhononModel",
    "PhysicalConstants",
    "QDEmission",
    "QDLine",
    "RunConfig",
    "SidebandTruncationWarning",
    "SidebandWidth",
    "SpectralGrid",
    "Spectrum",
    "SweepPoint",
    "SweepSpec",
    "apparent_q",
    "bose_occupation",
    "cavity_spectrum",
    "classify_peaks",
    "config_reference_markdown",
    "default_config",
    "default_grid",
    "default_phonon_model",
    "detuning_sweep",
    "effective_1pl_fwhm",
    "filter_emission",
    "fit",
    "gaussian_convolve",
    "initialize_peaks",
    "load_config",
    "load_spectrum_text",
    "lorentzian",
    "mode_channel_peak",
    "one_phonon_line",
    "point_spectrum",
    "pulled_mode_energy",
    "qd_spectrum",
    "resolve_config",
    "run_sweep",
    "sampled_lorentzian",
    "swept_cavity_energy",
    "temperature_sweep",
    "trapezoid_integral",
    "zpl_vs_cavity_intensities",
    "__version__",
]
