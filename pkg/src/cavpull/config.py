"""Run configuration: defaults, named presets, and the flat key file format.

A run is described by dotted keys (``section.key = value``, one per
line, ``#`` starts a comment line). Every key has a default, so an
empty file is a complete, valid run: the default detuning sweep. The
same loader also accepts a JSON object mapping keys to values, which
is the format of the ``config-echo.json`` file a run writes; loading
an echo reproduces the resolved configuration exactly.

Precedence, lowest to highest: built-in defaults, named preset,
config file, command-line overrides. Unknown keys are errors, and
validation reports every problem it finds rather than the first one.
All energies are meV, temperatures K.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping

from .cavity_filter import CavityMode
from .constants import (
    DEFAULT_CUTOFF,
    DEFAULT_GRID_HALF_SPAN,
    DEFAULT_GRID_POINTS,
    DEFAULT_HUANG_RHYS,
    DEFAULT_Q,
    DEFAULT_REFERENCE_ENERGY,
    DEFAULT_ZPL_FWHM,
)
from .errors import ConfigError
from .phonon_sideband import LINE_LABELS, PhononModel, QDLine
from .spectral_core import SpectralGrid
from .sweep_analysis import (
    DETUNING_DEFAULT_RANGE,
    SWEEP_MODES,
    TEMPERATURE_DEFAULT_RANGE,
    SweepSpec,
)

OUTPUT_FORMATS = ("csv", "json")

# Three-line layout calibrated so that, with the default -0.17 meV/K drift
# and a 1350.0 meV cavity, the QD lines cross the mode near 16, 31 and 46 K.
# Detuning sweeps use only the X entry and only relatively (the control value
# is the cavity offset from the line), so the absolute numbers are inert there.
_LINE_ENERGY_DEFAULTS = {"X": 1353.6, "CX": 1351.0, "XX": 1356.2}
_LINE_SHIFT_DEFAULT = -0.17  # meV/K, linear bandgap drift
_MODE_RANGE_DEFAULTS = {
    "detuning": DETUNING_DEFAULT_RANGE,
    "temperature": TEMPERATURE_DEFAULT_RANGE,
}
_MODE_LINES_DEFAULTS = {"detuning": "X", "temperature": "CX,X,XX"}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_float(raw: str) -> float:
    value = float(raw)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("must be a finite number")
    return value


def _parse_int(raw: str) -> int:
    try:
        return int(raw, 10)
    except ValueError:
        raise ValueError("must be an integer") from None


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError("must be true or false")


def _parse_float_list(raw: str) -> tuple[float, ...]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ValueError("must list at least one value")
    return tuple(_parse_float(s) for s in items)


def _parse_labels(raw: str) -> tuple[str, ...]:
    items = tuple(s.strip().upper() for s in raw.split(",") if s.strip())
    if not items:
        raise ValueError("must list at least one line")
    for label in items:
        if label not in LINE_LABELS:
            raise ValueError(f"unknown line '{label}' (choose from {', '.join(LINE_LABELS)})")
    if len(set(items)) != len(items):
        raise ValueError("labels must be unique")
    return items


def _parse_formats(raw: str) -> tuple[str, ...]:
    items = tuple(s.strip().lower() for s in raw.split(",") if s.strip())
    if not items:
        raise ValueError("must list at least one format")
    for fmt in items:
        if fmt not in OUTPUT_FORMATS:
            raise ValueError(f"unknown format '{fmt}' (choose from {', '.join(OUTPUT_FORMATS)})")
    if len(set(items)) != len(items):
        raise ValueError("formats must be unique")
    return items


@dataclass(frozen=True)
class _Key:
    name: str
    default: "str | Callable[[str], str]"
    parse: Callable[[str], object]
    unit: str
    doc: str

    def default_for(self, mode: str) -> str:
        if callable(self.default):
            return self.default(mode)
        return self.default


def _range_default(index: int) -> Callable[[str], str]:
    return lambda mode: _fmt(_MODE_RANGE_DEFAULTS[mode][index])


_SCHEMA: tuple[_Key, ...] = (
    _Key("sweep.mode", "detuning", str.strip, "",
         "Sweep family: 'detuning' moves the cavity across one line at fixed "
         "temperature; 'temperature' heats the sample under a fixed cavity."),
    _Key("sweep.start", _range_default(0), _parse_float, "meV or K",
         "First control value. Detuning default -3.0 meV, temperature default 10.0 K."),
    _Key("sweep.stop", _range_default(1), _parse_float, "meV or K",
         "Last control value; the sweep includes both ends. "
         "Detuning default 3.0 meV, temperature default 50.0 K."),
    _Key("sweep.steps", _range_default(2), _parse_int, "",
         "Number of sweep points (>= 2). Defaults: 121 detuning, 81 temperature."),
    _Key("sweep.t_fixed", "40.0", _parse_float, "K",
         "Sample temperature during a detuning sweep. Ignored by temperature sweeps."),
    _Key("sweep.instrument_sigma", "0.0", _parse_float, "meV",
         "Gaussian spectrometer response (sigma) applied before any noise."),
    _Key("sweep.noise_sigma", "0.0", _parse_float, "",
         "Additive white noise, as a fraction of each spectrum's maximum."),
    _Key("sweep.noise_seed", "0", _parse_int, "",
         "Base seed for the per-point noise streams. Reruns with the same seed "
         "are byte-identical."),
    _Key("sweep.cavity_drift", "0.0", _parse_float, "meV/K",
         "Linear drift of the cavity energy during a temperature sweep."),
    _Key("grid.center", _fmt(DEFAULT_REFERENCE_ENERGY), _parse_float, "meV",
         "Center of the spectral window."),
    _Key("grid.half_span", _fmt(DEFAULT_GRID_HALF_SPAN), _parse_float, "meV",
         "Half-width of the spectral window."),
    _Key("grid.points", _fmt(DEFAULT_GRID_POINTS), _parse_int, "",
         "Samples across the window (>= 2). The default keeps a 2.5 ueV step."),
    _Key("phonon.huang_rhys", _fmt(DEFAULT_HUANG_RHYS), _parse_float, "",
         "Exciton-phonon coupling strength (dimensionless)."),
    _Key("phonon.cutoff", _fmt(DEFAULT_CUTOFF), _parse_float, "meV",
         "Sideband cutoff energy."),
    _Key("phonon.zpl_fwhm", _fmt(DEFAULT_ZPL_FWHM), _parse_float, "meV",
         "Zero-phonon linewidth (resolution limited)."),
    _Key("cavity.energy", _fmt(DEFAULT_REFERENCE_ENERGY), _parse_float, "meV",
         "Cavity mode energy. In a detuning sweep this only anchors the Q to "
         "linewidth conversion; the mode is placed at line + detuning."),
    _Key("cavity.q", _fmt(DEFAULT_Q), _parse_float_list, "",
         "Quality factor, or a comma list to repeat the sweep per Q."),
    _Key("lines.use", lambda mode: _MODE_LINES_DEFAULTS[mode], _parse_labels, "",
         "Which QD lines emit, comma list from X, CX, XX. Detuning sweeps take "
         "exactly one."),
    _Key("lines.t_ref", "10.0", _parse_float, "K",
         "Temperature at which the line energies below are quoted."),
    _Key("lines.x.energy", _fmt(_LINE_ENERGY_DEFAULTS["X"]), _parse_float, "meV",
         "X line energy at lines.t_ref."),
    _Key("lines.x.shift", _fmt(_LINE_SHIFT_DEFAULT), _parse_float, "meV/K",
         "X line energy shift per kelvin."),
    _Key("lines.x.weight", "1.0", _parse_float, "",
         "Relative emission weight of X."),
    _Key("lines.cx.energy", _fmt(_LINE_ENERGY_DEFAULTS["CX"]), _parse_float, "meV",
         "CX line energy at lines.t_ref."),
    _Key("lines.cx.shift", _fmt(_LINE_SHIFT_DEFAULT), _parse_float, "meV/K",
         "CX line energy shift per kelvin."),
    _Key("lines.cx.weight", "1.0", _parse_float, "",
         "Relative emission weight of CX."),
    _Key("lines.xx.energy", _fmt(_LINE_ENERGY_DEFAULTS["XX"]), _parse_float, "meV",
         "XX line energy at lines.t_ref."),
    _Key("lines.xx.shift", _fmt(_LINE_SHIFT_DEFAULT), _parse_float, "meV/K",
         "XX line energy shift per kelvin."),
    _Key("lines.xx.weight", "1.0", _parse_float, "",
         "Relative emission weight of XX."),
    _Key("run.threads", "0", _parse_int, "",
         "Worker threads for sweep points. 0 means use the available parallelism."),
    _Key("run.failure_fraction", "0.2", _parse_float, "",
         "Abort threshold: the run fails if more than this fraction of points "
         "raise during analysis. Unresolvable points are not failures."),
    _Key("output.dir", "out", str.strip, "",
         "Directory for sweep.csv, config-echo.json and optional spectra."),
    _Key("output.formats", "csv", _parse_formats, "",
         "Result table formats, comma list from csv, json."),
    _Key("output.emit_spectra", "false", _parse_bool, "",
         "Also write each point's spectrum as two-column text."),
)

_SCHEMA_BY_NAME = {key.name: key for key in _SCHEMA}

KNOWN_KEYS = tuple(key.name for key in _SCHEMA)

# Named scenarios. Values are ordinary config assignments, so a preset is
# exactly equivalent to a file containing these lines.
PRESETS: Mapping[str, Mapping[str, str]] = {
    "fig3a": {},
    "fig3bcd": {
        "sweep.t_fixed": "20.0",
        "cavity.q": "1000,3000,5000",
    },
    "fig2ghi": {
        "sweep.mode": "temperature",
        "cavity.q": "2000",
        "grid.half_span": "12.0",
        "grid.points": "9601",
    },
}


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved run description.

    Instances always come out of :func:`resolve_config` (possibly via
    :func:`load_config`), which guarantees the cross-field checks have
    passed. Two configs resolved from the same inputs compare equal,
    which is what makes the echo round-trip testable.
    """

    mode: str
    sweep_start: float
    sweep_stop: float
    sweep_steps: int
    t_fixed: float
    instrument_sigma: float
    noise_sigma: float
    noise_seed: int
    cavity_drift: float
    grid_center: float
    grid_half_span: float
    grid_points: int
    huang_rhys: float
    cutoff: float
    zpl_fwhm: float
    cavity_energy: float
    cavity_qs: tuple
    lines_use: tuple
    lines_t_ref: float
    line_x: tuple
    line_cx: tuple
    line_xx: tuple
    threads: int
    failure_fraction: float
    output_dir: str
    output_formats: tuple
    emit_spectra: bool

    def flat(self) -> "dict[str, str]":
        """Every key of the schema with its resolved value, as strings."""
        lines = {"X": self.line_x, "CX": self.line_cx, "XX": self.line_xx}
        out = {
            "sweep.mode": self.mode,
            "sweep.start": _fmt(self.sweep_start),
            "sweep.stop": _fmt(self.sweep_stop),
            "sweep.steps": _fmt(self.sweep_steps),
            "sweep.t_fixed": _fmt(self.t_fixed),
            "sweep.instrument_sigma": _fmt(self.instrument_sigma),
            "sweep.noise_sigma": _fmt(self.noise_sigma),
            "sweep.noise_seed": _fmt(self.noise_seed),
            "sweep.cavity_drift": _fmt(self.cavity_drift),
            "grid.center": _fmt(self.grid_center),
            "grid.half_span": _fmt(self.grid_half_span),
            "grid.points": _fmt(self.grid_points),
            "phonon.huang_rhys": _fmt(self.huang_rhys),
            "phonon.cutoff": _fmt(self.cutoff),
            "phonon.zpl_fwhm": _fmt(self.zpl_fwhm),
            "cavity.energy": _fmt(self.cavity_energy),
            "cavity.q": ",".join(_fmt(q) for q in self.cavity_qs),
            "lines.use": ",".join(self.lines_use),
            "lines.t_ref": _fmt(self.lines_t_ref),
            "run.threads": _fmt(self.threads),
            "run.failure_fraction": _fmt(self.failure_fraction),
            "output.dir": self.output_dir,
            "output.formats": ",".join(self.output_formats),
            "output.emit_spectra": _fmt(self.emit_spectra),
        }
        for label, (energy, shift, weight) in lines.items():
            stem = f"lines.{label.lower()}"
            out[f"{stem}.energy"] = _fmt(energy)
            out[f"{stem}.shift"] = _fmt(shift)
            out[f"{stem}.weight"] = _fmt(weight)
        return {key.name: out[key.name] for key in _SCHEMA}

    def grid(self) -> SpectralGrid:
        return SpectralGrid(self.grid_center - self.grid_half_span,
                            self.grid_center + self.grid_half_span,
                            self.grid_points)

    def phonon_model(self) -> PhononModel:
        return PhononModel.from_huang_rhys(self.huang_rhys, self.cutoff,
                                           self.zpl_fwhm)

    def cavities(self) -> "tuple[CavityMode, ...]":
        return tuple(CavityMode.from_q(self.cavity_energy, q)
                     for q in self.cavity_qs)

    def qd_lines(self) -> "tuple[QDLine, ...]":
        params = {"X": self.line_x, "CX": self.line_cx, "XX": self.line_xx}
        return tuple(
            QDLine(label, params[label][0], params[label][1],
                   weight=params[label][2], t_ref=self.lines_t_ref)
            for label in self.lines_use)

    def to_sweep_spec(self) -> SweepSpec:
        return SweepSpec(
            mode=self.mode,
            cavities=self.cavities(),
            lines=self.qd_lines(),
            phonon=self.phonon_model(),
            sweep_range=(self.sweep_start, self.sweep_stop, self.sweep_steps),
            t_fixed=self.t_fixed,
            instrument_sigma=self.instrument_sigma,
            noise_sigma=self.noise_sigma,
            noise_seed=self.noise_seed,
            cavity_drift=self.cavity_drift,
            grid=self.grid(),
        )


def parse_config_text(text: str) -> "dict[str, str]":
    """Parse ``key = value`` lines into a raw string map.

    Only syntax is checked here; key names and value domains are the
    resolver's job. Raises ConfigError carrying one entry per bad line.
    """
    problems = []
    values: dict[str, str] = {}
    first_line: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if not key:
            problems.append(f"line {lineno}: missing key before '='")
            continue
        if key in values:
            problems.append(f"line {lineno}: duplicate key '{key}' "
                            f"(first set on line {first_line[key]})")
            continue
        values[key] = value
        first_line[key] = lineno
    if problems:
        raise ConfigError(problems)
    return values


def _json_object_to_strings(obj) -> "dict[str, str]":
    if not isinstance(obj, dict):
        raise ConfigError(["JSON config must be an object of key/value pairs"])
    out = {}
    for key, value in obj.items():
        if isinstance(value, (dict, list)):
            raise ConfigError([f"{key}: nested JSON values are not allowed"])
        out[str(key).strip().lower()] = _fmt(value) if not isinstance(value, str) else value
    return out


def resolve_config(*sources: Mapping[str, str]) -> RunConfig:
    """Merge raw key maps (later wins) and validate into a RunConfig.

    Reports every unknown key, every unparsable value, and every
    cross-field inconsistency in a single ConfigError.
    """
    merged: dict[str, str] = {}
    for source in sources:
        for key, value in source.items():
            merged[key.strip().lower()] = value

    problems = []
    for key in merged:
        if key not in _SCHEMA_BY_NAME:
            problems.append(f"unknown key '{key}'")

    # Mode decides several defaults, so settle it first. An invalid mode is
    # reported once here and substituted so the rest still gets checked.
    mode_raw = merged.get("sweep.mode", "detuning").strip().lower()
    if mode_raw not in SWEEP_MODES:
        problems.append(
            f"sweep.mode: unknown mode '{merged.get('sweep.mode')}' "
            f"(choose from {', '.join(SWEEP_MODES)})")
        mode_raw = "detuning"

    typed: dict[str, object] = {}
    for key in _SCHEMA:
        raw = merged.get(key.name, key.default_for(mode_raw))
        try:
            typed[key.name] = key.parse(raw)
        except (ValueError, TypeError) as exc:
            problems.append(f"{key.name}: {exc} (got '{raw}')")
            typed[key.name] = None

    def ok(*names: str) -> bool:
        return all(typed.get(n) is not None for n in names)

    def positive(name: str, label: str) -> None:
        if ok(name) and typed[name] <= 0:
            problems.append(f"{name}: {label} must be positive")

    def non_negative(name: str, label: str) -> None:
        if ok(name) and typed[name] < 0:
            problems.append(f"{name}: {label} must not be negative")

    positive("sweep.t_fixed", "temperature")
    positive("cavity.energy", "energy")
    positive("grid.half_span", "half-span")
    positive("phonon.huang_rhys", "coupling")
    positive("phonon.cutoff", "cutoff")
    positive("phonon.zpl_fwhm", "linewidth")
    positive("lines.t_ref", "temperature")
    non_negative("sweep.instrument_sigma", "sigma")
    non_negative("sweep.noise_sigma", "noise level")
    non_negative("sweep.noise_seed", "seed")
    non_negative("run.threads", "thread count")

    if ok("sweep.steps") and typed["sweep.steps"] < 2:
        problems.append("sweep.steps: need at least 2 points")
    if ok("grid.points") and typed["grid.points"] < 2:
        problems.append("grid.points: need at least 2 points")
    if ok("sweep.start", "sweep.stop") and typed["sweep.stop"] <= typed["sweep.start"]:
        problems.append("sweep.stop: must exceed sweep.start")
    if mode_raw == "temperature" and ok("sweep.start") and typed["sweep.start"] <= 0:
        problems.append("sweep.start: temperature sweeps need a positive start")
    if ok("run.failure_fraction") and not 0.0 <= typed["run.failure_fraction"] <= 1.0:
        problems.append("run.failure_fraction: must lie in [0, 1]")

    if ok("cavity.q"):
        for q in typed["cavity.q"]:
            if q <= 0:
                problems.append(f"cavity.q: quality factor must be positive (got {_fmt(q)})")
        if len(set(typed["cavity.q"])) != len(typed["cavity.q"]):
            problems.append("cavity.q: duplicate quality factors")

    if ok("lines.use"):
        if mode_raw == "detuning" and len(typed["lines.use"]) != 1:
            problems.append("lines.use: a detuning sweep takes exactly one line")
        for label in typed["lines.use"]:
            weight_key = f"lines.{label.lower()}.weight"
            if ok(weight_key) and not 0.0 < typed[weight_key] <= 1.0:
                problems.append(f"{weight_key}: weight must lie in (0, 1]")

    if ok("cavity.energy", "grid.center", "grid.half_span"):
        lo = typed["grid.center"] - typed["grid.half_span"]
        hi = typed["grid.center"] + typed["grid.half_span"]
        if not lo <= typed["cavity.energy"] <= hi:
            problems.append("cavity.energy: outside the spectral grid")

    if not ok("output.dir") or not typed["output.dir"]:
        problems.append("output.dir: must not be empty")

    if problems:
        raise ConfigError(sorted(problems))

    def line(label: str) -> tuple:
        stem = f"lines.{label.lower()}"
        return (typed[f"{stem}.energy"], typed[f"{stem}.shift"],
                typed[f"{stem}.weight"])

    return RunConfig(
        mode=mode_raw,
        sweep_start=typed["sweep.start"],
        sweep_stop=typed["sweep.stop"],
        sweep_steps=typed["sweep.steps"],
        t_fixed=typed["sweep.t_fixed"],
        instrument_sigma=typed["sweep.instrument_sigma"],
        noise_sigma=typed["sweep.noise_sigma"],
        noise_seed=typed["sweep.noise_seed"],
        cavity_drift=typed["sweep.cavity_drift"],
        grid_center=typed["grid.center"],
        grid_half_span=typed["grid.half_span"],
        grid_points=typed["grid.points"],
        huang_rhys=typed["phonon.huang_rhys"],
        cutoff=typed["phonon.cutoff"],
        zpl_fwhm=typed["phonon.zpl_fwhm"],
        cavity_energy=typed["cavity.energy"],
        cavity_qs=typed["cavity.q"],
        lines_use=typed["lines.use"],
        lines_t_ref=typed["lines.t_ref"],
        line_x=line("X"),
        line_cx=line("CX"),
        line_xx=line("XX"),
        threads=typed["run.threads"],
        failure_fraction=typed["run.failure_fraction"],
        output_dir=typed["output.dir"],
        output_formats=typed["output.formats"],
        emit_spectra=typed["output.emit_spectra"],
    )


def load_config(path, *, preset: "str | None" = None,
                overrides: "Mapping[str, str] | None" = None) -> RunConfig:
    """Read a config file (flat text or JSON object) and resolve it.

    ``preset`` applies below the file, ``overrides`` above it.
    """
    if preset is not None and preset not in PRESETS:
        raise ConfigError([f"unknown scenario '{preset}' "
                           f"(choose from {', '.join(sorted(PRESETS))})"])
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read config file: {exc}"]) from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            file_map = _json_object_to_strings(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError([f"invalid JSON config: {exc}"]) from None
    else:
        file_map = parse_config_text(text)
    sources = [PRESETS[preset]] if preset is not None else []
    sources.append(file_map)
    if overrides:
        sources.append(dict(overrides))
    return resolve_config(*sources)


def default_config(preset: "str | None" = None,
                   overrides: "Mapping[str, str] | None" = None) -> RunConfig:
    """Resolve a run without a file: defaults, optional preset, overrides."""
    if preset is not None and preset not in PRESETS:
        raise ConfigError([f"unknown scenario '{preset}' "
                           f"(choose from {', '.join(sorted(PRESETS))})"])
    sources = [PRESETS[preset]] if preset is not None else []
    if overrides:
        sources.append(dict(overrides))
    return resolve_config(*sources)


def config_reference_markdown() -> str:
    """Render the key reference that ships as config-reference.md."""
    out = [
        "# Run configuration reference",
        "",
        "One `key = value` assignment per line; `#` starts a comment line.",
        "Keys are case-insensitive and unknown keys are rejected. A JSON",
        "object mapping the same keys to values (the `config-echo.json`",
        "format) is accepted interchangeably. Energies are meV,",
        "temperatures K. Every key has a default, so an empty file runs",
        "the default detuning sweep.",
        "",
        "Defaults marked *by mode* depend on `sweep.mode`:",
        "detuning / temperature.",
        "",
        "| Key | Default | Unit | Meaning |",
        "| --- | --- | --- | --- |",
    ]
    for key in _SCHEMA:
        if callable(key.default):
            default = (f"*by mode*: {key.default('detuning')} / "
                       f"{key.default('temperature')}")
        else:
            default = f"`{key.default}`" if key.default else "(empty)"
        unit = key.unit or ""
        out.append(f"| `{key.name}` | {default} | {unit} | {key.doc} |")
    out += [
        "",
        "Named scenarios (`--scenario`) are preset assignment sets applied",
        "underneath the config file:",
        "",
    ]
    for name in sorted(PRESETS):
        body = ", ".join(f"`{k} = {v}`" for k, v in PRESETS[name].items())
        out.append(f"- **{name}**: {body if body else 'all defaults'}")
    out.append("")
    return "\n".join(out)
