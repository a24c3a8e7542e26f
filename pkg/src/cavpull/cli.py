"""Command line runner: configure a sweep, execute it, write data files.

Outputs land in the configured directory:

* ``sweep.csv`` (or ``sweep_q{Q}.csv`` per quality factor when several
  are swept): one row per sweep point, fixed column set, empty cells
  where a point had nothing resolvable to fit.
* ``config-echo.json``: every configuration key with its resolved
  value. Feeding it back through ``--config`` reproduces the run.
* optionally one two-column spectrum file per point.

Exit status 0 on success, 1 on runtime failure (unwritable output,
or more analysis failures than ``run.failure_fraction`` allows),
2 on configuration problems.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import PRESETS, RunConfig, default_config, load_config
from .errors import ConfigError, DegenerateOverlapError, ParameterError
from .sweep_analysis import (
    SweepPoint,
    apparent_q,
    point_spectrum,
    run_sweep,
    swept_cavity_energy,
)

CSV_COLUMNS = (
    "control_value",
    "apparent_mode_energy_mev",
    "apparent_mode_fwhm_mev",
    "mode_intensity",
    "qd_intensity_X",
    "qd_intensity_CX",
    "qd_intensity_XX",
    "eq1_prediction_mev",
    "q_apparent",
    "resolvable_flag",
    "ambiguity_flag",
)


def _cell(value) -> str:
    return "" if value is None else repr(float(value))


def _row_cells(point: SweepPoint, q_app: "float | None") -> "list[str]":
    by_label = dict(point.qd_intensities)
    return [
        repr(float(point.control_value)),
        _cell(point.apparent_mode_energy),
        _cell(point.apparent_mode_fwhm),
        repr(float(point.mode_intensity)),
        _cell(by_label.get("X")),
        _cell(by_label.get("CX")),
        _cell(by_label.get("XX")),
        _cell(point.eq1_prediction),
        _cell(q_app),
        "1" if point.resolvable else "0",
        "1" if point.ambiguous else "0",
    ]


def sweep_table(spec, points: "list[SweepPoint]",
                cavity_index: int = 0) -> "list[list[str]]":
    """Rows (as cell strings, no header) for one cavity's sweep."""
    rows = []
    for point in points:
        bare = swept_cavity_energy(spec, point.control_value, cavity_index)
        rows.append(_row_cells(point, apparent_q(point, bare)))
    return rows


def render_csv(rows: "list[list[str]]") -> str:
    lines = [",".join(CSV_COLUMNS)]
    lines += [",".join(cells) for cells in rows]
    return "\n".join(lines) + "\n"


def render_json(rows: "list[list[str]]") -> str:
    records = []
    for cells in rows:
        record = {}
        for name, cell in zip(CSV_COLUMNS, cells):
            if cell == "":
                record[name] = None
            elif name.endswith("_flag"):
                record[name] = cell == "1"
            else:
                record[name] = float(cell)
        records.append(record)
    return json.dumps(records, indent=1) + "\n"


def _write_text(path: str, text: str) -> None:
    # newline='' keeps the LF endings exactly as rendered, on any platform
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _spectrum_text(energies, values) -> str:
    lines = ["# energy_meV density"]
    lines += [f"{repr(float(e))} {repr(float(v))}"
              for e, v in zip(energies, values)]
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig) -> int:
    """Execute one configured run and write its outputs."""
    try:
        spec = cfg.to_sweep_spec()
    except (ParameterError, DegenerateOverlapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    threads = cfg.threads if cfg.threads > 0 else (os.cpu_count() or 1)
    try:
        results = run_sweep(spec, threads=threads)
    except (ParameterError, DegenerateOverlapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        os.makedirs(cfg.output_dir, exist_ok=True)
        echo = json.dumps(cfg.flat(), indent=1, sort_keys=True) + "\n"
        _write_text(os.path.join(cfg.output_dir, "config-echo.json"), echo)

        multi = len(results) > 1
        for index, (cav, points) in enumerate(results):
            stem = (f"sweep_q{cfg.cavity_qs[index]:g}" if multi else "sweep")
            rows = sweep_table(spec, points, cavity_index=index)
            if "csv" in cfg.output_formats:
                _write_text(os.path.join(cfg.output_dir, stem + ".csv"),
                            render_csv(rows))
            if "json" in cfg.output_formats:
                _write_text(os.path.join(cfg.output_dir, stem + ".json"),
                            render_json(rows))
            if cfg.emit_spectra:
                spectra_dir = os.path.join(cfg.output_dir, "spectra")
                os.makedirs(spectra_dir, exist_ok=True)
                for pt_index in range(len(points)):
                    energies, values = point_spectrum(spec, pt_index, index)
                    name = f"{stem}_point{pt_index:03d}.txt"
                    _write_text(os.path.join(spectra_dir, name),
                                _spectrum_text(energies, values))
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 1

    total = sum(len(points) for _, points in results)
    failures = [(cfg.cavity_qs[index], point.control_value)
                for index, (_, points) in enumerate(results)
                for point in points if point.failed]
    if total and len(failures) > cfg.failure_fraction * total:
        fraction = len(failures) / total
        print(f"error: {len(failures)} of {total} points failed analysis "
              f"({fraction:.0%} > {cfg.failure_fraction:.0%} allowed)",
              file=sys.stderr)
        for q, control in failures[:10]:
            print(f"  q={q:g} control={control:g}", file=sys.stderr)
        if len(failures) > 10:
            print(f"  ... and {len(failures) - 10} more", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavpull",
        description="Simulate a quantum dot feeding a low-Q microcavity "
                    "through phonon sidebands and extract the apparent "
                    "mode line along a detuning or temperature sweep.",
        epilog="All energies are meV and temperatures K. Every "
               "configuration key, with defaults and units, is listed in "
               "config-reference.md; an empty config file runs the default "
               "detuning sweep.")
    parser.add_argument("--config", metavar="PATH",
                        help="config file: 'key = value' lines or a JSON "
                             "object (a config-echo.json works as is)")
    parser.add_argument("--scenario", choices=sorted(PRESETS),
                        help="named preset applied underneath the config file")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (default from config: out)")
    parser.add_argument("--threads", type=int, metavar="N",
                        help="worker threads; 0 means available parallelism")
    parser.add_argument("--emit-spectra", action="store_true",
                        help="also dump each point's spectrum as "
                             "two-column text")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.out is not None:
        overrides["output.dir"] = args.out
    if args.threads is not None:
        overrides["run.threads"] = str(args.threads)
    if args.emit_spectra:
        overrides["output.emit_spectra"] = "true"
    try:
        if args.config is not None:
            cfg = load_config(args.config, preset=args.scenario,
                              overrides=overrides)
        else:
            cfg = default_config(args.scenario, overrides)
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return 2
    return run(cfg)
