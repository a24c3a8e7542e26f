"""End-to-end command line behaviour and the table renderers."""

import json

import pytest

import cavpull.cli as cli
from cavpull.cli import CSV_COLUMNS, main, render_csv, render_json, sweep_table
from cavpull.peak_fitting import load_spectrum_text
from cavpull.sweep_analysis import SweepPoint


def _fast_config(tmp_path, extra=""):
    path = tmp_path / "run.cfg"
    path.write_text("sweep.start = -2.0\nsweep.stop = 2.0\n"
                    "sweep.steps = 5\n" + extra)
    return str(path)


def _point(control, failed=False):
    return SweepPoint(control, 1350.1, 1.2, 0.4, (("X", 0.6),), 1350.05,
                      resolvable=True, ambiguous=False, failed=failed)


class TestRenderers:
    def test_csv_header_and_empty_cells(self):
        blank = SweepPoint(0.0, None, None, 0.3, (("X", 0.7),), None,
                           resolvable=False, ambiguous=True)
        text = render_csv([cli._row_cells(blank, None)])
        header, row = text.splitlines()
        assert header == ",".join(CSV_COLUMNS)
        cells = row.split(",")
        assert len(cells) == len(CSV_COLUMNS)
        assert cells[1] == "" and cells[2] == "" and cells[8] == ""
        assert cells[4] == "0.7" and cells[5] == "" and cells[6] == ""
        assert cells[-2:] == ["0", "1"]
        assert text.endswith("\n")

    def test_json_mirrors_csv(self):
        rows = [cli._row_cells(_point(-1.0), 1124.9)]
        records = json.loads(render_json(rows))
        assert len(records) == 1
        rec = records[0]
        assert rec["control_value"] == -1.0
        assert rec["qd_intensity_CX"] is None
        assert rec["resolvable_flag"] is True
        assert rec["ambiguity_flag"] is False
        assert rec["q_apparent"] == 1124.9


class TestMainRuns:
    def test_default_scenario_writes_expected_files(self, tmp_path):
        out = tmp_path / "out"
        code = main(["--config", _fast_config(tmp_path), "--out", str(out)])
        assert code == 0
        csv_text = (out / "sweep.csv").read_text()
        lines = csv_text.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + 5
        echo = json.loads((out / "config-echo.json").read_text())
        assert echo["sweep.steps"] == "5"
        assert echo["output.dir"] == str(out)

    def test_echo_reproduces_run_byte_for_byte(self, tmp_path):
        first = tmp_path / "first"
        again = tmp_path / "again"
        assert main(["--config", _fast_config(tmp_path),
                     "--out", str(first)]) == 0
        assert main(["--config", str(first / "config-echo.json"),
                     "--out", str(again)]) == 0
        assert (first / "sweep.csv").read_bytes() == (
            again / "sweep.csv").read_bytes()

    def test_multi_q_names_files_by_quality(self, tmp_path):
        out = tmp_path / "out"
        code = main(["--config", _fast_config(tmp_path, "cavity.q = 800,2500\n"),
                     "--out", str(out)])
        assert code == 0
        assert (out / "sweep_q800.csv").exists()
        assert (out / "sweep_q2500.csv").exists()
        assert not (out / "sweep.csv").exists()

    def test_json_format_selection(self, tmp_path):
        out = tmp_path / "out"
        code = main(["--config",
                     _fast_config(tmp_path, "output.formats = json\n"),
                     "--out", str(out)])
        assert code == 0
        assert (out / "sweep.json").exists()
        assert not (out / "sweep.csv").exists()

    def test_emit_spectra_round_trip(self, tmp_path):
        out = tmp_path / "out"
        code = main(["--config", _fast_config(tmp_path), "--out", str(out),
                     "--emit-spectra"])
        assert code == 0
        files = sorted((out / "spectra").iterdir())
        assert [f.name for f in files] == [
            f"sweep_point{i:03d}.txt" for i in range(5)]
        grid, values = load_spectrum_text(files[0])
        assert grid.n_points == values.size > 0

    def test_config_problems_exit_2(self, tmp_path, capsys):
        code = main(["--config", _fast_config(tmp_path, "cavity.q = -1\n")])
        assert code == 2
        err = capsys.readouterr().err
        assert "configuration error" in err and "cavity.q" in err

    def test_missing_config_file_exit_2(self, tmp_path, capsys):
        assert main(["--config", str(tmp_path / "none.cfg")]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_bad_scenario_is_an_argparse_error(self):
        with pytest.raises(SystemExit):
            main(["--scenario", "fig1a"])

    def test_unwritable_output_exit_1(self, tmp_path, capsys):
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory")
        code = main(["--config", _fast_config(tmp_path),
                     "--out", str(blocker)])
        assert code == 1
        assert "cannot write" in capsys.readouterr().err


class TestFailureBudget:
    def _run_with_stub(self, tmp_path, monkeypatch, n_failed, fraction):
        def stub(spec, threads=1):
            pts = [_point(float(i), failed=i < n_failed) for i in range(4)]
            return [(spec.cavities[0], pts)]

        monkeypatch.setattr(cli, "run_sweep", stub)
        out = tmp_path / "out"
        extra = f"run.failure_fraction = {fraction}\n"
        return main(["--config", _fast_config(tmp_path, extra),
                     "--out", str(out)])

    def test_within_budget_passes(self, tmp_path, monkeypatch):
        assert self._run_with_stub(tmp_path, monkeypatch, 0, 0.2) == 0

    def test_over_budget_fails_with_diagnostics(self, tmp_path, monkeypatch,
                                                capsys):
        code = self._run_with_stub(tmp_path, monkeypatch, 2, 0.2)
        assert code == 1
        err = capsys.readouterr().err
        assert "2 of 4 points failed" in err
        assert "control=0" in err and "control=1" in err

    def test_outputs_still_written_before_failure_exit(self, tmp_path,
                                                       monkeypatch, capsys):
        self._run_with_stub(tmp_path, monkeypatch, 3, 0.0)
        assert (tmp_path / "out" / "sweep.csv").exists()
        capsys.readouterr()


def test_sweep_table_uses_bare_energy_for_q(tmp_path):
    # apparent Q divides the bare mode energy at that control value,
    # not the fitted energy, so the column stays defined off resonance
    from cavpull.config import default_config
    cfg = default_config(overrides={"sweep.steps": "3", "sweep.start": "-2.0",
                                    "sweep.stop": "2.0"})
    spec = cfg.to_sweep_spec()
    from cavpull.sweep_analysis import run_sweep as real_run
    from cavpull.sweep_analysis import swept_cavity_energy
    (cav, points), = real_run(spec)
    rows = sweep_table(spec, points, 0)
    checked = 0
    for row, point in zip(rows, points):
        if point.resolvable:
            bare = swept_cavity_energy(spec, point.control_value)
            assert float(row[8]) == pytest.approx(
                bare / point.apparent_mode_fwhm, rel=1e-12)
            checked += 1
    assert checked > 0
