"""Tests for ou_sector.formatters."""

import csv
import json
import math

import pytest

from ou_sector.formatters import (
    PLOT_GAMMAS,
    emit,
    format_output,
    load_report,
    output_human,
    output_json,
    output_markdown,
    output_plain,
    theta_curve,
)


class TestOutputJson:
    def test_report_compact(self, capsys, sample_report):
        """Non-verbose drops the config echo and derived matrices."""
        output_json(sample_report)
        parsed = json.loads(capsys.readouterr().out)
        assert [s["name"] for s in parsed["suites"]] == ["model", "sector"]
        assert "config" not in parsed
        assert "derived" not in parsed

    def test_report_verbose(self, capsys, sample_report):
        output_json(sample_report, verbose=True)
        parsed = json.loads(capsys.readouterr().out)
        assert parsed["derived"]["gamma"] == 0.5
        assert parsed["config"]["run"]["seed"] == 0

    def test_plain_dict(self, capsys):
        output_json({"gamma": 0.5})
        assert json.loads(capsys.readouterr().out) == {"gamma": 0.5}


class TestOutputPlain:
    def test_report_rows(self, capsys, sample_report):
        output_plain(sample_report)
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0].split("\t") == ["suite", "name", "passed", "residual", "margin"]
        assert len(lines) == 1 + len(sample_report.checks())
        assert lines[-1].startswith("sector\tfield_of_values\tFalse")

    def test_verbose_adds_columns(self, capsys, sample_report):
        output_plain(sample_report, verbose=True)
        header = capsys.readouterr().out.split("\n")[0]
        assert "n_samples" in header
        assert "seed" in header

    def test_simple_dict(self, capsys):
        output_plain({"gamma": 0.5})
        assert "gamma\t0.5" in capsys.readouterr().out


class TestOutputMarkdown:
    def test_suite_tables(self, capsys, sample_report):
        output_markdown(sample_report, title="Sector")
        out = capsys.readouterr().out
        assert "## Sector" in out
        assert "### model (pass)" in out
        assert "### sector (FAIL)" in out
        assert "| field_of_values | FAIL |" in out

    def test_notes_only_when_verbose(self, capsys, sample_report):
        output_markdown(sample_report)
        assert "theta_2" not in capsys.readouterr().out
        output_markdown(sample_report, verbose=True)
        out = capsys.readouterr().out
        assert "*theta_2=1.10715*" in out
        assert "total: 0.3s" in out


class TestOutputHuman:
    def test_report(self, capsys, sample_report):
        output_human(sample_report)
        captured = capsys.readouterr()
        assert "drift_algebra" in captured.out
        assert "some checks failed" in captured.err

    def test_derived_panel(self, capsys, sample_report):
        format_output(sample_report.derived, "human", title="Model")
        out = capsys.readouterr().out
        assert "Q_inf" in out
        assert "Sector angles" in out


class TestEmit:
    def test_json_round_trip(self, tmp_path, sample_report):
        (path,) = emit(sample_report, "json", tmp_path)
        loaded = load_report(path)
        assert loaded.to_dict() == sample_report.to_dict()
        assert loaded.passed is False
        assert loaded.exit_code == 1

    def test_csv_has_one_row_per_check(self, tmp_path, sample_report):
        (path,) = emit(sample_report, "csv", tmp_path)
        with path.open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(sample_report.checks())
        assert rows[0]["suite"] == "model"
        assert rows[0]["name"] == "drift_algebra"

    def test_plot_data(self, tmp_path, sample_report):
        paths = emit(sample_report, "plot-data", tmp_path)
        assert [p.name for p in paths] == ["theta_curves.csv", "fov_boundary.csv"]
        with paths[0].open() as fh:
            rows = list(csv.DictReader(fh))
        gammas = sorted({float(r["gamma"]) for r in rows})
        assert gammas == sorted(PLOT_GAMMAS)
        for gamma in (0.5, 1.0):
            curve = [(float(r["p"]), float(r["theta"])) for r in rows if float(r["gamma"]) == gamma]
            best_p = max(curve, key=lambda pt: pt[1])[0]
            assert best_p == pytest.approx(2.0, abs=0.06)

    def test_model_gamma_added_to_curves(self, tmp_path, sample_report):
        sample_report.derived["gamma"] = 0.3
        paths = emit(sample_report, "plot-data", tmp_path)
        with paths[0].open() as fh:
            gammas = {float(r["gamma"]) for r in csv.DictReader(fh)}
        assert 0.3 in gammas

    def test_unknown_format(self, tmp_path, sample_report):
        with pytest.raises(ValueError, match="Unknown format"):
            emit(sample_report, "xlsx", tmp_path)


class TestThetaCurve:
    def test_symmetric_case(self):
        (p, theta), = theta_curve(0.0, [4.0])
        assert p == 4.0
        assert theta == pytest.approx(math.pi / 3)

    def test_p2_with_rotation(self):
        (_, theta), = theta_curve(1.0, [2.0])
        assert theta == pytest.approx(math.pi / 4)
