"""
Integration tests for the command line surface
"""
import math

import pytest

from src.main.python.main import (
    EXIT_BUDGET,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_PARSE,
    RunOptions,
    load_spec,
    main,
    run,
)
from src.main.python.utils.report_writer import parse_report

pytestmark = pytest.mark.integration


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    # log files land under the working directory
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run_main(capsys, *argv):
    status = main(list(argv))
    captured = capsys.readouterr()
    return status, captured.out, captured.err


class TestCommands:
    def test_dim(self, capsys):
        status, out, _ = run_main(capsys, "dim", "--gallery", "l1-schief")
        assert status == EXIT_OK
        sections = parse_report(out)
        alpha = float(sections["dimension"]["alpha"])
        assert alpha == pytest.approx(math.log(3) / math.log(2), abs=1e-10)
        assert float(sections["dimension"]["closed_form"]) == pytest.approx(alpha)
        assert sections["run"]["backend"] == "sequence"

    def test_battery_report_is_deterministic(self, capsys):
        first = run_main(capsys, "battery", "--gallery", "koch", "--depth", "6")
        second = run_main(capsys, "battery", "--gallery", "koch", "--depth", "6")
        assert first[0] == second[0] == EXIT_OK
        assert first[1] == second[1]
        sections = parse_report(first[1])
        assert sections["run"]["name"] == sections["battery"]["name"] == "koch"
        assert sections["condition.1"]["name"] != ""
        assert sections["battery"]["applicable"] == "true"
        assert sections["battery"]["consistent"] == "true"
        assert [f"condition.{k}" in sections for k in range(1, 8)] == [True] * 7

    def test_invariance_violation(self, capsys):
        status, out, _ = run_main(
            capsys, "invariance", "--gallery", "square4-rotated", "--depth", "6"
        )
        assert status == EXIT_OK
        section = parse_report(out)["invariance"]
        assert section["status"] == "violated"
        assert section["map_index"] != "none"

    def test_boundary_sections(self, capsys):
        status, out, _ = run_main(capsys, "boundary", "--gallery", "koch", "--depth", "6")
        assert status == EXIT_OK
        sections = parse_report(out)
        assert sections["boundary.clusters"]["count"] == "2"
        assert sections["boundary.pairs"]["1-3"] == "0"

    def test_measure_sections(self, capsys):
        status, out, _ = run_main(capsys, "measure", "--gallery", "segment2", "--depth", "6")
        assert status == EXIT_OK
        sections = parse_report(out)
        assert "measure.branch.1" in sections
        assert "measure.overlap.1-2" in sections
        assert float(sections["measure.boundary"]["upper"]) <= 1.0

    def test_tilecheck(self, capsys):
        status, out, _ = run_main(capsys, "tilecheck", "--gallery", "square4", "--depth", "6")
        assert status == EXIT_OK
        assert parse_report(out)["tilecheck"]["equality"] == "true"


class TestExitStatuses:
    def test_parse_error(self, capsys, workdir):
        bad = workdir / "bad.ifs"
        bad.write_text("ifs bad dim 2 backend euclidean\nmap scale 1 translate 0 0\n")
        status, out, err = run_main(capsys, "dim", "--spec", str(bad))
        assert status == EXIT_PARSE
        assert out == ""
        assert "line 2" in err

    def test_missing_file(self, capsys, workdir):
        status, _, _ = run_main(capsys, "dim", "--spec", str(workdir / "absent.ifs"))
        assert status == EXIT_PARSE

    def test_budget(self, capsys):
        status, _, err = run_main(
            capsys, "attractor", "--gallery", "koch", "--depth", "12", "--budget", "1000"
        )
        assert status == EXIT_BUDGET
        assert "raise --budget" in err

    def test_render_on_sequence_backend(self, capsys):
        status, _, err = run_main(capsys, "render", "--gallery", "l1-schief", "--depth", "4")
        assert status == EXIT_FAILURE
        assert "render unavailable" in err

    def test_tile_check_on_a_curve(self, capsys):
        status, _, _ = run_main(capsys, "tilecheck", "--gallery", "koch", "--depth", "4")
        assert status == EXIT_FAILURE


class TestArtifacts:
    def test_out_directory(self, capsys, workdir):
        out_dir = workdir / "out"
        status, _, _ = run_main(
            capsys, "render", "--gallery", "koch", "--depth", "4", "--out", str(out_dir)
        )
        assert status == EXIT_OK
        report = out_dir / "koch-render.txt"
        assert report.exists()
        assert (out_dir / "koch.svg").exists()
        assert parse_report(report.read_text())["render"]["points"] == "256"

    def test_render_with_samples(self, capsys, workdir):
        out_dir = workdir / "out"
        status, out, _ = run_main(
            capsys, "render", "--gallery", "koch", "--depth", "4",
            "--sample", "200", "--seed", "1", "--out", str(out_dir),
        )
        assert status == EXIT_OK
        assert parse_report(out)["render"]["samples"] == "200"
        svg = (out_dir / "koch.svg").read_text()
        assert 'id="samples"' in svg

    def test_run_api(self, workdir):
        spec = load_spec(None, "segment2")
        result = run("attractor", spec, RunOptions(depth=3, svg=False))
        assert result.status == EXIT_OK
        assert result.report.get("attractor", "points") == 8
        assert result.artifacts == []

    def test_unknown_command(self):
        result = run("explode", load_spec(None, "koch"))
        assert result.status == EXIT_FAILURE
