"""
Unit tests for the text report format
"""
import numpy as np
import pytest

from src.main.python.models.results import Verdict
from src.main.python.utils.report_writer import Report, format_value, parse_report

pytestmark = pytest.mark.unit


class TestFormatValue:
    @pytest.mark.parametrize(
        "value, text",
        [
            (None, "none"),
            (True, "true"),
            (np.bool_(False), "false"),
            (7, "7"),
            (np.int64(-3), "-3"),
            (0.1, "0.10000000000000001"),
            (0.5, "0.5"),
            (Verdict.SUPPORTED, "supported"),
            ([1, 0.25, "x"], "1 0.25 x"),
            ("koch", "koch"),
        ],
    )
    def test_values(self, value, text):
        assert format_value(value) == text


class TestReport:
    def build(self):
        report = Report()
        report.section("run", command="dim", depth=8)
        report.section("dimension", alpha=2.0, closed_form=True)
        return report

    def test_render(self):
        text = self.build().render()
        assert text == (
            "[run]\ncommand = dim\ndepth = 8\n\n"
            "[dimension]\nalpha = 2\nclosed_form = true\n"
        )

    def test_any_key_is_allowed(self):
        report = Report()
        report.section("battery", name="koch", title="x")
        assert report.render() == "[battery]\nname = koch\ntitle = x\n"

    def test_lookup(self):
        report = self.build()
        assert report.names == ["run", "dimension"]
        assert report.get("dimension", "alpha") == 2.0
        with pytest.raises(KeyError):
            report.get("run", "alpha")

    def test_parse_back(self):
        sections = parse_report(self.build().render())
        assert sections == {
            "run": {"command": "dim", "depth": "8"},
            "dimension": {"alpha": "2", "closed_form": "true"},
        }

    def test_write_creates_directories(self, tmp_path):
        target = self.build().write(tmp_path / "out" / "koch-dim.txt")
        assert target.read_text(encoding="utf-8") == self.build().render()

    def test_rendering_is_deterministic(self):
        assert self.build().render() == self.build().render()
