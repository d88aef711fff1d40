"""
Unit tests for SVG rendering
"""
import xml.etree.ElementTree as ET

import pytest

from src.main.python.core.exceptions import RasterUnavailableError
from src.main.python.services.attractor_service import attractor_service
from src.main.python.services.boundary_service import boundary_service
from src.main.python.utils.spec_parser import spec_parser
from src.main.python.utils.svg_renderer import SvgRenderer, render_svg, svg_renderer

pytestmark = pytest.mark.unit

NS = {"svg": "http://www.w3.org/2000/svg"}

DUST = """
ifs dust dim 2 backend euclidean
map scale 1/4 translate 0 0
map scale 1/4 translate 3/4 0
map scale 1/4 translate 0 3/4
map scale 1/4 translate 3/4 3/4
"""


def layer(root, name):
    return root.find(f"svg:g[@id='{name}']", NS)


class TestSvgRenderer:
    def test_one_dot_per_point(self, koch):
        approx = attractor_service.approximate(koch, 6)
        boundary = boundary_service.similarity_boundary(koch, 6, approx=approx)
        root = ET.fromstring(svg_renderer.render(approx, boundary))
        assert len(layer(root, "attractor").findall("svg:circle", NS)) == 4096
        assert len(layer(root, "boundary").findall("svg:circle", NS)) == boundary.count

    def test_output_is_deterministic(self, koch):
        approx = attractor_service.approximate(koch, 4)
        assert svg_renderer.render(approx) == svg_renderer.render(approx)

    def test_dots_stay_on_the_canvas(self, koch):
        renderer = SvgRenderer(canvas=200, padding=10)
        root = renderer.build(attractor_service.approximate(koch, 4))
        for circle in root.find("g[@id='attractor']"):
            assert 0.0 <= float(circle.get("cx")) <= 200.0
            assert 0.0 <= float(circle.get("cy")) <= 200.0

    def test_chaos_game_layer(self, koch):
        approx = attractor_service.approximate(koch, 4)
        samples = attractor_service.chaos_game(koch, 300, seed=5)
        root = ET.fromstring(svg_renderer.render(approx, samples=samples))
        assert len(layer(root, "samples").findall("svg:circle", NS)) == 300
        for circle in layer(root, "samples"):
            assert 0.0 <= float(circle.get("cx")) <= svg_renderer.canvas
            assert 0.0 <= float(circle.get("cy")) <= svg_renderer.canvas
        assert layer(ET.fromstring(svg_renderer.render(approx)), "samples") is None

    def test_empty_boundary_has_no_layer(self):
        ifs = spec_parser.parse(DUST).ifs
        approx = attractor_service.approximate(ifs, 4)
        boundary = boundary_service.similarity_boundary(ifs, 4, approx=approx)
        assert boundary.is_empty
        root = ET.fromstring(svg_renderer.render(approx, boundary))
        assert layer(root, "boundary") is None

    def test_sequence_backend_cannot_render(self, l1_schief):
        approx = attractor_service.approximate(l1_schief, 3)
        with pytest.raises(RasterUnavailableError, match="render unavailable"):
            svg_renderer.render(approx)

    def test_line_attractor_cannot_render(self, segment2):
        with pytest.raises(RasterUnavailableError):
            svg_renderer.render(attractor_service.approximate(segment2, 3))

    def test_write(self, koch, tmp_path):
        approx = attractor_service.approximate(koch, 3)
        target = render_svg(approx, None, tmp_path / "pics" / "koch.svg")
        assert target.exists()
        assert target.read_text(encoding="utf-8").startswith("<svg")
