"""
SVG rendering of planar attractor approximations and boundary witnesses
"""
import logging
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..core.exceptions import RasterUnavailableError
from ..models.approximation import AttractorApprox, BoundaryApprox
from ..models.space import Backend

logger = logging.getLogger(__name__)

CANVAS = 800
PADDING = 16
MIN_DOT = 0.25


def _fmt(value: float) -> str:
    return f"{value:.4f}"


class SvgRenderer:
    """Draws representatives as dots sized by their error radius"""

    def __init__(self, canvas: int = CANVAS, padding: int = PADDING):
        self.canvas = canvas
        self.padding = padding

    def build(
        self,
        approx: AttractorApprox,
        boundary: Optional[BoundaryApprox] = None,
        samples: Optional[np.ndarray] = None,
    ) -> ET.Element:
        """
        SVG root with an attractor layer and, when witnesses exist, a boundary layer

        samples, a chaos game point cloud of K, adds a layer of fixed-size dots.

        Raises:
            RasterUnavailableError: the approximation is not planar Euclidean
        """
        if approx.backend is not Backend.EUCLIDEAN or approx.ifs.dimension != 2:
            raise RasterUnavailableError("render unavailable: SVG output needs a 2D Euclidean IFS")
        points = np.asarray(approx.points, dtype=float)
        lower = (points - approx.radii[:, None]).min(axis=0)
        upper = (points + approx.radii[:, None]).max(axis=0)
        extent = float(max((upper - lower).max(), 1e-12))
        scale = (self.canvas - 2 * self.padding) / extent

        def to_canvas(p):
            # SVG y grows downwards
            x = self.padding + (p[0] - lower[0]) * scale
            y = self.canvas - self.padding - (p[1] - lower[1]) * scale
            return x, y

        svg = ET.Element(
            "svg",
            xmlns="http://www.w3.org/2000/svg",
            version="1.1",
            width=f"{self.canvas}px",
            height=f"{self.canvas}px",
            viewBox=f"0 0 {self.canvas} {self.canvas}",
        )
        ET.SubElement(svg, "title").text = f"{approx.ifs.name or 'ifs'} depth {approx.depth}"

        layer = ET.SubElement(svg, "g", id="attractor", fill="#1f3a5f", stroke="none")
        for p, radius in zip(points, approx.radii):
            x, y = to_canvas(p)
            ET.SubElement(
                layer, "circle", cx=_fmt(x), cy=_fmt(y), r=_fmt(max(radius * scale, MIN_DOT))
            )

        if samples is not None and len(samples):
            cloud = ET.SubElement(svg, "g", id="samples", fill="#ff7f0e", stroke="none")
            for p in np.asarray(samples, dtype=float):
                x, y = to_canvas(p)
                ET.SubElement(cloud, "circle", cx=_fmt(x), cy=_fmt(y), r=_fmt(2 * MIN_DOT))

        if boundary is not None and not boundary.is_empty:
            highlight = ET.SubElement(
                svg, "g", id="boundary", fill="none", stroke="#d62728", **{"stroke-width": "1"}
            )
            witnesses = np.asarray(boundary.points, dtype=float)
            for p, radius in zip(witnesses, boundary.radii):
                x, y = to_canvas(p)
                ET.SubElement(
                    highlight,
                    "circle",
                    cx=_fmt(x),
                    cy=_fmt(y),
                    r=_fmt(max(radius * scale, 4 * MIN_DOT)),
                )
        return svg

    def render(
        self,
        approx: AttractorApprox,
        boundary: Optional[BoundaryApprox] = None,
        samples: Optional[np.ndarray] = None,
    ) -> str:
        """SVG document text; identical inputs give identical text"""
        svg = self.build(approx, boundary, samples)
        return ET.tostring(svg, encoding="unicode") + "\n"

    def write(
        self,
        approx: AttractorApprox,
        path: Union[str, Path],
        boundary: Optional[BoundaryApprox] = None,
        samples: Optional[np.ndarray] = None,
    ) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.render(approx, boundary, samples), encoding="utf-8")
        logger.info(f"SVG written to {target}")
        return target


# Global SVG renderer instance
svg_renderer = SvgRenderer()


def render_svg(
    approx: AttractorApprox,
    boundary: Optional[BoundaryApprox],
    path: Union[str, Path],
    samples: Optional[np.ndarray] = None,
) -> Path:
    """Write approx (and boundary witnesses) to an SVG file"""
    return svg_renderer.write(approx, path, boundary, samples)
