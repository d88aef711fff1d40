"""
Line-oriented IFS spec files

    # comment
    ifs koch dim 2 backend euclidean
    map scale 1/3 rotate 60 translate 1/3 0
    map scale 1/2 rotate -90 translate 1/2 1/2 about 3/4 3/4
    map scale 1/3 matrix 1 0 0 1 translate 2/3 0
    depth 8

Sequence-space files declare `dim inf backend sequence` and use
`map scale 1/2 kind <interleave-odd|interleave-even|affine-first>`.
"""
import logging
import math
import re
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from ..core.config import settings
from ..core.exceptions import IfsError, SpecParseError
from ..models.space import Backend, EuclideanSimilitude, IfsSpec, SequenceSimilitude, Similitude
from ..models.spec_file import SpecFile
from ..services.spaces_service import SEQUENCE_KINDS, rotation_matrix, spaces_service

logger = logging.getLogger(__name__)

_DECIMAL = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_NUMBER = re.compile(
    rf"(?P<sign>[+-]?)(?:sqrt\((?P<root>{_DECIMAL})\)|(?P<plain>{_DECIMAL}))"
    rf"(?:/(?P<denominator>{_DECIMAL}))?"
)

_PARAMETERS = ("depth", "tol", "grid", "budget", "seed")


def format_real(value: float) -> str:
    """17 significant digits, enough to reproduce any double exactly"""
    return format(float(value), ".17g")


class SpecParser:
    """Parser and serializer for spec files"""

    def __init__(self):
        self.spaces = spaces_service
        self.default_depth = settings.default_depth
        self.default_budget = settings.enumeration_budget
        self.default_seed = settings.seed

    # ------------------------------------------------------------------
    # Numbers
    # ------------------------------------------------------------------

    def parse_fraction(self, token: str, line: Optional[int] = None) -> Fraction:
        """Exact value of a decimal or p/q literal"""
        match = _NUMBER.fullmatch(token)
        if not match or match.group("root") is not None:
            raise SpecParseError(f"expected an exact number, got {token!r}", line)
        value = Fraction(match.group("plain"))
        if match.group("denominator") is not None:
            denominator = Fraction(match.group("denominator"))
            if denominator == 0:
                raise SpecParseError(f"division by zero in {token!r}", line)
            value /= denominator
        return -value if match.group("sign") == "-" else value

    def parse_real(self, token: str, line: Optional[int] = None) -> float:
        """Value of a decimal, p/q or sqrt(a)/b literal"""
        match = _NUMBER.fullmatch(token)
        if not match:
            raise SpecParseError(f"invalid number {token!r}", line)
        if match.group("root") is None:
            return float(self.parse_fraction(token, line))
        value = math.sqrt(float(Fraction(match.group("root"))))
        if match.group("denominator") is not None:
            denominator = float(Fraction(match.group("denominator")))
            if denominator == 0:
                raise SpecParseError(f"division by zero in {token!r}", line)
            value /= denominator
        return -value if match.group("sign") == "-" else value

    # ------------------------------------------------------------------
    # Parsing
    # ------------------------------------------------------------------

    def parse(self, text: str) -> SpecFile:
        """
        Parse and validate a spec file

        Raises:
            SpecParseError: syntax errors (with the line number), invalid ratios,
                non-orthogonal matrices, mixed backends or failed validation
        """
        header: Optional[Tuple[str, Optional[int], Backend]] = None
        maps: List[Similitude] = []
        params = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            tokens = raw.split("#", 1)[0].split()
            if not tokens:
                continue
            keyword = tokens[0]
            if keyword == "ifs":
                if header is not None:
                    raise SpecParseError("duplicate ifs header", number)
                header = self._parse_header(tokens, number)
            elif keyword == "map":
                if header is None:
                    raise SpecParseError("map line before the ifs header", number)
                maps.append(self._parse_map(tokens, header, len(maps) + 1, number))
            elif keyword in _PARAMETERS:
                if keyword in params:
                    raise SpecParseError(f"duplicate parameter {keyword}", number)
                params[keyword] = self._parse_parameter(tokens, number)
            else:
                raise SpecParseError(f"unknown keyword {keyword!r}", number)

        if header is None:
            raise SpecParseError("missing ifs header")
        if len(maps) < 2:
            raise SpecParseError(f"an IFS needs at least two maps, found {len(maps)}")
        try:
            ifs = IfsSpec.of(maps, header[0])
        except IfsError as e:
            raise SpecParseError(str(e)) from e
        for f in maps:
            report = self.spaces.validate_similitude(f)
            if not report.passed:
                raise SpecParseError(
                    f"map {f.label} is not a similitude "
                    f"(deviation {report.max_relative_deviation:.3e})"
                )
        spec = SpecFile(
            ifs=ifs,
            depth=params.get("depth", self.default_depth),
            budget=params.get("budget", self.default_budget),
            seed=params.get("seed", self.default_seed),
            tol=params.get("tol"),
            grid=params.get("grid", []),
        )
        logger.debug(f"Parsed spec {spec.name}: {ifs.size} maps, depth {spec.depth}")
        return spec

    def _parse_header(self, tokens: List[str], line: int) -> Tuple[str, Optional[int], Backend]:
        if len(tokens) != 6 or tokens[2] != "dim" or tokens[4] != "backend":
            raise SpecParseError("expected 'ifs <name> dim <n> backend <backend>'", line)
        name, dim, backend_name = tokens[1], tokens[3], tokens[5]
        try:
            backend = Backend(backend_name)
        except ValueError:
            raise SpecParseError(f"unknown backend {backend_name!r}", line) from None
        if backend is Backend.SEQUENCE:
            if dim != "inf":
                raise SpecParseError("the sequence backend has dim inf", line)
            return name, None, backend
        if not dim.isdigit() or int(dim) < 1:
            raise SpecParseError(f"invalid dimension {dim!r}", line)
        return name, int(dim), backend

    def _parse_map(
        self, tokens: List[str], header: Tuple[str, Optional[int], Backend], index: int, line: int
    ) -> Similitude:
        _, dim, backend = header
        fields = self._split_fields(tokens[1:], line)
        if "scale" not in fields or len(fields["scale"]) != 1:
            raise SpecParseError("map needs 'scale <r>'", line)
        try:
            if backend is Backend.SEQUENCE:
                return self._sequence_map(fields, index, line)
            return self._euclidean_map(fields, dim, index, line)
        except SpecParseError:
            raise
        except (IfsError, ValueError) as e:
            raise SpecParseError(str(e), line) from e

    @staticmethod
    def _split_fields(tokens: List[str], line: int) -> dict:
        keys = {"scale", "rotate", "matrix", "translate", "about", "kind"}
        fields, current = {}, None
        for token in tokens:
            if token in keys:
                if token in fields:
                    raise SpecParseError(f"duplicate field {token!r}", line)
                current = token
                fields[current] = []
            elif current is None:
                raise SpecParseError(f"unexpected token {token!r}", line)
            else:
                fields[current].append(token)
        return fields

    def _sequence_map(self, fields: dict, index: int, line: int) -> SequenceSimilitude:
        extra = set(fields) - {"scale", "kind"}
        if extra:
            raise SpecParseError(f"sequence maps take scale and kind only, got {sorted(extra)}", line)
        kind = fields.get("kind", [])
        if len(kind) != 1 or kind[0] not in SEQUENCE_KINDS:
            raise SpecParseError(f"kind must be one of {', '.join(SEQUENCE_KINDS)}", line)
        ratio = self.parse_fraction(fields["scale"][0], line)
        return self.spaces.sequence_similitude(kind[0], ratio)

    def _euclidean_map(self, fields: dict, dim: int, index: int, line: int) -> EuclideanSimilitude:
        if "kind" in fields:
            raise SpecParseError("kind is only valid on the sequence backend", line)
        if "rotate" in fields and "matrix" in fields:
            raise SpecParseError("use either rotate or matrix, not both", line)
        ratio = self.parse_real(fields["scale"][0], line)
        if "rotate" in fields:
            if dim != 2 or len(fields["rotate"]) != 1:
                raise SpecParseError("rotate <degrees> needs dim 2", line)
            q = rotation_matrix(self.parse_real(fields["rotate"][0], line))
        elif "matrix" in fields:
            values = [self.parse_real(t, line) for t in fields["matrix"]]
            if len(values) != dim * dim:
                raise SpecParseError(f"matrix needs {dim * dim} values, got {len(values)}", line)
            q = np.array(values, dtype=float).reshape(dim, dim)
        else:
            q = np.eye(dim)
        t = self._vector(fields, "translate", dim, line)
        if "about" in fields:
            # rotate the image about c: Q (r x + t - c) + c
            c = self._vector(fields, "about", dim, line)
            t = q @ (t - c) + c
        return self.spaces.euclidean_similitude(ratio, q, t, label=f"f{index}")

    def _vector(self, fields: dict, key: str, dim: int, line: int) -> np.ndarray:
        tokens = fields.get(key, ["0"] * dim)
        if len(tokens) != dim:
            raise SpecParseError(f"{key} needs {dim} values, got {len(tokens)}", line)
        return np.array([self.parse_real(t, line) for t in tokens], dtype=float)

    def _parse_parameter(self, tokens: List[str], line: int):
        keyword, values = tokens[0], tokens[1:]
        if keyword == "grid":
            if not values:
                raise SpecParseError("grid needs at least one cell size", line)
            sizes = [self.parse_real(v, line) for v in values]
            if any(not h > 0 for h in sizes):
                raise SpecParseError("grid sizes must be positive", line)
            return sizes
        if len(values) != 1:
            raise SpecParseError(f"{keyword} takes exactly one value", line)
        if keyword == "tol":
            value = self.parse_real(values[0], line)
            if not value > 0:
                raise SpecParseError("tol must be positive", line)
            return value
        if not re.fullmatch(r"\d+", values[0]):
            raise SpecParseError(f"{keyword} must be a nonnegative integer", line)
        value = int(values[0])
        if keyword == "budget" and value < 1:
            raise SpecParseError("budget must be at least 1", line)
        return value

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def serialize(self, spec: SpecFile) -> str:
        """Text form that parses back to the same spec"""
        ifs = spec.ifs
        lines = []
        if ifs.backend is Backend.SEQUENCE:
            lines.append(f"ifs {spec.name} dim inf backend sequence")
            for f in ifs.maps:
                lines.append(f"map scale {f.ratio} kind {self._sequence_kind(f)}")
        else:
            lines.append(f"ifs {spec.name} dim {ifs.dimension} backend euclidean")
            for f in ifs.maps:
                matrix = " ".join(format_real(v) for v in f.matrix.ravel())
                translate = " ".join(format_real(v) for v in f.translation)
                lines.append(
                    f"map scale {format_real(f.ratio)} matrix {matrix} translate {translate}"
                )
        lines.append(f"depth {spec.depth}")
        lines.append(f"budget {spec.budget}")
        lines.append(f"seed {spec.seed}")
        if spec.tol is not None:
            lines.append(f"tol {format_real(spec.tol)}")
        if spec.grid:
            lines.append("grid " + " ".join(format_real(h) for h in spec.grid))
        return "\n".join(lines) + "\n"

    def _sequence_kind(self, f: SequenceSimilitude) -> str:
        for kind in SEQUENCE_KINDS:
            if self.spaces.sequence_similitude(kind, f.ratio).same_map(f):
                return kind
        raise SpecParseError(f"map {f.label or f!r} has no spec file form")


# Global spec parser instance
spec_parser = SpecParser()
