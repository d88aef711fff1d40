"""
Point arithmetic and similitude algebra for the Euclidean and sequence backends
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Optional, Sequence, Union

import numpy as np

from ..core.config import settings
from ..core.exceptions import (
    BackendMismatchError,
    DimensionMismatchError,
    InternalComputationError,
    NotContractionError,
    OrthogonalityError,
    PreimageOutsideSpaceError,
)
from ..models.results import ValidationReport
from ..models.space import (
    Backend,
    EuclideanPoint,
    EuclideanSimilitude,
    Point,
    SequencePoint,
    SequenceSimilitude,
    Similitude,
)

logger = logging.getLogger(__name__)

# Leading coordinates used as 1-Lipschitz features of sequence points
SEQUENCE_FEATURE_COORDS = 3

SEQUENCE_KINDS = ("interleave-odd", "interleave-even", "affine-first")


def rotation_matrix(degrees: float) -> np.ndarray:
    """2D rotation by the given angle, counterclockwise"""
    theta = math.radians(degrees)
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=float)


@lru_cache(maxsize=1 << 20)
def _float_map(point: SequencePoint) -> Dict[int, float]:
    return {k: float(v) for k, v in point.entries}


def _l1_float(p: SequencePoint, q: SequencePoint) -> float:
    a = _float_map(p)
    b = _float_map(q)
    total = 0.0
    for k, v in a.items():
        total += abs(v - b.get(k, 0.0))
    for k, v in b.items():
        if k not in a:
            total += abs(v)
    return total


class SpacesService:
    """Service for points and contracting similitudes"""

    def __init__(self):
        self.orthogonality_tolerance = settings.orthogonality_tolerance
        self.orthogonality_repair_limit = settings.orthogonality_repair_limit
        self.validation_samples = settings.validation_samples

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    def euclidean_similitude(
        self,
        ratio: float,
        matrix: Union[np.ndarray, Sequence[Sequence[float]]],
        translation: Sequence[float],
        label: str = "",
    ) -> EuclideanSimilitude:
        """
        Build f(x) = ratio * Q x + t, checking the contraction and orthogonality

        Args:
            ratio: contraction ratio in (0, 1)
            matrix: orthogonal linear part Q
            translation: translation vector t
            label: optional name used in reports

        Returns:
            The validated similitude; Q is re-orthonormalized when its deviation
            lies between the tolerance and the repair limit
        """
        ratio = float(ratio)
        if not 0.0 < ratio < 1.0:
            raise NotContractionError(f"ratio {ratio} is not a strict contraction")
        q = np.array(matrix, dtype=float, copy=True)
        t = np.array(translation, dtype=float, copy=True).ravel()
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] != t.shape[0]:
            raise DimensionMismatchError(
                f"matrix shape {q.shape} does not match translation of length {t.shape[0]}"
            )
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(t))):
            raise ValueError("similitude parameters must be finite")
        deviation = self.orthogonality_deviation(q)
        if deviation > self.orthogonality_repair_limit:
            raise OrthogonalityError(f"matrix deviates from orthogonal by {deviation:.3e}")
        if deviation > self.orthogonality_tolerance:
            logger.warning(f"Re-orthonormalizing matrix with deviation {deviation:.3e}")
            u, _, vt = np.linalg.svd(q)
            q = u @ vt
        q.setflags(write=False)
        t.setflags(write=False)
        return EuclideanSimilitude(ratio, q, t, label)

    def sequence_similitude(self, kind: str, ratio: Fraction = Fraction(1, 2)) -> SequenceSimilitude:
        """
        Build one of the three l1 map shapes

        Args:
            kind: interleave-odd (k -> 2k), interleave-even (k -> 2k + 1)
                or affine-first (contraction towards e_1)
            ratio: dyadic contraction ratio

        Returns:
            The sequence-space similitude
        """
        ratio = Fraction(ratio)
        if not 0 < ratio < 1:
            raise NotContractionError(f"ratio {ratio} is not a strict contraction")
        if ratio.denominator & (ratio.denominator - 1):
            raise NotContractionError(f"ratio {ratio} must be dyadic on the sequence backend")
        if kind == "interleave-odd":
            return SequenceSimilitude(ratio, stride=2, offset=0, label=kind)
        if kind == "interleave-even":
            return SequenceSimilitude(ratio, stride=2, offset=1, label=kind)
        if kind == "affine-first":
            # contraction by ratio towards e_1
            return SequenceSimilitude(
                ratio, shift=SequencePoint.unit(1, 1 - ratio), label=kind
            )
        raise ValueError(f"Unknown sequence map kind: {kind}")

    @staticmethod
    def orthogonality_deviation(matrix: np.ndarray) -> float:
        q = np.asarray(matrix, dtype=float)
        return float(np.abs(q.T @ q - np.eye(q.shape[0])).max())

    # ------------------------------------------------------------------
    # Single point operations
    # ------------------------------------------------------------------

    def apply(self, f: Similitude, p: Point) -> Point:
        """Return f(p)"""
        self._check_pair(f, p)
        if f.backend is Backend.EUCLIDEAN:
            return EuclideanPoint.from_array(f.linear @ p.as_array() + f.translation)
        values: Dict[int, Fraction] = {
            f.relocate(k): f.ratio * v for k, v in p.entries
        }
        for k, v in f.shift.entries:
            values[k] = values.get(k, Fraction(0)) + v
        return SequencePoint.from_mapping(values)

    def invert(self, f: Similitude, p: Point) -> Point:
        """
        Return the unique q with f(q) = p

        Raises:
            PreimageOutsideSpaceError: the sequence point is not in the image pattern of f
        """
        self._check_pair(f, p)
        if f.backend is Backend.EUCLIDEAN:
            x = f.matrix.T @ (p.as_array() - f.translation) / f.ratio
            return EuclideanPoint.from_array(x)
        values = p.as_dict()
        for k, v in f.shift.entries:
            values[k] = values.get(k, Fraction(0)) - v
        result: Dict[int, Fraction] = {}
        for index, v in values.items():
            if v == 0:
                continue
            source, rest = divmod(index - f.offset, f.stride)
            if rest != 0 or source < 1:
                raise PreimageOutsideSpaceError(
                    f"coordinate {index} is outside the image pattern of {f.label or 'map'}"
                )
            result[source] = v / f.ratio
        return SequencePoint.from_mapping(result)

    def compose(self, f: Similitude, g: Similitude) -> Similitude:
        """Return f ∘ g"""
        if f.backend is not g.backend:
            raise BackendMismatchError("cannot compose maps from different backends")
        if f.backend is Backend.EUCLIDEAN:
            if f.dimension != g.dimension:
                raise DimensionMismatchError("cannot compose maps of different dimensions")
            q = f.matrix @ g.matrix
            t = f.ratio * (f.matrix @ g.translation) + f.translation
            q.setflags(write=False)
            t.setflags(write=False)
            return EuclideanSimilitude(f.ratio * g.ratio, q, t, f"{f.label}∘{g.label}")
        return SequenceSimilitude(
            ratio=f.ratio * g.ratio,
            stride=f.stride * g.stride,
            offset=f.stride * g.offset + f.offset,
            shift=self.apply(f, g.shift),
            label=f"{f.label}∘{g.label}",
        )

    def distance(self, p: Point, q: Point) -> float:
        """Euclidean l2 distance or l1 distance of sequence points, as a float"""
        if p.backend is Backend.SEQUENCE and q.backend is Backend.SEQUENCE:
            return float(self.exact_distance(p, q))
        self._check_points(p, q)
        return float(np.linalg.norm(p.as_array() - q.as_array()))

    def exact_distance(self, p: SequencePoint, q: SequencePoint) -> Fraction:
        """Exact l1 distance of two sequence points"""
        self._check_points(p, q)
        a, b = p.as_dict(), q.as_dict()
        return sum(
            (abs(a.get(k, Fraction(0)) - b.get(k, Fraction(0))) for k in set(a) | set(b)),
            Fraction(0),
        )

    def fixed_point(self, f: Similitude) -> Point:
        """Return the unique fixed point of f"""
        if f.backend is Backend.EUCLIDEAN:
            try:
                x = np.linalg.solve(np.eye(f.dimension) - f.linear, f.translation)
            except np.linalg.LinAlgError as e:
                logger.error(f"Fixed point solve failed: {e}")
                raise InternalComputationError(f"Failed to solve for fixed point: {str(e)}")
            return EuclideanPoint.from_array(x)
        if f.is_identity_relocation:
            return SequencePoint.from_mapping(
                {k: v / (1 - f.ratio) for k, v in f.shift.entries}
            )
        x = SequencePoint.origin()
        for _ in range(64):
            nxt = self.apply(f, x)
            if nxt == x:
                return x
            x = nxt
        raise InternalComputationError(
            f"fixed point of {f.label or 'map'} has no finite dyadic representation"
        )

    def validate_similitude(
        self, f: Similitude, samples: Optional[int] = None, seed: int = 0
    ):
        """
        Sample point pairs and measure the deviation from exact distance scaling

        Args:
            f: map to check
            samples: number of pairs, at least 2
            seed: random seed

        Returns:
            ValidationReport with pass/fail
        """
        samples = samples or self.validation_samples
        if samples < 2:
            raise ValueError("validate_similitude needs at least 2 samples")
        rng = np.random.default_rng(seed)
        ratio = float(f.ratio)
        worst = 0.0
        if f.backend is Backend.EUCLIDEAN:
            xs = rng.normal(size=(samples, f.dimension))
            ys = rng.normal(size=(samples, f.dimension))
            fx = xs @ f.linear.T + f.translation
            fy = ys @ f.linear.T + f.translation
            before = np.linalg.norm(xs - ys, axis=1)
            after = np.linalg.norm(fx - fy, axis=1)
            keep = before > 0
            if np.any(keep):
                worst = float(np.max(np.abs(after[keep] / before[keep] - ratio)) / ratio)
            tolerance = 1e-9
        else:
            for _ in range(samples):
                x = self._random_sequence_point(rng)
                y = self._random_sequence_point(rng)
                before = self.exact_distance(x, y)
                if before == 0:
                    continue
                after = self.exact_distance(self.apply(f, x), self.apply(f, y))
                worst = max(worst, float(abs(after / before - f.ratio) / f.ratio))
            tolerance = 0.0
        passed = worst <= tolerance
        if not passed:
            logger.warning(f"Similitude {f.label or f!r} failed validation: deviation {worst:.3e}")
        return ValidationReport(
            ratio=ratio,
            samples=samples,
            max_relative_deviation=worst,
            tolerance=tolerance,
            passed=passed,
        )

    def preserves_nonnegative_cone(self, f: Similitude) -> bool:
        """True when f maps sequences with nonnegative coordinates into themselves"""
        return f.backend is Backend.SEQUENCE and f.shift.is_nonnegative()

    # ------------------------------------------------------------------
    # Bulk operations used by the approximation services
    # ------------------------------------------------------------------

    def apply_many(self, f: Similitude, points):
        """Apply f to an (M, n) array or a tuple of sequence points"""
        if f.backend is Backend.EUCLIDEAN:
            return points @ f.linear.T + f.translation
        return tuple(self.apply(f, p) for p in points)

    def invert_many(self, f: Similitude, points):
        """
        Preimages under f of a bulk point set

        Returns:
            (preimages, defined) where defined marks points inside the image pattern
            of f; undefined sequence preimages are replaced by the origin
        """
        if f.backend is Backend.EUCLIDEAN:
            points = np.asarray(points, dtype=float)
            preimages = (points - f.translation) @ f.matrix / f.ratio
            return preimages, np.ones(points.shape[0], dtype=bool)
        out, defined = [], np.ones(len(points), dtype=bool)
        for row, p in enumerate(points):
            try:
                out.append(self.invert(f, p))
            except PreimageOutsideSpaceError:
                out.append(SequencePoint.origin())
                defined[row] = False
        return tuple(out), defined

    @staticmethod
    def point_as_list(p: Point) -> list:
        """Report form of a point: floats, or index:value strings for sequences"""
        if p.backend is Backend.EUCLIDEAN:
            return [float(v) for v in p.coords]
        return [f"{k}:{v}" for k, v in p.entries]

    def to_point_set(self, points: Sequence[Point], backend: Backend):
        """Pack single points into the bulk representation of the backend"""
        if backend is Backend.EUCLIDEAN:
            if not points:
                return np.zeros((0, 1))
            return np.array([p.as_array() for p in points], dtype=float)
        return tuple(points)

    def point_at(self, points, index: int, backend: Backend) -> Point:
        if backend is Backend.EUCLIDEAN:
            return EuclideanPoint.from_array(points[index])
        return points[index]

    def features(self, points, backend: Backend) -> np.ndarray:
        """
        Float features whose coordinatewise differences never exceed the distance

        Euclidean points are their own features; a sequence point maps to its first
        coordinates followed by the l1 norm of the remaining tail.
        """
        if backend is Backend.EUCLIDEAN:
            return np.asarray(points, dtype=float)
        out = np.zeros((len(points), SEQUENCE_FEATURE_COORDS + 1), dtype=float)
        for row, p in enumerate(points):
            for k, v in _float_map(p).items():
                if k <= SEQUENCE_FEATURE_COORDS:
                    out[row, k - 1] = v
                else:
                    out[row, SEQUENCE_FEATURE_COORDS] += abs(v)
        return out

    def pair_distances(self, a, ia: np.ndarray, b, ib: np.ndarray, backend: Backend) -> np.ndarray:
        """True distances between a[ia[k]] and b[ib[k]]"""
        if backend is Backend.EUCLIDEAN:
            if ia.size == 0:
                return np.zeros(0)
            return np.linalg.norm(a[ia] - b[ib], axis=1)
        return np.array([_l1_float(a[int(i)], b[int(j)]) for i, j in zip(ia, ib)], dtype=float)

    def distance_matrix(self, a, b, backend: Backend) -> np.ndarray:
        """All pairwise distances, for small sets"""
        if backend is Backend.EUCLIDEAN:
            from scipy.spatial.distance import cdist

            return cdist(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        return np.array([[_l1_float(p, q) for q in b] for p in a], dtype=float).reshape(
            len(a), len(b)
        )

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    @staticmethod
    def _random_sequence_point(rng: np.random.Generator) -> SequencePoint:
        values = {}
        for index in rng.choice(np.arange(1, 9), size=3, replace=False):
            values[int(index)] = Fraction(int(rng.integers(-16, 17)), 2 ** int(rng.integers(0, 6)))
        return SequencePoint.from_mapping(values)

    @staticmethod
    def _check_points(p: Point, q: Point):
        if p.backend is not q.backend:
            raise BackendMismatchError("points belong to different backends")
        if p.backend is Backend.EUCLIDEAN and p.dimension != q.dimension:
            raise DimensionMismatchError(f"dimensions {p.dimension} and {q.dimension} differ")

    @staticmethod
    def _check_pair(f: Similitude, p: Point):
        if f.backend is not p.backend:
            raise BackendMismatchError(
                f"map backend {f.backend.value} does not match point backend {p.backend.value}"
            )
        if f.backend is Backend.EUCLIDEAN and f.dimension != p.dimension:
            raise DimensionMismatchError(
                f"map dimension {f.dimension} does not match point dimension {p.dimension}"
            )


# Global spaces service instance
spaces_service = SpacesService()
