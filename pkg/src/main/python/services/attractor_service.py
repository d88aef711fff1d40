"""
Attractor service: certified finite approximations of K and the Hausdorff metric
"""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from ..core.config import settings
from ..core.exceptions import (
    BackendMismatchError,
    DimensionMismatchError,
    EmptyPointSetError,
    RasterUnavailableError,
)
from ..models.approximation import AttractorApprox, CellCover, PointSet
from ..models.space import Backend, EuclideanPoint, IfsSpec, Point, SequencePoint
from ..utils.spatial_hash import SpatialHash
from .codespace_service import codespace_service
from .spaces_service import spaces_service

logger = logging.getLogger(__name__)

# Buckets slightly wider than the query radius keep matches within one ring
BUCKET_SLACK = 1.0 + 1e-9


class AttractorService:
    """Service for approximating attractors"""

    def __init__(self):
        self.spaces = spaces_service
        self.codespace = codespace_service
        self.brute_force_threshold = settings.brute_force_threshold
        self.workers = settings.workers

    def invariant_ball(self, ifs: IfsSpec) -> Tuple[Point, float]:
        """
        Ball(c, R) mapped into itself by every f_i, hence containing K

        Returns:
            c = fixed point of f_1 and R = max_i d(f_i(c), c) / (1 - r_i)
        """
        center = self.spaces.fixed_point(ifs.maps[0])
        radius = 0.0
        for f in ifs.maps:
            step = self.spaces.distance(self.spaces.apply(f, center), center)
            radius = max(radius, step / (1.0 - float(f.ratio)))
        for f in ifs.maps:
            step = self.spaces.distance(self.spaces.apply(f, center), center)
            if step + float(f.ratio) * radius > radius * (1.0 + 1e-12) + 1e-15:
                logger.warning(f"Invariant ball check failed for {f.label or f!r}")
        return center, radius

    def diameter_bound(self, ifs: IfsSpec) -> float:
        """Certified upper bound 2R on diam(K)"""
        return 2.0 * self.invariant_ball(ifs)[1]

    def approximate(
        self, ifs: IfsSpec, depth: int, budget: Optional[int] = None
    ) -> AttractorApprox:
        """
        Representatives f_I(c) and radii r_I * R for all addresses of length depth

        Args:
            ifs: the iterated function system
            depth: address length n
            budget: largest admissible N ** n, defaults to the configured budget

        Returns:
            AttractorApprox in lexicographic address order

        Raises:
            BudgetExceededError: N ** depth exceeds the budget
        """
        count = self.codespace.check_budget(depth, ifs.size, budget)
        center, radius = self.invariant_ball(ifs)
        backend = ifs.backend
        if backend is Backend.EUCLIDEAN:
            points: PointSet = center.as_array()[None, :]
        else:
            points = (center,)
        radii = np.array([radius], dtype=float)

        executor = ThreadPoolExecutor(max_workers=self.workers) if self.workers > 1 else None
        try:
            for level in range(depth):
                # only the last level is wide enough to be worth splitting
                pool = executor if level == depth - 1 else None
                points, radii = self._expand(ifs, points, radii, pool)
        finally:
            if executor is not None:
                executor.shutdown()

        features = self.spaces.features(points, backend)
        logger.info(f"Approximated {ifs.name or 'ifs'} at depth {depth}: {count} points, R = {radius:.6g}")
        return AttractorApprox(
            ifs=ifs,
            depth=depth,
            center=center,
            radius=radius,
            points=points,
            radii=radii,
            features=features,
        )

    def _expand(self, ifs: IfsSpec, points: PointSet, radii: np.ndarray, executor=None):
        def block(f):
            return self.spaces.apply_many(f, points), float(f.ratio) * radii

        if executor is not None:
            blocks = list(executor.map(block, ifs.maps))
        else:
            blocks = [block(f) for f in ifs.maps]
        new_radii = np.concatenate([b[1] for b in blocks])
        if ifs.backend is Backend.EUCLIDEAN:
            return np.concatenate([b[0] for b in blocks], axis=0), new_radii
        return tuple(itertools.chain.from_iterable(b[0] for b in blocks)), new_radii

    def self_consistency(self, ifs: IfsSpec, depth: int, budget: Optional[int] = None) -> float:
        """D(A_n, A_{n+1}), which is at most r_max ** n * R"""
        self.codespace.check_budget(depth + 1, ifs.size, budget)
        coarse = self.approximate(ifs, depth, budget)
        fine = self.approximate(ifs, depth + 1, budget)
        distance = self.approximate_distance(coarse, fine)
        bound = ifs.r_max**depth * coarse.radius
        if distance > bound * (1.0 + 1e-12) + 1e-15:
            logger.warning(f"Self-consistency distance {distance:.6g} exceeds bound {bound:.6g}")
        return distance

    def approximate_distance(self, first: AttractorApprox, second: AttractorApprox) -> float:
        """Hausdorff distance between the representative sets of two approximations"""
        return self._hausdorff(
            first.points, first.features, second.points, second.features, first.backend
        )

    def hausdorff_distance(self, first, second, method: str = "auto") -> float:
        """
        Hausdorff distance between two finite point sets

        Args:
            first: (M, n) array, or a sequence of EuclideanPoint or SequencePoint
            second: same backend as first
            method: "auto", "hash" or "brute"

        Returns:
            max of the two directed sup-inf distances
        """
        a, backend_a = self._as_point_set(first)
        b, backend_b = self._as_point_set(second)
        if backend_a is not backend_b:
            raise BackendMismatchError("point sets belong to different backends")
        if backend_a is Backend.EUCLIDEAN and a.shape[1] != b.shape[1]:
            raise DimensionMismatchError(f"dimensions {a.shape[1]} and {b.shape[1]} differ")
        fa = self.spaces.features(a, backend_a)
        fb = self.spaces.features(b, backend_b)
        return self._hausdorff(a, fa, b, fb, backend_a, method)

    def _hausdorff(self, a, fa, b, fb, backend: Backend, method: str = "auto") -> float:
        if len(a) == 0 or len(b) == 0:
            raise EmptyPointSetError("Hausdorff distance needs two nonempty point sets")
        forward, forward_idx = self.nearest(a, fa, b, fb, backend, method=method)
        backward, backward_idx = self.nearest(b, fb, a, fa, backend, method=method)
        if forward.max() >= backward.max():
            q = int(np.argmax(forward))
            value, source, target, partner = float(forward[q]), a, b, int(forward_idx[q])
        else:
            q = int(np.argmax(backward))
            value, source, target, partner = float(backward[q]), b, a, int(backward_idx[q])
        if backend is Backend.SEQUENCE:
            # round the exact l1 distance outward
            exact = self.spaces.exact_distance(source[q], target[partner])
            value = float(exact)
            if Fraction(value) < exact:
                value = math.nextafter(value, math.inf)
        return value

    def nearest(
        self,
        a: PointSet,
        fa: np.ndarray,
        b: PointSet,
        fb: np.ndarray,
        backend: Backend,
        limit: float = math.inf,
        method: str = "auto",
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Distance from every point of a to its nearest point of b

        Searches with a doubling radius on a spatial hash whose bucket equals the
        radius. Distances beyond limit are reported as inf with index -1.

        Returns:
            (distances, indices into b)
        """
        m = len(a)
        out = np.full(m, math.inf)
        idx = np.full(m, -1, dtype=np.int64)
        if m == 0 or len(b) == 0:
            return out, idx
        if method == "brute" or (
            method == "auto" and max(m, len(b)) < self.brute_force_threshold
        ):
            matrix = self.spaces.distance_matrix(a, b, backend)
            idx = np.argmin(matrix, axis=1).astype(np.int64)
            out = matrix[np.arange(m), idx]
            far = out > limit
            out[far] = math.inf
            idx[far] = -1
            return out, idx

        pending = np.arange(m, dtype=np.int64)
        radius = self._initial_radius(fa, fb, len(b))
        while pending.size:
            step = min(radius, limit)
            index = SpatialHash(fb, step * BUCKET_SLACK)
            qi, ri = index.query_pairs(fa[pending], step)
            best, best_idx = self._group_min(qi, ri, self.spaces.pair_distances(
                a, pending[qi], b, ri, backend
            ), pending.size)
            resolved = best <= step
            out[pending[resolved]] = best[resolved]
            idx[pending[resolved]] = best_idx[resolved]
            pending = pending[~resolved]
            if step >= limit:
                break
            radius *= 2.0
        return out, idx

    def near_pairs(
        self,
        a: PointSet,
        fa: np.ndarray,
        b: PointSet,
        fb: np.ndarray,
        radius: float,
        backend: Backend,
        labels: Optional[np.ndarray] = None,
        label: Optional[int] = None,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        All pairs (i, j) with d(a_i, b_j) <= radius

        Returns:
            (indices into a, indices into b, distances), sorted by (i, j)
        """
        if len(a) == 0 or len(b) == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros(0)
        bucket = radius * BUCKET_SLACK if radius > 0 else self._initial_radius(fa, fb, len(b))
        index = SpatialHash(fb, bucket, labels)
        qi, ri = index.query_pairs(fa, radius, label)
        d = self.spaces.pair_distances(a, qi, b, ri, backend)
        keep = d <= radius
        return qi[keep], ri[keep], d[keep]

    @staticmethod
    def _group_min(qi: np.ndarray, ri: np.ndarray, d: np.ndarray, size: int):
        best = np.full(size, math.inf)
        best_idx = np.full(size, -1, dtype=np.int64)
        if qi.size == 0:
            return best, best_idx
        order = np.lexsort((ri, d, qi))
        qs = qi[order]
        firsts = np.ones(qs.size, dtype=bool)
        firsts[1:] = qs[1:] != qs[:-1]
        best[qs[firsts]] = d[order][firsts]
        best_idx[qs[firsts]] = ri[order][firsts]
        return best, best_idx

    @staticmethod
    def _initial_radius(fa: np.ndarray, fb: np.ndarray, count: int) -> float:
        stacked = np.vstack([fa, fb])
        extent = float((stacked.max(axis=0) - stacked.min(axis=0)).max())
        if extent <= 0.0 or not math.isfinite(extent):
            return 1.0
        return extent / max(count, 1) ** (1.0 / stacked.shape[1])

    def _as_point_set(self, points) -> Tuple[PointSet, Backend]:
        if isinstance(points, np.ndarray):
            array = np.asarray(points, dtype=float)
            if array.ndim == 1:
                array = array.reshape(-1, 1)
            return array, Backend.EUCLIDEAN
        items = list(points)
        if not items:
            raise EmptyPointSetError("point set is empty")
        if all(isinstance(p, SequencePoint) for p in items):
            return tuple(items), Backend.SEQUENCE
        if all(isinstance(p, EuclideanPoint) for p in items):
            dims = {p.dimension for p in items}
            if len(dims) > 1:
                raise DimensionMismatchError(f"point set mixes dimensions {sorted(dims)}")
            return np.array([p.as_array() for p in items], dtype=float), Backend.EUCLIDEAN
        raise BackendMismatchError("point set mixes backends")

    def cell_cover(self, approx: AttractorApprox, h: float) -> CellCover:
        """Occupied cells floor(p / h) of the representatives"""
        if approx.backend is not Backend.EUCLIDEAN:
            raise RasterUnavailableError("raster unavailable on the sequence backend")
        return self.cover_points(approx.points, h)

    def cover_points(self, points: np.ndarray, h: float) -> CellCover:
        if not h > 0 or not math.isfinite(h):
            raise ValueError(f"cell size must be positive, got {h}")
        if len(points) == 0:
            return CellCover(h=h, cells=frozenset())
        cells = np.unique(np.floor(np.asarray(points) / h).astype(np.int64), axis=0)
        return CellCover(h=h, cells=frozenset(tuple(int(v) for v in row) for row in cells))

    def chaos_game(self, ifs: IfsSpec, count: int, seed: Optional[int] = None) -> np.ndarray:
        """
        Random-iteration sample of K for rendering, without error radii

        Maps are drawn with probabilities r_i ** alpha.
        """
        if ifs.backend is not Backend.EUCLIDEAN:
            raise RasterUnavailableError("chaos game sampling needs the Euclidean backend")
        if count < 1:
            raise ValueError("count must be at least 1")
        table = self.codespace.ratio_table(ifs)
        weights = np.array([r**table.alpha for r in table.ratios])
        rng = np.random.default_rng(settings.seed if seed is None else seed)
        burn_in = 32
        choices = rng.choice(ifs.size, size=count + burn_in, p=weights / weights.sum())
        x = self.spaces.fixed_point(ifs.maps[0]).as_array()
        out = np.empty((count, x.shape[0]))
        for step, k in enumerate(choices):
            f = ifs.maps[k]
            x = f.linear @ x + f.translation
            if step >= burn_in:
                out[step - burn_in] = x
        return out


# Global attractor service instance
attractor_service = AttractorService()
