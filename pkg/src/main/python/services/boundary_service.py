"""
Boundary service: the similarity boundary, its complement U, inverse invariance
and the comparison with the topological boundary of tiles
"""
import logging
import math
from typing import List, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..core.config import settings
from ..core.exceptions import (
    BudgetExceededError,
    NotTileCandidateError,
    RasterUnavailableError,
    SymbolRangeError,
)
from ..models.approximation import AttractorApprox, BoundaryApprox, OverlapWitness, PointSet
from ..models.codespace import solve_similarity_dimension
from ..models.results import (
    BoundaryCluster,
    BoundaryComparison,
    InvarianceStatus,
    InvarianceVerdict,
)
from ..models.space import Backend, IfsSpec
from ..utils.spatial_hash import SpatialHash
from .attractor_service import BUCKET_SLACK, attractor_service
from .spaces_service import spaces_service

logger = logging.getLogger(__name__)

# Membership codes for preimages
OUTSIDE, UNDECIDED, INSIDE = -1, 0, 1

# Relative slack for the cell-ball touching test
TOUCH_SLACK = 1.0 + 1e-9

# Extra levels used to certify undecided preimages outside K
MEMBERSHIP_REFINE_LEVELS = 2


def take(points: PointSet, indices) -> PointSet:
    """Subset of a bulk point set"""
    idx = np.asarray(indices, dtype=np.int64)
    if isinstance(points, np.ndarray):
        return points[idx]
    return tuple(points[int(i)] for i in idx)


class BoundaryService:
    """Service for the similarity boundary B and the open set U = K \\ B"""

    def __init__(self):
        self.spaces = spaces_service
        self.attractor = attractor_service
        self.tau_factor = settings.tau_factor
        self.margin_factor = settings.margin_factor

    def default_tau(self, approx: AttractorApprox) -> float:
        """tau = tau_factor * r_max ** n * R"""
        return self.tau_factor * approx.ifs.r_max**approx.depth * approx.radius

    # ------------------------------------------------------------------
    # Overlap pairs
    # ------------------------------------------------------------------

    def overlap_pairs(
        self, approx: AttractorApprox, j: int, k: int, tau: Optional[float] = None
    ) -> List[OverlapWitness]:
        """
        Pairs (I, J) of depth-n cells from branches j and k with d(p_I, p_J) <= tau

        Args:
            approx: attractor approximation of depth at least 1
            j: first branch
            k: second branch, different from j
            tau: search radius, defaults to default_tau(approx)

        Returns:
            Witnesses sorted by (I, J)
        """
        self._check_branches(approx, j, k)
        tau = self.default_tau(approx) if tau is None else tau
        self._warn_uncertified(approx, tau)
        index = self._branch_hash(approx, tau)
        src, dst, gaps = self._pairs_between(approx, index, j, k, tau)
        return self._witness_list(approx, j, k, src, dst, gaps)

    def overlap_pairs_brute_force(
        self, approx: AttractorApprox, j: int, k: int, tau: Optional[float] = None
    ) -> List[OverlapWitness]:
        """All-pairs reference for overlap_pairs, for small depths"""
        self._check_branches(approx, j, k)
        tau = self.default_tau(approx) if tau is None else tau
        sj, sk = approx.branch_slice(j), approx.branch_slice(k)
        src, dst = np.meshgrid(
            np.arange(sj.start, sj.stop, dtype=np.int64),
            np.arange(sk.start, sk.stop, dtype=np.int64),
            indexing="ij",
        )
        src, dst = src.ravel(), dst.ravel()
        gaps = self.spaces.pair_distances(approx.points, src, approx.points, dst, approx.backend)
        keep = gaps <= tau
        return self._witness_list(approx, j, k, src[keep], dst[keep], gaps[keep])

    def _check_branches(self, approx: AttractorApprox, j: int, k: int):
        if approx.depth < 1:
            raise ValueError("overlap detection needs an approximation of depth at least 1")
        for symbol in (j, k):
            if not 1 <= symbol <= approx.ifs.size:
                raise SymbolRangeError(f"branch {symbol} outside 1..{approx.ifs.size}")
        if j == k:
            raise ValueError("overlap pairs need two different branches")

    def _warn_uncertified(self, approx: AttractorApprox, tau: float):
        if tau < 2.0 * approx.max_radius:
            logger.warning(
                f"tau = {tau:.6g} is below twice the largest cell radius; results are not certified"
            )

    def _branch_hash(self, approx: AttractorApprox, tau: float) -> SpatialHash:
        labels = approx.branch_of(np.arange(approx.count))
        bucket = tau * BUCKET_SLACK if tau > 0 else 1.0
        return SpatialHash(approx.features, bucket, labels)

    def _pairs_between(self, approx: AttractorApprox, index: SpatialHash, j: int, k: int, tau: float):
        sj = approx.branch_slice(j)
        qi, ri = index.query_pairs(approx.features[sj], tau, label=k)
        src = qi + sj.start
        gaps = self.spaces.pair_distances(approx.points, src, approx.points, ri, approx.backend)
        keep = gaps <= tau
        return src[keep], ri[keep], gaps[keep]

    def _witness_list(self, approx, j, k, src, dst, gaps) -> List[OverlapWitness]:
        touching = gaps <= (approx.radii[src] + approx.radii[dst]) * TOUCH_SLACK
        return [
            OverlapWitness(
                j=j,
                k=k,
                first=approx.address(s),
                second=approx.address(d),
                gap=float(g),
                touching=bool(t),
            )
            for s, d, g, t in zip(src, dst, gaps, touching)
        ]

    # ------------------------------------------------------------------
    # Similarity boundary
    # ------------------------------------------------------------------

    def similarity_boundary(
        self,
        ifs: IfsSpec,
        depth: int,
        tau: Optional[float] = None,
        approx: Optional[AttractorApprox] = None,
        budget: Optional[int] = None,
    ) -> BoundaryApprox:
        """
        Witnesses f_j^-1(p_I) for every overlap pair (I, J) over ordered branch pairs

        One witness is kept per source address I, paired with its closest partner.

        Returns:
            BoundaryApprox; an empty one certifies B = ∅ at resolution tau
        """
        approx = approx or self.attractor.approximate(ifs, depth, budget)
        if approx.depth < 1:
            raise ValueError("the similarity boundary needs depth at least 1")
        tau = self.default_tau(approx) if tau is None else tau
        self._warn_uncertified(approx, tau)
        logger.info(f"Computing similarity boundary at depth {approx.depth}, tau = {tau:.6g}")

        index = self._branch_hash(approx, tau)
        sources, partners, gaps = [], [], []
        pair_counts = {}
        for j in range(1, ifs.size + 1):
            for k in range(1, ifs.size + 1):
                if j == k:
                    continue
                src, dst, gap = self._pairs_between(approx, index, j, k, tau)
                pair_counts[(j, k)] = int(src.size)
                sources.append(src)
                partners.append(dst)
                gaps.append(gap)
        src = np.concatenate(sources)
        dst = np.concatenate(partners)
        gap = np.concatenate(gaps)

        # best partner per source: smallest gap, then smallest partner index
        if src.size:
            order = np.lexsort((dst, gap, src))
            src, dst, gap = src[order], dst[order], gap[order]
            firsts = np.ones(src.size, dtype=bool)
            firsts[1:] = src[1:] != src[:-1]
            src, dst, gap = src[firsts], dst[firsts], gap[firsts]

        branch = approx.branch_of(src).astype(np.int64)
        partner_branch = approx.branch_of(dst).astype(np.int64)
        touching = gap <= (approx.radii[src] + approx.radii[dst]) * TOUCH_SLACK
        ratios = np.array([float(f.ratio) for f in ifs.maps])
        radii = approx.radii[src] / ratios[branch - 1] if src.size else np.zeros(0)
        points = self._witness_points(ifs, approx, src, branch)
        features = self.spaces.features(points, approx.backend)

        logger.info(
            f"Similarity boundary: {src.size} witnesses, {int(touching.sum())} touching"
        )
        return BoundaryApprox(
            ifs=ifs,
            depth=approx.depth,
            tau=tau,
            points=points,
            radii=radii,
            features=features,
            branch=branch,
            partner_branch=partner_branch,
            source=src,
            partner=dst,
            gaps=gap,
            touching=touching,
            certified=tau >= 2.0 * approx.max_radius,
            margin=approx.max_radius + tau,
            pair_counts=pair_counts,
        )

    def _witness_points(self, ifs, approx, src, branch) -> PointSet:
        if approx.backend is Backend.EUCLIDEAN:
            points = np.zeros((src.size, ifs.dimension))
        else:
            points = [None] * src.size
        for j in range(1, ifs.size + 1):
            rows = np.flatnonzero(branch == j)
            if rows.size == 0:
                continue
            pre, _ = self.spaces.invert_many(ifs.maps[j - 1], take(approx.points, src[rows]))
            if approx.backend is Backend.EUCLIDEAN:
                points[rows] = pre
            else:
                for row, p in zip(rows, pre):
                    points[row] = p
        return points if approx.backend is Backend.EUCLIDEAN else tuple(points)

    def cluster_witnesses(
        self,
        boundary: BoundaryApprox,
        linkage: Optional[float] = None,
        core_only: bool = False,
    ) -> List[BoundaryCluster]:
        """Single-linkage clusters of the witnesses at distance 2 tau, with hull boxes"""
        rows = boundary.core_indices() if core_only else np.arange(boundary.count)
        if rows.size == 0:
            return []
        linkage = 2.0 * boundary.tau if linkage is None else linkage
        points = take(boundary.points, rows)
        features = boundary.features[rows]
        qi, ri, _ = self.attractor.near_pairs(
            points, features, points, features, linkage, boundary.ifs.backend
        )
        graph = coo_matrix(
            (np.ones(qi.size), (qi, ri)), shape=(rows.size, rows.size)
        )
        n_components, labels = connected_components(graph, directed=False)
        coords = points if boundary.ifs.backend is Backend.EUCLIDEAN else features
        clusters = []
        for component in range(n_components):
            members = coords[labels == component]
            clusters.append(
                BoundaryCluster(
                    size=int(members.shape[0]),
                    lower=members.min(axis=0).tolist(),
                    upper=members.max(axis=0).tolist(),
                )
            )
        clusters.sort(key=lambda c: (c.lower, c.upper))
        return clusters

    # ------------------------------------------------------------------
    # The open set U
    # ------------------------------------------------------------------

    def complement_u(
        self, approx: AttractorApprox, boundary: BoundaryApprox, tau: Optional[float] = None
    ) -> np.ndarray:
        """
        Indices of representatives farther than tau + e_I + w_max from every witness

        Returns:
            Sorted indices into approx
        """
        tau = boundary.tau if tau is None else tau
        if boundary.is_empty:
            return np.arange(approx.count, dtype=np.int64)
        reach = tau + approx.max_radius + boundary.max_radius
        distances, _ = self.attractor.nearest(
            approx.points, approx.features, boundary.points, boundary.features,
            approx.backend, limit=reach,
        )
        keep = distances > tau + approx.radii + boundary.max_radius
        return np.flatnonzero(keep).astype(np.int64)

    def complement_u_from_branches(
        self, approx: AttractorApprox, tau: Optional[float] = None
    ) -> np.ndarray:
        """
        U computed branchwise from U_i = K \\ (union of K_j, j != i)

        B holds exactly the points that some f_i sends into another branch, so
        K \\ B is the intersection over i of f_i^-1(U_i) ∩ K. A representative x is
        kept when no image f_i(x) comes within tau - e_max of another branch.

        Returns:
            Sorted indices into approx
        """
        tau = self.default_tau(approx) if tau is None else tau
        ifs = approx.ifs
        reach = max(tau - approx.max_radius, 0.0)
        index = self._branch_hash(approx, reach if reach > 0 else tau)
        excluded = np.zeros(approx.count, dtype=bool)
        for i, f in enumerate(ifs.maps, start=1):
            images = self.spaces.apply_many(f, approx.points)
            features = self.spaces.features(images, approx.backend)
            for j in range(1, ifs.size + 1):
                if j == i:
                    continue
                qi, ri = index.query_pairs(features, reach, label=j)
                gaps = self.spaces.pair_distances(images, qi, approx.points, ri, approx.backend)
                excluded[qi[gaps <= reach]] = True
        return np.flatnonzero(~excluded).astype(np.int64)

    # ------------------------------------------------------------------
    # Inverse invariance
    # ------------------------------------------------------------------

    def membership(
        self,
        ifs: IfsSpec,
        points: PointSet,
        features: np.ndarray,
        defined: np.ndarray,
        approx: AttractorApprox,
        margin: float,
    ) -> np.ndarray:
        """
        Three-way classification of points against K

        Returns:
            INSIDE when within margin of the approximation, OUTSIDE when at least
            margin_factor * margin away or certified outside, UNDECIDED otherwise
        """
        codes = np.full(len(points), UNDECIDED, dtype=np.int8)
        codes[~defined] = OUTSIDE
        if approx.backend is Backend.SEQUENCE and all(
            self.spaces.preserves_nonnegative_cone(f) for f in ifs.maps
        ):
            negative = np.array([not p.is_nonnegative() for p in points], dtype=bool)
            codes[negative & defined] = OUTSIDE
        rows = np.flatnonzero(codes == UNDECIDED)
        if rows.size == 0:
            return codes
        far = self.margin_factor * margin
        distances, _ = self.attractor.nearest(
            take(points, rows), features[rows], approx.points, approx.features,
            approx.backend, limit=far,
        )
        codes[rows[distances <= margin]] = INSIDE
        codes[rows[distances >= far]] = OUTSIDE
        return codes

    def certify_outside(
        self,
        ifs: IfsSpec,
        points: PointSet,
        features: np.ndarray,
        approx: AttractorApprox,
        cache: Optional[dict] = None,
    ) -> np.ndarray:
        """
        Mask of points certainly outside K, judged MEMBERSHIP_REFINE_LEVELS deeper

        K lies in the union of the deeper cell balls, so a point outside all of
        them is outside K. Nothing is certified when the deeper approximation
        exceeds the budget.

        Args:
            cache: holds the deeper approximation across calls
        """
        cache = {} if cache is None else cache
        if "approx" not in cache:
            try:
                cache["approx"] = self.attractor.approximate(
                    ifs, approx.depth + MEMBERSHIP_REFINE_LEVELS
                )
            except BudgetExceededError:
                logger.warning("Membership refinement skipped: deeper approximation exceeds the budget")
                cache["approx"] = None
        deeper = cache["approx"]
        if deeper is None or len(points) == 0:
            return np.zeros(len(points), dtype=bool)
        reach = deeper.max_radius
        distances, _ = self.attractor.nearest(
            points, features, deeper.points, deeper.features, deeper.backend, limit=reach
        )
        return distances > reach

    def check_inverse_invariance(
        self,
        ifs: IfsSpec,
        boundary: BoundaryApprox,
        approx: AttractorApprox,
        tau: Optional[float] = None,
    ) -> InvarianceVerdict:
        """
        Test f_i^-1(B) ∩ K ⊆ B on the touching witnesses

        Args:
            ifs: the iterated function system
            boundary: similarity boundary approximation
            approx: attractor approximation of the same depth
            tau: resolution, defaults to boundary.tau

        Returns:
            InvarianceVerdict; violated carries the triple (i, b, f_i^-1(b))
        """
        tau = boundary.tau if tau is None else tau
        margin = approx.max_radius + tau
        near = tau / ifs.r_min + boundary.max_radius
        far = self.margin_factor * near
        core = boundary.core_indices()
        if core.size == 0:
            logger.info("No touching witnesses; inverse invariance holds trivially")
            return InvarianceVerdict(
                status=InvarianceStatus.INVARIANT, membership_margin=margin, boundary_margin=near
            )

        backend = approx.backend
        witnesses = take(boundary.points, core)
        witness_features = boundary.features[core]
        checked = undecided = 0
        refined: dict = {}
        violation = None
        for i, f in enumerate(ifs.maps, start=1):
            preimages, defined = self.spaces.invert_many(f, witnesses)
            features = self.spaces.features(preimages, backend)
            codes = self.membership(ifs, preimages, features, defined, approx, margin)
            checked += len(preimages)
            rows = np.flatnonzero(codes != OUTSIDE)
            if rows.size == 0:
                continue
            distances, _ = self.attractor.nearest(
                take(preimages, rows), features[rows], witnesses, witness_features,
                backend, limit=far,
            )
            inside = codes[rows] == INSIDE
            violating = rows[inside & (distances > far)]
            unclear = (distances > near) & ~(inside & (distances > far))
            # undecided membership only matters away from B
            retry = np.flatnonzero(unclear & ~inside)
            if retry.size:
                outside = self.certify_outside(
                    ifs, take(preimages, rows[retry]), features[rows[retry]], approx, refined
                )
                unclear[retry[outside]] = False
            undecided += int(unclear.sum())
            if violating.size and violation is None:
                k = int(violating[0])
                violation = (i, k, preimages, features)
            logger.debug(
                f"Map {i}: {rows.size} preimages possibly in K, "
                f"{violating.size} violating, {int(unclear.sum())} undecided"
            )

        if violation is not None:
            i, k, preimages, features = violation
            x = self.spaces.point_at(preimages, k, backend)
            distance, _ = self.attractor.nearest(
                take(preimages, [k]), features[[k]], witnesses, witness_features, backend
            )
            witness = self.spaces.point_at(witnesses, k, backend)
            logger.info(f"Inverse invariance violated by map {i}")
            return InvarianceVerdict(
                status=InvarianceStatus.VIOLATED,
                map_index=i,
                witness=self.spaces.point_as_list(witness),
                preimage=self.spaces.point_as_list(x),
                preimage_distance_to_boundary=float(distance[0]),
                membership_margin=margin,
                boundary_margin=near,
                checked=checked,
                indeterminate=undecided,
            )
        status = InvarianceStatus.INDETERMINATE if undecided else InvarianceStatus.INVARIANT
        if status is InvarianceStatus.INVARIANT and far >= approx.radius:
            # a violation closer than far to B goes unseen; K fits in a ball of this radius
            logger.info(f"Resolution too coarse to certify invariance: far = {far:.6g}")
            status = InvarianceStatus.INDETERMINATE
        logger.info(f"Inverse invariance {status.value}: {checked} preimages, {undecided} undecided")
        return InvarianceVerdict(
            status=status,
            membership_margin=margin,
            boundary_margin=near,
            checked=checked,
            indeterminate=undecided,
        )

    # ------------------------------------------------------------------
    # Tiles
    # ------------------------------------------------------------------

    def tile_topological_boundary(
        self,
        ifs: IfsSpec,
        depth: int,
        h: Optional[float] = None,
        approx: Optional[AttractorApprox] = None,
        budget: Optional[int] = None,
    ) -> np.ndarray:
        """
        Centers of occupied grid cells with an unoccupied face neighbour

        Raises:
            RasterUnavailableError: sequence backend
            NotTileCandidateError: similarity dimension differs from the ambient dimension
        """
        if ifs.backend is not Backend.EUCLIDEAN:
            raise RasterUnavailableError("raster unavailable on the sequence backend")
        alpha = solve_similarity_dimension(ifs.ratios)
        if abs(alpha - ifs.dimension) > 1e-9:
            raise NotTileCandidateError(
                f"not a self-similar tile candidate: similarity dimension {alpha:.10g} "
                f"differs from ambient dimension {ifs.dimension}"
            )
        approx = approx or self.attractor.approximate(ifs, depth, budget)
        floor = 2.0 * approx.max_radius
        h = floor if h is None else h
        if h < floor * (1.0 - 1e-12):
            raise ValueError(f"cell size {h} is below twice the largest cell radius {floor}")
        occupied = self.attractor.cell_cover(approx, h).cells
        edge = []
        for cell in sorted(occupied):
            if any(
                cell[:axis] + (cell[axis] + step,) + cell[axis + 1 :] not in occupied
                for axis in range(len(cell))
                for step in (-1, 1)
            ):
                edge.append(cell)
        logger.info(f"Topological boundary raster: {len(edge)} of {len(occupied)} cells at h = {h:.6g}")
        if not edge:
            return np.zeros((0, ifs.dimension))
        return (np.array(edge, dtype=float) + 0.5) * h

    def compare_boundaries(
        self,
        similarity: BoundaryApprox,
        topological: np.ndarray,
        tau: Optional[float] = None,
        h: Optional[float] = None,
    ) -> BoundaryComparison:
        """
        Directed distances between the touching witnesses and a rastered boundary

        The threshold is tau + largest witness radius + half a cell diagonal.
        """
        ifs = similarity.ifs
        if ifs.backend is not Backend.EUCLIDEAN:
            raise RasterUnavailableError("raster unavailable on the sequence backend")
        tau = similarity.tau if tau is None else tau
        if h is None:
            _, radius = self.attractor.invariant_ball(ifs)
            h = 2.0 * ifs.r_max**similarity.depth * radius
        threshold = tau + similarity.max_radius + h * math.sqrt(ifs.dimension) / 2.0
        core = take(similarity.points, similarity.core_indices())
        topo = np.asarray(topological, dtype=float).reshape(-1, ifs.dimension)
        forward = self._directed(core, topo)
        backward = self._directed(topo, core)
        containment = forward <= threshold
        return BoundaryComparison(
            containment=containment,
            equality=containment and backward <= threshold,
            similarity_to_topological=forward,
            topological_to_similarity=backward,
            threshold=threshold,
        )

    def _directed(self, source: np.ndarray, target: np.ndarray) -> float:
        if len(source) == 0:
            return 0.0
        if len(target) == 0:
            return math.inf
        distances, _ = self.attractor.nearest(source, source, target, target, Backend.EUCLIDEAN)
        return float(distances.max())


# Global boundary service instance
boundary_service = BoundaryService()
