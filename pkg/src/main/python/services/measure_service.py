"""
Measure service: interval estimates of the image measure mu = nu ∘ g^-1
"""
import logging
import math
from abc import ABC, abstractmethod
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from ..core.config import settings
from ..core.exceptions import BackendMismatchError, SymbolRangeError
from ..models.approximation import AttractorApprox, BoundaryApprox, PointSet, address_index
from ..models.codespace import Address
from ..models.results import IntervalEstimate, ScalingVerdict, Verdict
from ..models.space import Backend, IfsSpec, Point, Similitude
from .attractor_service import attractor_service
from .boundary_service import TOUCH_SLACK, take
from .codespace_service import codespace_service
from .spaces_service import spaces_service

logger = logging.getLogger(__name__)

INSIDE, STRADDLES, OUTSIDE = 1, 0, -1

# (row -> Address, representatives, radii)
CellFamily = Tuple[Callable[[int], Address], PointSet, np.ndarray]

# (source, target) -> rows of branch source that may meet K_target
StraddlerTable = Dict[Tuple[int, int], np.ndarray]


class RegionPredicate(ABC):
    """
    Conservative three-valued test of cell balls against a region

    INSIDE means ball(point, radius) lies in the region, OUTSIDE means the ball
    misses it, STRADDLES covers everything else.
    """

    description = "region"

    @abstractmethod
    def classify(
        self, points: PointSet, features: np.ndarray, radii: np.ndarray, backend: Backend
    ) -> np.ndarray:
        """Return INSIDE / STRADDLES / OUTSIDE codes, one per ball"""


class EverythingRegion(RegionPredicate):
    description = "everything"

    def classify(self, points, features, radii, backend):
        return np.full(len(radii), INSIDE, dtype=np.int8)


class EmptyRegion(RegionPredicate):
    description = "empty"

    def classify(self, points, features, radii, backend):
        return np.full(len(radii), OUTSIDE, dtype=np.int8)


class BoxRegion(RegionPredicate):
    """Closed axis-parallel box in R^n"""

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != self.upper.shape or np.any(self.lower > self.upper):
            raise ValueError("box bounds must have equal shape and lower <= upper")
        self.description = f"box{self.lower.tolist()}-{self.upper.tolist()}"

    @classmethod
    def interval(cls, lo: float, hi: float) -> "BoxRegion":
        return cls([lo], [hi])

    def classify(self, points, features, radii, backend):
        if backend is not Backend.EUCLIDEAN:
            raise BackendMismatchError("box regions live in R^n")
        points = np.asarray(points, dtype=float)
        r = radii[:, None]
        inside = np.all((points - r >= self.lower) & (points + r <= self.upper), axis=1)
        gap = np.maximum(np.maximum(self.lower - points, points - self.upper), 0.0)
        outside = np.linalg.norm(gap, axis=1) > radii
        codes = np.full(len(radii), STRADDLES, dtype=np.int8)
        codes[inside] = INSIDE
        codes[outside] = OUTSIDE
        return codes


class BallUnionRegion(RegionPredicate):
    """Union of closed balls, used for inflated witness sets"""

    def __init__(self, centers: PointSet, features: np.ndarray, radii: np.ndarray, backend: Backend):
        self.centers = centers
        self.features = features
        self.radii = np.asarray(radii, dtype=float)
        self.backend = backend
        self.description = f"union of {len(self.radii)} balls"

    def classify(self, points, features, radii, backend):
        if backend is not self.backend:
            raise BackendMismatchError("region and cells belong to different backends")
        codes = np.full(len(radii), OUTSIDE, dtype=np.int8)
        if len(self.radii) == 0 or len(radii) == 0:
            return codes
        reach = float(radii.max() + self.radii.max())
        distances, nearest = attractor_service.nearest(
            points, features, self.centers, self.features, backend, limit=reach
        )
        hit = nearest >= 0
        codes[hit & (distances <= radii + self.radii.max())] = STRADDLES
        covered = hit.copy()
        covered[hit] = distances[hit] + radii[hit] <= self.radii[nearest[hit]]
        codes[covered] = INSIDE
        return codes


class MeasureService:
    """Service for certified bounds on the image measure"""

    def __init__(self):
        self.spaces = spaces_service
        self.attractor = attractor_service
        self.codespace = codespace_service
        self.pair_lookahead = settings.pair_lookahead
        self.branch_width_tolerance = settings.branch_width_tolerance

    # ------------------------------------------------------------------
    # Cylinder bookkeeping
    # ------------------------------------------------------------------

    def cylinder_masses(self, ifs: IfsSpec, depth: int) -> np.ndarray:
        """nu(C_I) = r_I ** alpha for every depth-n address, in lexicographic order"""
        table = self.codespace.ratio_table(ifs)
        weights = [r**table.alpha for r in table.ratios]
        masses = np.ones(1)
        for _ in range(depth):
            masses = np.concatenate([w * masses for w in weights])
        return masses

    def address_point(self, address: Address, tail: int, ifs: IfsSpec) -> Tuple[Point, float]:
        """
        g(I tail tail ...) = f_I(fixed point of f_tail), with radius r_I * R
        """
        address.validate(ifs.size)
        if not 1 <= tail <= ifs.size:
            raise SymbolRangeError(f"tail symbol {tail} outside 1..{ifs.size}")
        point = self.spaces.fixed_point(ifs.maps[tail - 1])
        for symbol in reversed(address.symbols):
            point = self.spaces.apply(ifs.maps[symbol - 1], point)
        _, radius = self.attractor.invariant_ball(ifs)
        table = self.codespace.ratio_table(ifs)
        return point, self.codespace.r_of(address, table) * radius

    def prefix_rows(self, approx: AttractorApprox, prefix: Address) -> slice:
        """Rows of the depth-n cells extending prefix"""
        prefix.validate(approx.ifs.size)
        if len(prefix) > approx.depth:
            raise ValueError(f"prefix {prefix} is longer than the depth {approx.depth}")
        span = approx.ifs.size ** (approx.depth - len(prefix))
        start = address_index(prefix, approx.ifs.size) * span
        return slice(start, start + span)

    def _interval(
        self, lower: float, upper: float, depth: int, region: str, **extra
    ) -> IntervalEstimate:
        lower = min(max(lower, 0.0), 1.0)
        upper = min(max(upper, lower), 1.0)
        return IntervalEstimate(lower=lower, upper=upper, depth=depth, region=region, **extra)

    @staticmethod
    def _mass(masses: np.ndarray, mask: np.ndarray) -> float:
        # fsum keeps the sum independent of the evaluation order
        return math.fsum(masses[mask].tolist())

    # ------------------------------------------------------------------
    # Straddle detection with lookahead refinement
    # ------------------------------------------------------------------

    def touching_cells(
        self,
        ifs: IfsSpec,
        first: CellFamily,
        second: CellFamily,
        lookahead: Optional[int] = None,
    ) -> np.ndarray:
        """
        Which cells of the first family may meet the union of the second family

        Each family is (address_of, representatives, radii) where address_of maps a
        row to its Address. Candidate pairs whose
        balls meet are refined lookahead levels deeper; a cell is kept when one of
        its children still touches a child of some second-family cell.

        Returns:
            Boolean mask over the first family
        """
        lookahead = self.pair_lookahead if lookahead is None else lookahead
        addresses_a, points_a, radii_a = first
        addresses_b, points_b, radii_b = second
        mask = np.zeros(len(radii_a), dtype=bool)
        if len(radii_a) == 0 or len(radii_b) == 0:
            return mask
        backend = ifs.backend
        qi, ri = self._touching_pairs(points_a, radii_a, points_b, radii_b, backend)
        if qi.size == 0:
            return mask
        if lookahead == 0:
            mask[qi] = True
            return mask

        cand_a = np.unique(qi)
        cand_b = np.unique(ri)
        children = self.attractor.approximate(ifs, lookahead)
        unit = children.radii / children.radius if children.radius > 0 else np.zeros(children.count)
        cache: Dict[Tuple[int, ...], Similitude] = {}
        kids_a, kradii_a, owners_a = self._children(
            ifs, [addresses_a(int(k)) for k in cand_a], radii_a[cand_a], children, unit, cache
        )
        kids_b, kradii_b, _ = self._children(
            ifs, [addresses_b(int(k)) for k in cand_b], radii_b[cand_b], children, unit, cache
        )
        ki, _ = self._touching_pairs(kids_a, kradii_a, kids_b, kradii_b, backend)
        mask[cand_a[np.unique(owners_a[ki])]] = True
        return mask

    def _touching_pairs(self, points_a, radii_a, points_b, radii_b, backend):
        features_a = self.spaces.features(points_a, backend)
        features_b = self.spaces.features(points_b, backend)
        reach = float(radii_a.max() + radii_b.max())
        qi, ri, d = self.attractor.near_pairs(
            points_a, features_a, points_b, features_b, reach, backend
        )
        keep = d <= (radii_a[qi] + radii_b[ri]) * TOUCH_SLACK
        return qi[keep], ri[keep]

    def _children(self, ifs, addresses, radii, children: AttractorApprox, unit, cache):
        blocks, kid_radii, owners = [], [], []
        for row, (address, radius) in enumerate(zip(addresses, radii)):
            f = self._cell_map(ifs, address.symbols, cache)
            blocks.append(self.spaces.apply_many(f, children.points))
            kid_radii.append(radius * unit)
            owners.append(np.full(children.count, row, dtype=np.int64))
        if ifs.backend is Backend.EUCLIDEAN:
            points = np.concatenate(blocks, axis=0)
        else:
            points = tuple(p for block in blocks for p in block)
        return points, np.concatenate(kid_radii), np.concatenate(owners)

    def _cell_map(self, ifs: IfsSpec, symbols: Tuple[int, ...], cache) -> Similitude:
        """f_I = f_i1 ∘ f_i2 ∘ ... ∘ f_in, sharing prefixes through cache"""
        if symbols in cache:
            return cache[symbols]
        if len(symbols) == 1:
            f = ifs.maps[symbols[0] - 1]
        else:
            f = self.spaces.compose(
                self._cell_map(ifs, symbols[:-1], cache), ifs.maps[symbols[-1] - 1]
            )
        cache[symbols] = f
        return f

    def _family(self, approx: AttractorApprox, rows) -> CellFamily:
        rows = np.arange(approx.count)[rows] if isinstance(rows, slice) else np.asarray(rows)
        return (
            lambda k: approx.address(int(rows[k])),
            take(approx.points, rows),
            approx.radii[rows],
        )

    def branch_straddlers(self, approx: AttractorApprox, source: int, target: int) -> np.ndarray:
        """Rows of branch source whose cells may meet K_target"""
        if approx.depth < 1:
            raise ValueError("branch estimates need depth at least 1")
        src = approx.branch_slice(source)
        mask = self.touching_cells(
            approx.ifs,
            self._family(approx, src),
            self._family(approx, approx.branch_slice(target)),
        )
        return np.flatnonzero(mask) + src.start

    def straddler_table(self, approx: AttractorApprox) -> StraddlerTable:
        """branch_straddlers for every ordered pair of different branches"""
        n = approx.ifs.size
        return {
            (source, target): self.branch_straddlers(approx, source, target)
            for source in range(1, n + 1)
            for target in range(1, n + 1)
            if source != target
        }

    def _straddlers(
        self, approx: AttractorApprox, source: int, target: int, table: Optional[StraddlerTable]
    ) -> np.ndarray:
        if table is not None and (source, target) in table:
            return table[(source, target)]
        return self.branch_straddlers(approx, source, target)

    # ------------------------------------------------------------------
    # Estimates
    # ------------------------------------------------------------------

    def mu_region(
        self,
        predicate: RegionPredicate,
        ifs: IfsSpec,
        depth: int,
        approx: Optional[AttractorApprox] = None,
        budget: Optional[int] = None,
    ) -> IntervalEstimate:
        """
        Sum nu over cells inside the region (lower) and inside or straddling (upper)

        Raises:
            BudgetExceededError: N ** depth exceeds the budget
        """
        approx = approx or self.attractor.approximate(ifs, depth, budget)
        codes = predicate.classify(approx.points, approx.features, approx.radii, approx.backend)
        masses = self.cylinder_masses(ifs, approx.depth)
        lower = self._mass(masses, codes == INSIDE)
        upper = self._mass(masses, codes != OUTSIDE)
        return self._interval(lower, upper, approx.depth, predicate.description)

    def mu_branch(
        self,
        ifs: IfsSpec,
        i: int,
        depth: int,
        approx: Optional[AttractorApprox] = None,
        budget: Optional[int] = None,
        straddlers: Optional[StraddlerTable] = None,
    ) -> IntervalEstimate:
        """
        Bounds on mu(K_i)

        The geometric lower bound counts branch-i cells that miss every other
        branch. Cylinder inclusion gives mu(K_i) >= r_i ** alpha, which raises the
        lower bound whenever some cell straddles; analytic_clamp records that.
        """
        if not 1 <= i <= ifs.size:
            raise SymbolRangeError(f"branch {i} outside 1..{ifs.size}")
        approx = approx or self.attractor.approximate(ifs, depth, budget)
        masses = self.cylinder_masses(ifs, approx.depth)
        own = np.zeros(approx.count, dtype=bool)
        own[approx.branch_slice(i)] = True
        covered = own.copy()
        exclusive = own.copy()
        for k in range(1, ifs.size + 1):
            if k != i:
                covered[self._straddlers(approx, k, i, straddlers)] = True
                exclusive[self._straddlers(approx, i, k, straddlers)] = False
        geometric = self._mass(masses, exclusive)
        upper = self._mass(masses, covered)
        table = self.codespace.ratio_table(ifs)
        analytic = table.ratios[i - 1] ** table.alpha
        lower = max(geometric, analytic)
        logger.debug(f"mu(K_{i}) in [{lower:.6g}, {upper:.6g}] at depth {approx.depth}")
        return self._interval(
            lower,
            upper,
            approx.depth,
            f"K_{i}",
            analytic_clamp=analytic > geometric + 1e-12,
            geometric_lower=min(geometric, 1.0),
        )

    def mu_overlap(
        self,
        ifs: IfsSpec,
        i: int,
        j: int,
        depth: int,
        approx: Optional[AttractorApprox] = None,
        budget: Optional[int] = None,
        straddlers: Optional[StraddlerTable] = None,
    ) -> IntervalEstimate:
        """
        Upper bound on mu(K_i ∩ K_j); the lower bound is always 0

        A cell counts when it lies in branch i and may meet K_j, in branch j and may
        meet K_i, or in a third branch and may meet both.
        """
        for symbol in (i, j):
            if not 1 <= symbol <= ifs.size:
                raise SymbolRangeError(f"branch {symbol} outside 1..{ifs.size}")
        if i == j:
            raise ValueError("mu_overlap needs two different branches")
        approx = approx or self.attractor.approximate(ifs, depth, budget)
        masses = self.cylinder_masses(ifs, approx.depth)
        counted = np.zeros(approx.count, dtype=bool)
        counted[self._straddlers(approx, i, j, straddlers)] = True
        counted[self._straddlers(approx, j, i, straddlers)] = True
        for k in range(1, ifs.size + 1):
            if k in (i, j):
                continue
            both = np.intersect1d(
                self._straddlers(approx, k, i, straddlers),
                self._straddlers(approx, k, j, straddlers),
            )
            counted[both] = True
        upper = self._mass(masses, counted)
        return self._interval(0.0, upper, approx.depth, f"K_{i} ∩ K_{j}")

    def mu_boundary(
        self,
        ifs: IfsSpec,
        boundary: BoundaryApprox,
        depth: Optional[int] = None,
        approx: Optional[AttractorApprox] = None,
        budget: Optional[int] = None,
    ) -> IntervalEstimate:
        """
        Upper bound on mu(B); the lower bound is always 0

        A depth-n cell K_L counts when it lies within e_L + tau + w_max of the
        witnesses and some image f_j(K_L) may meet a branch K_k with k != j.
        """
        depth = boundary.depth if depth is None else depth
        approx = approx or self.attractor.approximate(ifs, depth, budget)
        if boundary.is_empty:
            return self._interval(0.0, 0.0, approx.depth, "B")
        masses = self.cylinder_masses(ifs, approx.depth)
        reach = approx.max_radius + boundary.tau + boundary.max_radius
        distances, _ = self.attractor.nearest(
            approx.points, approx.features, boundary.points, boundary.features,
            approx.backend, limit=reach,
        )
        near = distances <= approx.radii + boundary.tau + boundary.max_radius
        rows = np.flatnonzero(near)

        symbolic = np.zeros(approx.count, dtype=bool)
        if rows.size:
            cells = self._family(approx, rows)
            for j, f in enumerate(ifs.maps, start=1):
                images = (
                    lambda k, j=j: Address((j,) + cells[0](k).symbols),
                    self.spaces.apply_many(f, cells[1]),
                    float(f.ratio) * cells[2],
                )
                for k in range(1, ifs.size + 1):
                    if k == j:
                        continue
                    mask = self.touching_cells(
                        ifs, images, self._family(approx, approx.branch_slice(k))
                    )
                    symbolic[rows[mask]] = True
        upper = self._mass(masses, near & symbolic)
        logger.debug(f"mu(B) <= {upper:.6g} at depth {approx.depth}")
        return self._interval(0.0, upper, approx.depth, "B")

    def mu_cell(self, approx: AttractorApprox, prefix: Address) -> IntervalEstimate:
        """Bounds on mu(K_P) for a cylinder image K_P with |P| <= depth"""
        masses = self.cylinder_masses(approx.ifs, approx.depth)
        rows = self.prefix_rows(approx, prefix)
        own = np.zeros(approx.count, dtype=bool)
        own[rows] = True
        lower = self._mass(masses, own)
        if len(prefix) == 0:
            return self._interval(lower, lower, approx.depth, "K")
        others = np.flatnonzero(~own)
        mask = self.touching_cells(
            approx.ifs, self._family(approx, others), self._family(approx, rows)
        )
        covered = own.copy()
        covered[others[mask]] = True
        return self._interval(
            lower, self._mass(masses, covered), approx.depth, f"K_{prefix}"
        )

    def branch_condition_supported(
        self, ifs: IfsSpec, approx: AttractorApprox
    ) -> bool:
        """Every mu_branch interval contains r_i ** alpha with small width"""
        table = self.codespace.ratio_table(ifs)
        for i in range(1, ifs.size + 1):
            estimate = self.mu_branch(ifs, i, approx.depth, approx=approx)
            target = table.ratios[i - 1] ** table.alpha
            if not estimate.contains(target, 1e-12) or estimate.width > self.branch_width_tolerance:
                return False
        return True

    def check_scaling(
        self,
        ifs: IfsSpec,
        prefix: Address,
        cell: Address,
        depth: int,
        approx: Optional[AttractorApprox] = None,
        precondition: Optional[bool] = None,
        budget: Optional[int] = None,
    ) -> ScalingVerdict:
        """
        Compare mu(f_I(K_J)) with r_I ** alpha * mu(K_J)

        Args:
            prefix: I
            cell: J, with |I| + |J| <= depth
            precondition: whether mu(K_i) = r_i ** alpha is supported; computed
                when omitted

        Returns:
            supported when the intervals intersect; otherwise refuted if the
            precondition holds and indeterminate if not
        """
        approx = approx or self.attractor.approximate(ifs, depth, budget)
        if precondition is None:
            precondition = self.branch_condition_supported(ifs, approx)
        table = self.codespace.ratio_table(ifs)
        factor = self.codespace.nu_cylinder(prefix, table)
        image = self.mu_cell(approx, prefix + cell)
        base = self.mu_cell(approx, cell)
        scaled = (factor * base.lower, factor * base.upper)
        if max(image.lower, scaled[0]) <= min(image.upper, scaled[1]) + 1e-12:
            status = Verdict.SUPPORTED
        elif precondition:
            status = Verdict.REFUTED
        else:
            status = Verdict.INDETERMINATE
        return ScalingVerdict(status=status, image=image, scaled=scaled, factor=factor)


# Global measure service instance
measure_service = MeasureService()
