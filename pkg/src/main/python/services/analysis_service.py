"""
Analysis service: similarity dimension, covering estimates, the strong open set
condition in K and the battery of seven equivalent conditions
"""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import settings
from ..models.approximation import AttractorApprox, BoundaryApprox, PointSet
from ..models.codespace import Address, solve_similarity_dimension
from ..models.results import (
    BatteryReport,
    BoxCountResult,
    ConditionEntry,
    InvarianceStatus,
    InvarianceVerdict,
    SoscVerdict,
    Verdict,
)
from ..models.space import Backend, IfsSpec, Point, Similitude
from .attractor_service import BUCKET_SLACK, attractor_service
from .boundary_service import boundary_service, take
from .codespace_service import codespace_service
from .measure_service import measure_service
from .spaces_service import spaces_service

logger = logging.getLogger(__name__)

CONDITION_NAMES = {
    1: "strong open set condition in K",
    2: "dim_H K = alpha",
    3: "K \\ B is nonempty",
    4: "int B is empty",
    5: "mu(K_i) = r_i^alpha for every i",
    6: "mu(K_i ∩ K_j) = 0 for every i != j",
    7: "mu(B) = 0",
}

# Scales used by a covering series
COVER_SCALES = 4


class AnalysisService:
    """Service assembling the module outputs into condition verdicts"""

    def __init__(self):
        self.spaces = spaces_service
        self.codespace = codespace_service
        self.attractor = attractor_service
        self.boundary = boundary_service
        self.measure = measure_service
        self.dimension_tolerance = settings.dimension_tolerance
        self.dimension_refute_factor = settings.dimension_refute_factor
        self.measure_width_cells = settings.measure_width_cells
        self.measure_decay_ratio = settings.measure_decay_ratio
        self.sosc_levels = settings.sosc_levels
        self.interior_margin_factor = settings.interior_margin_factor
        self.workers = settings.workers

    # ------------------------------------------------------------------
    # Dimension
    # ------------------------------------------------------------------

    def similarity_dimension(self, ratios: Sequence[float]) -> float:
        """The unique alpha with sum(r_i ** alpha) = 1"""
        return solve_similarity_dimension(ratios)

    def box_counting_dimension(self, series: Sequence[Tuple[float, int]]) -> BoxCountResult:
        """
        Least-squares slope of log(count) against log(1/h)

        Args:
            series: (h, occupied count) pairs with h strictly decreasing

        Raises:
            ValueError: fewer than four scales, h not strictly decreasing or a count
                below one
        """
        if len(series) < COVER_SCALES:
            raise ValueError(f"box counting needs at least {COVER_SCALES} scales, got {len(series)}")
        scales = [float(h) for h, _ in series]
        counts = [int(c) for _, c in series]
        if any(not h > 0 for h in scales):
            raise ValueError("cell sizes must be positive")
        if any(b >= a for a, b in zip(scales, scales[1:])):
            raise ValueError("cell sizes must be strictly decreasing")
        if any(c < 1 for c in counts):
            raise ValueError("occupied counts must be at least 1")

        x = np.log(1.0 / np.array(scales))
        y = np.log(np.array(counts, dtype=float))
        slope, intercept = np.polyfit(x, y, 1)
        residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
        return BoxCountResult(
            slope=float(slope),
            intercept=float(intercept),
            residual=residual,
            scales=scales,
            counts=counts,
        )

    def covering_series(self, approx: AttractorApprox) -> List[Tuple[float, int]]:
        """
        Covering counts of the representatives at the scales of depths n-5 .. n-2

        Euclidean sets are counted in grid cells of size r_max ** k anchored at the
        lower corner of the point cloud. Sequence sets
        use greedy eps-nets with eps = R * r_max ** k on the depth-(k+2)
        representatives, which are every N ** (n-k-2)-th row of the approximation.
        """
        n = approx.depth
        r_max = approx.ifs.r_max
        series = []
        # two levels above the point resolution, so every cell holds N ** 2 points
        for k in range(max(n - COVER_SCALES - 1, 0), n - 1):
            if approx.backend is Backend.EUCLIDEAN:
                h = r_max**k
                shifted = approx.points - approx.points.min(axis=0)
                series.append((h, self.attractor.cover_points(shifted, h).count))
                continue
            eps = approx.radius * r_max**k
            stride = approx.ifs.size ** (n - k - 2)
            rows = np.arange(0, approx.count, stride)
            count = self.greedy_net_count(
                take(approx.points, rows), approx.features[rows], eps, approx.backend
            )
            series.append((eps, count))
        return series

    def greedy_net_count(
        self, points: PointSet, features: np.ndarray, eps: float, backend: Backend
    ) -> int:
        """Size of the greedy eps-net that scans the points in order"""
        if len(points) == 0:
            return 0
        cells = np.floor(features / (eps * BUCKET_SLACK)).astype(np.int64)
        offsets = list(itertools.product((-1, 0, 1), repeat=features.shape[1]))
        centers: Dict[Tuple[int, ...], List[int]] = {}
        count = 0
        for row in range(len(points)):
            base = cells[row].tolist()
            nearby = [
                c
                for off in offsets
                for c in centers.get(tuple(b + o for b, o in zip(base, off)), ())
            ]
            if nearby:
                d = self.spaces.pair_distances(
                    points,
                    np.full(len(nearby), row, dtype=np.int64),
                    points,
                    np.array(nearby, dtype=np.int64),
                    backend,
                )
                if (d <= eps).any():
                    continue
            centers.setdefault(tuple(base), []).append(row)
            count += 1
        return count

    def boundary_dimension_estimate(
        self, boundary: BoundaryApprox, approx: AttractorApprox
    ) -> Optional[BoxCountResult]:
        """
        Box-counting slope of the witness set, for comparison with alpha only

        Returns:
            None when there are too few witnesses or scales for a fit
        """
        if boundary.count < 2 or approx.depth < COVER_SCALES:
            return None
        n = approx.depth
        r_max = approx.ifs.r_max
        series = []
        for k in range(n - COVER_SCALES, n):
            if approx.backend is Backend.EUCLIDEAN:
                h = r_max**k
                series.append((h, self.attractor.cover_points(boundary.points, h).count))
            else:
                eps = approx.radius * r_max**k
                series.append(
                    (eps, self.greedy_net_count(
                        boundary.points, boundary.features, eps, approx.backend
                    ))
                )
        return self.box_counting_dimension(series)

    # ------------------------------------------------------------------
    # Strong open set condition in K
    # ------------------------------------------------------------------

    def sosc_k_witness(
        self,
        ifs: IfsSpec,
        depth: int,
        excluded: Optional[Sequence[Point]] = None,
        excluded_radius: float = 0.0,
        tau: Optional[float] = None,
        approx: Optional[AttractorApprox] = None,
        boundary: Optional[BoundaryApprox] = None,
        budget: Optional[int] = None,
    ) -> SoscVerdict:
        """
        Check f_i(U) ⊆ U and f_i(U) ∩ K_j = ∅ for U = K minus an excluded set

        The candidate consists of the representatives of depth n - sosc_levels, together
        with the fixed points of the maps, that lie deep enough in U for their images
        to stay clear of the excluded set: an image sits at least r_min times as far
        from it, less the spread of the excluded points. Both clauses are then tested
        against depth-n data.

        Args:
            excluded: points removed from K; the touching similarity boundary
                witnesses when omitted, which makes U = K \\ B
            excluded_radius: error radius of the excluded points

        Returns:
            SoscVerdict with the first failure found
        """
        approx = approx or self.attractor.approximate(ifs, depth, budget)
        backend = approx.backend
        if excluded is None:
            boundary = boundary or self.boundary.similarity_boundary(
                ifs, approx.depth, tau, approx=approx
            )
            core = boundary.core_indices()
            ex_points, ex_features = take(boundary.points, core), boundary.features[core]
            excluded_radius = boundary.max_radius
        else:
            ex_points = self.spaces.to_point_set(list(excluded), backend)
            ex_features = self.spaces.features(ex_points, backend)

        e_max = approx.max_radius
        reach = e_max + excluded_radius
        # images shrink distances to the excluded set by r_min, less its spread
        exclusion = (reach + 2.0 * excluded_radius) / ifs.r_min + excluded_radius
        coarse = self.attractor.approximate(ifs, max(approx.depth - self.sosc_levels, 0))
        fixed = self.spaces.to_point_set(
            [self.spaces.fixed_point(f) for f in ifs.maps], backend
        )
        candidates = self._join(coarse.points, fixed, backend)
        cand_features = self.spaces.features(candidates, backend)
        distances, _ = self.attractor.nearest(
            candidates, cand_features, ex_points, ex_features, backend, limit=exclusion
        )
        keep = np.flatnonzero(distances > exclusion)
        candidates = take(candidates, keep)
        size = len(keep)
        if size == 0:
            return SoscVerdict(
                forward_invariant=False,
                separated=False,
                candidate_size=0,
                failure="candidate set is empty",
            )

        forward_invariant, separated, failure = True, True, None
        for i, f in enumerate(ifs.maps, start=1):
            images = self.spaces.apply_many(f, candidates)
            image_features = self.spaces.features(images, backend)
            d, _ = self.attractor.nearest(
                images, image_features, ex_points, ex_features, backend, limit=reach
            )
            bad = np.flatnonzero(d <= reach)
            if bad.size and forward_invariant:
                forward_invariant = False
                failure = failure or self._sosc_failure(
                    f"f_{i} maps", candidates, int(bad[0]), "into the excluded set", d[bad[0]]
                )
            for j in range(1, ifs.size + 1):
                if j == i:
                    continue
                rows = approx.branch_slice(j)
                d, _ = self.attractor.nearest(
                    images, image_features, approx.points[rows], approx.features[rows],
                    backend, limit=e_max,
                )
                bad = np.flatnonzero(d <= e_max)
                if bad.size and separated:
                    separated = False
                    failure = failure or self._sosc_failure(
                        f"f_{i} maps", candidates, int(bad[0]), f"onto K_{j}", d[bad[0]]
                    )
        verdict = SoscVerdict(
            forward_invariant=forward_invariant,
            separated=separated,
            candidate_size=size,
            failure=failure,
        )
        logger.info(
            f"SOSC_K check on {size} candidate points: "
            f"forward invariant={forward_invariant}, separated={separated}"
        )
        return verdict

    def _sosc_failure(self, prefix, candidates, row, what, distance) -> str:
        point = self.spaces.point_at(candidates, row, self._backend_of(candidates))
        return f"{prefix} {self.spaces.point_as_list(point)} {what} (gap {float(distance):.3g})"

    @staticmethod
    def _backend_of(points: PointSet) -> Backend:
        return Backend.EUCLIDEAN if isinstance(points, np.ndarray) else Backend.SEQUENCE

    @staticmethod
    def _join(first: PointSet, second: PointSet, backend: Backend) -> PointSet:
        if backend is Backend.EUCLIDEAN:
            return np.concatenate([first, second], axis=0)
        return tuple(first) + tuple(second)

    # ------------------------------------------------------------------
    # Exact overlaps
    # ------------------------------------------------------------------

    def exact_overlaps(self, ifs: IfsSpec, depth: int = 2) -> List[Tuple[Address, Address]]:
        """
        Address pairs with different first symbols and identical composed maps

        Each pair certifies a cylinder of positive mass lying in two branches.
        """
        self.codespace.check_budget(depth, ifs.size)
        maps: List[Tuple[Address, Similitude]] = []
        level = [(Address.of(i), f) for i, f in enumerate(ifs.maps, start=1)]
        for _ in range(depth):
            maps.extend(level)
            level = [
                (address + Address.of(s), self.spaces.compose(f, g))
                for address, f in level
                for s, g in enumerate(ifs.maps, start=1)
            ]
        found = []
        for (a, f), (b, g) in itertools.combinations(maps, 2):
            if a.first == b.first or not math.isclose(
                float(f.ratio), float(g.ratio), rel_tol=1e-12
            ):
                continue
            if f.same_map(g):
                found.append((a, b))
        if found:
            logger.warning(f"Found {len(found)} exactly overlapping cylinder pairs")
        return found

    # ------------------------------------------------------------------
    # Battery
    # ------------------------------------------------------------------

    def equivalence_battery(
        self,
        ifs: IfsSpec,
        depth: int,
        tau: Optional[float] = None,
        budget: Optional[int] = None,
    ) -> BatteryReport:
        """
        Evaluate the seven conditions that are equivalent once B is inverse invariant

        Raises:
            BudgetExceededError: N ** depth exceeds the budget
        """
        if depth < 1:
            raise ValueError("the battery needs depth at least 1")
        approx = self.attractor.approximate(ifs, depth, budget)
        boundary = self.boundary.similarity_boundary(ifs, depth, tau, approx=approx)
        tau = boundary.tau
        precondition = self.boundary.check_inverse_invariance(ifs, boundary, approx, tau)
        alpha = self.similarity_dimension(ifs.ratios)
        overlaps = self.exact_overlaps(ifs, min(2, depth))

        checks: Dict[int, Callable[[], ConditionEntry]] = {
            1: lambda: self._condition_sosc(ifs, approx, boundary, overlaps),
            2: lambda: self._condition_dimension(approx, alpha, tau),
            3: lambda: self._condition_complement(approx, boundary),
            4: lambda: self._condition_interior(approx, boundary),
        }
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                futures = {k: executor.submit(check) for k, check in checks.items()}
                entries = [futures[k].result() for k in sorted(futures)]
        else:
            entries = [checks[k]() for k in sorted(checks)]
        entries.extend(self._measure_conditions(ifs, approx, tau, alpha, overlaps, budget))

        applicable = precondition.status is InvarianceStatus.INVARIANT
        disagreements = [
            (a.id, b.id)
            for a, b in itertools.combinations(entries, 2)
            if Verdict.INDETERMINATE not in (a.status, b.status) and a.status is not b.status
        ]
        consistent = not (applicable and disagreements)
        banner = self._banner(precondition)
        if applicable and disagreements:
            logger.error(f"Battery inconsistency on {ifs.name or 'ifs'}: {disagreements}")
        else:
            logger.info(f"Battery on {ifs.name or 'ifs'} at depth {depth}: consistent={consistent}")
        return BatteryReport(
            name=ifs.name or "ifs",
            alpha=alpha,
            precondition=precondition,
            applicable=applicable,
            conditions=entries,
            consistent=consistent,
            disagreements=disagreements if applicable else [],
            banner=banner,
        )

    @staticmethod
    def _banner(precondition: InvarianceVerdict) -> str:
        if precondition.status is InvarianceStatus.VIOLATED:
            return "theorem not applicable: the similarity boundary is not inverse invariant"
        if precondition.status is InvarianceStatus.INDETERMINATE:
            return "theorem not applicable: inverse invariance undecided at this resolution"
        return ""

    def _entry(self, cid: int, status: Verdict, approx, tau, evidence, note="") -> ConditionEntry:
        return ConditionEntry(
            id=cid,
            name=CONDITION_NAMES[cid],
            status=status,
            evidence={k: float(v) for k, v in evidence.items()},
            depth=approx.depth,
            tau=tau,
            note=note,
        )

    def _condition_sosc(self, ifs, approx, boundary, overlaps) -> ConditionEntry:
        verdict = self.sosc_k_witness(
            ifs, approx.depth, tau=boundary.tau, approx=approx, boundary=boundary
        )
        if overlaps:
            status = Verdict.REFUTED
        elif verdict.passed:
            status = Verdict.SUPPORTED
        else:
            status = Verdict.INDETERMINATE
        evidence = {
            "candidate_size": verdict.candidate_size,
            "forward_invariant": verdict.forward_invariant,
            "separated": verdict.separated,
            "exact_overlaps": len(overlaps),
        }
        return self._entry(1, status, approx, boundary.tau, evidence, verdict.failure or "")

    def _condition_dimension(self, approx, alpha, tau) -> ConditionEntry:
        series = self.covering_series(approx)
        if len(series) < COVER_SCALES:
            return self._entry(
                2, Verdict.INDETERMINATE, approx, tau, {"alpha": alpha}, "too few scales"
            )
        fit = self.box_counting_dimension(series)
        deviation = abs(fit.slope - alpha)
        if deviation <= self.dimension_tolerance:
            status = Verdict.SUPPORTED
        elif deviation > self.dimension_refute_factor * self.dimension_tolerance:
            status = Verdict.REFUTED
        else:
            status = Verdict.INDETERMINATE
        evidence = {
            "slope": fit.slope,
            "alpha": alpha,
            "deviation": deviation,
            "residual": fit.residual,
        }
        return self._entry(2, status, approx, tau, evidence)

    def _condition_complement(self, approx, boundary) -> ConditionEntry:
        rows = self.boundary.complement_u(approx, boundary)
        status = Verdict.SUPPORTED if rows.size else Verdict.REFUTED
        evidence = {"u_points": rows.size, "points": approx.count, "witnesses": boundary.count}
        return self._entry(3, status, approx, boundary.tau, evidence)

    def _condition_interior(self, approx, boundary) -> ConditionEntry:
        tau = boundary.tau
        e_max = approx.max_radius
        delta = tau + e_max + boundary.max_radius
        coarse = self._coarse_depth(approx, delta)
        evidence = {"coarse_depth": coarse, "delta": delta}
        if boundary.is_empty:
            return self._entry(4, Verdict.SUPPORTED, approx, tau, evidence)
        distances, _ = self.attractor.nearest(
            approx.points, approx.features, boundary.points, boundary.features,
            approx.backend, limit=delta,
        )
        groups = np.arange(approx.count) // approx.ifs.size ** (approx.depth - coarse)
        n_groups = int(groups[-1]) + 1
        sizes = np.bincount(groups, minlength=n_groups)
        far = np.bincount(groups, weights=distances > delta, minlength=n_groups) > 0
        close = np.bincount(groups, weights=distances <= e_max + tau, minlength=n_groups)
        covered = close == sizes
        evidence["cells"] = n_groups
        evidence["cells_with_interior_point"] = int(far.sum())
        if covered.any():
            status = Verdict.REFUTED
        elif far.all():
            status = Verdict.SUPPORTED
        else:
            status = Verdict.INDETERMINATE
        return self._entry(4, status, approx, tau, evidence)

    def _coarse_depth(self, approx: AttractorApprox, delta: float) -> int:
        """Largest m <= n with r_max ** m * R >= interior_margin_factor * delta"""
        r_max = approx.ifs.r_max
        target = self.interior_margin_factor * delta
        m = 0
        while m < approx.depth and r_max ** (m + 1) * approx.radius >= target:
            m += 1
        return m

    def _measure_conditions(
        self, ifs, approx, tau, alpha, overlaps, budget
    ) -> List[ConditionEntry]:
        """Conditions on mu over the depths n-2, n-1, n"""
        depths = [d for d in (approx.depth - 2, approx.depth - 1, approx.depth) if d >= 1]
        widths, overlap_uppers, boundary_uppers = [], [], []
        table = self.codespace.ratio_table(ifs)
        for d in depths:
            level = approx if d == approx.depth else self.attractor.approximate(ifs, d, budget)
            straddlers = self.measure.straddler_table(level)
            width = 0.0
            for i in range(1, ifs.size + 1):
                estimate = self.measure.mu_branch(
                    ifs, i, d, approx=level, straddlers=straddlers
                )
                # the interval must bracket r_i ** alpha; otherwise count the miss
                target = table.ratios[i - 1] ** table.alpha
                miss = max(estimate.lower - target, target - estimate.upper, 0.0)
                width = max(width, estimate.width + miss)
            widths.append(width)
            upper = 0.0
            for i, j in itertools.combinations(range(1, ifs.size + 1), 2):
                estimate = self.measure.mu_overlap(
                    ifs, i, j, d, approx=level, straddlers=straddlers
                )
                upper = max(upper, estimate.upper)
            overlap_uppers.append(upper)
            level_tau = tau * ifs.r_max ** (d - approx.depth)
            level_boundary = self.boundary.similarity_boundary(
                ifs, d, level_tau, approx=level
            )
            boundary_uppers.append(
                self.measure.mu_boundary(ifs, level_boundary, approx=level).upper
            )

        epsilon = self.measure_width_cells * ifs.r_max ** (alpha * approx.depth)
        entries = []
        for cid, values in ((5, widths), (6, overlap_uppers), (7, boundary_uppers)):
            status = self._trend_status(values, epsilon, overlaps)
            evidence = {f"depth_{d}": v for d, v in zip(depths, values)}
            evidence["epsilon"] = epsilon
            entries.append(self._entry(cid, status, approx, tau, evidence))
        return entries

    def _trend_status(self, values: List[float], epsilon: float, overlaps) -> Verdict:
        if overlaps:
            return Verdict.REFUTED
        if values[-1] <= epsilon:
            return Verdict.SUPPORTED
        if len(values) >= 3 and all(
            a > 0 and b / a <= self.measure_decay_ratio for a, b in zip(values, values[1:])
        ):
            return Verdict.SUPPORTED
        return Verdict.INDETERMINATE


# Global analysis service instance
analysis_service = AnalysisService()
