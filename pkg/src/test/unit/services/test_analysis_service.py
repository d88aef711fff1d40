"""
Unit tests for dimensions, the strong open set condition in K and the battery
"""
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.main.python.models.codespace import Address
from src.main.python.models.results import InvarianceStatus, Verdict
from src.main.python.models.space import Backend, EuclideanPoint, IfsSpec
from src.main.python.services.analysis_service import CONDITION_NAMES, analysis_service
from src.main.python.services.attractor_service import attractor_service
from src.main.python.services.boundary_service import boundary_service
from src.main.python.services.spaces_service import spaces_service

pytestmark = pytest.mark.unit

KOCH_ALPHA = math.log(4) / math.log(3)


class TestDimension:
    def test_gallery_dimensions(self, koch, square4, sierpinski, cantor2):
        assert analysis_service.similarity_dimension(koch.ratios) == pytest.approx(KOCH_ALPHA)
        assert analysis_service.similarity_dimension(square4.ratios) == pytest.approx(2.0)
        assert analysis_service.similarity_dimension(sierpinski.ratios) == pytest.approx(
            math.log(3) / math.log(2)
        )
        assert analysis_service.similarity_dimension(cantor2.ratios) == pytest.approx(
            math.log(2) / math.log(3)
        )

    @given(st.integers(2, 9), st.floats(0.05, 0.9))
    def test_equal_ratios(self, count, ratio):
        alpha = analysis_service.similarity_dimension([ratio] * count)
        assert alpha == pytest.approx(math.log(count) / math.log(1 / ratio), rel=1e-9)


class TestBoxCounting:
    def test_exact_series(self):
        series = [(2.0**-k, 4**k) for k in range(2, 7)]
        fit = analysis_service.box_counting_dimension(series)
        assert fit.slope == pytest.approx(2.0)
        assert fit.residual == pytest.approx(0.0, abs=1e-9)
        assert fit.counts == [16, 64, 256, 1024, 4096]

    def test_too_few_scales(self):
        with pytest.raises(ValueError):
            analysis_service.box_counting_dimension([(0.5, 4), (0.25, 16), (0.125, 64)])

    def test_scales_must_decrease(self):
        with pytest.raises(ValueError):
            analysis_service.box_counting_dimension(
                [(0.5, 4), (0.25, 16), (0.25, 64), (0.125, 256)]
            )

    def test_counts_must_be_positive(self):
        with pytest.raises(ValueError):
            analysis_service.box_counting_dimension(
                [(0.5, 0), (0.25, 16), (0.125, 64), (0.0625, 256)]
            )

    def test_square_covering_is_exact(self, square4):
        approx = attractor_service.approximate(square4, 8)
        series = analysis_service.covering_series(approx)
        assert [count for _, count in series] == [4**k for k in range(3, 7)]
        assert analysis_service.box_counting_dimension(series).slope == pytest.approx(2.0)

    def test_koch_covering_slope(self, koch_approx8):
        series = analysis_service.covering_series(koch_approx8)
        fit = analysis_service.box_counting_dimension(series)
        assert abs(fit.slope - KOCH_ALPHA) <= 0.05

    def test_greedy_net(self):
        points = np.array([[0.0], [0.05], [0.2], [0.25], [1.0]])
        features = spaces_service.features(points, Backend.EUCLIDEAN)
        assert analysis_service.greedy_net_count(
            points, features, 0.1, Backend.EUCLIDEAN
        ) == 3

    def test_boundary_dimension_needs_witnesses(self, cantor2):
        approx = attractor_service.approximate(cantor2, 6)
        boundary = boundary_service.similarity_boundary(cantor2, 6, approx=approx)
        assert analysis_service.boundary_dimension_estimate(boundary, approx) is None


class TestSoscK:
    def test_koch_without_boundary_passes(self, koch):
        verdict = analysis_service.sosc_k_witness(koch, 7)
        assert verdict.passed
        assert verdict.candidate_size > 0
        assert verdict.failure is None

    def test_koch_without_origin_is_not_separated(self, koch):
        verdict = analysis_service.sosc_k_witness(
            koch, 6, excluded=[EuclideanPoint.of(0.0, 0.0)]
        )
        assert verdict.forward_invariant
        assert not verdict.separated
        assert "onto K_" in verdict.failure

    def test_square_interior_passes(self, square4, square4_approx6):
        verdict = analysis_service.sosc_k_witness(square4, 6, approx=square4_approx6)
        assert verdict.passed
        assert verdict.candidate_size > 0

    def test_whole_square_is_not_separated(self, square4):
        verdict = analysis_service.sosc_k_witness(square4, 6, excluded=[])
        assert verdict.forward_invariant
        assert not verdict.separated

    @pytest.mark.integration
    def test_l1_without_boundary_passes(self, l1_schief, l1_approx8):
        verdict = analysis_service.sosc_k_witness(l1_schief, 8, approx=l1_approx8)
        assert verdict.passed


class TestExactOverlaps:
    def test_koch_has_none(self, koch):
        assert analysis_service.exact_overlaps(koch) == []

    def test_duplicate_maps_are_found(self):
        f = spaces_service.euclidean_similitude(0.5, np.eye(1), [0.0])
        ifs = IfsSpec.of([f, f], name="doubled")
        found = analysis_service.exact_overlaps(ifs)
        assert (Address.of(1), Address.of(2)) in found


@pytest.mark.integration
class TestBattery:
    @pytest.mark.parametrize("name, depth", [("koch", 6), ("square4", 6), ("l1-schief", 7)])
    def test_applicable_fixtures_are_consistent(self, name, depth, request):
        ifs = request.getfixturevalue(name.replace("-", "_"))
        report = analysis_service.equivalence_battery(ifs, depth)
        assert report.applicable
        assert report.consistent
        assert report.disagreements == []
        assert report.banner == ""
        assert [c.id for c in report.conditions] == list(CONDITION_NAMES)
        assert all(c.status is not Verdict.REFUTED for c in report.conditions)

    def test_koch_supports_every_condition(self, koch):
        report = analysis_service.equivalence_battery(koch, 7)
        assert report.applicable
        assert [c.status for c in report.conditions] == [Verdict.SUPPORTED] * 7

    def test_square_open_set_is_found(self, square4):
        report = analysis_service.equivalence_battery(square4, 6)
        sosc = report.conditions[0]
        assert sosc.status is Verdict.SUPPORTED
        assert sosc.evidence["candidate_size"] > 0

    def test_rotated_square_is_not_applicable(self, square4_rotated):
        report = analysis_service.equivalence_battery(square4_rotated, 6)
        assert report.precondition.status is InvarianceStatus.VIOLATED
        assert not report.applicable
        assert report.consistent
        assert "not applicable" in report.banner
        assert report.to_dict()["precondition"]["status"] == "violated"

    def test_depth_zero_is_rejected(self, koch):
        with pytest.raises(ValueError):
            analysis_service.equivalence_battery(koch, 0)
