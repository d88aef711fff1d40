"""
Unit tests for the interval estimates of the image measure
"""
import math

import numpy as np
import pytest

from src.main.python.core.exceptions import SymbolRangeError
from src.main.python.models.codespace import Address
from src.main.python.models.results import Verdict
from src.main.python.services.analysis_service import analysis_service
from src.main.python.services.attractor_service import attractor_service
from src.main.python.services.boundary_service import boundary_service
from src.main.python.services.measure_service import (
    BoxRegion,
    EmptyRegion,
    EverythingRegion,
    measure_service,
)

pytestmark = pytest.mark.unit


class TestCylinders:
    def test_masses_sum_to_one(self, koch, l1_schief):
        for ifs in (koch, l1_schief):
            masses = measure_service.cylinder_masses(ifs, 5)
            assert masses.shape == (ifs.size**5,)
            assert masses.sum() == pytest.approx(1.0, abs=1e-12)

    def test_prefix_rows(self, koch):
        approx = attractor_service.approximate(koch, 3)
        assert measure_service.prefix_rows(approx, Address.of(2)) == slice(16, 32)
        assert measure_service.prefix_rows(approx, Address.of(4, 4, 4)) == slice(63, 64)
        with pytest.raises(ValueError):
            measure_service.prefix_rows(approx, Address.of(1, 1, 1, 1))

    def test_address_point_is_a_fixed_point_image(self, segment2):
        point, radius = measure_service.address_point(Address.of(2), 1, segment2)
        assert point.coords == pytest.approx((0.5,))
        assert radius == pytest.approx(0.5)
        with pytest.raises(SymbolRangeError):
            measure_service.address_point(Address.of(1), 3, segment2)


class TestRegions:
    def test_half_segment(self, segment2):
        estimate = measure_service.mu_region(BoxRegion.interval(0.0, 0.5), segment2, 8)
        assert estimate.lower == pytest.approx(127 / 256)
        assert estimate.upper == pytest.approx(130 / 256)
        assert estimate.contains(0.5)

    def test_trivial_regions(self, koch):
        everything = measure_service.mu_region(EverythingRegion(), koch, 3)
        empty = measure_service.mu_region(EmptyRegion(), koch, 3)
        assert everything.lower == pytest.approx(1.0)
        assert empty.upper == 0.0

    def test_box_bounds_are_validated(self):
        with pytest.raises(ValueError):
            BoxRegion([1.0, 0.0], [0.0, 1.0])


class TestBranches:
    def test_koch_branch_is_a_quarter(self, koch, koch_approx8):
        table = measure_service.straddler_table(koch_approx8)
        for i in range(1, 5):
            estimate = measure_service.mu_branch(koch, i, 8, approx=koch_approx8, straddlers=table)
            assert estimate.contains(0.25, 1e-12)
            assert estimate.width < 0.02

    def test_l1_branches(self, l1_schief, l1_approx8):
        table = measure_service.straddler_table(l1_approx8)
        first = measure_service.mu_branch(l1_schief, 1, 8, approx=l1_approx8, straddlers=table)
        third = measure_service.mu_branch(l1_schief, 3, 8, approx=l1_approx8, straddlers=table)
        assert first.contains(1 / 3, 1e-12)
        assert first.width <= 0.02
        # K_3 sits at distance 1/2 from the other branches
        assert third.contains(1 / 3, 1e-12)
        assert third.width <= 1e-12

    def test_clamp_only_where_branches_meet(self, koch, l1_schief, l1_approx8):
        approx = attractor_service.approximate(koch, 5)
        meeting = measure_service.mu_branch(koch, 1, 5, approx=approx)
        assert meeting.analytic_clamp
        assert meeting.geometric_lower < meeting.lower == pytest.approx(0.25)
        apart = measure_service.mu_branch(l1_schief, 3, 8, approx=l1_approx8)
        assert not apart.analytic_clamp
        assert apart.geometric_lower == pytest.approx(1 / 3)

    def test_l1_branch_width_shrinks(self, l1_schief):
        widths = []
        for depth in (5, 6, 7):
            approx = attractor_service.approximate(l1_schief, depth)
            widths.append(measure_service.mu_branch(l1_schief, 1, depth, approx=approx).width)
        assert widths[0] > widths[1] > widths[2]

    def test_branch_out_of_range(self, koch):
        with pytest.raises(SymbolRangeError):
            measure_service.mu_branch(koch, 5, 3)

    def test_overlap_needs_two_branches(self, koch):
        with pytest.raises(ValueError):
            measure_service.mu_overlap(koch, 2, 2, 3)
        with pytest.raises(SymbolRangeError):
            measure_service.mu_overlap(koch, 1, 9, 3)


@pytest.mark.integration
class TestNullSets:
    def test_koch_overlaps_shrink(self, koch, koch_approx8):
        coarse = attractor_service.approximate(koch, 4)
        shallow = measure_service.mu_overlap(koch, 1, 2, 4, approx=coarse)
        deep = measure_service.mu_overlap(koch, 1, 2, 8, approx=koch_approx8)
        assert deep.lower == 0.0
        assert deep.upper < shallow.upper
        assert deep.upper < 0.05

    def test_koch_boundary_is_small(self, koch, koch_approx8, koch_boundary8):
        estimate = measure_service.mu_boundary(koch, koch_boundary8, approx=koch_approx8)
        assert estimate.depth == 8
        assert estimate.upper < 0.05

    def test_l1_overlap_and_boundary(self, l1_schief, l1_approx8):
        overlap = measure_service.mu_overlap(l1_schief, 1, 2, 8, approx=l1_approx8)
        assert overlap.upper < 0.05
        assert measure_service.mu_overlap(l1_schief, 1, 3, 8, approx=l1_approx8).upper == 0.0
        boundary = boundary_service.similarity_boundary(l1_schief, 8, approx=l1_approx8)
        assert measure_service.mu_boundary(l1_schief, boundary, approx=l1_approx8).upper < 0.05

    @pytest.mark.parametrize("name", ["koch", "l1-schief"])
    def test_uppers_decrease_with_depth(self, name, request):
        ifs = request.getfixturevalue(name.replace("-", "_"))
        overlaps, boundaries = [], []
        for depth in range(4, 9):
            approx = attractor_service.approximate(ifs, depth)
            overlaps.append(measure_service.mu_overlap(ifs, 1, 2, depth, approx=approx).upper)
            boundary = boundary_service.similarity_boundary(ifs, depth, approx=approx)
            boundaries.append(measure_service.mu_boundary(ifs, boundary, approx=approx).upper)
        for series in (overlaps, boundaries):
            assert all(b <= a for a, b in zip(series, series[1:]))
            assert series[-1] < series[0]
            assert series[-1] < 0.05

    def test_empty_boundary_has_no_mass(self, cantor2):
        boundary = boundary_service.similarity_boundary(cantor2, 6)
        assert measure_service.mu_boundary(cantor2, boundary).upper == 0.0


class TestScaling:
    def test_cell_bounds(self, koch):
        approx = attractor_service.approximate(koch, 5)
        whole = measure_service.mu_cell(approx, Address.empty())
        assert whole.lower == whole.upper == pytest.approx(1.0)
        cell = measure_service.mu_cell(approx, Address.of(2, 3))
        assert cell.contains(1 / 16, 1e-12)

    @pytest.mark.integration
    @pytest.mark.parametrize("name", ["koch", "l1-schief"])
    def test_random_pairs_are_supported(self, name, request):
        ifs = request.getfixturevalue(name.replace("-", "_"))
        approx = request.getfixturevalue(f"{name.split('-')[0]}_approx8")
        alpha = analysis_service.similarity_dimension(ifs.ratios)
        rng = np.random.default_rng(0)
        for _ in range(20):
            size_i, size_j = rng.integers(1, 4, size=2)
            prefix = Address(tuple(int(s) for s in rng.integers(1, ifs.size + 1, size=size_i)))
            cell = Address(tuple(int(s) for s in rng.integers(1, ifs.size + 1, size=size_j)))
            verdict = measure_service.check_scaling(
                ifs, prefix, cell, 8, approx=approx, precondition=True
            )
            assert verdict.status is Verdict.SUPPORTED, (prefix, cell)
            expected = math.prod(ifs.ratios[s - 1] ** alpha for s in prefix.symbols)
            assert verdict.factor == pytest.approx(expected)
