"""
Unit tests for points and similitudes on both backends
"""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from src.main.python.core.exceptions import (
    BackendMismatchError,
    DimensionMismatchError,
    NotContractionError,
    OrthogonalityError,
    PreimageOutsideSpaceError,
)
from src.main.python.models.space import Backend, EuclideanPoint, IfsSpec, SequencePoint
from src.main.python.services.spaces_service import rotation_matrix, spaces_service

pytestmark = pytest.mark.unit


def dyadic_points():
    entry = st.tuples(st.integers(-64, 64), st.integers(0, 6)).map(
        lambda t: Fraction(t[0], 2 ** t[1])
    )
    return st.dictionaries(st.integers(1, 9), entry, max_size=6).map(
        SequencePoint.from_mapping
    )


class TestEuclideanSimilitude:
    def test_ratio_one_is_rejected(self):
        with pytest.raises(NotContractionError, match="not a strict contraction"):
            spaces_service.euclidean_similitude(1.0, np.eye(2), [0, 0])

    def test_non_orthogonal_matrix_is_rejected(self):
        with pytest.raises(OrthogonalityError):
            spaces_service.euclidean_similitude(0.5, [[1.0, 0.1], [0.0, 1.0]], [0, 0])

    def test_small_deviation_is_repaired(self):
        q = rotation_matrix(30) + 1e-10
        f = spaces_service.euclidean_similitude(0.5, q, [0, 0])
        assert spaces_service.orthogonality_deviation(f.matrix) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            spaces_service.euclidean_similitude(0.5, np.eye(2), [0, 0, 0])

    def test_apply_invert_round_trip(self):
        f = spaces_service.euclidean_similitude(1 / 3, rotation_matrix(60), [1 / 3, 0])
        p = EuclideanPoint.of(0.25, -0.75)
        back = spaces_service.invert(f, spaces_service.apply(f, p))
        assert back.coords == pytest.approx(p.coords, abs=1e-12)

    def test_koch_first_map_preimage(self, koch):
        x = spaces_service.invert(koch.maps[0], EuclideanPoint.of(1 / 3, 0))
        assert x.coords == pytest.approx((1.0, 0.0), abs=1e-12)

    def test_compose_is_f_after_g(self):
        f = spaces_service.euclidean_similitude(0.5, rotation_matrix(90), [1, 0])
        g = spaces_service.euclidean_similitude(0.25, np.eye(2), [0, 2])
        fg = spaces_service.compose(f, g)
        p = EuclideanPoint.of(0.3, 0.7)
        expected = spaces_service.apply(f, spaces_service.apply(g, p))
        assert spaces_service.apply(fg, p).coords == pytest.approx(expected.coords, abs=1e-12)
        assert fg.ratio == pytest.approx(0.125)

    def test_two_halvings_compose_to_a_quarter(self):
        f = spaces_service.euclidean_similitude(0.5, np.eye(2), [0, 0])
        ff = spaces_service.compose(f, f)
        assert ff.same_map(spaces_service.euclidean_similitude(0.25, np.eye(2), [0, 0]))

    def test_fixed_point(self):
        f = spaces_service.euclidean_similitude(0.5, np.eye(2), [0.5, 0])
        assert spaces_service.fixed_point(f).coords == pytest.approx((1.0, 0.0))

    def test_validation_passes_for_rotations(self, koch):
        for f in koch.maps:
            report = spaces_service.validate_similitude(f)
            assert report.passed
            assert report.max_relative_deviation <= 1e-12

    def test_compose_rejects_mixed_dimensions(self):
        f = spaces_service.euclidean_similitude(0.5, np.eye(2), [0, 0])
        g = spaces_service.euclidean_similitude(0.5, np.eye(3), [0, 0, 0])
        with pytest.raises(DimensionMismatchError):
            spaces_service.compose(f, g)


class TestSequenceSimilitude:
    def test_interleave_odd_relocates_to_even_indices(self):
        f = spaces_service.sequence_similitude("interleave-odd")
        image = spaces_service.apply(f, SequencePoint.unit(1))
        assert image == SequencePoint.unit(2, Fraction(1, 2))

    def test_interleave_even_relocates_to_odd_indices(self):
        f = spaces_service.sequence_similitude("interleave-even")
        image = spaces_service.apply(f, SequencePoint.unit(1))
        assert image == SequencePoint.unit(3, Fraction(1, 2))

    def test_affine_first_fixes_first_unit_vector(self):
        f = spaces_service.sequence_similitude("affine-first")
        assert spaces_service.fixed_point(f) == SequencePoint.unit(1)

    def test_interleave_fixed_point_is_origin(self):
        f = spaces_service.sequence_similitude("interleave-odd")
        assert spaces_service.fixed_point(f) == SequencePoint.origin()

    def test_preimage_outside_pattern(self):
        f = spaces_service.sequence_similitude("interleave-odd")
        with pytest.raises(PreimageOutsideSpaceError):
            spaces_service.invert(f, SequencePoint.unit(3))

    def test_invert_many_marks_undefined(self):
        f = spaces_service.sequence_similitude("interleave-odd")
        points = (SequencePoint.unit(2, Fraction(1, 2)), SequencePoint.unit(3))
        pre, defined = spaces_service.invert_many(f, points)
        assert defined.tolist() == [True, False]
        assert pre[0] == SequencePoint.unit(1)

    def test_non_dyadic_ratio_is_rejected(self):
        with pytest.raises(NotContractionError):
            spaces_service.sequence_similitude("interleave-odd", Fraction(1, 3))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            spaces_service.sequence_similitude("interleave-sideways")

    def test_exact_distance(self):
        d = spaces_service.exact_distance(SequencePoint.unit(1), SequencePoint.unit(2, Fraction(1, 2)))
        assert d == Fraction(3, 2)

    def test_validation_is_exact(self, l1_schief):
        for f in l1_schief.maps:
            report = spaces_service.validate_similitude(f)
            assert report.passed
            assert report.tolerance == 0.0
            assert report.max_relative_deviation == 0.0

    def test_cone_preservation(self, l1_schief, koch):
        assert all(spaces_service.preserves_nonnegative_cone(f) for f in l1_schief.maps)
        assert not spaces_service.preserves_nonnegative_cone(koch.maps[0])

    def test_compose_matches_sequential_application(self):
        f = spaces_service.sequence_similitude("affine-first")
        g = spaces_service.sequence_similitude("interleave-even")
        p = SequencePoint.from_mapping({1: Fraction(1, 4), 4: Fraction(-1, 2)})
        expected = spaces_service.apply(f, spaces_service.apply(g, p))
        assert spaces_service.apply(spaces_service.compose(f, g), p) == expected

    def test_point_as_list(self):
        p = SequencePoint.unit(2, Fraction(1, 2))
        assert spaces_service.point_as_list(p) == ["2:1/2"]
        assert spaces_service.point_as_list(EuclideanPoint.of(1, 2)) == [1.0, 2.0]

    def test_non_dyadic_coordinates_are_rejected(self):
        with pytest.raises(ValueError):
            SequencePoint.unit(1, Fraction(1, 3))

    @hypothesis_settings(max_examples=50, deadline=None)
    @given(dyadic_points(), dyadic_points())
    def test_features_never_exceed_distance(self, p, q):
        features = spaces_service.features((p, q), Backend.SEQUENCE)
        gap = float(np.abs(features[0] - features[1]).max())
        assert gap <= float(spaces_service.exact_distance(p, q)) + 1e-12

    @hypothesis_settings(max_examples=50, deadline=None)
    @given(dyadic_points(), dyadic_points())
    def test_maps_scale_distances_exactly(self, p, q):
        for kind in ("interleave-odd", "interleave-even", "affine-first"):
            f = spaces_service.sequence_similitude(kind)
            before = spaces_service.exact_distance(p, q)
            after = spaces_service.exact_distance(
                spaces_service.apply(f, p), spaces_service.apply(f, q)
            )
            assert after == f.ratio * before


class TestIfsSpec:
    def test_needs_two_maps(self):
        f = spaces_service.euclidean_similitude(0.5, np.eye(1), [0])
        with pytest.raises(ValueError):
            IfsSpec.of([f])

    def test_backends_cannot_mix(self):
        f = spaces_service.euclidean_similitude(0.5, np.eye(1), [0])
        g = spaces_service.sequence_similitude("interleave-odd")
        with pytest.raises(BackendMismatchError):
            IfsSpec.of([f, g])

    def test_dimensions_cannot_mix(self):
        f = spaces_service.euclidean_similitude(0.5, np.eye(1), [0])
        g = spaces_service.euclidean_similitude(0.5, np.eye(2), [0, 0])
        with pytest.raises(DimensionMismatchError):
            IfsSpec.of([f, g])

    def test_ratio_summary(self, koch, l1_schief):
        assert koch.r_max == pytest.approx(1 / 3)
        assert koch.dimension == 2
        assert l1_schief.dimension is None
        assert l1_schief.size == 3
