"""
Unit tests for the built-in fixtures
"""
import pytest

from src.main.python.core.exceptions import UnknownFixtureError
from src.main.python.models.space import Backend
from src.main.python.utils.gallery import GALLERY_NAMES, gallery

pytestmark = pytest.mark.unit


class TestGallery:
    @pytest.mark.parametrize(
        "name, size, dimension",
        [
            ("koch", 4, 2),
            ("square4", 4, 2),
            ("square4-rotated", 4, 2),
            ("cantor2", 2, 1),
            ("segment2", 2, 1),
            ("sierpinski", 3, 2),
            ("l1-schief", 3, None),
        ],
    )
    def test_fixture_shapes(self, name, size, dimension):
        spec = gallery(name)
        assert spec.name == name
        assert spec.ifs.size == size
        assert spec.ifs.dimension == dimension

    def test_names_are_complete(self):
        assert len(GALLERY_NAMES) == 7
        assert "l1-schief" in GALLERY_NAMES

    def test_sequence_fixture(self):
        assert gallery("l1-schief").ifs.backend is Backend.SEQUENCE

    def test_unknown_fixture(self):
        with pytest.raises(UnknownFixtureError, match="choose from"):
            gallery("dragon")
        with pytest.raises(KeyError):
            gallery("dragon")
