"""
Built-in IFS fixtures
"""
from typing import Dict, Tuple

from ..core.exceptions import UnknownFixtureError
from ..models.spec_file import SpecFile
from .spec_parser import spec_parser

GALLERY: Dict[str, str] = {
    # contractions by 1/3 towards the origin followed by rotation and translation
    "koch": """
ifs koch dim 2 backend euclidean
map scale 1/3 rotate 0 translate 0 0
map scale 1/3 rotate 60 translate 1/3 0
map scale 1/3 rotate -60 translate 1/2 sqrt(3)/6
map scale 1/3 rotate 0 translate 2/3 0
""",
    # contractions by 1/2 towards the four corners, starting at (0, 1)
    "square4": """
ifs square4 dim 2 backend euclidean
map scale 1/2 translate 0 1/2
map scale 1/2 translate 1/2 1/2
map scale 1/2 translate 0 0
map scale 1/2 translate 1/2 0
""",
    # same sub-squares, three of them rotated about their own centers
    "square4-rotated": """
ifs square4-rotated dim 2 backend euclidean
map scale 1/2 translate 0 1/2
map scale 1/2 rotate -90 translate 1/2 1/2 about 3/4 3/4
map scale 1/2 rotate 90 translate 0 0 about 1/4 1/4
map scale 1/2 rotate 180 translate 1/2 0 about 3/4 1/4
""",
    "cantor2": """
ifs cantor2 dim 1 backend euclidean
map scale 1/3 translate 0
map scale 1/3 translate 2/3
""",
    "segment2": """
ifs segment2 dim 1 backend euclidean
map scale 1/2 translate 0
map scale 1/2 translate 1/2
""",
    "sierpinski": """
ifs sierpinski dim 2 backend euclidean
map scale 1/2 translate 0 0
map scale 1/2 translate 1/2 0
map scale 1/2 translate 1/4 sqrt(3)/4
""",
    # three maps on l1 with ratio 1/2
    "l1-schief": """
ifs l1-schief dim inf backend sequence
map scale 1/2 kind interleave-odd
map scale 1/2 kind interleave-even
map scale 1/2 kind affine-first
""",
}

GALLERY_NAMES: Tuple[str, ...] = tuple(GALLERY)


def gallery(name: str) -> SpecFile:
    """
    Parse a built-in fixture

    Raises:
        UnknownFixtureError: name is not in GALLERY_NAMES
    """
    if name not in GALLERY:
        raise UnknownFixtureError(
            f"unknown fixture {name!r}; choose from {', '.join(GALLERY_NAMES)}"
        )
    return spec_parser.parse(GALLERY[name])
