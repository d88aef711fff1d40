"""
Points, similitudes and iterated function systems for both ambient backends
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from ..core.exceptions import BackendMismatchError, DimensionMismatchError


class Backend(str, Enum):
    """Ambient space of an IFS"""

    EUCLIDEAN = "euclidean"
    SEQUENCE = "sequence"


def _is_dyadic(value: Fraction) -> bool:
    d = value.denominator
    return d & (d - 1) == 0


@dataclass(frozen=True)
class EuclideanPoint:
    """A point of R^n"""

    coords: Tuple[float, ...]

    def __post_init__(self):
        if not all(np.isfinite(self.coords)):
            raise ValueError(f"Non-finite coordinates: {self.coords}")

    backend = Backend.EUCLIDEAN

    @classmethod
    def of(cls, *values: float) -> "EuclideanPoint":
        return cls(tuple(float(v) for v in values))

    @classmethod
    def from_array(cls, array: np.ndarray) -> "EuclideanPoint":
        return cls(tuple(float(v) for v in np.asarray(array, dtype=float).ravel()))

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)


@dataclass(frozen=True)
class SequencePoint:
    """
    A finitely supported point of l1 with exact dyadic coordinates

    entries holds (index, value) pairs, 1-based indices, sorted, values nonzero.
    """

    entries: Tuple[Tuple[int, Fraction], ...] = ()

    backend = Backend.SEQUENCE

    def __post_init__(self):
        previous = 0
        for index, value in self.entries:
            if index <= previous:
                raise ValueError("entries must have strictly increasing indices >= 1")
            if value == 0:
                raise ValueError("stored entries must be nonzero")
            if not _is_dyadic(Fraction(value)):
                raise ValueError(f"coordinate {value} is not a dyadic rational")
            previous = index

    @classmethod
    def from_mapping(cls, values: Dict[int, Union[int, Fraction]]) -> "SequencePoint":
        items = sorted((k, Fraction(v)) for k, v in values.items() if v != 0)
        return cls(tuple(items))

    @classmethod
    def unit(cls, index: int, value: Union[int, Fraction] = 1) -> "SequencePoint":
        return cls.from_mapping({index: Fraction(value)})

    @classmethod
    def origin(cls) -> "SequencePoint":
        return cls(())

    def as_dict(self) -> Dict[int, Fraction]:
        return dict(self.entries)

    def get(self, index: int) -> Fraction:
        return self.as_dict().get(index, Fraction(0))

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(k for k, _ in self.entries)

    def norm(self) -> Fraction:
        return sum((abs(v) for _, v in self.entries), Fraction(0))

    def is_nonnegative(self) -> bool:
        return all(v > 0 for _, v in self.entries)


Point = Union[EuclideanPoint, SequencePoint]


@dataclass(frozen=True, eq=False)
class EuclideanSimilitude:
    """f(x) = ratio * Q x + translation on R^n"""

    ratio: float
    matrix: np.ndarray
    translation: np.ndarray
    label: str = ""

    backend = Backend.EUCLIDEAN

    @property
    def dimension(self) -> int:
        return int(self.translation.shape[0])

    @property
    def linear(self) -> np.ndarray:
        """The full linear part ratio * Q"""
        return self.ratio * self.matrix

    def same_map(self, other: "EuclideanSimilitude", tol: float = 1e-12) -> bool:
        return (
            np.allclose(self.linear, other.linear, rtol=0.0, atol=tol)
            and np.allclose(self.translation, other.translation, rtol=0.0, atol=tol)
        )

    def __repr__(self):
        return (
            f"<EuclideanSimilitude(ratio={self.ratio}, "
            f"translation={self.translation.tolist()}, label={self.label!r})>"
        )


@dataclass(frozen=True)
class SequenceSimilitude:
    """
    f(x) = ratio * P x + shift on finitely supported l1 points

    P relocates input coordinate k to output coordinate stride * k + offset;
    it is injective, so f is a similitude even though it is not onto.
    """

    ratio: Fraction
    stride: int = 1
    offset: int = 0
    shift: SequencePoint = field(default_factory=SequencePoint.origin)
    label: str = ""

    backend = Backend.SEQUENCE

    def relocate(self, index: int) -> int:
        return self.stride * index + self.offset

    @property
    def is_identity_relocation(self) -> bool:
        return self.stride == 1 and self.offset == 0

    def same_map(self, other: "SequenceSimilitude", tol: float = 0.0) -> bool:
        return (
            self.ratio == other.ratio
            and self.stride == other.stride
            and self.offset == other.offset
            and self.shift == other.shift
        )


Similitude = Union[EuclideanSimilitude, SequenceSimilitude]


@dataclass(frozen=True, eq=False)
class IfsSpec:
    """A finite family of contracting similitudes sharing one backend"""

    maps: Tuple[Similitude, ...]
    name: Optional[str] = None

    def __post_init__(self):
        if len(self.maps) < 2:
            raise ValueError("an IFS needs at least two maps")
        backends = {f.backend for f in self.maps}
        if len(backends) != 1:
            raise BackendMismatchError(f"maps mix backends: {sorted(b.value for b in backends)}")
        if self.backend is Backend.EUCLIDEAN:
            dims = {f.dimension for f in self.maps}
            if len(dims) != 1:
                raise DimensionMismatchError(f"maps mix dimensions: {sorted(dims)}")

    @classmethod
    def of(cls, maps: Iterable[Similitude], name: Optional[str] = None) -> "IfsSpec":
        return cls(tuple(maps), name)

    @property
    def backend(self) -> Backend:
        return self.maps[0].backend

    @property
    def dimension(self) -> Optional[int]:
        """Ambient dimension, None for the sequence space"""
        if self.backend is Backend.EUCLIDEAN:
            return self.maps[0].dimension
        return None

    @property
    def size(self) -> int:
        return len(self.maps)

    @property
    def ratios(self) -> Tuple[float, ...]:
        return tuple(float(f.ratio) for f in self.maps)

    @property
    def r_max(self) -> float:
        return max(self.ratios)

    @property
    def r_min(self) -> float:
        return min(self.ratios)

    def __repr__(self):
        return f"<IfsSpec(name={self.name!r}, backend={self.backend.value}, maps={self.size})>"
