"""
Finite approximations of the attractor and of its similarity boundary
"""
from dataclasses import dataclass, field
from typing import FrozenSet, List, Sequence, Tuple, Union

import numpy as np

from .codespace import Address
from .space import Backend, IfsSpec, Point, SequencePoint

# Euclidean point sets are (M, n) float arrays; sequence point sets are tuples
PointSet = Union[np.ndarray, Tuple[SequencePoint, ...]]


def address_from_index(index: int, depth: int, n_symbols: int) -> Address:
    """Decode the lexicographic rank of a depth-n address"""
    symbols = []
    for _ in range(depth):
        index, digit = divmod(index, n_symbols)
        symbols.append(digit + 1)
    return Address(tuple(reversed(symbols)))


def address_index(address: Address, n_symbols: int) -> int:
    """Lexicographic rank of an address among addresses of the same length"""
    index = 0
    for s in address.symbols:
        index = index * n_symbols + (s - 1)
    return index


@dataclass(frozen=True, eq=False)
class AttractorApprox:
    """
    Representatives p_I = f_I(c) for every depth-n address, in lexicographic order

    radii[k] = r_I * R certifies K_I ⊆ ball(p_I, radii[k]).
    features is a float embedding whose sup-distance never exceeds the true distance.
    """

    ifs: IfsSpec
    depth: int
    center: Point
    radius: float
    points: PointSet
    radii: np.ndarray
    features: np.ndarray

    @property
    def backend(self) -> Backend:
        return self.ifs.backend

    @property
    def count(self) -> int:
        return int(self.radii.shape[0])

    @property
    def max_radius(self) -> float:
        return float(self.radii.max()) if self.count else 0.0

    @property
    def block_size(self) -> int:
        """Number of addresses sharing one first symbol"""
        return self.count // self.ifs.size if self.depth > 0 else self.count

    def branch_slice(self, symbol: int) -> slice:
        """Index range of the addresses starting with symbol"""
        size = self.block_size
        return slice((symbol - 1) * size, symbol * size)

    def branch_of(self, indices: np.ndarray) -> np.ndarray:
        return np.asarray(indices) // self.block_size + 1

    def address(self, index: int) -> Address:
        return address_from_index(int(index), self.depth, self.ifs.size)

    def take(self, indices: Sequence[int]) -> PointSet:
        idx = np.asarray(indices, dtype=np.int64)
        if self.backend is Backend.EUCLIDEAN:
            return self.points[idx]
        return tuple(self.points[int(i)] for i in idx)


@dataclass(frozen=True)
class CellCover:
    """Occupied cells of the grid of size h (floor(coordinate / h))"""

    h: float
    cells: FrozenSet[Tuple[int, ...]]

    @property
    def count(self) -> int:
        return len(self.cells)

    def centers(self) -> np.ndarray:
        ordered = sorted(self.cells)
        return (np.array(ordered, dtype=float) + 0.5) * self.h


@dataclass(frozen=True)
class OverlapWitness:
    """A pair of depth-n cells from branches j != k whose representatives are close"""

    j: int
    k: int
    first: Address
    second: Address
    gap: float
    touching: bool


@dataclass(frozen=True, eq=False)
class BoundaryApprox:
    """
    Witness points b = f_j^-1(p_I) for the similarity boundary

    One witness per source address I; arrays are aligned and sorted by source index.
    """

    ifs: IfsSpec
    depth: int
    tau: float
    points: PointSet
    radii: np.ndarray
    features: np.ndarray
    branch: np.ndarray
    partner_branch: np.ndarray
    source: np.ndarray
    partner: np.ndarray
    gaps: np.ndarray
    touching: np.ndarray
    certified: bool
    margin: float
    pair_counts: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.radii.shape[0])

    @property
    def is_empty(self) -> bool:
        return self.count == 0

    @property
    def max_radius(self) -> float:
        return float(self.radii.max()) if self.count else 0.0

    def witness(self, k: int) -> OverlapWitness:
        n = self.ifs.size
        return OverlapWitness(
            j=int(self.branch[k]),
            k=int(self.partner_branch[k]),
            first=address_from_index(int(self.source[k]), self.depth, n),
            second=address_from_index(int(self.partner[k]), self.depth, n),
            gap=float(self.gaps[k]),
            touching=bool(self.touching[k]),
        )

    def witnesses(self) -> List[OverlapWitness]:
        return [self.witness(k) for k in range(self.count)]

    def core_indices(self) -> np.ndarray:
        """Witnesses whose cells may actually meet"""
        return np.flatnonzero(self.touching)
