"""
Symbolic code space types: addresses, ratio tables and cylinder families
"""
import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

from ..core.exceptions import NotContractionError, SymbolRangeError


@dataclass(frozen=True, order=True)
class Address:
    """A finite word over the symbols 1..N; the empty word is allowed"""

    symbols: Tuple[int, ...] = ()

    @classmethod
    def of(cls, *symbols: int) -> "Address":
        return cls(tuple(int(s) for s in symbols))

    @classmethod
    def empty(cls) -> "Address":
        return cls(())

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[int]:
        return iter(self.symbols)

    def __add__(self, other: "Address") -> "Address":
        return Address(self.symbols + other.symbols)

    @property
    def first(self) -> int:
        return self.symbols[0]

    def prefix(self, length: int) -> "Address":
        return Address(self.symbols[:length])

    def is_prefix_of(self, other: "Address") -> bool:
        return other.symbols[: len(self.symbols)] == self.symbols

    def validate(self, n_symbols: int) -> "Address":
        for s in self.symbols:
            if not 1 <= s <= n_symbols:
                raise SymbolRangeError(f"symbol {s} outside 1..{n_symbols} in {self}")
        return self

    def __str__(self):
        if not self.symbols:
            return "()"
        return "(" + ",".join(str(s) for s in self.symbols) + ")"


@dataclass(frozen=True)
class CodePoint:
    """An eventually constant point of the code space: prefix then tail repeated"""

    prefix: Address
    tail: int

    def symbol_at(self, position: int) -> int:
        """Symbol at 0-based position"""
        if position < len(self.prefix):
            return self.prefix.symbols[position]
        return self.tail


def solve_similarity_dimension(
    ratios: Sequence[float], width: float = 1e-14
) -> float:
    """
    Solve sum(r_i ** alpha) = 1 by bisection

    Args:
        ratios: contraction ratios, each in (0, 1)
        width: stop once the bracketing interval is this narrow

    Returns:
        The similarity dimension alpha
    """
    if not ratios:
        raise ValueError("at least one ratio is required")
    for r in ratios:
        if not 0.0 < float(r) < 1.0:
            raise NotContractionError(f"ratio {r} is not a strict contraction")
    rs = [float(r) for r in ratios]

    def s(alpha: float) -> float:
        total = 0.0
        for r in rs:
            total += r**alpha
        return total

    if len(rs) == 1:
        return 0.0

    lower, upper = 0.0, 1.0
    while s(upper) >= 1.0:
        lower = upper
        upper *= 2.0
    while upper - lower > width:
        middle = 0.5 * (lower + upper)
        if middle <= lower or middle >= upper:
            break
        if s(middle) > 1.0:
            lower = middle
        else:
            upper = middle
    return 0.5 * (lower + upper)


@dataclass(frozen=True)
class RatioTable:
    """Contraction ratios of an IFS with its cached similarity dimension"""

    ratios: Tuple[float, ...]
    alpha: float

    @classmethod
    def from_ratios(cls, ratios: Sequence[float]) -> "RatioTable":
        values = tuple(float(r) for r in ratios)
        return cls(values, solve_similarity_dimension(values))

    @property
    def size(self) -> int:
        return len(self.ratios)

    @property
    def r_max(self) -> float:
        return max(self.ratios)

    @property
    def r_min(self) -> float:
        return min(self.ratios)

    def residual(self) -> float:
        return math.fsum(r**self.alpha for r in self.ratios) - 1.0


@dataclass(frozen=True)
class CylinderFamily:
    """All depth-n addresses over N symbols, streamed in lexicographic order"""

    depth: int
    n_symbols: int

    @property
    def count(self) -> int:
        return self.n_symbols**self.depth

    def __iter__(self) -> Iterator[Address]:
        if self.depth == 0:
            yield Address.empty()
            return
        symbols = [1] * self.depth
        while True:
            yield Address(tuple(symbols))
            position = self.depth - 1
            while position >= 0 and symbols[position] == self.n_symbols:
                symbols[position] = 1
                position -= 1
            if position < 0:
                return
            symbols[position] += 1

    def __len__(self) -> int:
        return self.count
