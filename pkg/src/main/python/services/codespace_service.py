"""
Code space service: address combinatorics, the metric rho and the measure nu
"""
import logging
import math
from typing import Iterator, Optional, Sequence

from ..core.config import settings
from ..core.exceptions import BudgetExceededError, SymbolRangeError
from ..models.codespace import Address, CodePoint, CylinderFamily, RatioTable
from ..models.space import IfsSpec

logger = logging.getLogger(__name__)


class CodespaceService:
    """Service for the symbolic side of an IFS"""

    def __init__(self):
        self.enumeration_budget = settings.enumeration_budget

    def ratio_table(self, ifs: IfsSpec) -> RatioTable:
        """Ratios of the IFS with the similarity dimension solved once"""
        return RatioTable.from_ratios(ifs.ratios)

    def r_of(self, address: Address, table: RatioTable) -> float:
        """
        Product r_{i1} ... r_{in}, multiplied left to right; 1 for the empty address
        """
        address.validate(table.size)
        product = 1.0
        for s in address.symbols:
            product *= table.ratios[s - 1]
        return product

    def r_star_of(self, address: Address, table: RatioTable) -> float:
        """Product of all ratios but the last; 1 for length one, infinity when empty"""
        address.validate(table.size)
        if len(address) == 0:
            return math.inf
        return self.r_of(address.prefix(len(address) - 1), table)

    def incomparable(self, first: Address, second: Address) -> bool:
        """True iff neither address is a prefix of the other"""
        return not (first.is_prefix_of(second) or second.is_prefix_of(first))

    def rho(self, first: CodePoint, second: CodePoint, table: RatioTable) -> float:
        """
        Distance of two eventually constant code points

        Args:
            first: prefix plus repeated tail symbol
            second: prefix plus repeated tail symbol
            table: ratios weighting each agreeing position

        Returns:
            1 if the first symbols differ, the ratio product over the common
            prefix otherwise, 0 for equal sequences
        """
        for point in (first, second):
            point.prefix.validate(table.size)
            if not 1 <= point.tail <= table.size:
                raise SymbolRangeError(f"tail symbol {point.tail} outside 1..{table.size}")
        horizon = max(len(first.prefix), len(second.prefix)) + 1
        product = 1.0
        for position in range(horizon):
            a = first.symbol_at(position)
            b = second.symbol_at(position)
            if a != b:
                return product
            product *= table.ratios[a - 1]
        # past both prefixes the tails agree, so the sequences coincide
        return 0.0

    def nu_cylinder(self, address: Address, table: RatioTable) -> float:
        """nu(C_I) = r_I ** alpha, 1 for the empty address"""
        if len(address) == 0:
            address.validate(table.size)
            return 1.0
        return self.r_of(address, table) ** table.alpha

    def cell_diameter(self, address: Address, table: RatioTable, diameter: float) -> float:
        """diam(K_I) = r_I * diam(K)"""
        return self.r_of(address, table) * diameter

    def check_budget(self, depth: int, n_symbols: int, budget: Optional[int] = None) -> int:
        """Return N ** depth, raising when it exceeds the budget"""
        if depth < 0:
            raise ValueError(f"depth must be non-negative, got {depth}")
        allowed = budget or self.enumeration_budget
        count = n_symbols**depth
        if count > allowed:
            logger.error(f"Enumeration budget exceeded: {count} > {allowed}")
            raise BudgetExceededError(count, allowed)
        return count

    def enumerate_depth(
        self, depth: int, n_symbols: int, budget: Optional[int] = None
    ) -> Iterator[Address]:
        """
        Stream all depth-n addresses in lexicographic order

        Raises:
            BudgetExceededError: N ** depth exceeds the budget
        """
        self.check_budget(depth, n_symbols, budget)
        return iter(CylinderFamily(depth, n_symbols))

    def prepend(self, symbol: int, address: Address, n_symbols: int) -> Address:
        """Symbolic counterpart of f_i: (i1, i2, ...) -> (i, i1, i2, ...)"""
        if not 1 <= symbol <= n_symbols:
            raise SymbolRangeError(f"symbol {symbol} outside 1..{n_symbols}")
        return Address((symbol,) + address.validate(n_symbols).symbols)

    def shift(self, address: Address) -> Address:
        """Left shift: drop the first symbol"""
        if len(address) == 0:
            raise ValueError("cannot shift the empty address")
        return Address(address.symbols[1:])

    def prepend_point(self, symbol: int, point: CodePoint, n_symbols: int) -> CodePoint:
        return CodePoint(self.prepend(symbol, point.prefix, n_symbols), point.tail)

    def nu_sum(self, addresses: Sequence[Address], table: RatioTable) -> float:
        """Sum of nu over the given cylinders in the given order"""
        total = 0.0
        for address in addresses:
            total += self.nu_cylinder(address, table)
        return total


# Global codespace service instance
codespace_service = CodespaceService()
