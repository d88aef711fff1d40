"""
Parsed spec files: an IFS together with its run parameters
"""
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from .space import IfsSpec


class SpecFile(BaseModel):
    """An IFS plus the parameters a run should use"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ifs: IfsSpec
    depth: int = Field(ge=0, description="Address length n")
    budget: int = Field(ge=1, description="Largest admissible N ** n")
    seed: int = 0
    tol: Optional[float] = Field(default=None, gt=0, description="Overlap tolerance tau")
    grid: List[float] = Field(default_factory=list, description="Raster cell sizes")

    @property
    def name(self) -> str:
        return self.ifs.name or "ifs"

    def same_as(self, other: "SpecFile") -> bool:
        """Field-for-field equality, comparing maps exactly"""
        if (self.depth, self.budget, self.seed, self.tol, self.grid, self.ifs.name) != (
            other.depth,
            other.budget,
            other.seed,
            other.tol,
            other.grid,
            other.ifs.name,
        ):
            return False
        if self.ifs.size != other.ifs.size or self.ifs.backend is not other.ifs.backend:
            return False
        return all(f.same_map(g, 0.0) for f, g in zip(self.ifs.maps, other.ifs.maps))
