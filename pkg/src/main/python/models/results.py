"""
Result models reported by the analysis services
"""
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class ValidationReport(BaseModel):
    """Sampled check of the distance scaling d(f(x), f(y)) = r d(x, y)"""

    ratio: float = Field(description="Declared contraction ratio")
    samples: int = Field(description="Number of sampled point pairs", ge=1)
    max_relative_deviation: float = Field(description="Largest |d(fx,fy)/d(x,y) - r| / r", ge=0.0)
    tolerance: float = Field(description="Pass threshold; 0 means exact", ge=0.0)
    passed: bool = Field(description="Whether every sample met the tolerance")


class IntervalEstimate(BaseModel):
    """Certified lower/upper bounds for a measure quantity"""

    lower: float = Field(ge=0.0, le=1.0)
    upper: float = Field(ge=0.0, le=1.0)
    depth: int = Field(ge=0)
    region: str = Field(description="Human readable region descriptor")
    analytic_clamp: bool = Field(
        default=False, description="Lower bound was raised by the a-priori branch inequality"
    )
    geometric_lower: Optional[float] = Field(
        default=None, description="Lower bound before any analytic clamp"
    )

    @model_validator(mode="after")
    def check_order(self):
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        return self

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack

    def intersects(self, lower: float, upper: float) -> bool:
        return max(self.lower, lower) <= min(self.upper, upper)


class InvarianceStatus(str, Enum):
    INVARIANT = "invariant"
    VIOLATED = "violated"
    INDETERMINATE = "indeterminate"


class InvarianceVerdict(BaseModel):
    """Outcome of testing f_i^-1(B) ∩ K ⊆ B"""

    status: InvarianceStatus
    map_index: Optional[int] = Field(default=None, description="Map i of the violating triple")
    witness: Optional[List[Any]] = Field(default=None, description="Boundary witness b")
    preimage: Optional[List[Any]] = Field(default=None, description="x = f_i^-1(b)")
    preimage_distance_to_boundary: Optional[float] = None
    membership_margin: float = Field(description="a = e_max + tau")
    boundary_margin: float = Field(description="tau' + largest witness radius")
    checked: int = Field(default=0, description="Number of (witness, map) preimages examined")
    indeterminate: int = Field(default=0, description="Preimages that could not be decided")


class Verdict(str, Enum):
    SUPPORTED = "supported"
    REFUTED = "refuted"
    INDETERMINATE = "indeterminate"


class SoscVerdict(BaseModel):
    """Both clauses of the strong open set condition in K for a candidate set"""

    forward_invariant: bool = Field(description="f_i(U) ⊆ U for every i")
    separated: bool = Field(description="f_i(U) ∩ K_j = ∅ for every i ≠ j")
    candidate_size: int
    failure: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.candidate_size > 0 and self.forward_invariant and self.separated


class ScalingVerdict(BaseModel):
    """Comparison of mu(f_I(K_J)) with r_I^alpha mu(K_J)"""

    status: Verdict
    image: IntervalEstimate
    scaled: Tuple[float, float]
    factor: float = Field(description="r_I ** alpha")


class BoxCountResult(BaseModel):
    """Least-squares slope of log(count) against log(1/h)"""

    slope: float
    intercept: float
    residual: float = Field(ge=0.0, description="Root mean square fit residual")
    scales: List[float]
    counts: List[int]


class BoundaryComparison(BaseModel):
    """Similarity boundary against a rastered topological boundary"""

    containment: bool
    equality: bool
    similarity_to_topological: float
    topological_to_similarity: float
    threshold: float


class BoundaryCluster(BaseModel):
    """Single-linkage cluster of boundary witnesses with its hull box"""

    size: int
    lower: List[float]
    upper: List[float]

    def distance_to(self, point: List[float]) -> float:
        total = 0.0
        for lo, hi, p in zip(self.lower, self.upper, point):
            gap = max(lo - p, 0.0, p - hi)
            total += gap * gap
        return total**0.5


class ConditionEntry(BaseModel):
    """One of the seven equivalent conditions"""

    id: int = Field(ge=1, le=7)
    name: str
    status: Verdict
    evidence: Dict[str, float] = Field(default_factory=dict)
    depth: int
    tau: float
    note: str = ""


class BatteryReport(BaseModel):
    """All seven equivalent conditions evaluated on one IFS"""

    name: str
    alpha: float
    precondition: InvarianceVerdict
    applicable: bool = Field(description="Boundary certified inverse invariant")
    conditions: List[ConditionEntry]
    consistent: bool
    disagreements: List[Tuple[int, int]] = Field(default_factory=list)
    banner: str = ""

    def status_of(self, condition_id: int) -> Verdict:
        return next(c.status for c in self.conditions if c.id == condition_id)

    def to_dict(self) -> Dict[str, Any]:
        """Convert report to dictionary"""
        return self.model_dump(mode="json")
