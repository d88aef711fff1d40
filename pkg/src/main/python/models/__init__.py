# Domain models for the similarity boundary analysis toolkit

from .approximation import AttractorApprox, BoundaryApprox, CellCover, OverlapWitness
from .codespace import Address, CodePoint, CylinderFamily, RatioTable
from .results import (
    BatteryReport,
    BoundaryComparison,
    BoxCountResult,
    ConditionEntry,
    IntervalEstimate,
    InvarianceStatus,
    InvarianceVerdict,
    ScalingVerdict,
    SoscVerdict,
    ValidationReport,
    Verdict,
)
from .space import (
    Backend,
    EuclideanPoint,
    EuclideanSimilitude,
    IfsSpec,
    SequencePoint,
    SequenceSimilitude,
)
from .spec_file import SpecFile

__all__ = [
    "Address",
    "AttractorApprox",
    "Backend",
    "BatteryReport",
    "BoundaryApprox",
    "BoundaryComparison",
    "BoxCountResult",
    "CellCover",
    "CodePoint",
    "ConditionEntry",
    "CylinderFamily",
    "EuclideanPoint",
    "EuclideanSimilitude",
    "IfsSpec",
    "IntervalEstimate",
    "InvarianceStatus",
    "InvarianceVerdict",
    "OverlapWitness",
    "RatioTable",
    "ScalingVerdict",
    "SequencePoint",
    "SequenceSimilitude",
    "SoscVerdict",
    "SpecFile",
    "ValidationReport",
    "Verdict",
]
