"""Numerical toolkit for first- and second-order tangent sets, graphical
derivatives of set-valued maps, and regularity estimates."""
from .geometry import (FullSpace, FunctionGraph, Polyhedron, Product, Sequence1D, SequenceSet,
                       SetSpec, Singleton, SmoothLevelSet, Union, halfspace, product)
from .tangent import (DEFAULT_SCHEDULE, DEFAULT_SCHEDULE_2, IN, INCONCLUSIVE, OUT, LimitSchedule,
                      TangentDecision, Verdict, bouligand2_membership, bouligand_membership,
                      tangent_decisions, ursescu2_membership, ursescu_membership)

__version__ = "0.1.0"

__all__ = [
    "FullSpace", "FunctionGraph", "Polyhedron", "Product", "Sequence1D", "SequenceSet", "SetSpec",
    "Singleton", "SmoothLevelSet", "Union", "halfspace", "product", "DEFAULT_SCHEDULE",
    "DEFAULT_SCHEDULE_2", "IN", "INCONCLUSIVE", "OUT", "LimitSchedule", "TangentDecision",
    "Verdict", "bouligand2_membership", "bouligand_membership", "tangent_decisions",
    "ursescu2_membership", "ursescu_membership",
]
