"""Transversality constants for pairs of closed sets in Euclidean space.

Sets are exposed through projection oracles; the package estimates
subtransversality, transversality and intrinsic-transversality constants by
shrinking-radius sampling, runs alternating projections, and checks the exact
identities relating the constants.
"""

from tlab.errors import (
    DimensionMismatch,
    EmptySample,
    EpsilonTooLarge,
    InconsistentInputs,
    IntersectionLocatorFailed,
    NoDecay,
    NonConvexScenario,
    NonFiniteInput,
    NonUnitPair,
    NotInSet,
    TlabError,
)
from tlab.geometry import RadiusSchedule, Tolerances, DEFAULT_TOL
from tlab.sets import (
    AffineSubspace,
    Ball,
    ConvexPolyhedron,
    FiniteUnion,
    HalfSpace,
    PointSet,
    SetOracle,
    Sphere,
    contains,
    distance,
    project,
    sample_set_near,
)
from tlab.scenario import PairScenario, load_scenario, save_scenario

__version__ = "0.1.0"

__all__ = [
    "AffineSubspace",
    "Ball",
    "ConvexPolyhedron",
    "DEFAULT_TOL",
    "DimensionMismatch",
    "EmptySample",
    "EpsilonTooLarge",
    "FiniteUnion",
    "HalfSpace",
    "InconsistentInputs",
    "IntersectionLocatorFailed",
    "NoDecay",
    "NonConvexScenario",
    "NonFiniteInput",
    "NonUnitPair",
    "NotInSet",
    "PairScenario",
    "PointSet",
    "RadiusSchedule",
    "SetOracle",
    "Sphere",
    "TlabError",
    "Tolerances",
    "contains",
    "distance",
    "load_scenario",
    "project",
    "sample_set_near",
    "save_scenario",
]
