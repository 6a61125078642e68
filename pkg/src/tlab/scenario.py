"""Pair scenarios, their JSON file format, and the canonical catalog.

File format (all reals written with 17 significant digits)::

    {
      "label": "two-lines-60",           # optional
      "dimension": 2,
      "set_a": {<set descriptor>},
      "set_b": {<set descriptor>},
      "xbar": [0.0, 0.0],
      "intersection": {<set descriptor>}, # A ∩ B, used for d(., A∩B)
      "seed": 12345,
      "x0": [1.0, 0.0],                   # optional start for alternating projections
      "tags": ["convex", "transversal"]   # optional expectations for the suite
    }

A set descriptor is an object with a ``kind`` tag:

    affine     {"point": [...], "basis": [[...], ...]}      rows spanning the direction space
    halfspace  {"normal": [...], "offset": c}               {x : <normal, x> <= c}
    ball       {"center": [...], "radius": r}
    sphere     {"center": [...], "radius": r}
    polyhedron {"constraints": [{"normal": [...], "offset": c}, ...]}
    points     {"points": [[...], ...]}
    union      {"members": [<set descriptor>, ...]}

Each descriptor may carry an optional ``label``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tlab.errors import DimensionMismatch, ScenarioFormatError
from tlab.geometry import DEFAULT_TOL, as_vector
from tlab.jsonio import write_json
from tlab.sets import (
    AffineSubspace,
    Ball,
    ConvexPolyhedron,
    FiniteUnion,
    HalfSpace,
    PointSet,
    SetOracle,
    sample_set_near,
    set_from_dict,
)

KNOWN_TAGS = {"convex", "transversal", "tangential", "nested", "identical", "stall"}


@dataclass(frozen=True, eq=False)
class PairScenario:
    set_a: SetOracle
    set_b: SetOracle
    xbar: np.ndarray
    intersection: SetOracle
    seed: int = 0
    label: str = ""
    x0: np.ndarray | None = None
    tags: tuple = field(default_factory=tuple)

    def __post_init__(self):
        dims = {self.set_a.dim, self.set_b.dim, self.intersection.dim}
        if len(dims) != 1:
            raise DimensionMismatch(f"scenario sets have dimensions {sorted(dims)}")
        n = dims.pop()
        object.__setattr__(self, "xbar", as_vector(self.xbar, n))
        if self.x0 is not None:
            object.__setattr__(self, "x0", as_vector(self.x0, n))
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "tags", tuple(self.tags))
        tol = DEFAULT_TOL.feas_tol
        if self.set_a._dist(self.xbar) > tol or self.set_b._dist(self.xbar) > tol:
            raise ValueError("xbar must lie in both sets")

    @property
    def dim(self) -> int:
        return self.xbar.size

    @property
    def is_convex(self) -> bool:
        return self.set_a.is_convex and self.set_b.is_convex

    def intersection_consistency(self, rho: float = 0.5, n: int = 64,
                                 tol: float = DEFAULT_TOL.feas_tol) -> float:
        """Largest membership defect in A or B over sampled intersection points."""
        pts = sample_set_near(self.intersection, self.xbar, rho, n, self.seed)
        worst = 0.0
        for p in pts:
            worst = max(worst, self.set_a._dist(p), self.set_b._dist(p))
        return worst

    def with_seed(self, seed: int) -> "PairScenario":
        return PairScenario(self.set_a, self.set_b, self.xbar, self.intersection,
                            seed, self.label, self.x0, self.tags)

    def to_dict(self) -> dict:
        d = {
            "dimension": self.dim,
            "set_a": self.set_a.to_dict(),
            "set_b": self.set_b.to_dict(),
            "xbar": self.xbar.tolist(),
            "intersection": self.intersection.to_dict(),
            "seed": self.seed,
        }
        if self.label:
            d["label"] = self.label
        if self.x0 is not None:
            d["x0"] = self.x0.tolist()
        if self.tags:
            d["tags"] = list(self.tags)
        return d


def scenario_from_dict(d: dict) -> PairScenario:
    try:
        sc = PairScenario(
            set_from_dict(d["set_a"]),
            set_from_dict(d["set_b"]),
            d["xbar"],
            set_from_dict(d["intersection"]),
            seed=int(d.get("seed", 0)),
            label=d.get("label", ""),
            x0=d.get("x0"),
            tags=tuple(d.get("tags", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"invalid scenario: {exc}") from exc
    if "dimension" in d and int(d["dimension"]) != sc.dim:
        raise ScenarioFormatError(f"dimension field {d['dimension']} != {sc.dim}")
    unknown = set(sc.tags) - KNOWN_TAGS
    if unknown:
        raise ScenarioFormatError(f"unknown tags {sorted(unknown)}")
    return sc


def load_scenario(path) -> PairScenario:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioFormatError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(d)


def save_scenario(sc: PairScenario, path) -> None:
    write_json(path, sc.to_dict())


# -- catalog -----------------------------------------------------------------

def _line(direction, label="") -> AffineSubspace:
    return AffineSubspace.span(np.zeros(len(direction)), [direction], label)


def two_lines(theta: float, seed: int = 1) -> PairScenario:
    """Horizontal axis and the line at angle ``theta`` through the origin."""
    A = _line([1.0, 0.0], "L1")
    B = _line([math.cos(theta), math.sin(theta)], "L2")
    deg = round(math.degrees(theta))
    return PairScenario(A, B, np.zeros(2), PointSet([[0.0, 0.0]]), seed,
                        f"two-lines-{deg}", x0=np.array([1.0, 0.0]),
                        tags=("convex", "transversal"))


def tangential_ball_line(seed: int = 2) -> PairScenario:
    A = Ball([0.0, 1.0], 1.0, "ball")
    B = _line([1.0, 0.0], "axis")
    return PairScenario(A, B, np.zeros(2), PointSet([[0.0, 0.0]]), seed,
                        "tangential-ball-line", x0=np.array([0.5, 0.5]),
                        tags=("convex", "tangential"))


def secant_ball_line(seed: int = 3) -> PairScenario:
    """Unit ball centred at (0, -0.6) cut by the horizontal axis; xbar an endpoint."""
    A = Ball([0.0, -0.6], 1.0, "ball")
    B = _line([1.0, 0.0], "axis")
    inter = ConvexPolyhedron((HalfSpace.make([0, 1], 0), HalfSpace.make([0, -1], 0),
                              HalfSpace.make([1, 0], 0.8), HalfSpace.make([-1, 0], 0.8)))
    return PairScenario(A, B, np.array([0.8, 0.0]), inter, seed, "secant-ball-line",
                        x0=np.array([1.2, 0.3]), tags=("convex", "transversal"))


def crossing_half_planes(theta: float = math.pi / 3, seed: int = 4) -> PairScenario:
    """``{q <= 0}`` and the half-plane below the line at angle ``theta``."""
    A = HalfSpace.make([0.0, 1.0], 0.0, "H1")
    B = HalfSpace.make([-math.sin(theta), math.cos(theta)], 0.0, "H2")
    inter = ConvexPolyhedron((A, B))
    deg = round(math.degrees(theta))
    return PairScenario(A, B, np.zeros(2), inter, seed, f"half-planes-{deg}",
                        x0=np.array([-0.5, 1.0]), tags=("convex", "transversal"))


def identical_half_planes(seed: int = 5) -> PairScenario:
    H = HalfSpace.make([0.0, 1.0], 0.0, "H")
    return PairScenario(H, H, np.zeros(2), H, seed, "identical-half-planes",
                        x0=np.array([0.3, 0.7]), tags=("convex", "identical"))


def nested_pair(seed: int = 6) -> PairScenario:
    """A = {origin} inside B = R^2."""
    A = PointSet([[0.0, 0.0]], "origin")
    B = AffineSubspace(np.zeros(2), np.eye(2), "plane")
    return PairScenario(A, B, np.zeros(2), PointSet([[0.0, 0.0]]), seed, "nested",
                        x0=np.array([0.4, -0.2]), tags=("convex", "nested"))


def stall_pair(seed: int = 7) -> PairScenario:
    """``{q = 1} ∪ {origin}`` against the horizontal axis."""
    A = FiniteUnion((AffineSubspace.span([0.0, 1.0], [[1.0, 0.0]], "q=1"),
                     PointSet([[0.0, 0.0]], "origin")), "A-star")
    B = _line([1.0, 0.0], "axis")
    return PairScenario(A, B, np.zeros(2), PointSet([[0.0, 0.0]]), seed, "stall",
                        x0=np.array([5.0, 1.0]), tags=("stall",))


def identical_lines(seed: int = 8) -> PairScenario:
    L = _line([1.0, 0.0], "L")
    return PairScenario(L, L, np.zeros(2), L, seed, "identical-lines",
                        x0=np.array([0.5, 0.5]), tags=("convex", "identical"))


def shipped_battery() -> list[PairScenario]:
    """Scenarios of the verification battery, in canonical order."""
    return [
        two_lines(math.pi / 6, seed=11),
        two_lines(math.pi / 3, seed=12),
        two_lines(math.pi / 2, seed=13),
        tangential_ball_line(),
        secant_ball_line(),
        identical_half_planes(),
        identical_lines(),
        nested_pair(),
        stall_pair(),
    ]


def extended_battery() -> list[PairScenario]:
    """The shipped battery plus pairs whose normals meet at an acute angle.

    For such pairs the itr3 relation with itr does not hold (the
    distance-minimizing direction puts one ray at the origin), so they are
    kept out of the pass/fail battery.
    """
    return shipped_battery() + [crossing_half_planes()]


def write_battery(directory) -> list[Path]:
    directory = Path(directory)
    paths = []
    for i, sc in enumerate(shipped_battery()):
        p = directory / f"{i:02d}-{sc.label}.json"
        save_scenario(sc, p)
        paths.append(p)
    return paths
