"""Closed subsets of R^n exposed through projection oracles.

Every oracle is immutable. ``_project`` works on validated float arrays and is
what the estimators call in their inner loops; the module-level functions
``project``, ``contains`` and ``distance`` validate their inputs first.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from tlab.errors import DimensionMismatch, EmptySample
from tlab.geometry import DEFAULT_TOL, as_vector, uniform_ball, stream


@dataclass(frozen=True, eq=False)
class Cone:
    """Closed convex cone generated by the rows of ``generators``.

    ``subspace`` marks rows forming an orthonormal basis of a linear subspace
    (the cone is their span); ``full`` marks the whole space.
    """

    generators: np.ndarray
    subspace: bool = False
    full: bool = False

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @property
    def is_zero(self) -> bool:
        return not self.full and self.generators.shape[0] == 0

    def project(self, u: np.ndarray) -> np.ndarray:
        G = self.generators
        if self.full:
            return u.copy()
        if G.shape[0] == 0:
            return np.zeros_like(u)
        if self.subspace:
            return G.T @ (G @ u)
        if G.shape[0] == 1:
            return max(0.0, float(G[0] @ u)) * G[0]
        coef, _ = nnls(G.T, u)
        return G.T @ coef

    def distance(self, u: np.ndarray) -> float:
        return float(np.linalg.norm(u - self.project(u)))

    def directions(self) -> np.ndarray:
        """Unit generators of the cone as a conic hull."""
        if self.full:
            eye = np.eye(self.dim)
            return np.vstack([eye, -eye])
        if self.subspace:
            return np.vstack([self.generators, -self.generators])
        return self.generators.copy()


def _zero_cone(n: int) -> Cone:
    return Cone(np.zeros((0, n)))


class SetOracle(ABC):
    """A nonempty closed subset of R^n."""

    kind: str = ""
    label: str = ""

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @abstractmethod
    def _project(self, x: np.ndarray) -> np.ndarray:
        """A nearest point of the set to ``x`` (validated input)."""

    @abstractmethod
    def translate(self, shift: np.ndarray) -> "SetOracle":
        """The set ``self + shift``."""

    @abstractmethod
    def normal_cone(self, a: np.ndarray, tol: float) -> Cone | None:
        """Closed-form proximal normal cone at a member ``a``.

        Returns ``None`` when no closed form is available at ``a``.
        """

    @abstractmethod
    def to_dict(self) -> dict: ...

    is_convex: bool = True

    def _dist(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(x - self._project(x)))


def _label_kw(label: str) -> dict:
    return {"label": label} if label else {}


@dataclass(frozen=True, eq=False)
class AffineSubspace(SetOracle):
    """``point + span(rows of basis)``; rows must be orthonormal."""

    point: np.ndarray
    basis: np.ndarray
    label: str = ""
    kind = "affine"
    _complement: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = as_vector(self.point)
        U = np.array(self.basis, dtype=np.float64).reshape(-1, p.size)
        if not np.all(np.isfinite(U)):
            raise ValueError("basis must be finite")
        if U.shape[0] > p.size:
            raise DimensionMismatch("more basis vectors than the ambient dimension")
        if not np.allclose(U @ U.T, np.eye(U.shape[0]), atol=1e-9):
            raise ValueError("basis rows must be orthonormal; use AffineSubspace.span")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "basis", U)
        if U.shape[0] == 0:
            comp = np.eye(p.size)
        else:
            _, s, vt = np.linalg.svd(U, full_matrices=True)
            comp = vt[U.shape[0]:]
        object.__setattr__(self, "_complement", comp)

    @classmethod
    def span(cls, point, vectors, label: str = "") -> "AffineSubspace":
        p = as_vector(point)
        V = np.array(vectors, dtype=np.float64).reshape(-1, p.size)
        if V.shape[0] == 0:
            return cls(p, V, label)
        q, r = np.linalg.qr(V.T)
        keep = np.abs(np.diag(r)) > 1e-12
        return cls(p, q[:, keep].T, label)

    @property
    def dim(self) -> int:
        return self.point.size

    def _project(self, x):
        U = self.basis
        return self.point + U.T @ (U @ (x - self.point))

    def translate(self, shift):
        return AffineSubspace(self.point + shift, self.basis, self.label)

    def normal_cone(self, a, tol):
        if self._complement.shape[0] == 0:
            return _zero_cone(self.dim)
        return Cone(self._complement, subspace=True)

    def to_dict(self):
        return {"kind": self.kind, "point": self.point.tolist(),
                "basis": self.basis.tolist(), **_label_kw(self.label)}


@dataclass(frozen=True, eq=False)
class HalfSpace(SetOracle):
    """``{x : <normal, x> <= offset}`` with a unit ``normal``."""

    normal: np.ndarray
    offset: float
    label: str = ""
    kind = "halfspace"

    def __post_init__(self):
        n = as_vector(self.normal)
        if abs(np.linalg.norm(n) - 1.0) > DEFAULT_TOL.feas_tol:
            raise ValueError("HalfSpace normal must have unit length; use HalfSpace.make")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def make(cls, normal, offset, label: str = "") -> "HalfSpace":
        n = as_vector(normal)
        s = np.linalg.norm(n)
        return cls(n / s, float(offset) / s, label)

    @property
    def dim(self):
        return self.normal.size

    def _project(self, x):
        excess = float(self.normal @ x) - self.offset
        if excess <= 0.0:
            return x.copy()
        return x - excess * self.normal

    def _dist(self, x):
        return max(0.0, float(self.normal @ x) - self.offset)

    def translate(self, shift):
        return HalfSpace(self.normal, self.offset + float(self.normal @ shift), self.label)

    def normal_cone(self, a, tol):
        if float(self.normal @ a) - self.offset >= -tol:
            return Cone(self.normal[None, :].copy())
        return _zero_cone(self.dim)

    def to_dict(self):
        return {"kind": self.kind, "normal": self.normal.tolist(),
                "offset": self.offset, **_label_kw(self.label)}


@dataclass(frozen=True, eq=False)
class Ball(SetOracle):
    center: np.ndarray
    radius: float
    label: str = ""
    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.size

    def _project(self, x):
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x.copy()
        return self.center + d * (self.radius / r)

    def _dist(self, x):
        return max(0.0, float(np.linalg.norm(x - self.center)) - self.radius)

    def translate(self, shift):
        return Ball(self.center + shift, self.radius, self.label)

    def normal_cone(self, a, tol):
        d = a - self.center
        r = np.linalg.norm(d)
        if r >= self.radius - tol:
            return Cone((d / r)[None, :])
        return _zero_cone(self.dim)

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(),
                "radius": self.radius, **_label_kw(self.label)}


@dataclass(frozen=True, eq=False)
class Sphere(SetOracle):
    center: np.ndarray
    radius: float
    label: str = ""
    kind = "sphere"
    is_convex = False

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.size

    def _project(self, x):
        d = x - self.center
        r = np.linalg.norm(d)
        if r == 0.0:
            # every sphere point is nearest; take the first coordinate direction
            e = np.zeros_like(x)
            e[0] = 1.0
            return self.center + self.radius * e
        return self.center + d * (self.radius / r)

    def _dist(self, x):
        return abs(float(np.linalg.norm(x - self.center)) - self.radius)

    def translate(self, shift):
        return Sphere(self.center + shift, self.radius, self.label)

    def normal_cone(self, a, tol):
        d = a - self.center
        return Cone((d / np.linalg.norm(d))[None, :], subspace=True)

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(),
                "radius": self.radius, **_label_kw(self.label)}


@dataclass(frozen=True, eq=False)
class ConvexPolyhedron(SetOracle):
    """Intersection of half-spaces, projected onto by Dykstra's algorithm."""

    constraints: tuple
    label: str = ""
    max_iter: int = 20000
    kind = "polyhedron"

    def __post_init__(self):
        cons = tuple(self.constraints)
        if not cons:
            raise ValueError("a polyhedron needs at least one constraint")
        if len({h.dim for h in cons}) != 1:
            raise DimensionMismatch("constraints must share the ambient dimension")
        object.__setattr__(self, "constraints", cons)
        object.__setattr__(self, "_N", np.array([h.normal for h in cons]))
        object.__setattr__(self, "_c", np.array([h.offset for h in cons]))

    @property
    def dim(self):
        return self.constraints[0].dim

    def _violation(self, x) -> float:
        return float(np.max(self._N @ x - self._c))

    def _project(self, x):
        N, c = self._N, self._c
        if np.all(N @ x - c <= 0.0):
            return x.copy()
        m = len(c)
        if m == 1:
            return self.constraints[0]._project(x)
        y = x.copy()
        incr = np.zeros((m, x.size))
        step_tol = DEFAULT_TOL.feas_tol * 1e-3
        for _ in range(self.max_iter):
            y_prev = y
            for i in range(m):
                z = y + incr[i]
                excess = float(N[i] @ z) - c[i]
                p = z - excess * N[i] if excess > 0.0 else z
                incr[i] = z - p
                y = p
            if np.linalg.norm(y - y_prev) <= step_tol * (1.0 + np.linalg.norm(y)):
                break
        return y

    def translate(self, shift):
        return ConvexPolyhedron(tuple(h.translate(shift) for h in self.constraints),
                                self.label, self.max_iter)

    def normal_cone(self, a, tol):
        active = self._N @ a - self._c >= -max(tol, 1e-9)
        if not np.any(active):
            return _zero_cone(self.dim)
        return Cone(self._N[active].copy())

    def to_dict(self):
        return {"kind": self.kind,
                "constraints": [{"normal": h.normal.tolist(), "offset": h.offset}
                                for h in self.constraints],
                **_label_kw(self.label)}


@dataclass(frozen=True, eq=False)
class PointSet(SetOracle):
    """A finite set of points; ties go to the lowest index."""

    points: np.ndarray
    label: str = ""
    kind = "points"

    def __post_init__(self):
        P = np.array(self.points, dtype=np.float64)
        if P.ndim == 1:
            P = P[None, :]
        if P.shape[0] == 0 or not np.all(np.isfinite(P)):
            raise ValueError("PointSet needs at least one finite point")
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "is_convex", P.shape[0] == 1 or bool(np.all(P == P[0])))

    @property
    def dim(self):
        return self.points.shape[1]

    def _project(self, x):
        d = np.linalg.norm(self.points - x, axis=1)
        return self.points[int(np.argmin(d))].copy()

    def translate(self, shift):
        return PointSet(self.points + shift, self.label)

    def normal_cone(self, a, tol):
        # isolated points: every direction is a proximal normal
        return Cone(np.eye(self.dim), full=True)

    def to_dict(self):
        return {"kind": self.kind, "points": self.points.tolist(), **_label_kw(self.label)}


@dataclass(frozen=True, eq=False)
class FiniteUnion(SetOracle):
    """Union of member sets; projection ties go to the lowest member index."""

    members: tuple
    label: str = ""
    kind = "union"
    is_convex = False

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("a union needs at least one member")
        if len({m.dim for m in members}) != 1:
            raise DimensionMismatch("union members must share the ambient dimension")
        object.__setattr__(self, "members", members)

    @property
    def dim(self):
        return self.members[0].dim

    def _project(self, x):
        best, best_d = None, np.inf
        for m in self.members:
            p = m._project(x)
            d = float(np.linalg.norm(x - p))
            if d < best_d:
                best, best_d = p, d
        return best

    def translate(self, shift):
        return FiniteUnion(tuple(m.translate(shift) for m in self.members), self.label)

    def members_at(self, a: np.ndarray, tol: float) -> list[int]:
        return [i for i, m in enumerate(self.members) if m._dist(a) <= tol]

    def normal_cone(self, a, tol):
        idx = self.members_at(a, tol)
        if len(idx) == 1:
            return self.members[idx[0]].normal_cone(a, tol)
        return None

    def member_cones(self, a: np.ndarray, tol: float) -> list[Cone]:
        return [self.members[i].normal_cone(a, tol) for i in self.members_at(a, tol)]

    def to_dict(self):
        return {"kind": self.kind, "members": [m.to_dict() for m in self.members],
                **_label_kw(self.label)}


def set_from_dict(d: dict) -> SetOracle:
    """Inverse of ``SetOracle.to_dict``."""
    kind = d.get("kind")
    label = d.get("label", "")
    if kind == "affine":
        basis = d.get("basis", [])
        U = np.array(basis, dtype=np.float64).reshape(-1, len(d["point"]))
        if np.allclose(U @ U.T, np.eye(U.shape[0]), atol=1e-12):
            # already orthonormal: keep it bit-for-bit so files round-trip
            return AffineSubspace(d["point"], U, label)
        return AffineSubspace.span(d["point"], U, label)
    if kind == "halfspace":
        return HalfSpace.make(d["normal"], d["offset"], label)
    if kind == "ball":
        return Ball(d["center"], d["radius"], label)
    if kind == "sphere":
        return Sphere(d["center"], d["radius"], label)
    if kind == "polyhedron":
        return ConvexPolyhedron(tuple(HalfSpace.make(c["normal"], c["offset"])
                                      for c in d["constraints"]), label)
    if kind == "points":
        return PointSet(d["points"], label)
    if kind == "union":
        return FiniteUnion(tuple(set_from_dict(m) for m in d["members"]), label)
    raise ValueError(f"unknown set kind {kind!r}")


def _check(set_: SetOracle, x) -> np.ndarray:
    return as_vector(x, set_.dim)


def project(set_: SetOracle, x) -> tuple[np.ndarray, float]:
    """Nearest point of ``set_`` to ``x`` and the distance to it."""
    v = _check(set_, x)
    p = set_._project(v)
    return p, float(np.linalg.norm(v - p))


def distance(set_: SetOracle, x) -> float:
    return set_._dist(_check(set_, x))


def contains(set_: SetOracle, x, tol: float = DEFAULT_TOL.feas_tol) -> bool:
    if not tol > 0:
        raise ValueError("tol must be positive")
    return distance(set_, x) <= tol


def sample_set_near(set_: SetOracle, center, rho: float, n: int, seed: int,
                    exclude=None, tol: float = DEFAULT_TOL.feas_tol) -> np.ndarray:
    """Up to ``n`` distinct points of ``set_`` within ``rho`` of ``center``.

    Candidates are uniform points of the ball projected onto the set. A
    candidate is dropped when it leaves the ball or ``exclude(p)`` is true.
    The returned rows are a prefix-stable function of ``(seed, n)``.
    """
    if not rho > 0 or n < 1:
        raise ValueError("need rho > 0 and n >= 1")
    c = _check(set_, center)
    rng = stream(seed, "sample_set_near")
    cand = uniform_ball(rng, c, rho, n)
    out = []
    seen = set()
    for y in cand:
        p = set_._project(y)
        if np.linalg.norm(p - c) > rho + tol or set_._dist(p) > tol:
            continue
        if exclude is not None and exclude(p):
            continue
        key = p.tobytes()
        if key in seen:
            continue
        seen.add(key)
        out.append(p)
    if not out:
        raise EmptySample(f"no admissible point of {set_.kind} set within {rho} of {c}")
    return np.array(out)
