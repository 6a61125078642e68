"""Proximal normal directions, Fréchet-normal defects and cone distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tlab.errors import EmptySample, EpsilonTooLarge, NotInSet
from tlab.geometry import DEFAULT_TOL, RadiusSchedule, Tolerances, as_vector, stream
from tlab.sets import Cone, FiniteUnion, SetOracle, sample_set_near


@dataclass(frozen=True, eq=False)
class NormalFan:
    base: np.ndarray
    directions: np.ndarray  # (k, n) unit rows
    exact: bool
    multi_piece: bool = False

    def to_dict(self) -> dict:
        return {"base": self.base.tolist(), "directions": self.directions.tolist(),
                "exact": self.exact, "multi_piece": self.multi_piece}


def default_eps(a: np.ndarray) -> float:
    return 1e-6 * (1.0 + float(np.linalg.norm(a)))


def _member(set_: SetOracle, a, tol: Tolerances) -> np.ndarray:
    v = as_vector(a, set_.dim)
    if set_._dist(v) > tol.feas_tol:
        raise NotInSet(f"point {v} is not in the {set_.kind} set")
    return v


def passes_inverse_projection(set_: SetOracle, a: np.ndarray, u: np.ndarray, eps: float,
                              tol: float = DEFAULT_TOL.feas_tol) -> bool:
    """True when ``a`` is the projection of ``a + eps*u`` onto the set."""
    p = set_._project(a + eps * u)
    return float(np.linalg.norm(p - a)) <= tol * (1.0 + float(np.linalg.norm(a)))


def _cones_at(set_: SetOracle, a: np.ndarray, tol: float) -> list[Cone]:
    if isinstance(set_, FiniteUnion):
        return set_.member_cones(a, tol)
    return [set_.normal_cone(a, tol)]


def proximal_normal_directions(set_: SetOracle, a, eps: float | None = None, m: int = 32,
                               seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> NormalFan:
    """Unit generators of the proximal normal cone at ``a``.

    Closed-form kinds return their exact generators (``exact=True``). A union
    point returns the member generators plus ``m`` random directions that pass
    the inverse-projection test, with ``exact=False``.
    """
    a = _member(set_, a, tol)
    if eps is None:
        eps = default_eps(a)
    if m < 1:
        raise ValueError("m must be >= 1")
    cones = _cones_at(set_, a, tol.feas_tol)
    cand = [c.directions() for c in cones if not c.is_zero]
    exact = not isinstance(set_, FiniteUnion)
    if not exact:
        g = stream(seed, "proximal_fan").standard_normal((m, a.size))
        cand.append(g / np.linalg.norm(g, axis=1, keepdims=True))
    if not cand:
        return NormalFan(a, np.zeros((0, a.size)), exact)
    cand = np.vstack(cand)
    keep = [u for u in cand if passes_inverse_projection(set_, a, u, eps, tol.feas_tol)]
    if exact and not keep:
        raise EpsilonTooLarge(f"eps={eps} rejects every generator at {a}")
    dirs = np.array(keep) if keep else np.zeros((0, a.size))
    if len(dirs):
        _, first = np.unique(np.round(dirs, 12), axis=0, return_index=True)
        dirs = dirs[np.sort(first)]
    return NormalFan(a, dirs, exact, multi_piece=len(cones) > 1)


def cone_projection(set_: SetOracle, a: np.ndarray, u: np.ndarray,
                    tol: float = DEFAULT_TOL.feas_tol) -> np.ndarray:
    """Projection of ``u`` onto the closed-form normal cone at ``a``.

    On a union point lying on several members the member giving the nearest
    projection is used.
    """
    best, best_d = None, np.inf
    for c in _cones_at(set_, a, tol):
        p = c.project(u)
        d = float(np.linalg.norm(u - p))
        if d < best_d:
            best, best_d = p, d
    return best


def normal_cone_distance(set_: SetOracle, a, u, fan: NormalFan | None = None,
                         tol: Tolerances = DEFAULT_TOL) -> float:
    """``d(u, N_A(a))``.

    Exact for closed-form cones (minimum over members for a union). With a
    sampled (non-exact) ``fan`` the result is ``min_{t>=0, g} |u - t g|``, an
    upper bound on the true distance.
    """
    a = _member(set_, a, tol)
    u = as_vector(u, set_.dim)
    if fan is not None and not fan.exact:
        if len(fan.directions) == 0:
            return float(np.linalg.norm(u))
        t = np.maximum(fan.directions @ u, 0.0)
        res = u[None, :] - t[:, None] * fan.directions
        return float(np.min(np.linalg.norm(res, axis=1)))
    return float(np.linalg.norm(u - cone_projection(set_, a, u, tol.feas_tol)))


def frechet_normal_defect(set_: SetOracle, a, u, radii: RadiusSchedule, n: int = 256,
                          seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> float:
    """Sampled ``limsup <u, a'-a>/|a'-a>`` over set points ``a' != a`` near ``a``.

    Evaluated at the smallest radius of ``radii``; a value at most
    ``align_tol`` certifies ``u`` as an approximate Fréchet normal.
    """
    a = _member(set_, a, tol)
    u = as_vector(u, set_.dim)
    if abs(np.linalg.norm(u) - 1.0) > tol.feas_tol:
        raise ValueError("u must be a unit vector")
    rho = radii.smallest
    far = lambda p: np.linalg.norm(p - a) <= tol.feas_tol * (1 + rho)  # noqa: E731
    try:
        pts = sample_set_near(set_, a, rho, n, seed, exclude=far, tol=tol.feas_tol)
    except EmptySample as exc:
        raise EmptySample(f"set is locally the singleton {a}") from exc
    diff = pts - a
    return float(np.max(diff @ u / np.linalg.norm(diff, axis=1)))


def alignment_defect(v: np.ndarray, w: np.ndarray) -> float:
    """``1 - <v, w>/(|v||w|)``, zero when either vector vanishes (0/0 = 1)."""
    nv, nw = np.linalg.norm(v), np.linalg.norm(w)
    if nv == 0.0 or nw == 0.0:
        return 0.0
    return float(1.0 - (v @ w) / (nv * nw))
