"""Shrinking-radius estimators of transversality constants.

Every estimator evaluates its inner infimum or supremum on each radius of a
``RadiusSchedule`` by seeded sampling followed by compass-search refinement,
and reports the whole per-radius curve. The estimate is the value at the
smallest radius; nothing is extrapolated.

Candidate lists are prefix-stable in the sample count and refinement starts
are chosen per fixed-size block, so doubling ``n`` on the same seed can only
lower a min-type value or raise a max-type value.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from tlab.errors import IntersectionLocatorFailed, NonUnitPair
from tlab.geometry import (
    DEFAULT_TOL,
    RadiusSchedule,
    Tolerances,
    sphere_mesh,
    stream,
    uniform_ball,
    uniform_shell,
)
from tlab.normals import alignment_defect, cone_projection
from tlab.scenario import PairScenario
from tlab.search import chunk_starts, pattern_search
from tlab.sets import FiniteUnion, SetOracle

NO_WITNESS = "NoWitness"
DEGENERATE = "Degenerate"

RANGES = {
    "str": (0.0, 1.0),
    "tr": (0.0, 1.0),
    "itr": (0.0, 1.0),
    "strc": (0.0, 1.0),
    "itrhat1": (0.0, 1.0),
    "itrhat2": (0.0, 1.0),
    "itr1": (0.0, 2.0),
    "itr2": (-1.0, 1.0),
    "itr3": (0.0, math.sqrt(2.0)),
}

# slack for range checks on values assembled from floating-point unit vectors
_RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class RadiusValue:
    rho: float
    value: float
    samples: int
    flag: str = ""


@dataclass(frozen=True)
class ConstantEstimate:
    name: str
    per_radius: tuple
    seed: int
    skipped: int = 0
    harvest_id: str = ""

    def __post_init__(self):
        if self.name not in RANGES:
            raise ValueError(f"unknown constant {self.name!r}")
        pr = tuple(self.per_radius)
        if not pr:
            raise ValueError("per_radius must be nonempty")
        radii = [r.rho for r in pr]
        if any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        lo, hi = RANGES[self.name]
        for r in pr:
            if not lo - _RANGE_SLACK <= r.value <= hi + _RANGE_SLACK:
                raise ValueError(f"{self.name}={r.value} outside [{lo}, {hi}]")
        object.__setattr__(self, "per_radius", pr)

    @property
    def value(self) -> float:
        return self.per_radius[-1].value

    @property
    def flag(self) -> str:
        return self.per_radius[-1].flag

    def rows(self) -> list[list]:
        return [[self.name, r.rho, r.value, r.samples, self.seed, r.flag] for r in self.per_radius]

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "seed": self.seed,
                "flag": self.flag, "skipped": self.skipped, "harvest_id": self.harvest_id,
                "per_radius": [{"rho": r.rho, "value": r.value, "samples": r.samples,
                                "flag": r.flag} for r in self.per_radius]}


def subseed(seed: int, name: str, *keys: int) -> int:
    return int(stream(seed, name, *keys).integers(0, 2**63))


def _clamp(v: float, name: str) -> float:
    lo, hi = RANGES[name]
    return float(min(max(v, lo), hi))


def _excluder(other: SetOracle, tol: float):
    return lambda p: other._dist(p) <= tol


# -- subtransversality ---------------------------------------------------------

def estimate_subtransversality(pair: PairScenario, schedule: RadiusSchedule = RadiusSchedule(),
                               n: int = 200, *, seed: int | None = None,
                               tol: Tolerances = DEFAULT_TOL, chunk: int = 50,
                               refine: bool = True) -> ConstantEstimate:
    """``inf max{d(x,A), d(x,B)} / d(x, A∩B)`` over ``x`` at distance ``rho`` from ``xbar``.

    Radius ``rho`` covers the shell ``gamma*rho <= |x - xbar| <= rho`` between
    it and the next radius, so each entry of the curve measures the ratio at
    its own scale. Every other candidate is the midpoint of the projections
    of a shell point onto A and B, which lands near the set where the two
    distances balance.
    """
    if n < 10:
        raise ValueError("n must be >= 10")
    seed = pair.seed if seed is None else seed
    A, B, I, xbar = pair.set_a, pair.set_b, pair.intersection, pair.xbar
    gamma = schedule.factor

    def ratio(x, rho):
        r = np.linalg.norm(x - xbar)
        if r > rho or r < gamma * rho:
            return math.inf
        di = I._dist(x)
        if di <= 1e-9 * rho:
            return math.inf
        return max(A._dist(x), B._dist(x)) / di

    out = []
    for k, rho in enumerate(schedule.radii):
        xs = uniform_shell(stream(seed, "str", k), xbar, gamma * rho, rho, n)
        for i in range(1, n, 2):
            mid = 0.5 * (A._project(xs[i]) + B._project(xs[i]))
            if gamma * rho <= np.linalg.norm(mid - xbar) <= rho:
                xs[i] = mid
        vals = np.array([ratio(x, rho) for x in xs])
        finite = int(np.isfinite(vals).sum())
        best = float(vals[np.isfinite(vals)].min()) if finite else math.inf
        if refine:
            for s in chunk_starts(vals, chunk):
                _, fx, _ = pattern_search(lambda y: ratio(y, rho), xs[s], rho / 8, rho * 1e-6)
                best = min(best, fx)
        if finite == 0:
            out.append(RadiusValue(rho, 1.0, 0, DEGENERATE))
        else:
            out.append(RadiusValue(rho, _clamp(best, "str"), finite))
    return ConstantEstimate("str", tuple(out), seed)


# -- transversality ------------------------------------------------------------

def locate_intersection(A: SetOracle, B: SetOracle, x: np.ndarray, tol: float = 1e-12,
                        max_iter: int = 5000, certify: bool = True) -> np.ndarray | None:
    """Nearest point of ``A ∩ B`` to ``x``, or ``None`` when the sets are certified disjoint.

    Emptiness is certified when plain alternating projections settle at a
    positive gap; the nearest point comes from Dykstra's algorithm (exact for
    convex sets). Raises ``IntersectionLocatorFailed`` when neither happens
    within ``max_iter`` cycles. ``certify=False`` skips the emptiness phase
    for callers that already know the intersection is nonempty.
    """
    scale = 1.0 + float(np.linalg.norm(x))
    # phase 1: feasibility
    y = B._project(x)
    prev_gap = math.inf
    flat = 0
    for _ in range(max_iter if certify else 0):
        z = A._project(y)
        y = B._project(z)
        gap = float(np.linalg.norm(z - y))
        if gap <= tol * scale:
            break
        flat = flat + 1 if prev_gap - gap <= 1e-13 * scale else 0
        if flat >= 5 and gap > 1e-8 * scale:
            return None
        prev_gap = gap
    else:
        if certify:
            raise IntersectionLocatorFailed("alternating projections did not settle")
    # phase 2: Dykstra from x
    y = x.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_iter):
        z = A._project(y + p)
        p = y + p - z
        y_new = B._project(z + q)
        q = z + q - y_new
        done = (np.linalg.norm(z - y_new) <= tol * scale
                and np.linalg.norm(y_new - y) <= tol * scale)
        y = y_new
        if done:
            return y
    raise IntersectionLocatorFailed("Dykstra iteration did not converge")


def estimate_transversality(pair: PairScenario, schedule: RadiusSchedule = RadiusSchedule(),
                            n: int = 20, m: int = 10, *, seed: int | None = None,
                            tol: Tolerances = DEFAULT_TOL, refine: bool = True) -> ConstantEstimate:
    """``inf max{d(x,A-x1), d(x,B-x2)} / d(x, (A-x1)∩(B-x2))`` with ``|x1|, |x2| <= rho``.

    A translation whose sets are certified disjoint contributes ratio 0
    (distance to the empty set is infinite). Samples whose intersection could
    not be located are skipped and counted.
    """
    if n < 10 or m < 10:
        raise ValueError("n and m must be >= 10")
    seed = pair.seed if seed is None else seed
    A, B, xbar = pair.set_a, pair.set_b, pair.xbar
    zero = np.zeros_like(xbar)
    out = []
    skipped = 0
    for k, rho in enumerate(schedule.radii):
        x1s = uniform_ball(stream(seed, "tr-x1", k), zero, rho, m)
        x2s = uniform_ball(stream(seed, "tr-x2", k), zero, rho, m)
        best = math.inf
        best_start = None
        count = 0
        for j in range(m):
            As, Bs = A.translate(-x1s[j]), B.translate(-x2s[j])
            try:
                probe = locate_intersection(As, Bs, xbar, 1e-10 * rho)
            except IntersectionLocatorFailed:
                skipped += n
                continue
            if probe is None:
                best = 0.0
                count += n
                continue

            def ratio(x, As=As, Bs=Bs):
                if np.linalg.norm(x - xbar) > rho:
                    return math.inf
                try:
                    p = locate_intersection(As, Bs, x, 1e-10 * rho, certify=False)
                except IntersectionLocatorFailed:
                    return math.inf
                if p is None:
                    return 0.0
                di = float(np.linalg.norm(x - p))
                if di <= 1e-9 * rho:
                    return math.inf
                return max(As._dist(x), Bs._dist(x)) / di

            xs = uniform_ball(stream(seed, "tr-x", k, j), xbar, rho, n)
            for x in xs:
                r = ratio(x)
                if math.isfinite(r):
                    count += 1
                    if r < best:
                        best, best_start = r, (x, ratio)
                else:
                    skipped += 1
        if refine and best_start is not None and best > 0.0:
            _, fx, _ = pattern_search(best_start[1], best_start[0], rho / 8, rho * 1e-5,
                                      max_evals=300)
            best = min(best, fx)
        if count == 0:
            out.append(RadiusValue(rho, 1.0, 0, DEGENERATE))
        else:
            out.append(RadiusValue(rho, _clamp(best, "tr"), count))
    return ConstantEstimate("tr", tuple(out), seed, skipped)


# -- relative normal pairs ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WitnessTriple:
    a: np.ndarray
    b: np.ndarray
    x: np.ndarray

    @property
    def u1(self) -> np.ndarray:
        d = self.x - self.a
        return d / np.linalg.norm(d)

    @property
    def u2(self) -> np.ndarray:
        d = self.x - self.b
        return d / np.linalg.norm(d)


@dataclass(frozen=True)
class Defects:
    ratio_defect: float
    align1_defect: float
    align2_defect: float
    cone1_dist: float
    cone2_dist: float

    def worst(self) -> float:
        return max(self.ratio_defect, self.align1_defect, self.align2_defect,
                   self.cone1_dist, self.cone2_dist)


@dataclass(frozen=True, eq=False)
class RelativeNormalPair:
    v1: np.ndarray
    v2: np.ndarray
    witness: WitnessTriple
    defects: Defects

    def scaled(self, t1: float, t2: float) -> "RelativeNormalPair":
        """The pair ``(t1 v1, t2 v2)`` on the same witness."""
        w = self.witness
        v1, v2 = t1 * self.v1, t2 * self.v2
        d = self.defects
        return RelativeNormalPair(v1, v2, w, Defects(
            d.ratio_defect, alignment_defect(v1, w.x - w.a), alignment_defect(v2, w.x - w.b),
            d.cone1_dist, d.cone2_dist))


class _WitnessProblem:
    """Feasible witness triples at one radius.

    A candidate ``x`` is moved onto (or near) the equidistance set
    ``d(x,A) = d(x,B)`` by Newton steps on ``d_A - d_B``; then ``a = P_A(x)``,
    ``b = P_B(x)`` and ``u_i`` are exact proximal normals. ``mode`` is
    ``"ratio"`` (band on ``|x-a|/|x-b|``) or ``"equal"`` (band on
    ``|x-a| - |x-b|`` relative to ``|x-a|``).
    """

    def __init__(self, pair: PairScenario, rho: float, eta: float, mode: str, tol: Tolerances):
        self.A, self.B, self.xbar = pair.set_a, pair.set_b, pair.xbar
        self.rho, self.eta, self.mode, self.tol = rho, eta, mode, tol
        self.harvest: list[RelativeNormalPair] = []
        self.evaluations = 0

    def _band(self, da, db) -> float:
        if self.mode == "ratio":
            return abs(da / db - 1.0)
        return abs(da - db) / da

    def evaluate(self, x0: np.ndarray) -> float:
        """Half of ``|u1 + u2|`` at the repaired witness, ``inf`` if infeasible."""
        self.evaluations += 1
        A, B = self.A, self.B
        x = np.array(x0, dtype=np.float64)
        tiny = 1e-14 * (1.0 + float(np.linalg.norm(x)))
        target = self.eta / 2 if self.mode == "ratio" else 1e-12
        for _ in range(40):
            a, b = A._project(x), B._project(x)
            da, db = float(np.linalg.norm(x - a)), float(np.linalg.norm(x - b))
            if da <= tiny or db <= tiny:
                return math.inf
            if self._band(da, db) <= target:
                break
            g = (x - a) / da - (x - b) / db
            gg = float(g @ g)
            if gg < 1e-14:
                return math.inf
            x = x - (da - db) / gg * g
        else:
            return math.inf
        rho, xbar, ftol = self.rho, self.xbar, self.tol.feas_tol
        if (np.linalg.norm(x - xbar) > rho or np.linalg.norm(a - xbar) > rho
                or np.linalg.norm(b - xbar) > rho):
            return math.inf
        if B._dist(a) <= ftol or A._dist(b) <= ftol:
            return math.inf
        u1, u2 = (x - a) / da, (x - b) / db
        c1 = float(np.linalg.norm(u1 - cone_projection(A, a, u1, ftol)))
        c2 = float(np.linalg.norm(u2 - cone_projection(B, b, u2, ftol)))
        d = Defects(self._band(da, db), 0.0, 0.0, c1, c2)
        if d.worst() > self.eta:
            return math.inf
        self.harvest.append(RelativeNormalPair(u1, u2, WitnessTriple(a, b, x), d))
        return 0.5 * float(np.linalg.norm(u1 + u2))


def _normal_generator(S: SetOracle, a: np.ndarray, u: float, ftol: float) -> np.ndarray | None:
    """A normal cone generator at ``a`` picked by ``u`` in [0, 1)."""
    cones = S.member_cones(a, ftol) if isinstance(S, FiniteUnion) else [S.normal_cone(a, ftol)]
    dirs = [c.directions() for c in cones if not c.is_zero]
    if not dirs:
        return None
    dirs = np.vstack(dirs)
    return dirs[min(int(u * len(dirs)), len(dirs) - 1)]


def _indexed_points(S: SetOracle, other: SetOracle, xbar: np.ndarray, rho: float, n: int,
                    rng: np.random.Generator, ftol: float) -> np.ndarray:
    """Projections onto ``S`` of ``n`` uniform ball points, row by row.

    Rows that leave the ball or touch ``other`` are NaN. Row ``i`` depends
    only on candidate ``i``, so doubling ``n`` keeps the earlier rows.
    """
    out = np.full((n, xbar.size), np.nan)
    for i, y in enumerate(uniform_ball(rng, xbar, rho, n)):
        p = S._project(y)
        if np.linalg.norm(p - xbar) <= rho + ftol and other._dist(p) > ftol:
            out[i] = p
    return out


def _fan_seed(S: SetOracle, other: SetOracle, pts: np.ndarray, j: int, u: np.ndarray,
              rho: float, ftol: float) -> np.ndarray | None:
    """``a + s g`` for a normal generator ``g`` at the ``j``-th sampled point ``a``."""
    a = pts[j]
    if np.isnan(a[0]):
        return None
    g = _normal_generator(S, a, u[0], ftol)
    if g is None:
        return None
    s = u[1] * 0.5 * min(other._dist(a), rho)
    if s <= 0.0:
        return None
    return a + s * g


def _witness_seeds(pair: PairScenario, rho: float, n: int, seed: int, k: int,
                   tol: Tolerances) -> np.ndarray:
    """Candidate ``x`` values: uniform ball points interleaved with points pushed
    off sampled ``a in A\\B`` and ``b in B\\A`` along normal generators."""
    A, B, xbar, ftol = pair.set_a, pair.set_b, pair.xbar, tol.feas_tol
    xs = uniform_ball(stream(seed, "witness-x", k), xbar, rho, n)
    aux = stream(seed, "witness-aux", k).random((n, 2))
    As = _indexed_points(A, B, xbar, rho, n, stream(seed, "witness-a", k), ftol)
    Bs = _indexed_points(B, A, xbar, rho, n, stream(seed, "witness-b", k), ftol)
    out = xs.copy()
    for i in range(n):
        r = i % 3
        if r == 1:
            s = _fan_seed(A, B, As, i, aux[i], rho, ftol)
        elif r == 2:
            s = _fan_seed(B, A, Bs, i, aux[i], rho, ftol)
        else:
            s = None
        if s is not None:
            out[i] = s
    return out


def harvest_normal_pairs(pair: PairScenario, rho: float, eta: float, n: int = 300,
                         seed: int | None = None, *, mode: str = "ratio",
                         tol: Tolerances = DEFAULT_TOL, chunk: int = 50, k: int = 0,
                         refine: bool = True) -> list[RelativeNormalPair]:
    """Unit pairs ``(u1, u2)`` from every feasible witness met at radius ``rho``.

    ``k`` indexes the random substream (the radius position in a schedule).
    """
    if rho <= 0 or eta <= 0 or n < 1:
        raise ValueError("need rho, eta > 0 and n >= 1")
    seed = pair.seed if seed is None else seed
    prob = _WitnessProblem(pair, rho, eta, mode, tol)
    xs = _witness_seeds(pair, rho, n, seed, k, tol)
    vals = np.array([prob.evaluate(x) for x in xs])
    if refine:
        for s in chunk_starts(vals, chunk):
            pattern_search(prob.evaluate, xs[s], rho / 8, rho * 1e-6)
    return prob.harvest


def harvest_digest(pairs: list[RelativeNormalPair]) -> str:
    """Short fingerprint of a pair list, used to tie derived constants to one harvest."""
    h = hashlib.sha256(str(len(pairs)).encode())
    for p in pairs:
        h.update(np.ascontiguousarray(p.v1).tobytes())
        h.update(np.ascontiguousarray(p.v2).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class EuclideanConstants:
    itr1: float
    itr2: float
    itr3: float
    itr_from_pairs: float
    count: int
    positively_independent: bool


def _unit_pairs(pairs) -> tuple[np.ndarray, np.ndarray]:
    if not pairs:
        return np.zeros((0, 0)), np.zeros((0, 0))
    V1 = np.array([p.v1 for p in pairs])
    V2 = np.array([p.v2 for p in pairs])
    bad = (np.abs(np.linalg.norm(V1, axis=1) - 1) > 1e-9) | (np.abs(np.linalg.norm(V2, axis=1) - 1) > 1e-9)
    if bad.any():
        raise NonUnitPair(f"{int(bad.sum())} pairs are not unit-normalized")
    return V1, V2


def itr3_from_pairs(V1: np.ndarray, V2: np.ndarray, mesh: np.ndarray | None = None) -> float:
    """``min_{|v|=1} d((v,-v), cone of pairs)`` over a sphere mesh.

    Pairs generate rays ``(t1 v1, t2 v2)``, ``t1, t2 >= 0``, so the squared
    distance splits into ``1 - <v,v1>_+^2`` plus ``1 - <-v,v2>_+^2``. The mesh is
    augmented with the unit directions of ``v1 - v2``.
    """
    if len(V1) == 0:
        return math.sqrt(2.0)
    n = V1.shape[1]
    M = sphere_mesh(n) if mesh is None else mesh
    diff = V1 - V2
    nd = np.linalg.norm(diff, axis=1)
    extra = diff[nd > 1e-12] / nd[nd > 1e-12, None]
    M = np.vstack([M, extra])
    best = math.inf
    for lo in range(0, len(V1), 512):
        c1 = np.maximum(M @ V1[lo:lo + 512].T, 0.0)
        c2 = np.maximum(-(M @ V2[lo:lo + 512].T), 0.0)
        best = min(best, float(np.min(2.0 - c1 * c1 - c2 * c2)))
    return math.sqrt(max(best, 0.0))


def derived_euclidean_constants(pairs: list[RelativeNormalPair]) -> EuclideanConstants:
    """itr1, itr2, itr3 and ``itr = min |v1+v2| / 2`` over one list of unit pairs."""
    V1, V2 = _unit_pairs(pairs)
    if len(V1) == 0:
        return EuclideanConstants(0.0, -1.0, math.sqrt(2.0), 1.0, 0, False)
    itr1 = float(np.max(np.linalg.norm(V1 - V2, axis=1)))
    inner = np.einsum("ij,ij->i", V1, V2)
    itr2 = float(-np.min(inner))
    itr = 0.5 * float(np.min(np.linalg.norm(V1 + V2, axis=1)))
    indep = bool(np.any(inner < 1.0 - 1e-9))
    return EuclideanConstants(min(itr1, 2.0), max(min(itr2, 1.0), -1.0),
                              itr3_from_pairs(V1, V2), min(itr, 1.0), len(V1), indep)


@dataclass
class IntrinsicResult:
    """Per-radius harvests and the constants derived from them."""

    estimates: dict
    harvests: list = field(default_factory=list)
    eta: list = field(default_factory=list)

    @property
    def final_harvest(self) -> list[RelativeNormalPair]:
        return self.harvests[-1]


def _intrinsic(pair, schedule, n, mode, seed, tol, chunk, refine) -> IntrinsicResult:
    if n < 100:
        raise ValueError("n must be >= 100")
    seed = pair.seed if seed is None else seed
    main = "itr" if mode == "ratio" else "strc"
    rows = {main: [], "itr1": [], "itr2": [], "itr3": []}
    harvests, etas = [], []
    for k, rho in enumerate(schedule.radii):
        eta = schedule.eta(rho, tol.eta0)
        h = harvest_normal_pairs(pair, rho, eta, n, seed, mode=mode, tol=tol,
                                 chunk=chunk, k=k, refine=refine)
        ec = derived_euclidean_constants(h)
        flag = "" if h else NO_WITNESS
        rows[main].append(RadiusValue(rho, ec.itr_from_pairs, len(h), flag))
        rows["itr1"].append(RadiusValue(rho, ec.itr1, len(h), flag))
        rows["itr2"].append(RadiusValue(rho, ec.itr2, len(h), flag))
        rows["itr3"].append(RadiusValue(rho, ec.itr3, len(h), flag))
        harvests.append(h)
        etas.append(eta)
    names = [main] if mode == "equal" else [main, "itr1", "itr2", "itr3"]
    hid = harvest_digest(harvests[-1])
    est = {name: ConstantEstimate(name, tuple(rows[name]), seed, harvest_id=hid) for name in names}
    return IntrinsicResult(est, harvests, etas)


def estimate_intrinsic_family(pair: PairScenario, schedule: RadiusSchedule = RadiusSchedule(),
                              n: int = 300, *, seed: int | None = None,
                              tol: Tolerances = DEFAULT_TOL, chunk: int = 50,
                              refine: bool = True) -> IntrinsicResult:
    """itr together with itr1, itr2, itr3 computed from the same harvests."""
    return _intrinsic(pair, schedule, n, "ratio", seed, tol, chunk, refine)


def estimate_intrinsic(pair: PairScenario, schedule: RadiusSchedule = RadiusSchedule(),
                       n: int = 300, **kw) -> ConstantEstimate:
    return estimate_intrinsic_family(pair, schedule, n, **kw).estimates["itr"]


def estimate_strc(pair: PairScenario, schedule: RadiusSchedule = RadiusSchedule(),
                  n: int = 300, *, seed: int | None = None, tol: Tolerances = DEFAULT_TOL,
                  chunk: int = 50, refine: bool = True) -> ConstantEstimate:
    """Restricted variant: witnesses must be equidistant up to ``eta * |x-a|``."""
    return _intrinsic(pair, schedule, n, "equal", seed, tol, chunk, refine).estimates["strc"]


# -- itrhat ---------------------------------------------------------------------

class _HatProblem:
    def __init__(self, pair: PairScenario, rho: float, tol: Tolerances):
        self.A, self.B, self.xbar, self.rho = pair.set_a, pair.set_b, pair.xbar, rho
        self.ftol = tol.feas_tol
        self.best_dist = math.inf
        self.best_align = 0.0
        self.count = 0

    def evaluate(self, y: np.ndarray) -> float:
        A, B, xbar, rho, ftol = self.A, self.B, self.xbar, self.rho, self.ftol
        d = xbar.size
        if not np.all(np.isfinite(y)):
            return math.inf
        a, b = A._project(y[:d]), B._project(y[d:])
        if np.linalg.norm(a - xbar) > rho or np.linalg.norm(b - xbar) > rho:
            return math.inf
        if B._dist(a) <= ftol or A._dist(b) <= ftol:
            return math.inf
        w = b - a
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return math.inf
        u = w / nw
        pa = cone_projection(A, a, u, ftol)
        pb = cone_projection(B, b, -u, ftol)
        dist = max(float(np.linalg.norm(u - pa)), float(np.linalg.norm(-u - pb)))
        # best unit normal alignment is |P_K u| when positive
        align = min(float(np.linalg.norm(pa)), float(np.linalg.norm(pb)))
        self.count += 1
        self.best_dist = min(self.best_dist, dist)
        self.best_align = max(self.best_align, align)
        return dist


def estimate_itrhat(pair: PairScenario, schedule: RadiusSchedule = RadiusSchedule(),
                    n: int = 300, *, seed: int | None = None, tol: Tolerances = DEFAULT_TOL,
                    chunk: int = 50, refine: bool = True) -> dict[str, ConstantEstimate]:
    """itrhat1 (min over a, b of the larger cone distance of the a-b direction)
    and itrhat2 (max of the smaller positive normal alignment), on shared samples."""
    if n < 100:
        raise ValueError("n must be >= 100")
    seed = pair.seed if seed is None else seed
    A, B, xbar, ftol = pair.set_a, pair.set_b, pair.xbar, tol.feas_tol
    r1, r2 = [], []
    for k, rho in enumerate(schedule.radii):
        As = _indexed_points(A, B, xbar, rho, n, stream(seed, "hat-a", k), ftol)
        Bs = _indexed_points(B, A, xbar, rho, n, stream(seed, "hat-b", k), ftol)
        prob = _HatProblem(pair, rho, tol)
        # couple some pairs along a normal ray so that b - a starts out normal to A (or B)
        aux = stream(seed, "hat-aux", k).random(n)
        ys = np.hstack([As, Bs])
        for i in range(n):
            r = i % 3
            if r == 0:
                continue
            S, other, p = (A, B, As[i]) if r == 1 else (B, A, Bs[i])
            if np.isnan(p[0]):
                continue
            g = _normal_generator(S, p, aux[i], ftol)
            if g is None:
                continue
            q = p + other._dist(p) * g
            ys[i] = np.concatenate([p, q]) if r == 1 else np.concatenate([q, p])
        vals = np.array([prob.evaluate(y) for y in ys])
        if refine:
            for s in chunk_starts(vals, chunk):
                pattern_search(prob.evaluate, ys[s], rho / 8, rho * 1e-6)
        if prob.count == 0:
            r1.append(RadiusValue(rho, 1.0, 0, NO_WITNESS))
            r2.append(RadiusValue(rho, 0.0, 0, NO_WITNESS))
        else:
            r1.append(RadiusValue(rho, _clamp(prob.best_dist, "itrhat1"), prob.count))
            r2.append(RadiusValue(rho, _clamp(prob.best_align, "itrhat2"), prob.count))
    return {"itrhat1": ConstantEstimate("itrhat1", tuple(r1), seed),
            "itrhat2": ConstantEstimate("itrhat2", tuple(r2), seed)}


# -- everything at once -----------------------------------------------------------

@dataclass
class ScenarioEstimates:
    """All constants of one scenario; Euclidean ones share the final harvest."""

    label: str
    estimates: dict
    final_harvest: list
    final_eta: float
    seed: int

    @property
    def positively_independent(self) -> bool:
        return derived_euclidean_constants(self.final_harvest).positively_independent

    def __getitem__(self, name: str) -> ConstantEstimate:
        return self.estimates[name]

    def values(self) -> dict[str, float]:
        return {k: v.value for k, v in self.estimates.items()}

    def rows(self) -> list[list]:
        out = []
        for name in ("str", "tr", "itr", "strc", "itr1", "itr2", "itr3", "itrhat1", "itrhat2"):
            if name in self.estimates:
                out.extend(self.estimates[name].rows())
        return out


CSV_HEADER = ["name", "rho", "value", "samples", "seed", "flag"]


def estimate_all(pair: PairScenario, schedule: RadiusSchedule = RadiusSchedule(), n: int = 300,
                 *, seed: int | None = None, tol: Tolerances = DEFAULT_TOL,
                 tr_samples: tuple[int, int] = (20, 10)) -> ScenarioEstimates:
    seed = pair.seed if seed is None else seed
    est = {}
    est["str"] = estimate_subtransversality(pair, schedule, max(n // 2, 10), seed=seed, tol=tol)
    est["tr"] = estimate_transversality(pair, schedule, *tr_samples, seed=seed, tol=tol)
    fam = estimate_intrinsic_family(pair, schedule, n, seed=seed, tol=tol)
    est.update(fam.estimates)
    est["strc"] = estimate_strc(pair, schedule, n, seed=seed, tol=tol)
    est.update(estimate_itrhat(pair, schedule, n, seed=seed, tol=tol))
    return ScenarioEstimates(pair.label, est, fam.final_harvest, fam.eta[-1], seed)
