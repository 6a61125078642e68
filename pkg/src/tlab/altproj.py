"""Alternating projections ``x -> P_A(P_B(x))`` with rate fitting and stall detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tlab.errors import NoDecay
from tlab.geometry import as_vector
from tlab.jsonio import csv_text
from tlab.scenario import PairScenario

CONVERGED = "Converged"
STALLED = "Stalled"
BUDGET = "BudgetExhausted"


@dataclass(frozen=True, eq=False)
class StallPair:
    p: np.ndarray  # iterate in A
    q: np.ndarray  # iterate in B
    gap: float

    def to_dict(self) -> dict:
        return {"p": self.p.tolist(), "q": self.q.tolist(), "gap": self.gap}


@dataclass(eq=False)
class APTrace:
    """Iterates ``x0, P_B x0, P_A P_B x0, ...`` and their distances.

    Point ``2c`` closes cycle ``c``; odd points lie in B, even points after
    the start lie in A.
    """

    points: list = field(default_factory=list)
    dist_a: list = field(default_factory=list)
    dist_b: list = field(default_factory=list)
    dist_inter: list = field(default_factory=list)
    cycles: int = 0
    reason: str = BUDGET
    tol: float = 1e-10
    stall: StallPair | None = None

    def cycle_distances(self) -> np.ndarray:
        """``dist_inter`` at the end of each full cycle, starting with cycle 0."""
        return np.asarray(self.dist_inter[::2], dtype=np.float64)

    def point_at_cycle(self, c: int) -> np.ndarray:
        return self.points[2 * c]

    def csv(self) -> str:
        d = self.points[0].size
        header = ["cycle", "half_step"] + [f"x{i}" for i in range(d)] + ["dist_a", "dist_b", "dist_inter"]
        rows = []
        for i, x in enumerate(self.points):
            rows.append([(i + 1) // 2, i, *map(float, x),
                         self.dist_a[i], self.dist_b[i], self.dist_inter[i]])
        return csv_text(header, rows)

    def termination(self) -> dict:
        return {
            "reason": self.reason,
            "cycles": self.cycles,
            "tol": self.tol,
            "final_point": self.points[-1].tolist(),
            "final_dist_inter": self.dist_inter[-1],
            "stall": None if self.stall is None else self.stall.to_dict(),
        }


def run_alternating_projections(pair: PairScenario, x0=None, max_cycles: int = 200,
                                tol: float = 1e-10) -> APTrace:
    """Project onto B then A until ``dist_inter <= tol``, a stall, or the budget runs out.

    ``x0`` defaults to the scenario's start point.
    """
    if max_cycles < 1 or not tol > 0:
        raise ValueError("need max_cycles >= 1 and tol > 0")
    A, B, I = pair.set_a, pair.set_b, pair.intersection
    if x0 is None:
        if pair.x0 is None:
            raise ValueError("scenario has no x0; pass one explicitly")
        x0 = pair.x0
    x = as_vector(x0, pair.dim)
    tr = APTrace(tol=tol)

    def record(p):
        tr.points.append(p)
        tr.dist_a.append(A._dist(p))
        tr.dist_b.append(B._dist(p))
        tr.dist_inter.append(I._dist(p))

    record(x)
    if tr.dist_inter[-1] <= tol:
        tr.reason = CONVERGED
        return tr
    for c in range(1, max_cycles + 1):
        record(B._project(tr.points[-1]))
        record(A._project(tr.points[-1]))
        tr.cycles = c
        if tr.dist_inter[-1] <= tol:
            tr.reason = CONVERGED
            return tr
        stall = detect_stall(tr, tol)
        if stall is not None:
            tr.reason = STALLED
            tr.stall = stall
            return tr
    tr.reason = BUDGET
    return tr


def detect_stall(trace: APTrace, tol: float) -> StallPair | None:
    """The stationary pair when the last two full cycles repeat within ``tol``
    (relative to the gap) while the iterate stays farther than ``tol`` from
    the intersection."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    pts = trace.points
    if trace.cycles < 2 or len(pts) < 5:
        return None
    if trace.dist_inter[-1] <= tol:
        return None
    p, q = pts[-1], pts[-2]
    gap = float(np.linalg.norm(p - q))
    # repetition is measured relative to the gap so that a contracting
    # sequence near the intersection is not mistaken for a stall
    move = max(np.linalg.norm(p - pts[-3]), np.linalg.norm(q - pts[-4]))
    if gap <= tol or move > tol * gap:
        return None
    return StallPair(p.copy(), q.copy(), gap)


@dataclass(frozen=True)
class RateFit:
    rate_c: float
    alpha_coeff: float
    quality: float
    window: int

    @property
    def half_step_rate(self) -> float:
        return math.sqrt(self.rate_c)

    def to_dict(self) -> dict:
        return {"rate_c": self.rate_c, "half_step_rate": self.half_step_rate,
                "alpha_coeff": self.alpha_coeff, "quality": self.quality, "window": self.window}


def fit_linear_rate(trace: APTrace, window: int = 8) -> RateFit:
    """Least-squares fit of ``log dist_inter`` against the cycle index.

    Uses the trailing ``window + 1`` full-cycle distances. ``rate_c`` is the
    per-cycle factor; ``half_step_rate`` its square root.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    if trace.reason == STALLED:
        raise NoDecay("trace is stalled")
    d = trace.cycle_distances()
    if len(d) < window + 2:
        raise NoDecay(f"only {len(d) - 1} cycles recorded, need {window + 1}")
    tail = d[-(window + 1):]
    if np.any(tail <= 0.0):
        raise NoDecay("windowed distance is zero (finite convergence)")
    k = np.arange(len(d) - window - 1, len(d), dtype=np.float64)
    y = np.log(tail)
    slope, intercept = np.polyfit(k, y, 1)
    resid = y - (slope * k + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    quality = 1.0 if ss == 0.0 else 1.0 - float(np.sum(resid ** 2)) / ss
    return RateFit(float(math.exp(slope)), float(math.exp(intercept)), quality, window)
