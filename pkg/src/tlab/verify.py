"""Machine checks of identities, inequality chains and equivalences over estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tlab.altproj import STALLED, APTrace, fit_linear_rate, run_alternating_projections
from tlab.errors import EmptySample, InconsistentInputs, NoDecay, NonConvexScenario
from tlab.estimators import ConstantEstimate, ScenarioEstimates, estimate_all, subseed
from tlab.geometry import DEFAULT_TOL, RadiusSchedule, Tolerances, stream
from tlab.normals import frechet_normal_defect, passes_inverse_projection, proximal_normal_directions, default_eps
from tlab.scenario import PairScenario
from tlab.sets import sample_set_near

IDENTITY_TOL = 0.05
BOUND_SLACK = 0.02
RATE_SLACK = 0.05


@dataclass(frozen=True)
class Check:
    check_id: str
    lhs: float
    rhs: float
    tol: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"check_id": self.check_id, "lhs": self.lhs, "rhs": self.rhs,
                "tol": self.tol, "pass": self.passed, "note": self.note}


def eq_check(cid: str, lhs: float, rhs: float, tol: float, note: str = "") -> Check:
    return Check(cid, float(lhs), float(rhs), tol, bool(abs(lhs - rhs) <= tol), note)


def le_check(cid: str, lhs: float, rhs: float, tol: float, note: str = "") -> Check:
    """``lhs <= rhs + tol``."""
    return Check(cid, float(lhs), float(rhs), tol, bool(lhs <= rhs + tol), note)


def flag_check(cid: str, ok: bool, lhs: float = 0.0, rhs: float = 0.0, tol: float = 0.0,
               note: str = "") -> Check:
    return Check(cid, float(lhs), float(rhs), tol, bool(ok), note)


@dataclass
class VerificationReport:
    label: str
    checks: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.checks.extend(other.checks)
        return self

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"label": self.label, "overall": self.overall,
                "checks": [c.to_dict() for c in self.checks]}

    def table(self) -> str:
        lines = [f"== {self.label}: {'PASS' if self.overall else 'FAIL'}"]
        for c in self.checks:
            lines.append(f"  {'ok  ' if c.passed else 'FAIL'} {c.check_id:<36} "
                         f"lhs={c.lhs:.6g} rhs={c.rhs:.6g} tol={c.tol:.3g}"
                         + (f"  ({c.note})" if c.note else ""))
        return "\n".join(lines)


def _val(est, name: str) -> float:
    v = est[name]
    return v.value if isinstance(v, ConstantEstimate) else float(v)


def _label(est) -> str:
    return getattr(est, "label", "") or ""


# -- identities ----------------------------------------------------------------

def check_identity_p18(est, tol: float = IDENTITY_TOL,
                       positively_independent: bool | None = None) -> VerificationReport:
    """Relations among itr, itr1, itr2, itr3 derived from one pair list.

    ``est`` maps names to ``ConstantEstimate`` (or plain floats). When
    ``positively_independent`` is ``None`` it is read from ``est`` if
    available, otherwise inferred from the values (itr < 1 means some pair
    is not a repeated direction).
    """
    ids = {est[n].harvest_id for n in ("itr", "itr1", "itr2", "itr3")
           if isinstance(est[n], ConstantEstimate)}
    if len(ids) > 1:
        raise InconsistentInputs(f"itr family estimated from different harvests: {sorted(ids)}")
    itr, i1, i2, i3 = (_val(est, n) for n in ("itr", "itr1", "itr2", "itr3"))
    rep = VerificationReport(_label(est))
    rep.checks.append(eq_check("p18.itr_itr1", itr ** 2 + 0.25 * i1 ** 2, 1.0, tol))
    rep.checks.append(eq_check("p18.itr_itr2", i2 + 2 * itr ** 2, 1.0, tol))
    if positively_independent is None:
        positively_independent = getattr(est, "positively_independent", None)
    empty = i1 == 0.0 and i2 == -1.0
    if positively_independent is None:
        positively_independent = itr < 1.0 - tol
    if positively_independent or empty:
        rep.checks.append(eq_check("p18.itr3", i3, math.sqrt(2.0) * itr, tol))
    else:
        rep.checks.append(eq_check("p18.itr3_degenerate", i3, 1.0, tol, "no positively independent pair"))
        rep.checks.append(eq_check("p18.itr_degenerate", itr, 1.0, tol, "no positively independent pair"))
    return rep


def check_identity_p19(est, tol: float = IDENTITY_TOL, bound_slack: float = BOUND_SLACK,
                       zero_tol: float | None = None) -> VerificationReport:
    """itrhat1^2 + itrhat2^2 = 1, the bound on itrhat1 by itr, and joint vanishing."""
    h1, h2, itr = _val(est, "itrhat1"), _val(est, "itrhat2"), _val(est, "itr")
    z = tol if zero_tol is None else zero_tol
    rep = VerificationReport(_label(est))
    rep.checks.append(eq_check("p19.pythagoras", h1 ** 2 + h2 ** 2, 1.0, tol))
    if itr < 1 / math.sqrt(2.0) - bound_slack:
        rep.checks.append(le_check("p19.bound", h1, 2 * itr * math.sqrt(1 - itr ** 2), bound_slack))
    rep.checks.append(flag_check("p19.zero_agreement", (h1 <= z) == (itr <= z), h1, itr, z,
                                 "itrhat1 <= t iff itr <= t"))
    return rep


def check_chain(est, tol: float = IDENTITY_TOL, convex: bool = False) -> VerificationReport:
    """0 <= itr <= strc <= 1, tr <= str, and strc = str on convex pairs."""
    s, t, itr, c = (_val(est, n) for n in ("str", "tr", "itr", "strc"))
    rep = VerificationReport(_label(est))
    rep.checks.append(le_check("chain.itr_le_strc", itr, c, tol))
    rep.checks.append(le_check("chain.strc_le_1", c, 1.0, 0.0))
    rep.checks.append(le_check("chain.nonnegative", -min(s, t, itr, c), 0.0, 0.0))
    rep.checks.append(le_check("chain.tr_le_str", t, s, tol))
    if convex:
        rep.checks.append(eq_check("chain.strc_eq_str", c, s, tol))
    return rep


def zero_threshold(schedule: RadiusSchedule, tol: Tolerances = DEFAULT_TOL) -> float:
    """Twice the relaxation in force at the smallest radius."""
    return 2.0 * schedule.eta(schedule.smallest, tol.eta0)


def check_convex_equivalence(battery: list[PairScenario], tol: float | None = None,
                             estimates: dict | None = None,
                             schedule: RadiusSchedule = RadiusSchedule(), n: int = 300
                             ) -> VerificationReport:
    """itr, strc and str are simultaneously positive (or all vanish) on convex pairs.

    ``estimates`` maps scenario labels to precomputed ``ScenarioEstimates``;
    missing ones are computed. ``tol`` defaults to twice the final relaxation.
    """
    for sc in battery:
        if not sc.is_convex:
            raise NonConvexScenario(f"scenario {sc.label!r} is not convex")
    tau = zero_threshold(schedule) if tol is None else tol
    estimates = {} if estimates is None else estimates
    rep = VerificationReport("convex-equivalence")
    for sc in battery:
        est = estimates.get(sc.label) or estimate_all(sc, schedule, n)
        vals = [_val(est, k) for k in ("itr", "strc", "str")]
        pos = [v > tau for v in vals]
        rep.checks.append(flag_check(f"equiv.{sc.label}", len(set(pos)) == 1, min(vals), max(vals), tau,
                                     "positivity of itr, strc, str agrees"))
        if "tangential" in sc.tags:
            rep.checks.append(le_check(f"equiv.{sc.label}.zero", max(vals), 0.0, tau))
    return rep


def check_harvest_t3(pair: PairScenario, est: ScenarioEstimates, tol: float) -> VerificationReport:
    """Opposite unit normal pairs must be absent on transversal pairs and present on tangential ones."""
    rep = VerificationReport(pair.label)
    h = est.final_harvest
    if not h:
        m = math.inf
    else:
        m = float(min(np.linalg.norm(p.v1 + p.v2) for p in h))
    if "transversal" in pair.tags:
        rep.checks.append(Check("t3.no_opposite_pair", m, tol, 0.0, m > tol,
                                "min |v1+v2| over harvest exceeds threshold"))
    if "tangential" in pair.tags:
        rep.checks.append(le_check("t3.opposite_pair_found", m, tol, 0.0))
    return rep


# -- lemma probes -------------------------------------------------------------

def lemma_property_suite(seed: int = 0, trials: int = 10_000, dim: int = 3) -> VerificationReport:
    """Random probes of the Euclidean lemmas behind the unit-pair reductions."""
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    rng = stream(seed, "lemmas")
    rep = VerificationReport("lemmas")
    u = rng.standard_normal((trials, dim)) * np.exp(rng.normal(0, 2, (trials, 1)))
    v = rng.standard_normal((trials, dim)) * np.exp(rng.normal(0, 2, (trials, 1)))
    # a tenth of the pairs are (nearly) parallel, where both sides are small
    k = trials // 10
    v[:k] = u[:k] * np.exp(rng.normal(0, 1, (k, 1))) + 1e-9 * rng.standard_normal((k, dim))
    nu, nv = np.linalg.norm(u, axis=1), np.linalg.norm(v, axis=1)
    dot = np.einsum("ij,ij->i", u, v)
    lhs = np.sum((nv[:, None] * u - nu[:, None] * v) ** 2, axis=1)
    rhs = 2 * nu * nv * (nu * nv - dot)
    rel = np.abs(lhs - rhs) / (nu * nv) ** 2
    rep.checks.append(le_check("lemma.l2_identity", float(rel.max()), 0.0, 1e-9,
                               f"max relative error over {trials} pairs"))
    ratio = np.linalg.norm(u + v, axis=1) / (nu + nv)
    half = 0.5 * np.linalg.norm(u / nu[:, None] + v / nv[:, None], axis=1)
    slack = float(np.min(ratio - half))
    rep.checks.append(Check("lemma.l3_inequality", slack, -1e-12, 0.0, slack >= -1e-12,
                            f"min slack over {trials} pairs"))
    # Tech: directions converging to a common unit vector, arbitrary magnitudes
    m = min(trials, 2000)
    w = rng.standard_normal((m, dim))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    defects = []
    for kk in (1, 10, 100, 1000):
        e1 = rng.standard_normal((m, dim))
        e2 = rng.standard_normal((m, dim))
        e1 *= 0.25 / kk ** 2 / np.linalg.norm(e1, axis=1, keepdims=True)
        e2 *= 0.25 / kk ** 2 / np.linalg.norm(e2, axis=1, keepdims=True)
        uk = (w + e1) * np.exp(rng.normal(0, 2, (m, 1)))
        vk = (w + e2) * np.exp(rng.normal(0, 2, (m, 1)))
        s = uk + vk
        defects.append(float(np.max(np.linalg.norm(s / np.linalg.norm(s, axis=1, keepdims=True) - w, axis=1))))
    rep.checks.append(le_check("lemma.tech_limit", defects[-1], 0.0, 1e-6,
                               f"defect at k=1000 over {m} sequences"))
    rep.checks.append(flag_check("lemma.tech_shrinks", all(b < a for a, b in zip(defects, defects[1:])),
                                 defects[0], defects[-1], 0.0, "defect decreases along k = 1, 10, 100, 1000"))
    return rep


def check_proximal_directions(pair: PairScenario, n: int = 8, tol: Tolerances = DEFAULT_TOL,
                              frechet_radii: RadiusSchedule = RadiusSchedule(1e-3, 0.5, 2)
                              ) -> VerificationReport:
    """Every emitted proximal direction passes the inverse-projection test and
    has Fréchet defect at most ``align_tol``."""
    rep = VerificationReport(pair.label)
    total = bad_inv = bad_fr = 0
    worst_fr = -math.inf
    for name, S in (("a", pair.set_a), ("b", pair.set_b)):
        pts = [pair.xbar]
        try:
            pts.extend(sample_set_near(S, pair.xbar, 0.5, n, subseed(pair.seed, "prox", ord(name))))
        except EmptySample:
            pass
        for j, a in enumerate(pts):
            fan = proximal_normal_directions(S, a, seed=subseed(pair.seed, "prox-fan", ord(name), j), tol=tol)
            eps = default_eps(fan.base)
            for u in fan.directions:
                total += 1
                if not passes_inverse_projection(S, fan.base, u, eps, tol.feas_tol):
                    bad_inv += 1
                try:
                    d = frechet_normal_defect(S, fan.base, u, frechet_radii, 128,
                                              subseed(pair.seed, "prox-fr", j), tol)
                except EmptySample:
                    continue  # locally a singleton: every direction is normal
                worst_fr = max(worst_fr, d)
                if d > tol.align_tol:
                    bad_fr += 1
    rep.checks.append(flag_check("normals.inverse_projection", bad_inv == 0, bad_inv, total, 0.0,
                                 "failing / emitted directions"))
    rep.checks.append(flag_check("normals.frechet", bad_fr == 0, worst_fr if total else 0.0,
                                 tol.align_tol, 0.0, "worst sampled Fréchet defect"))
    return rep


# -- per-scenario driver --------------------------------------------------------

def check_scenario_oracle(pair: PairScenario, n: int = 64, tol: float = 1e-8) -> VerificationReport:
    """The intersection oracle agrees with A and B in both directions near xbar."""
    rep = VerificationReport(pair.label)
    rep.checks.append(le_check("scenario.intersection_consistent",
                               pair.intersection_consistency(0.5, n), 0.0, tol,
                               "intersection points lie in A and B"))
    worst = 0.0
    for S, T, key in ((pair.set_a, pair.set_b, 1), (pair.set_b, pair.set_a, 2)):
        try:
            pts = sample_set_near(S, pair.xbar, 0.5, n, subseed(pair.seed, "oracle", key))
        except EmptySample:
            continue
        for p in pts:
            if T._dist(p) <= DEFAULT_TOL.feas_tol:
                worst = max(worst, pair.intersection._dist(p))
    rep.checks.append(le_check("scenario.intersection_complete", worst, 0.0, tol,
                               "common points of A and B lie in the intersection"))
    return rep


def check_altproj(pair: PairScenario, trace: APTrace, str_value: float,
                  tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    rep = VerificationReport(pair.label)
    db = trace.dist_b[1::2]
    da = trace.dist_a[2::2]
    rep.checks.append(le_check("ap.feasibility", max(db + da, default=0.0), 0.0, tol.feas_tol))
    if pair.is_convex:
        d = np.asarray(trace.dist_inter)
        inc = float(np.max(np.diff(d), initial=0.0))
        rep.checks.append(le_check("ap.fejer", inc, 0.0, 1e-12 * (1 + d[0]), "largest increase of dist_inter"))
    if pair.is_convex and "transversal" in pair.tags:
        bound = math.sqrt(max(1.0 - str_value ** 2, 0.0))
        try:
            rate = fit_linear_rate(trace).half_step_rate
            note = "fitted half-step rate"
        except NoDecay:
            rate, note = 0.0, "finite convergence"
        rep.checks.append(le_check("ap.rate_bound", rate, bound, RATE_SLACK, note))
    if "stall" in pair.tags:
        gap = trace.stall.gap if trace.stall is not None else 0.0
        rep.checks.append(flag_check("ap.stalled", trace.reason == STALLED, gap, 0.0, 0.0,
                                     f"termination {trace.reason}"))
    return rep


@dataclass
class ScenarioResult:
    pair: PairScenario
    estimates: ScenarioEstimates
    trace: APTrace | None
    report: VerificationReport


def verify_scenario(pair: PairScenario, schedule: RadiusSchedule = RadiusSchedule(), n: int = 300,
                    *, tol: Tolerances = DEFAULT_TOL, max_cycles: int = 500,
                    ap_tol: float = 1e-10) -> ScenarioResult:
    est = estimate_all(pair, schedule, n, tol=tol)
    tau = zero_threshold(schedule, tol)
    rep = VerificationReport(pair.label)
    rep.extend(check_scenario_oracle(pair))
    rep.extend(check_identity_p18(est))
    rep.extend(check_identity_p19(est, zero_tol=tau))
    rep.extend(check_chain(est, convex=pair.is_convex))
    rep.extend(check_harvest_t3(pair, est, tau))
    rep.extend(check_proximal_directions(pair, tol=tol))
    trace = None
    if pair.x0 is not None:
        trace = run_alternating_projections(pair, pair.x0, max_cycles, ap_tol)
        rep.extend(check_altproj(pair, trace, est["str"].value, tol))
    return ScenarioResult(pair, est, trace, rep)
