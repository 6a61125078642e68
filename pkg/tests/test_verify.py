import math

import pytest

from tlab import InconsistentInputs, NonConvexScenario
from tlab.estimators import ConstantEstimate, RadiusValue
from tlab.geometry import RadiusSchedule
from tlab.scenario import shipped_battery, stall_pair
from tlab.verify import (
    check_chain,
    check_convex_equivalence,
    check_identity_p18,
    check_identity_p19,
    check_proximal_directions,
    lemma_property_suite,
    zero_threshold,
)

SQ2 = math.sqrt(2.0)


def _ids(rep):
    return {c.check_id: c.passed for c in rep.checks}


# -- identities on plain values ------------------------------------------------------

def test_p18_two_lines_values():
    rep = check_identity_p18({"itr": 0.5, "itr1": math.sqrt(3), "itr2": 0.5, "itr3": 0.707}, 0.05)
    assert rep.overall
    assert set(_ids(rep)) == {"p18.itr_itr1", "p18.itr_itr2", "p18.itr3"}


def test_p18_empty_conventions_exact():
    rep = check_identity_p18({"itr": 1.0, "itr1": 0.0, "itr2": -1.0, "itr3": SQ2}, 1e-12)
    assert rep.overall
    assert all(abs(c.lhs - c.rhs) <= 1e-12 for c in rep.checks)


def test_p18_opposite_normals():
    rep = check_identity_p18({"itr": 0.0, "itr1": 2.0, "itr2": 1.0, "itr3": 0.0}, 1e-12)
    assert rep.overall


def test_p18_detects_violation():
    rep = check_identity_p18({"itr": 0.5, "itr1": 1.0, "itr2": 0.5, "itr3": 0.707}, 0.05)
    assert _ids(rep) == {"p18.itr_itr1": False, "p18.itr_itr2": True, "p18.itr3": True}


def test_p18_rejects_mixed_harvests():
    def est(name, v, hid):
        return ConstantEstimate(name, (RadiusValue(0.1, v, 1),), 0, harvest_id=hid)
    e = {"itr": est("itr", 0.5, "aa"), "itr1": est("itr1", math.sqrt(3), "aa"),
         "itr2": est("itr2", 0.5, "bb"), "itr3": est("itr3", 0.707, "aa")}
    with pytest.raises(InconsistentInputs):
        check_identity_p18(e)


def test_p19_two_lines_and_conventions():
    rep = check_identity_p19({"itrhat1": 0.5, "itrhat2": math.sqrt(0.75), "itr": 0.5})
    assert rep.overall and "p19.bound" in _ids(rep)
    rep = check_identity_p19({"itrhat1": 1.0, "itrhat2": 0.0, "itr": 1.0})
    assert rep.overall and "p19.bound" not in _ids(rep)


def test_p19_zero_agreement():
    ok = check_identity_p19({"itrhat1": 1e-4, "itrhat2": 1.0, "itr": 1e-5}, zero_tol=3e-3)
    assert ok.overall
    bad = check_identity_p19({"itrhat1": 1e-4, "itrhat2": 1.0, "itr": 0.3}, zero_tol=3e-3)
    assert not _ids(bad)["p19.zero_agreement"]


def test_chain_examples():
    assert check_chain({"str": 0.5, "tr": 0.5, "itr": 0.5, "strc": 0.5}, convex=True).overall
    assert check_chain({"str": 1.0, "tr": 0.0, "itr": 1.0, "strc": 1.0}).overall
    rep = check_chain({"str": 0.3, "tr": 0.5, "itr": 0.6, "strc": 0.5})
    assert not _ids(rep)["chain.tr_le_str"] and not _ids(rep)["chain.itr_le_strc"]


def test_zero_threshold():
    assert zero_threshold(RadiusSchedule()) == pytest.approx(2 * 0.05 / 32)


# -- battery-level checks -----------------------------------------------------------

def test_convex_equivalence_on_battery(battery_results, schedule):
    convex = [r.pair for r in battery_results.values() if r.pair.is_convex]
    assert len(convex) >= 6
    rep = check_convex_equivalence(convex, estimates={r.pair.label: r.estimates
                                                      for r in battery_results.values()},
                                   schedule=schedule)
    assert rep.overall, rep.table()
    assert "equiv.tangential-ball-line.zero" in _ids(rep)


def test_convex_equivalence_rejects_nonconvex():
    with pytest.raises(NonConvexScenario):
        check_convex_equivalence([stall_pair()])


def test_battery_reports_pass(battery_results):
    for label, res in battery_results.items():
        assert res.report.overall, res.report.table()


def test_lemma_suite():
    rep = lemma_property_suite(seed=0, trials=10_000)
    assert rep.overall, rep.table()
    assert {"lemma.l2_identity", "lemma.l3_inequality", "lemma.tech_limit"} <= set(_ids(rep))


def test_lemma_suite_trial_floor():
    with pytest.raises(ValueError):
        lemma_property_suite(trials=10)


@pytest.mark.parametrize("sc", shipped_battery(), ids=lambda s: s.label)
def test_proximal_directions_valid(sc):
    rep = check_proximal_directions(sc)
    assert rep.overall, rep.table()
