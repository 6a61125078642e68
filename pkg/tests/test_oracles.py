"""The frozen oracle fixture must match a fresh brute-force run."""

import math

import numpy as np
import pytest

import oracles as oracle_mod


@pytest.fixture(scope="module")
def fresh():
    return oracle_mod.build()


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def test_fixture_matches_fresh_run(oracles, fresh):
    frozen = dict(_flatten(oracles))
    now = dict(_flatten(fresh))
    assert frozen.keys() == now.keys()
    for k in frozen:
        np.testing.assert_allclose(frozen[k], now[k], rtol=1e-12, atol=1e-15, err_msg=k)


@pytest.mark.parametrize("key,theta", [("30", math.pi / 6), ("60", math.pi / 3), ("90", math.pi / 2)])
def test_two_lines_closed_forms(oracles, key, theta):
    o = oracles["two_lines"][key]
    assert o["itrhat1"] == pytest.approx(math.sin(theta / 2), abs=1e-3)
    assert o["itrhat2"] == pytest.approx(math.cos(theta / 2), abs=1e-3)
    assert o["str"] == pytest.approx(math.sin(theta / 2), abs=1e-4)
    assert o["itr"] == pytest.approx(math.sin(theta / 2), abs=1e-3)
    assert o["pairs"] > 0


def test_two_lines_60_values(oracles):
    o = oracles["two_lines"]["60"]
    assert o["itrhat1"] == pytest.approx(0.5, abs=1e-3)
    assert o["itr1"] == pytest.approx(math.sqrt(3), abs=1e-3)
    assert o["itr2"] == pytest.approx(0.5, abs=1e-3)
    assert o["itr3"] == pytest.approx(math.sqrt(0.5), abs=1e-3)


def test_altproj_closed_form(oracles):
    ap = oracles["altproj"]["60"]
    np.testing.assert_allclose(ap["cycle1"], [0.25, 0.0], atol=1e-15)
    assert ap["rate_c"] == pytest.approx(0.25, abs=1e-12)
    assert oracles["altproj"]["30"]["rate_c"] == pytest.approx(0.75, abs=1e-12)


def test_tangential_oracle_decays(oracles):
    s = oracles["tangential"]["str"]
    for a, b in zip(s, s[1:]):
        assert a / b >= 1.5
    assert oracles["tangential"]["itrhat1"][-1] <= 0.05


def test_stall_step(oracles):
    st = oracles["stall"]
    assert st["p"] == [5.0, 1.0] and st["q"] == [5.0, 0.0]
    assert st["gap"] == 1.0
