import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisocrn import catalog
from anisocrn.balance import (balance_report, check_icb, check_idb, complexes, isothermal_fluxes,
                              isothermal_steady_state, wegscheider_check)
from anisocrn.errors import IrreversibleNetworkError


def test_net1_pi(net1):
    pi = isothermal_steady_state(net1, [0.5, 0.5])
    assert pi == pytest.approx([0.5, 0.5], abs=1e-12)
    ok, res = check_idb(net1, pi)
    assert ok and res <= 1e-15
    assert check_icb(net1, pi)[0]
    assert wegscheider_check(net1)


def test_net1_asymmetric_kappa():
    # kappa_fw pi_A = kappa_bw pi_B on the unit simplex
    net = catalog.unimolecular(kappa_fw=3.0, kappa_bw=1.0)
    assert isothermal_steady_state(net, [0.2, 0.8]) == pytest.approx([0.25, 0.75], abs=1e-12)


def test_triangle(net2):
    pi = isothermal_steady_state(net2, np.full(3, 1 / 3))
    assert pi == pytest.approx([1 / 3] * 3, abs=1e-12)
    assert np.abs(net2.gamma @ isothermal_fluxes(net2, pi)).max() <= 1e-10
    ok, res = check_idb(net2, pi)
    assert not ok and res == pytest.approx(1 / 3)
    assert check_icb(net2, pi)[0]
    assert not wegscheider_check(net2)


def test_triangle_any_kappa_is_complex_balanced():
    # deficiency zero: complex balance cannot be broken by the rate constants
    net = catalog.triangle(kappa_fw=(2.5, 2.0, 2.0))
    pi = isothermal_steady_state(net, np.full(3, 1 / 3))
    assert check_icb(net, pi)[0]


def test_two_channel_not_complex_balanced(net3):
    pi = isothermal_steady_state(net3, [0.5, 0.5])
    assert np.abs(net3.gamma @ isothermal_fluxes(net3, pi)).max() <= 1e-10
    assert pi == pytest.approx([4 / 7, 3 / 7], abs=1e-10)
    ok, res = check_icb(net3, pi)
    assert not ok and res > 1e-3


def test_two_channel_balanced_when_consistent():
    net = catalog.two_channel(kappa=(1.0, 2.0, 1.0, 4.0))
    pi = isothermal_steady_state(net, [0.5, 0.5])
    assert check_idb(net, pi)[0] and wegscheider_check(net)


def test_equal_kappas_wegscheider():
    assert wegscheider_check(catalog.triangle(kappa_fw=(1, 1, 1), kappa_bw=(1, 1, 1)))


def test_irreversible_rejected():
    with pytest.raises(IrreversibleNetworkError):
        check_idb(catalog.heating_room(), np.array([0.5]))


def test_complexes(net3):
    assert len(complexes(net3)) == 4


def test_report_json(net2):
    d = json.loads(balance_report(net2, np.full(3, 1 / 3)).to_json())
    assert d["icb"] is True and d["idb"] is False
    assert set(d) == {"pi", "idb", "icb", "max_idb_residual", "max_icb_residual", "wegscheider_ok"}


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_steady_state_residual(k1, k2, k3, k4):
    net = catalog.two_channel(kappa=(k1, k2, k3, k4))
    pi = isothermal_steady_state(net, [0.5, 0.5])
    assert pi.sum() == pytest.approx(1.0)
    assert np.abs(net.gamma @ isothermal_fluxes(net, pi)).max() <= 1e-10
