import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisocrn import catalog
from anisocrn.errors import DomainError
from anisocrn.macro import steady_state
from anisocrn.network import interior_grid, random_interior
from anisocrn.quasipotential import (boltzmann_s, build_quasipotential, gradient, hamiltonian, hjb_residual,
                                     minimize_free_energy, normalization_constant, relative_entropy, value,
                                     value_alternative, value_alternative_literal)


def test_boltzmann_s():
    assert boltzmann_s(1, 1) == 0
    assert boltzmann_s(0, 3.5) == 3.5
    assert boltzmann_s(2, 1) == pytest.approx(2 * math.log(2) - 1)
    assert boltzmann_s(1, 0) == math.inf
    with pytest.raises(DomainError):
        boltzmann_s(-1, 1)


def test_relative_entropy():
    assert relative_entropy([0.5, 0.5], [0.5, 0.5]) == 0
    assert relative_entropy([0, 1], [0.5, 0.5]) == pytest.approx(math.log(2))
    assert relative_entropy([0.5, 0.5], [0.0, 1.0]) == math.inf


def test_value_zero_at_steady_state(net1, net2):
    for net in (net1, net2):
        rho0 = np.array(net.initial_state.rho)
        qp = build_quasipotential(net, rho0, 1.0)
        s = steady_state(net, rho0, 1.0)
        assert abs(value(qp, s.rho)) <= 1e-8
        assert qp.rho_inf == pytest.approx(s.rho, abs=1e-9)


def test_value_at_pi_is_minus_C(net1):
    qp = build_quasipotential(net1, [0.5, 0.5], 1.0)
    assert value(qp, [0.5, 0.5]) == pytest.approx(-qp.C)
    assert qp.C == pytest.approx(-0.10006, abs=1e-5)


def test_C_against_grid_minimum(net1):
    # oracle: brute-force minimum of the free energy along the class segment
    qp = build_quasipotential(net1, [0.5, 0.5], 1.0)
    a = np.linspace(1e-6, 1 - 1e-6, 200001)
    theta = 1.5 - a
    f = a * np.log(a / 0.5) - a + 0.5 + (1 - a) * np.log((1 - a) / 0.5) - (1 - a) + 0.5 - np.log(theta)
    assert qp.C == pytest.approx(f.min(), abs=1e-9)


def test_lower_bound(net2):
    qp = build_quasipotential(net2, np.full(3, 1 / 3), 1.0)
    bound = (net2.heat_capacity - qp.E0) / net2.boltzmann_constant - qp.C
    for r in interior_grid(net2, np.full(3, 1 / 3), 1.0, n=15, margin=0.01):
        assert value(qp, r) >= bound


def test_C_flat_energy():
    net = catalog.triangle(energies=(0.0, 0.0, 0.0))
    C = normalization_constant(net, np.full(3, 1 / 3), np.full(3, 1 / 3), 2.0)
    assert C == pytest.approx(-math.log(2.0), abs=1e-12)


def test_C_independent_of_start(net2):
    pi = np.full(3, 1 / 3)
    C1 = normalization_constant(net2, pi, pi, 1.0)
    C2 = normalization_constant(net2, pi, pi, 1.0, start=[0.6, 0.3, 0.1])
    assert C1 == pytest.approx(C2, abs=1e-9)


def test_gradient_examples(net1):
    qp = build_quasipotential(net1, [0.5, 0.5], 1.0)
    assert gradient(qp, [0.5, 0.5]) == pytest.approx([2.0, 1.0])
    flat = catalog.unimolecular(energies=(0.0, 0.0), transition_energy=1.0)
    qf = build_quasipotential(flat, [0.5, 0.5], 1.0)
    assert gradient(qf, [0.5, 0.5]) == pytest.approx([0.0, 0.0], abs=1e-15)


def test_gradient_finite_difference(net2):
    qp = build_quasipotential(net2, np.full(3, 1 / 3), 1.0)
    rng = np.random.default_rng(3)
    h = 1e-6
    for r in random_interior(net2, np.full(3, 1 / 3), 1.0, 10, rng):
        g = gradient(qp, r)
        fd = [(value(qp, r + h * e) - value(qp, r - h * e)) / (2 * h) for e in np.eye(3)]
        assert g == pytest.approx(fd, abs=1e-6)


def test_hamiltonian_examples(net1):
    assert hamiltonian(net1, [0.5, 0.5], 2.5, [0.0, 0.0]) == 0.0
    hand = 0.5 * math.exp(-1) * (math.exp(-1) - 1) + 0.5 * math.exp(-2) * (math.exp(1) - 1)
    assert hand == pytest.approx(0.0, abs=1e-16)
    assert hamiltonian(net1, [0.5, 0.5], 2.5, [2.0, 1.0]) == pytest.approx(0.0, abs=1e-15)


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6), st.floats(0.05, 0.9))
def test_hamiltonian_midpoint_convex(v, a):
    net = catalog.triangle()
    rho = np.array([a, (1 - a) / 2, (1 - a) / 2])
    x, y = np.array(v[:3]), np.array(v[3:])
    E0 = float(net.energies @ rho) + 1.0
    mid = hamiltonian(net, rho, E0, 0.5 * (x + y))
    assert mid <= 0.5 * (hamiltonian(net, rho, E0, x) + hamiltonian(net, rho, E0, y)) + 1e-12


def test_hjb(net1, net2, net2_varying):
    for net, n in ((net1, 50), (net2, 50)):
        rho0 = np.array(net.initial_state.rho)
        qp = build_quasipotential(net, rho0, 1.0)
        assert max(abs(hjb_residual(qp, r)) for r in interior_grid(net, rho0, 1.0, n=n)) <= 1e-10
    rho0 = np.full(3, 1 / 3)
    qp = build_quasipotential(net2_varying, rho0, 1.0)
    assert max(abs(hjb_residual(qp, r)) for r in interior_grid(net2_varying, rho0, 1.0, n=20)) > 1e-3


def test_alternative_form(net2):
    qp = build_quasipotential(net2, np.full(3, 1 / 3), 1.0)
    for r in interior_grid(net2, np.full(3, 1 / 3), 1.0, n=8):
        assert value_alternative(qp, r) == pytest.approx(value(qp, r), abs=1e-12)


def test_literal_alternative_form_differs(net1):
    # the naive "S(rho|pi) - S(rho|rho_inf) - log(theta/theta_inf)" is not a constant shift of V
    qp = build_quasipotential(net1, [0.5, 0.5], 1.0)
    d = [value_alternative_literal(qp, [a, 1 - a]) - value(qp, [a, 1 - a]) for a in (0.2, 0.5, 0.8)]
    assert max(d) - min(d) > 0.1


def test_minimizer_stationary(net2):
    rho, theta, _ = minimize_free_energy(net2, np.full(3, 1 / 3), np.full(3, 1 / 3), 1.0)
    # KKT: log(rho/pi) + e/theta is constant on the class (orthogonal to Ran Gamma)
    g = np.log(rho * 3) + net2.energies / theta
    assert np.ptp(g) <= 1e-10
