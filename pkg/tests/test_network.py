import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisocrn import catalog
from anisocrn.errors import (InfeasibleError, NegativeTemperatureError, NetworkSyntaxError,
                             NetworkValidationError, UnboundedLPError)
from anisocrn.network import (State, attainable_set_membership, complement_basis, interior_grid,
                              interior_point, load_network, network_to_dict, parse_network,
                              random_interior, range_basis, serialize_network, stoichiometric_matrix,
                              temperature_bounds, temperature_from_energy, total_energy)

NET1_DOC = {
    "species": [{"name": "A", "energy": 2}, {"name": "B", "energy": 1}],
    "reactions": [{"reactants": {"A": 1}, "products": {"B": 1}, "kappa_fw": 1, "kappa_bw": 1,
                   "transition_energy": 3}],
    "heat_capacity": 1,
    "arrhenius_exponent": 0,
}


def test_parse_net1():
    net = parse_network(json.dumps(NET1_DOC))
    assert net.n_species == 2 and net.n_pairs == 1
    assert net.boltzmann_constant == 1.0
    assert net == catalog.unimolecular()


def test_arrhenius_exponent_out_of_range():
    doc = dict(NET1_DOC, arrhenius_exponent=2)
    with pytest.raises(NetworkValidationError, match="arrhenius_exponent out of range"):
        parse_network(json.dumps(doc))


def test_undeclared_species():
    doc = json.loads(json.dumps(NET1_DOC))
    doc["reactions"][0]["products"] = {"C": 1}
    with pytest.raises(NetworkValidationError):
        parse_network(json.dumps(doc))


def test_unknown_key_and_syntax_errors():
    with pytest.raises((NetworkSyntaxError, NetworkValidationError)):
        parse_network(json.dumps(dict(NET1_DOC, colour="red")))
    with pytest.raises(NetworkSyntaxError) as exc:
        parse_network('{"species": [')
    assert exc.value.line == 1


def test_roundtrip(tmp_path):
    for make in catalog.CATALOG.values():
        net = make()
        text = serialize_network(net)
        back = parse_network(text)
        assert back == net
        assert back.initial_state == net.initial_state
        assert serialize_network(back) == text
    p = tmp_path / "n.json"
    p.write_text(serialize_network(catalog.triangle()))
    assert load_network(p) == catalog.triangle()


def test_serialization_key_order():
    keys = list(network_to_dict(catalog.unimolecular()))
    assert keys[:5] == ["species", "reactions", "heat_capacity", "arrhenius_exponent", "boltzmann_constant"]


def test_stoichiometry():
    assert stoichiometric_matrix(catalog.unimolecular()).tolist() == [[-1], [1]]
    assert stoichiometric_matrix(catalog.cell_division()).tolist() == [[1]]
    doc = {
        "species": [{"name": "A", "energy": 0}, {"name": "B", "energy": 0}],
        "reactions": [{"reactants": {"A": 2}, "products": {"A": 1, "B": 1}, "kappa_fw": 1, "kappa_bw": 1,
                       "transition_energy": 0}],
        "heat_capacity": 1, "arrhenius_exponent": 0,
    }
    assert stoichiometric_matrix(parse_network(json.dumps(doc))).tolist() == [[-1], [1]]


def test_energy_examples(net1):
    assert total_energy(net1, State([0.5, 0.5], 1.0)) == pytest.approx(2.5)
    assert total_energy(net1, State([0.0, 0.0], 0.0)) == 0.0
    assert total_energy(net1, State([1.0, 0.0], 0.0)) == 2.0
    assert temperature_from_energy(net1, [0.5, 0.5], 2.5) == pytest.approx(1.0)
    assert temperature_from_energy(net1, [1.0, 0.0], 2.0) == 0.0
    with pytest.raises(NegativeTemperatureError):
        temperature_from_energy(net1, [1.0, 0.0], 1.5)


def test_membership(net1):
    rho0 = [0.5, 0.5]
    for a in np.linspace(0, 1, 11):
        assert attainable_set_membership(net1, rho0, 1.0, [a, 1 - a])
    assert not attainable_set_membership(net1, rho0, 1.0, [0.6, 0.6])
    assert attainable_set_membership(net1, rho0, 1.0, rho0)


def test_temperature_bounds(net1):
    lo, hi = temperature_bounds(net1, [0.5, 0.5], 1.0)
    assert lo == pytest.approx(0.5) and hi == pytest.approx(1.5)
    flat = catalog.unimolecular(energies=(0.0, 0.0), transition_energy=1.0)
    assert temperature_bounds(flat, [0.3, 0.7], 2.0) == pytest.approx((2.0, 2.0))
    with pytest.raises(UnboundedLPError):
        temperature_bounds(catalog.cell_division(), [1.0], 1.0)


def test_temperature_bounds_brute_force(net2):
    # oracle: scan the simplex class on a fine grid
    rho0, th0 = np.full(3, 1 / 3), 1.0
    E0 = total_energy(net2, State(rho0, th0))
    g = np.linspace(0, 1, 401)
    A, B = np.meshgrid(g, g)
    C = 1 - A - B
    ok = C >= 0
    e = net2.energies
    theta = (E0 - (e[0] * A + e[1] * B + e[2] * C))[ok]
    lo, hi = temperature_bounds(net2, rho0, th0)
    assert lo == pytest.approx(max(theta.min(), 0), abs=1e-12)
    assert hi == pytest.approx(theta.max(), abs=1e-12)


def test_bases_orthogonal(net3):
    Q, N = range_basis(net3), complement_basis(net3)
    assert Q.shape[1] + N.shape[1] == net3.n_species
    assert np.allclose(Q.T @ N, 0)
    assert np.allclose(N.T @ net3.gamma, 0)


def test_grid_and_samples(net1, net2):
    g = interior_grid(net1, [0.5, 0.5], 1.0, n=50)
    assert len(g) == 50
    assert np.allclose(g.sum(axis=1), 1.0) and g.min() >= 0.05 - 1e-12
    g2 = interior_grid(net2, np.full(3, 1 / 3), 1.0, n=50)
    assert len(g2) > 1000 and np.allclose(g2.sum(axis=1), 1.0)
    pts = random_interior(net2, np.full(3, 1 / 3), 1.0, 20, np.random.default_rng(0))
    assert pts.shape == (20, 3) and pts.min() >= 0.05 - 1e-12
    rho, margin = interior_point(net1, [0.5, 0.5], 1.0)
    assert margin > 0.1


def test_empty_interior(net1):
    # theta = -rho_A on this class: only the cold corner is attainable
    with pytest.raises(InfeasibleError):
        interior_point(net1, [0.0, 1.0], 0.0)


@given(st.floats(0.01, 0.99), st.floats(0.05, 3.0))
def test_bounds_contain_start(a, theta0):
    net = catalog.unimolecular()
    lo, hi = temperature_bounds(net, [a, 1 - a], theta0)
    assert lo - 1e-12 <= theta0 <= hi + 1e-12
    # theta = theta0 + a - rho_A with rho_A in [0, 1] and theta >= 0
    assert lo == pytest.approx(max(theta0 + a - 1.0, 0.0), abs=1e-12)
    assert hi == pytest.approx(theta0 + a, abs=1e-12)
