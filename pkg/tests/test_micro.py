import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisocrn import catalog, micro
from anisocrn.errors import UnboundedLPError
from anisocrn.macro import integrate
from anisocrn.micro import (MicroState, empirical_invariant, ensemble, gillespie_step, make_rng,
                            simulate_path)
from anisocrn.network import State
from anisocrn.unimolecular import exact_invariant


def test_single_channel_step(net1):
    st_ = MicroState([1, 0], 1.0, 1, 0.0, [0])
    new, d = gillespie_step(net1, st_, make_rng(0))
    assert d == 0
    assert new.counts.tolist() == [0, 1]
    assert new.flux_counts.tolist() == [1]
    assert new.time > 0
    assert new.energy(net1) == st_.energy(net1)


def test_absorbed_cold_state():
    net = catalog.heating_room()
    st_ = MicroState([10], 0.0, 10, 0.0, [0])
    new, d = gillespie_step(net, st_, make_rng(0))
    assert d is None and new is st_


def test_flat_path_when_nothing_enabled(net1):
    # all B at zero temperature: B -> A needs heat, A -> B needs A
    p = simulate_path(net1, [0, 20], 0.0, 20, 5.0, seed=1)
    assert p.absorbed and len(p.events) == 0
    assert len(p.trajectory) == 1


@given(st.integers(0, 2 ** 32), st.integers(1, 60))
def test_exact_energy_and_continuity(seed, V):
    net = catalog.two_channel()
    counts0 = np.array([V // 2, V - V // 2])
    out = micro._run(net, counts0, 1.0, V, 3.0, make_rng(seed), record=True)
    E = [float(net.energies @ np.array(n)) + h for n, h in zip(out["states"], out["heats"])]
    assert max(E) == min(E)  # integer energies: exact
    for n, w in zip(out["states"], out["fluxes"]):
        assert np.array_equal(np.array(n), counts0 + net.gamma.astype(int) @ np.array(w))


def test_determinism(net2):
    a = simulate_path(net2, [10, 10, 10], 1.0, 30, 5.0, seed=7)
    b = simulate_path(net2, [10, 10, 10], 1.0, 30, 5.0, seed=7)
    c = simulate_path(net2, [10, 10, 10], 1.0, 30, 5.0, seed=8)
    assert a.events.to_csv(3) == b.events.to_csv(3)
    assert a.events.to_csv(3) != c.events.to_csv(3)


def test_event_csv(net1):
    text = simulate_path(net1, [5, 5], 1.0, 10, 2.0, seed=3).events.to_csv(1)
    lines = text.split("\n")
    assert lines[0] == "t,reaction_index,direction"
    assert all(l.split(",")[2] in ("fw", "bw") for l in lines[1:-1])


def test_ensemble_thread_independent(net1):
    a = ensemble(net1, [25, 25], 1.0, 50, 3.0, 6, seed=11, threads=1)
    b = ensemble(net1, [25, 25], 1.0, 50, 3.0, 6, seed=11, threads=3)
    for f in ("mean_rho", "var_rho", "mean_theta", "terminal_flux"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_ensemble_env_override(net1, monkeypatch):
    monkeypatch.setenv("ANISO_THREADS", "2")
    assert micro.resolve_threads(8) == 2


def test_ensemble_of_one_is_the_path(net1):
    s = ensemble(net1, [25, 25], 1.0, 50, 3.0, 1, seed=5, n_grid=11)
    p = simulate_path(net1, [25, 25], 1.0, 50, 3.0, np.random.SeedSequence(5).spawn(1)[0])
    assert np.array_equal(s.mean_rho, p.value_at(s.times))
    assert np.all(s.var_rho == 0)


def test_variance_scaling_and_mean_flux(net1):
    var = {}
    for V in (100, 1000):
        s = ensemble(net1, [V // 2, V // 2], 1.0, V, 2.0, 400, seed=1)
        var[V] = s.var_rho[-1, 0]
        w_ode = integrate(net1, State([0.5, 0.5], 1.0), 2.0, n_out=1).fluxes[-1, 0]
        se = s.terminal_flux[:, 0].std(ddof=1) / np.sqrt(400)
        assert abs(s.terminal_flux[:, 0].mean() - w_ode) <= 3 * se + 1.0 / V
    assert 6 <= var[100] / var[1000] <= 14


def test_histogram_against_exact(net1):
    V = 50
    h = empirical_invariant(net1, [25, 25], 1.0, V, 5.0, 200_000, seed=2)
    assert h.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
    m = exact_invariant(net1, V, 2.5)
    emp = {int(s[0]): p for s, p in zip(h.states, h.probabilities)}
    tv = 0.5 * sum(abs(emp.get(int(i), 0.0) - p) for i, p in zip(m.states, m.probabilities))
    assert tv <= 0.03


def test_histogram_point_mass(net1):
    h = empirical_invariant(net1, [0, 20], 0.0, 20, 0.0, 100, seed=0)
    assert h.as_dict() == {(0, 20): 1.0}


def test_histogram_unbounded():
    with pytest.raises(UnboundedLPError):
        empirical_invariant(catalog.cell_division(), [5], 1.0, 5, 0.0, 10)
