"""Stochastic simulation of the temperature-coupled Markov jump process.

Particles counts ``n`` live in a volume ``V``; the solute carries the heat
``H = V c_H theta``. A jump in direction ``d`` changes the counts by
``gamma^d`` and the heat by ``-e . gamma^d``, so the total energy
``e . n + H`` is conserved jump by jump (exactly so whenever the energies
and the initial heat are representable integers).

Random numbers come from numpy's counter-based ``Philox`` bit generator.
A path with seed ``s`` uses ``SeedSequence(s)``; path ``i`` of an ensemble
uses ``SeedSequence(s).spawn(N)[i]``. Results therefore do not depend on
how paths are scheduled across workers.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import UnboundedLPError
from .macro import Trajectory
from .network import Network, is_bounded

RESYNC_EVERY = 1_000_000
_BATCH = 8192


@dataclass
class MicroState:
    counts: np.ndarray
    theta: float
    V: int
    time: float = 0.0
    flux_counts: np.ndarray | None = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.flux_counts is None:
            self.flux_counts = np.zeros(0, dtype=np.int64)
        self.flux_counts = np.asarray(self.flux_counts, dtype=np.int64)

    def energy(self, net: Network) -> float:
        """Energy per volume ``e . n / V + c_H theta``."""
        return float(net.energies @ self.counts) / self.V + net.heat_capacity * self.theta


@dataclass
class EventLog:
    times: list[float] = field(default_factory=list)
    directions: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)

    def to_csv(self, n_pairs: int) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "reaction_index", "direction"])
        for t, d in zip(self.times, self.directions):
            w.writerow(["%.12g" % t, d % n_pairs, "fw" if d < n_pairs else "bw"])
        return buf.getvalue()


@dataclass(frozen=True)
class _Kernel:
    reactants: tuple[tuple[tuple[int, int], ...], ...]
    jumps: tuple[tuple[tuple[int, int], ...], ...]
    e_gamma: tuple[float, ...]
    kappa: tuple[float, ...]
    barrier: tuple[float, ...]
    q: float
    kB: float
    cH: float
    energies: tuple[float, ...]
    R: int


@lru_cache(maxsize=64)
def _kernel(net: Network) -> _Kernel:
    A, G = net.alpha_dir, net.gamma_dir
    return _Kernel(
        reactants=tuple(tuple((int(x), int(a[x])) for x in np.flatnonzero(a)) for a in A),
        jumps=tuple(tuple((int(x), int(g[x])) for x in np.flatnonzero(g)) for g in G),
        e_gamma=tuple(float(v) for v in G @ net.energies),
        kappa=tuple(float(v) for v in net.kappa_dir),
        barrier=tuple(float(v) for v in net.barrier_dir),
        q=float(net.arrhenius_exponent),
        kB=float(net.boltzmann_constant),
        cH=float(net.heat_capacity),
        energies=tuple(float(v) for v in net.energies),
        R=net.n_pairs,
    )


def _jump_rates(K: _Kernel, n: list[int], heat: float, V: int) -> list[float]:
    """Jump rates ``V k_d^{(V)}`` of all directions; ``heat = V c_H theta``."""
    theta = heat / (V * K.cH)
    out = []
    for d in range(len(K.kappa)):
        eg = K.e_gamma[d]
        if heat < eg - 1e-12 * max(1.0, abs(eg)):
            out.append(0.0)
            continue
        B = 1.0
        for x, a in K.reactants[d]:
            nx = n[x]
            if nx < a:
                B = 0.0
                break
            for i in range(a):
                B *= (nx - i) / V
        if B == 0.0:
            out.append(0.0)
            continue
        b = K.barrier[d]
        if theta > 0:
            A = (theta ** K.q if K.q else 1.0) * math.exp(-b / (K.kB * theta))
        elif b > 0:
            A = 0.0
        elif b < 0:
            A = math.inf
        else:
            A = 0.0 if K.q > 0 else (1.0 if K.q == 0 else math.inf)
        out.append(V * K.kappa[d] * A * B)
    return out


def make_rng(seed) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def initial_micro_state(net: Network, rho0, theta0: float, V: int) -> MicroState:
    counts = np.rint(np.asarray(rho0, dtype=float) * V).astype(np.int64)
    return MicroState(counts, float(theta0), int(V), 0.0, np.zeros(net.n_pairs, dtype=np.int64))


def gillespie_step(net: Network, st: MicroState, rng: np.random.Generator) -> tuple[MicroState, int | None]:
    """One step of the direct method. Returns the new state and the fired
    direction, or ``None`` when the state is absorbing (total rate zero)."""
    K = _kernel(net)
    V = st.V
    n = st.counts.tolist()
    heat = V * K.cH * st.theta
    rates = _jump_rates(K, n, heat, V)
    total = math.fsum(rates)
    if total <= 0.0:
        return st, None
    u1, u2 = rng.random(2)
    dt = -math.log1p(-u1) / total
    d = _select(rates, u2 * total)
    counts = st.counts.copy()
    for x, g in K.jumps[d]:
        counts[x] += g
    flux = st.flux_counts.copy()
    flux[d % K.R] += 1 if d < K.R else -1
    new_heat = heat - K.e_gamma[d]
    return MicroState(counts, new_heat / (V * K.cH), V, st.time + dt, flux), d


def _select(rates: list[float], target: float) -> int:
    acc = 0.0
    last = 0
    for d, r in enumerate(rates):
        if r > 0:
            acc += r
            last = d
            if target < acc:
                return d
    return last


def _run(net: Network, counts0, theta0: float, V: int, T: float, rng: np.random.Generator,
         record: bool, occupancy: dict | None = None, burn_in: float = 0.0, max_jumps: int | None = None):
    """Core loop shared by path simulation and occupation-time estimation."""
    K = _kernel(net)
    R = K.R
    n = [int(v) for v in counts0]
    heat = V * K.cH * float(theta0)
    total_energy = sum(e * c for e, c in zip(K.energies, n)) + heat
    flux = [0] * R
    t = 0.0
    times, states, heats, fluxes, ev_t, ev_d = [0.0], [tuple(n)], [heat], [tuple(flux)], [], []
    absorbed = False
    buf = []
    pos = 0
    jumps = 0
    while True:
        rates = _jump_rates(K, n, heat, V)
        tot = 0.0
        for r in rates:
            tot += r
        if tot <= 0.0:
            absorbed = True
            if occupancy is not None and t < T:
                key = tuple(n)
                occupancy[key] = occupancy.get(key, 0.0) + T - max(t, burn_in)
            break
        if pos + 2 > len(buf):
            buf = rng.random(_BATCH).tolist()
            pos = 0
        u1, u2 = buf[pos], buf[pos + 1]
        pos += 2
        t_next = t - math.log1p(-u1) / tot
        if occupancy is not None:
            lo, hi = max(t, burn_in), min(t_next, T)
            if hi > lo:
                key = tuple(n)
                occupancy[key] = occupancy.get(key, 0.0) + hi - lo
        if t_next >= T:
            break
        t = t_next
        d = _select(rates, u2 * tot)
        for x, g in K.jumps[d]:
            n[x] += g
        heat -= K.e_gamma[d]
        if d < R:
            flux[d] += 1
        else:
            flux[d - R] -= 1
        jumps += 1
        if jumps % RESYNC_EVERY == 0:
            heat = total_energy - sum(e * c for e, c in zip(K.energies, n))
        if record:
            times.append(t)
            states.append(tuple(n))
            heats.append(heat)
            fluxes.append(tuple(flux))
            ev_t.append(t)
            ev_d.append(d)
        if max_jumps is not None and jumps >= max_jumps:
            break
    return dict(times=times, states=states, heats=heats, fluxes=fluxes, ev_t=ev_t, ev_d=ev_d,
                absorbed=absorbed, n=n, heat=heat, flux=flux, t=t, jumps=jumps)


@dataclass
class PathResult:
    trajectory: Trajectory
    events: EventLog
    counts: np.ndarray
    flux_counts: np.ndarray
    absorbed: bool
    V: int

    def value_at(self, t) -> np.ndarray:
        """Piecewise-constant concentrations ``counts/V`` at times ``t``."""
        idx = np.searchsorted(self.trajectory.times, np.asarray(t, dtype=float), side="right") - 1
        return self.trajectory.rho[np.clip(idx, 0, None)]


def simulate_path(net: Network, counts0, theta0: float, V: int, T: float, seed=0) -> PathResult:
    """Simulate one path on ``[0, T]``.

    The trajectory holds the state right after every jump (piecewise
    constant in between), with concentrations ``counts / V`` and the
    cumulative net flux ``flux_counts / V``.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    rng = make_rng(seed)
    out = _run(net, counts0, theta0, V, T, rng, record=True)
    counts = np.array(out["states"], dtype=np.int64)
    theta = np.array(out["heats"]) / (V * net.heat_capacity)
    traj = Trajectory(np.array(out["times"]), counts / V, theta,
                      np.array(out["fluxes"], dtype=float) / V, net.species_names)
    return PathResult(traj, EventLog(out["ev_t"], out["ev_d"]), counts,
                      np.array(out["fluxes"], dtype=np.int64).reshape(len(counts), -1), out["absorbed"], V)


@dataclass
class EnsembleSummary:
    times: np.ndarray
    mean_rho: np.ndarray
    var_rho: np.ndarray
    mean_theta: np.ndarray
    var_theta: np.ndarray
    terminal_flux: np.ndarray
    absorbed: np.ndarray
    n_paths: int


def _ensemble_worker(args):
    net, counts0, theta0, V, T, seed_seq, grid = args
    p = simulate_path(net, counts0, theta0, V, T, seed_seq)
    idx = np.clip(np.searchsorted(p.trajectory.times, grid, side="right") - 1, 0, None)
    return (p.trajectory.rho[idx], p.trajectory.theta[idx], p.flux_counts[-1] / V, p.absorbed,
            p.events)


def resolve_threads(threads: int | None = None) -> int:
    env = os.environ.get("ANISO_THREADS")
    if env:
        return max(1, int(env))
    return max(1, int(threads or 1))


def ensemble(net: Network, counts0, theta0: float, V: int, T: float, N: int, seed=0, *,
             n_grid: int = 101, threads: int | None = None, return_events: bool = False):
    """Run ``N`` independent paths and summarise them on a uniform time grid.

    Path ``i`` always uses stream ``i`` of ``SeedSequence(seed)``, and the
    reduction runs over paths in index order, so the summary is identical
    for any number of worker processes.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    grid = np.linspace(0.0, T, n_grid)
    seeds = np.random.SeedSequence(seed).spawn(N)
    jobs = [(net, counts0, theta0, V, T, s, grid) for s in seeds]
    workers = resolve_threads(threads)
    if workers > 1 and N > 1:
        with ProcessPoolExecutor(max_workers=min(workers, N)) as pool:
            results = list(pool.map(_ensemble_worker, jobs))
    else:
        results = [_ensemble_worker(j) for j in jobs]
    rho = np.stack([r[0] for r in results])
    theta = np.stack([r[1] for r in results])
    summary = EnsembleSummary(
        times=grid,
        mean_rho=rho.mean(axis=0),
        var_rho=rho.var(axis=0),
        mean_theta=theta.mean(axis=0),
        var_theta=theta.var(axis=0),
        terminal_flux=np.stack([r[2] for r in results]),
        absorbed=np.array([r[3] for r in results]),
        n_paths=N,
    )
    if return_events:
        return summary, [r[4] for r in results]
    return summary


@dataclass
class Histogram:
    states: np.ndarray
    probabilities: np.ndarray
    n_jumps: int

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(v) for v in s): float(p) for s, p in zip(self.states, self.probabilities)}

    def to_csv(self, names) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([*names, "probability"])
        for s, p in zip(self.states, self.probabilities):
            w.writerow([*(int(v) for v in s), "%.12g" % p])
        return buf.getvalue()


def empirical_invariant(net: Network, counts0, theta0: float, V: int, burn_in: float, samples: int,
                        thin: int = 1, seed=0) -> Histogram:
    """Occupation-time histogram of one long path.

    ``samples * thin`` jumps are simulated after a burn-in of length
    ``burn_in`` (in time units); each visited state is weighted by its
    holding time.

    Raises:
        UnboundedLPError: the attainable set, hence the state space, is unbounded.
    """
    rho0 = np.asarray(counts0, dtype=float) / V
    if not is_bounded(net, rho0, theta0):
        raise UnboundedLPError("reachable state space is unbounded")
    rng = make_rng(seed)
    occ: dict = {}
    if burn_in > 0:
        warm = _run(net, counts0, theta0, V, burn_in, rng, record=False)
        counts0 = warm["n"]
        theta0 = warm["heat"] / (V * net.heat_capacity)
    out = _run(net, counts0, theta0, V, math.inf, rng, record=False, occupancy=occ,
               max_jumps=samples * thin)
    if not occ:
        occ[tuple(int(v) for v in counts0)] = 1.0
    keys = sorted(occ)
    w = np.array([occ[k] for k in keys])
    if not np.isfinite(w.sum()):
        # absorbed: all mass sits on the absorbing state
        w = np.where(np.isinf(w), 1.0, 0.0)
    return Histogram(np.array(keys, dtype=np.int64), w / w.sum(), out["jumps"])
