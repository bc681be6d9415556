"""Exact invariant measure of the temperature-coupled A <-> B chain.

With ``V`` particles in total and ``i`` of them of type A, the process is
a birth-death chain in ``i``. Detailed balance gives

    Pi[i] / Pi[i-1] = k_bw(i-1) / k_fw(i),

with the micro rates of the forward (A -> B, i -> i-1) and backward
(B -> A, i-1 -> i) reaction. The product splits into a chemical
(Poisson-product) factor and a thermal (Arrhenius) factor; everything is
accumulated in log space so that large ``V`` does not overflow.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TopologyError
from .kinetics import arrhenius, micro_rate
from .network import Network


@dataclass(frozen=True)
class BirthDeathMeasure:
    V: int
    i_range: tuple[int, int]
    probabilities: np.ndarray
    log_thermal: np.ndarray
    log_chemical: np.ndarray
    log_Z: float
    E0: float

    @property
    def states(self) -> np.ndarray:
        return np.arange(self.i_range[0], self.i_range[1] + 1)

    def log_prob(self) -> np.ndarray:
        return self.log_thermal + self.log_chemical - self.log_Z

    def prob_of(self, i: int) -> float:
        lo, hi = self.i_range
        return float(self.probabilities[i - lo]) if lo <= i <= hi else 0.0


def _check_topology(net: Network) -> tuple[int, int]:
    """Return species indices (A, B) of the single pair A -> B."""
    if net.n_species != 2 or net.n_pairs != 1:
        raise TopologyError("exact measure needs exactly two species and one reaction pair")
    a_f, a_b = net.alpha_fw[0], net.alpha_bw[0]
    if sorted(a_f.tolist()) != [0, 1] or sorted(a_b.tolist()) != [0, 1] or np.array_equal(a_f, a_b):
        raise TopologyError("exact measure needs a unimolecular conversion A <-> B")
    if net.kappa_bw[0] <= 0:
        raise TopologyError("exact measure needs a reversible reaction")
    return int(np.argmax(a_f)), int(np.argmax(a_b))


def theta_of(net: Network, V: int, E0: float, i: int) -> float:
    """Temperature with ``i`` A-particles out of ``V``; ``E0`` is energy per volume."""
    iA, iB = _check_topology(net)
    e = net.energies
    return (E0 - e[iB] + (e[iB] - e[iA]) * i / V) / net.heat_capacity


def _counts(net: Network, V: int, i: int) -> np.ndarray:
    iA, iB = _check_topology(net)
    n = np.zeros(2, dtype=np.int64)
    n[iA], n[iB] = i, V - i
    return n


def state_range(net: Network, V: int, E0: float) -> tuple[int, int]:
    """Indices ``i`` in ``0..V`` with non-negative temperature (a contiguous range)."""
    ok = [i for i in range(V + 1) if theta_of(net, V, E0, i) >= -1e-12]
    if not ok:
        raise DomainError("no state with non-negative temperature")
    return ok[0], ok[-1]


def _log_rate(net: Network, V: int, E0: float, i: int, d: int) -> float:
    r = micro_rate(net, _counts(net, V, i), max(theta_of(net, V, E0, i), 0.0), V, d)
    return math.log(V * r) if r > 0 else -math.inf


def exact_invariant(net: Network, V: int, E0: float) -> BirthDeathMeasure:
    """Invariant measure of the A <-> B chain with ``V`` particles and energy ``E0`` per volume.

    Raises:
        TopologyError: ``net`` is not a reversible A <-> B conversion.
        DomainError: the chain is reducible (a transition rate vanishes
            inside the state range, e.g. at a zero-temperature endpoint).
    """
    iA, iB = _check_topology(net)
    lo, hi = state_range(net, V, E0)
    n_states = hi - lo + 1
    log_th = np.zeros(n_states)
    log_ch = np.zeros(n_states)
    kf, kb = float(net.kappa_fw[0]), float(net.kappa_bw[0])
    for k in range(1, n_states):
        i = lo + k
        th_prev = max(theta_of(net, V, E0, i - 1), 0.0)
        th_cur = max(theta_of(net, V, E0, i), 0.0)
        A_bw = arrhenius(net, th_prev, 1)
        A_fw = arrhenius(net, th_cur, 0)
        if A_bw <= 0 or A_fw <= 0 or not (math.isfinite(A_bw) and math.isfinite(A_fw)):
            raise DomainError(f"transition between i={i - 1} and i={i} has a vanishing rate")
        # chemical: kappa_bw * (V - (i-1)) / V  over  kappa_fw * i / V
        log_ch[k] = log_ch[k - 1] + math.log(kb * (V - i + 1)) - math.log(kf * i)
        log_th[k] = log_th[k - 1] + math.log(A_bw) - math.log(A_fw)
    log_w = log_th + log_ch
    m = log_w.max()
    log_Z = m + math.log(np.exp(log_w - m).sum())
    return BirthDeathMeasure(int(V), (lo, hi), np.exp(log_w - log_Z), log_th, log_ch, float(log_Z), float(E0))


def generator(net: Network, V: int, E0: float) -> tuple[np.ndarray, tuple[int, int]]:
    """Generator matrix of the chain on its state range (rows sum to zero)."""
    lo, hi = state_range(net, V, E0)
    n = hi - lo + 1
    Q = np.zeros((n, n))
    for k in range(n):
        i = lo + k
        if k > 0:
            Q[k, k - 1] = V * micro_rate(net, _counts(net, V, i), max(theta_of(net, V, E0, i), 0.0), V, 0)
        if k < n - 1:
            Q[k, k + 1] = V * micro_rate(net, _counts(net, V, i), max(theta_of(net, V, E0, i), 0.0), V, 1)
        Q[k, k] = -Q[k].sum()
    return Q, (lo, hi)


def stationarity_residual(net: Network, m: BirthDeathMeasure) -> float:
    Q, _ = generator(net, m.V, m.E0)
    return float(np.abs(Q.T @ m.probabilities).max())


def db_check(m: BirthDeathMeasure, net: Network, V: int | None = None, probabilities=None) -> float:
    """Largest relative violation of ``Pi[i-1] k_bw(i-1) = Pi[i] k_fw(i)``."""
    V = m.V if V is None else V
    P = m.probabilities if probabilities is None else np.asarray(probabilities, dtype=float)
    lo, hi = m.i_range
    worst = 0.0
    for k in range(1, hi - lo + 1):
        i = lo + k
        up = P[k - 1] * math.exp(_log_rate(net, V, m.E0, i - 1, 1))
        down = P[k] * math.exp(_log_rate(net, V, m.E0, i, 0))
        worst = max(worst, abs(up - down) / max(up, down))
    return worst


@dataclass(frozen=True)
class ConvergenceRow:
    V: int
    finite_rate: float
    limit: float
    deviation: float


def ldp_rate_convergence(net: Network, Vs, rho_target, rho0, theta0: float) -> list[ConvergenceRow]:
    """Compare ``-(1/V) log Pi^V`` at the lattice point nearest ``rho_target`` with the quasipotential.

    The limit is the normalised quasipotential of the class through
    ``(rho0, theta0)``; both sides vanish at the minimiser, so no further
    constant needs matching.
    """
    from .network import State, total_energy
    from .quasipotential import build_quasipotential, value

    iA, _ = _check_topology(net)
    rho0 = np.asarray(rho0, dtype=float)
    mass = float(rho0.sum())
    if not math.isclose(mass, 1.0, rel_tol=1e-12):
        raise DomainError("the lattice uses unit total concentration")
    E0 = total_energy(net, State(rho0, theta0))
    qp = build_quasipotential(net, rho0, theta0)
    rows = []
    for V in Vs:
        m = exact_invariant(net, int(V), E0)
        i = int(round(float(rho_target[iA]) * V))
        p = m.prob_of(i)
        finite = -math.log(p) / V if p > 0 else math.inf
        rho_i = _counts(net, int(V), i) / V
        lim = value(qp, rho_i)
        rows.append(ConvergenceRow(int(V), finite, lim, abs(finite - lim)))
    return rows


def table_to_csv(rows: list[ConvergenceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["V", "finite_rate", "limit", "deviation"])
    for r in rows:
        w.writerow([r.V, "%.12g" % r.finite_rate, "%.12g" % r.limit, "%.12g" % r.deviation])
    return buf.getvalue()
