"""Large-deviation cost functions for concentrations and fluxes.

The flux Lagrangian ``L(rho, j)`` is the cost of observing net fluxes ``j``
and has a per-pair closed form. The state Lagrangian ``Lhat(rho, u)`` is
its contraction to velocities ``u = Gamma j`` and is evaluated through the
dual problem ``sup_xi xi.u - H(rho, xi)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, HypothesisError, IrreversibleNetworkError
from .kinetics import rates_energy_closed
from .network import Network, range_basis, temperature_bounds

RAN_TOL = 1e-10
SNAP_TOL = 1e-9
_Z_MAX = 600.0


def _s(a: float, b: float) -> float:
    if a == 0.0:
        return b
    if b == 0.0:
        return math.inf
    return a * math.log(a / b) - a + b


def pair_flux_cost(kf: float, kb: float, j: float) -> float:
    """``inf { s(a|kf) + s(b|kb) : a - b = j, a, b >= 0 }``."""
    if kf > 0 and kb > 0:
        disc = math.sqrt(j * j + 4.0 * kf * kb)
        # pick the cancellation-free expression for each sign of j
        a = 0.5 * (j + disc) if j >= 0 else 2.0 * kf * kb / (disc - j)
        b = a - j if j <= 0 else 2.0 * kf * kb / (disc + j)
        return _s(a, kf) + _s(b, kb)
    if kf > 0:
        return _s(j, kf) + kb if j >= 0 else math.inf
    if kb > 0:
        return _s(-j, kb) + kf if j <= 0 else math.inf
    return 0.0 if j == 0 else math.inf


def _require_reversible(net: Network) -> None:
    if not net.is_reversible:
        raise IrreversibleNetworkError("flux cost functions need kappa_bw > 0 for every reaction")


def flux_lagrangian(net: Network, rho, E0: float, j) -> float:
    """``L(rho, j) = sum_r inf s(one-way fluxes | rates)`` over pairs."""
    _require_reversible(net)
    k = rates_energy_closed(net, rho, E0)
    R = net.n_pairs
    j = np.asarray(j, dtype=float)
    return float(math.fsum(pair_flux_cost(k[r], k[R + r], j[r]) for r in range(R)))


# -- conjugates of separable exponential families ---------------------------

def conjugate_sup(C: np.ndarray, b: np.ndarray, phi: Callable, dphi: Callable, d2phi: Callable,
                  *, max_iter: int = 200, tol: float = 1e-13, reg: float = 1e-12) -> tuple[float, np.ndarray]:
    """``sup_eta eta.b - sum_r phi_r((C eta)_r)`` for convex ``phi`` by damped Newton.

    ``phi``, ``dphi``, ``d2phi`` map the vector ``z = C eta`` to per-row
    values. Returns the supremum and the maximiser; ``+inf`` (with the
    last iterate) when the supremum diverges.
    """
    k = C.shape[1]
    eta = np.zeros(k)
    if k == 0:
        return 0.0, eta

    def obj(e):
        z = C @ e
        if np.abs(z).max(initial=0.0) > _Z_MAX:
            return -math.inf
        return float(e @ b - phi(z).sum())

    f = obj(eta)
    scale = 1.0 + float(np.abs(b).sum())
    for _ in range(max_iter):
        z = C @ eta
        g = b - C.T @ dphi(z)
        if np.linalg.norm(g) <= tol * scale:
            return f, eta
        H = C.T @ (d2phi(z)[:, None] * C) + reg * np.eye(k)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = g
        if not np.all(np.isfinite(step)):
            step = g
        t = 1.0
        slope = float(g @ step)
        if slope <= 0:
            step, slope = g, float(g @ g)
        while True:
            cand = eta + t * step
            f_new = obj(cand)
            if f_new >= f + 1e-4 * t * slope - 1e-15 * (1.0 + abs(f)):
                break
            t *= 0.5
            if t < 1e-16:
                raise ConvergenceError(f"dual Newton line search failed (|grad| = {np.linalg.norm(g):.3g})")
        if np.abs(C @ cand).max(initial=0.0) > 0.9 * _Z_MAX:
            return math.inf, cand
        if abs(f_new - f) <= 1e-16 * (1.0 + abs(f)) and np.linalg.norm(t * step) <= 1e-14 * (1 + np.linalg.norm(eta)):
            eta, f = cand, f_new
            break
        eta, f = cand, f_new
    z = C @ eta
    g = b - C.T @ dphi(z)
    if np.linalg.norm(g) <= 1e-8 * scale:
        return f, eta
    # gradient not small but objective stalled: supremum attained at infinity
    if np.abs(z).max(initial=0.0) > 50.0:
        return math.inf, eta
    raise ConvergenceError(f"dual Newton did not converge (|grad| = {np.linalg.norm(g):.3g})")


def _in_range(net: Network, u: np.ndarray, Q: np.ndarray) -> bool:
    return bool(np.linalg.norm(u - Q @ (Q.T @ u)) <= RAN_TOL * (1.0 + np.linalg.norm(u)))


def _kernel_trivial(net: Network) -> bool:
    return range_basis(net).shape[1] == net.n_pairs


def state_lagrangian(net: Network, rho, E0: float, u, *, return_xi: bool = False):
    """``Lhat(rho, u) = sup_xi xi.u - H(rho, xi)``.

    The supremum is taken over ``xi`` in Ran Gamma (other components do
    not change the objective when ``u`` lies in Ran Gamma). Returns ``+inf``
    when ``u`` leaves Ran Gamma or the supremum diverges. With
    ``return_xi`` the maximiser is returned as well.
    """
    u = np.asarray(u, dtype=float)
    Q = range_basis(net)
    X = net.n_species
    if not _in_range(net, u, Q):
        return (math.inf, np.full(X, np.nan)) if return_xi else math.inf
    k = rates_energy_closed(net, rho, E0)
    R = net.n_pairs
    kf, kb = k[:R], k[R:]
    if (np.any(kf == 0) or np.any(kb == 0)) and _kernel_trivial(net):
        # unique flux preimage: use the exact one-sided closed forms
        j = np.linalg.lstsq(np.asarray(net.gamma, dtype=float), u, rcond=None)[0]
        val = float(math.fsum(pair_flux_cost(kf[r], kb[r], j[r]) for r in range(R)))
        return (val, np.full(X, np.nan)) if return_xi else val
    C = np.asarray(net.gamma, dtype=float).T @ Q
    val, eta = conjugate_sup(
        C, Q.T @ u,
        lambda z: kf * np.expm1(z) + kb * np.expm1(-z),
        lambda z: kf * np.exp(z) - kb * np.exp(-z),
        lambda z: kf * np.exp(z) + kb * np.exp(-z),
    )
    val = max(val, 0.0)
    return (val, Q @ eta) if return_xi else val


def optimal_flux(net: Network, rho, E0: float, xi) -> np.ndarray:
    """Net flux ``j_r = k_r e^{xi.gamma} - k_bw e^{-xi.gamma}`` attaining the contraction at ``xi``."""
    k = rates_energy_closed(net, rho, E0)
    R = net.n_pairs
    z = np.asarray(net.gamma, dtype=float).T @ np.asarray(xi, dtype=float)
    return k[:R] * np.exp(z) - k[R:] * np.exp(-z)


# -- path functionals --------------------------------------------------------

@dataclass
class PathCost:
    total: float
    times: np.ndarray
    per_interval: np.ndarray

    def to_json(self) -> str:
        return json.dumps({"intervals": int(self.per_interval.size), "total": _fmt(self.total)}, sort_keys=True)

    def intervals_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "cost"])
        for t, c in zip(self.times, self.per_interval):
            w.writerow(["%.12g" % t, _fmt(c)])
        return buf.getvalue()


def _fmt(x: float):
    return "inf" if math.isinf(x) else float("%.12g" % x)


def trapezoid_cost(times, nodes, velocity, integrand: Callable) -> PathCost:
    """Trapezoid rule of ``integrand(node, velocity)`` with the interval's
    forward-difference velocity used at both end nodes."""
    times = np.asarray(times, dtype=float)
    per = np.empty(times.size - 1)
    for i in range(times.size - 1):
        h = times[i + 1] - times[i]
        v = velocity(i)
        a = integrand(nodes[i], v)
        b = integrand(nodes[i + 1], v)
        per[i] = 0.5 * h * (a + b)
    total = float(math.fsum(per)) if np.all(np.isfinite(per)) else math.inf
    return PathCost(total, times[:-1], per)


def _require_ldp_hypotheses(net: Network, rho0, theta0: float) -> None:
    from .errors import UnboundedLPError

    try:
        th_minus, _ = temperature_bounds(net, rho0, theta0)
    except UnboundedLPError:
        raise HypothesisError("attainable set is unbounded") from None
    if th_minus <= 0:
        raise HypothesisError("minimal attainable temperature is zero (cold-death regime)")


def path_rate_state(net: Network, traj, rho0=None, theta0: float | None = None) -> PathCost:
    """Cost ``int Lhat(rho, rho_dot) dt`` of a concentration path.

    Raises:
        HypothesisError: the attainable set is unbounded or theta_minus = 0.
    """
    rho0 = traj.rho[0] if rho0 is None else np.asarray(rho0, dtype=float)
    theta0 = float(traj.theta[0]) if theta0 is None else theta0
    if np.abs(traj.rho[0] - rho0).max() > 1e-9:
        raise ValueError("trajectory does not start at rho0")
    _require_ldp_hypotheses(net, rho0, theta0)
    E0 = float(net.energies @ rho0 + net.heat_capacity * theta0)
    t, R_ = traj.times, np.asarray(traj.rho, dtype=float)
    # nodes read back from text carry rounding noise off the class; snap it back
    Q = range_basis(net)
    proj = rho0 + (R_ - rho0) @ Q @ Q.T
    if np.abs(proj - R_).max() <= SNAP_TOL:
        R_ = proj
    return trapezoid_cost(t, R_, lambda i: (R_[i + 1] - R_[i]) / (t[i + 1] - t[i]),
                          lambda r, v: state_lagrangian(net, r, E0, v))


def path_rate_flux(net: Network, times, w, rho0, theta0: float) -> PathCost:
    """Cost ``int L(rho, w_dot) dt`` of a flux path with ``rho = rho0 + Gamma w``.

    Raises:
        ValueError: ``w(0) != 0``.
        InfeasibleError: the induced concentration path leaves the attainable set.
    """
    from .errors import InfeasibleError

    w = np.asarray(w, dtype=float)
    times = np.asarray(times, dtype=float)
    if np.abs(w[0]).max(initial=0.0) > 1e-12:
        raise ValueError("flux path must start at zero")
    rho0 = np.asarray(rho0, dtype=float)
    E0 = float(net.energies @ rho0 + net.heat_capacity * theta0)
    rho = rho0[None, :] + w @ np.asarray(net.gamma, dtype=float).T
    theta = (E0 - rho @ net.energies) / net.heat_capacity
    if np.any(rho < -1e-12) or np.any(theta < -1e-12):
        raise InfeasibleError("flux path leaves the attainable set")
    rho = np.maximum(rho, 0.0)
    return trapezoid_cost(times, rho, lambda i: (w[i + 1] - w[i]) / (times[i + 1] - times[i]),
                          lambda r, v: flux_lagrangian(net, r, E0, v))


def legendre_gap(net: Network, rho, E0: float, j, zeta) -> float:
    """Fenchel-Young gap ``Psi(rho, j) + Psi*(rho, zeta) - zeta.j`` (non-negative)."""
    from .ommft import psi_flux, psi_star_flux

    j = np.asarray(j, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    return psi_flux(net, rho, E0, j) + psi_star_flux(net, rho, E0, zeta) - float(zeta @ j)
