"""Dissipation potentials, forces and the Onsager-Machlup / MFT decompositions.

Per reaction pair with rates ``k_f, k_b`` and ``eta = sqrt(k_f k_b)``:

    Psi*(zeta) = 2 eta (cosh zeta - 1),
    Psi(j)     = 2 eta (cosh*(j / (2 eta)) + 1),
    F          = 1/2 log(k_f / k_b),

and ``L(j) = Psi(j) + Psi*(F) - F.j``. The force splits into a gradient
part ``F_sym = -1/2 Gamma^T grad V`` and a state-independent remainder
``F_asym``; under complex balance with a common transition energy the
Fisher-information-like terms ``Lambda`` complete the decomposition.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, HypothesisError
from .kinetics import rates_energy_closed
from .ldp import _require_reversible, conjugate_sup, flux_lagrangian, state_lagrangian, _in_range
from .network import Network, range_basis
from .quasipotential import Quasipotential, gradient, hamiltonian, value


def cosh_star(s: float) -> float:
    """Legendre conjugate of cosh: ``s asinh(s) - sqrt(1 + s^2)``."""
    if abs(s) < 1e-4:
        s2 = s * s
        return -1.0 + s2 / 2.0 - s2 * s2 / 24.0
    return s * math.asinh(s) - math.sqrt(1.0 + s * s)


def _pair_psi(eta: float, j: float) -> float:
    """``2 eta (cosh*(j/2eta) + 1)``, with the eta -> 0 limit ``|j| * inf``."""
    if eta == 0.0:
        return 0.0 if j == 0 else math.inf
    s = j / (2.0 * eta)
    if abs(s) < 1e-4:
        s2 = s * s
        return 2.0 * eta * (s2 / 2.0 - s2 * s2 / 24.0)
    return 2.0 * eta * (s * math.asinh(s) - math.sqrt(1.0 + s * s) + 1.0)


def _etas(net: Network, rho, E0: float) -> np.ndarray:
    k = rates_energy_closed(net, rho, E0)
    R = net.n_pairs
    return np.sqrt(k[:R] * k[R:])


def psi_star_flux(net: Network, rho, E0: float, zeta) -> float:
    eta = _etas(net, rho, E0)
    zeta = np.asarray(zeta, dtype=float)
    return float(np.sum(2.0 * eta * (np.cosh(zeta) - 1.0)))


def psi_flux(net: Network, rho, E0: float, j) -> float:
    eta = _etas(net, rho, E0)
    j = np.asarray(j, dtype=float)
    return float(math.fsum(_pair_psi(e, x) for e, x in zip(eta, j)))


def psi_hat_star(net: Network, rho, E0: float, xi) -> float:
    z = np.asarray(net.gamma, dtype=float).T @ np.asarray(xi, dtype=float)
    return psi_star_flux(net, rho, E0, z)


def psi_hat(net: Network, rho, E0: float, u) -> float:
    """``inf { Psi(rho, j) : Gamma j = u }`` via its dual ``sup_xi xi.u - Psihat*(rho, xi)``."""
    u = np.asarray(u, dtype=float)
    Q = range_basis(net)
    if not _in_range(net, u, Q):
        return math.inf
    eta = _etas(net, rho, E0)
    G = np.asarray(net.gamma, dtype=float)
    if np.any(eta == 0) and Q.shape[1] == net.n_pairs:
        j = np.linalg.lstsq(G, u, rcond=None)[0]
        return float(math.fsum(_pair_psi(e, x) for e, x in zip(eta, j)))
    C = G.T @ Q
    val, _ = conjugate_sup(
        C, Q.T @ u,
        lambda z: 2.0 * eta * (np.cosh(z) - 1.0),
        lambda z: 2.0 * eta * np.sinh(z),
        lambda z: 2.0 * eta * np.cosh(z),
    )
    return max(val, 0.0)


# -- forces -----------------------------------------------------------------

@dataclass(frozen=True)
class ForceSplit:
    total: np.ndarray
    sym: np.ndarray
    asym: np.ndarray

    @property
    def split_residual(self) -> float:
        return float(np.abs(self.total - self.sym - self.asym).max(initial=0.0))


def asym_force(net: Network, pi) -> np.ndarray:
    """``1/2 log(kappa_fw pi^alpha / (kappa_bw pi^alpha'))`` (independent of the state)."""
    logpi = np.log(np.asarray(pi, dtype=float))
    return 0.5 * (np.log(net.kappa_fw) + net.alpha_fw @ logpi - np.log(net.kappa_bw) - net.alpha_bw @ logpi)


def forces(net: Network, qp: Quasipotential, rho) -> ForceSplit:
    """Total, symmetric and antisymmetric force at an interior state.

    Raises:
        DomainError: some rate vanishes at ``rho`` (boundary point).
    """
    _require_reversible(net)
    k = rates_energy_closed(net, rho, qp.E0)
    R = net.n_pairs
    if np.any(k <= 0):
        raise DomainError("forces are only defined where all rates are positive")
    total = 0.5 * np.log(k[:R] / k[R:])
    sym = -0.5 * (np.asarray(net.gamma, dtype=float).T @ gradient(qp, rho))
    asym = asym_force(net, qp.pi)
    split = ForceSplit(total, sym, asym)
    if split.split_residual > 1e-9 * (1.0 + float(np.abs(total).max(initial=0.0))):
        raise AssertionError(f"force split inconsistent: {split.split_residual:.3g}")
    return split


def _require_idb(net: Network, qp: Quasipotential) -> None:
    from .balance import check_idb

    if not check_idb(net, qp.pi)[0]:
        raise HypothesisError("isothermal detailed balance does not hold")


def _require_icb_constant(net: Network, qp: Quasipotential) -> None:
    from .balance import check_icb

    if not check_icb(net, qp.pi)[0]:
        raise HypothesisError("isothermal complex balance does not hold")
    if not net.has_constant_transition_energy:
        raise HypothesisError("transition energy is not constant across reactions")


def om_decomposition_residual(net: Network, qp: Quasipotential, rho, u, *, relative: bool = True) -> float:
    """``|Lhat - Psihat - Psihat*(-grad V/2) - grad V.u/2|``, relative to the largest term by default."""
    _require_idb(net, qp)
    g = gradient(qp, rho)
    L = state_lagrangian(net, rho, qp.E0, u)
    terms = [L, psi_hat(net, rho, qp.E0, u), psi_hat_star(net, rho, qp.E0, -0.5 * g),
             0.5 * float(g @ np.asarray(u, dtype=float))]
    res = abs(terms[0] - terms[1] - terms[2] - terms[3])
    if relative:
        return res / max(1.0, max(abs(t) for t in terms))
    return res


def time_reversal_residual(net: Network, qp: Quasipotential, rho, xi) -> float:
    """``|H(rho, xi + grad V/2) - H(rho, -xi + grad V/2)|``."""
    half = 0.5 * gradient(qp, rho)
    xi = np.asarray(xi, dtype=float)
    return abs(hamiltonian(net, rho, qp.E0, xi + half) - hamiltonian(net, rho, qp.E0, -xi + half))


def adjoint_rates(net: Network, qp: Quasipotential, rho) -> np.ndarray:
    """Rates of the time-reversed process: ``kadj_{bw(d)} = k_d exp(gamma^d . grad V)``."""
    k = rates_energy_closed(net, rho, qp.E0)
    if np.any(k <= 0):
        raise DomainError("adjoint rates need positive rates")
    g = gradient(qp, rho)
    fwd = k * np.exp(net.gamma_dir @ g)
    R = net.n_pairs
    return np.concatenate([fwd[R:], fwd[:R]])


def _thermal(net: Network, theta: float) -> np.ndarray:
    """``theta^q exp(-(a_d - e.alpha^d)/(k_B theta))`` per direction."""
    return theta ** net.arrhenius_exponent * np.exp(-net.barrier_dir / (net.boltzmann_constant * theta))


def lambda_explicit(net: Network, qp: Quasipotential, rho) -> tuple[float, float]:
    """``(Lambda_sym^asym, Lambda_asym^sym)`` from the explicit sums over all directions.

    Both carry the ``theta^q`` prefactor of the rates, which cancels from
    every ratio used in the decompositions but not from the Lambdas.
    """
    rho = np.asarray(rho, dtype=float)
    theta = qp.theta(rho)
    logr = np.log(rho / qp.pi)
    logpi = np.log(qp.pi)
    R = net.n_pairs
    A = net.alpha_dir
    A_bw = np.vstack([A[R:], A[:R]])
    T = _thermal(net, theta)
    # a pair shares its transition energy, so the thermal factor of alpha^{bw(d)} is that of bw(d)
    T_bw = np.concatenate([T[R:], T[:R]])
    kp = net.kappa_dir * np.exp(A @ logpi)
    kp_bw = np.concatenate([kp[R:], kp[:R]])
    lam_sym_asym = 0.5 * float(np.sum(T * np.exp(A @ logr) * (np.sqrt(kp) - np.sqrt(kp_bw)) ** 2))
    lam_asym_sym = 0.5 * float(np.sum(kp * (np.sqrt(T * np.exp(A @ logr)) - np.sqrt(T_bw * np.exp(A_bw @ logr))) ** 2))
    return lam_sym_asym, lam_asym_sym


def lambda_adjoint(net: Network, qp: Quasipotential, rho) -> tuple[float, float]:
    """``(Lambda_sym^asym, Lambda_asym^sym)`` from the rates and adjoint rates."""
    k = rates_energy_closed(net, rho, qp.E0)
    ka = adjoint_rates(net, qp, rho)
    R = net.n_pairs
    ka_bw = np.concatenate([ka[R:], ka[:R]])
    return (0.5 * float(np.sum((np.sqrt(k) - np.sqrt(ka)) ** 2)),
            0.5 * float(np.sum((np.sqrt(k) - np.sqrt(ka_bw)) ** 2)))


def lambda_terms(net: Network, qp: Quasipotential, rho, *, check: bool = True) -> tuple[float, float]:
    """Fisher-information terms ``(Lambda_sym^asym, Lambda_asym^sym)``.

    Raises:
        HypothesisError: complex balance or constant transition energy fails
            (skip with ``check=False``).
    """
    if check:
        _require_icb_constant(net, qp)
    return lambda_explicit(net, qp, rho)


def orthogonality_residual(net: Network, qp: Quasipotential, rho, *, check: bool = True) -> tuple[float, float]:
    """Residuals of ``Psi*(F) = Psi*(F_sym) + Lambda_sym^asym = Psi*(F_asym) + Lambda_asym^sym``.

    Returns ``(r1, r2)`` with ``r1`` the F_sym split and ``r2`` the F_asym split.
    """
    if check:
        _require_icb_constant(net, qp)
    f = forces(net, qp, rho)
    lsa, las = lambda_explicit(net, qp, rho)
    full = psi_star_flux(net, rho, qp.E0, f.total)
    r1 = abs(full - psi_star_flux(net, rho, qp.E0, f.sym) - lsa)
    r2 = abs(full - psi_star_flux(net, rho, qp.E0, f.asym) - las)
    return r1, r2


# -- path decompositions ----------------------------------------------------

@dataclass
class DecompositionReport:
    """Integrated decomposition of the flux path cost.

    ``lagrangian`` is the path cost J; ``psi`` the integrated Psi;
    ``psi_star_at_force`` the integrated Psi*(F); ``force_work`` the
    integrated F.w_dot; the Lambda fields hold time integrals.
    """

    lagrangian: float
    psi: float
    psi_star_at_force: float
    force_work: float
    lambda_sym_asym: float
    lambda_asym_sym: float
    residuals: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def fmt(x):
            if isinstance(x, dict):
                return {k: fmt(v) for k, v in x.items()}
            if isinstance(x, (bool, np.bool_)):
                return bool(x)
            x = float(x)
            return "inf" if math.isinf(x) else float("%.12g" % x)

        d = {k: fmt(getattr(self, k)) for k in ("lagrangian", "psi", "psi_star_at_force", "force_work",
                                                "lambda_sym_asym", "lambda_asym_sym", "residuals", "terms")}
        return json.dumps(d, sort_keys=True)


def _trap(times, per_node_pair) -> float:
    return float(math.fsum(0.5 * (times[i + 1] - times[i]) * (a + b) for i, (a, b) in enumerate(per_node_pair)))


def mft_path_report(net: Network, qp: Quasipotential, times, w, rho0, *, check: bool = True) -> DecompositionReport:
    """Evaluate both MFT splits of ``J = int L(rho, w_dot)`` along a flux path.

    The velocity on each interval is the forward difference; every
    integrand uses the trapezoid rule with that velocity at both nodes, so
    the identities hold interval by interval up to the O(h^2) error of the
    two work terms evaluated by their endpoint formulas.
    """
    if check:
        _require_icb_constant(net, qp)
    times = np.asarray(times, dtype=float)
    w = np.asarray(w, dtype=float)
    rho0 = np.asarray(rho0, dtype=float)
    G = np.asarray(net.gamma, dtype=float)
    rho = rho0[None, :] + w @ G.T
    E0 = qp.E0
    n = times.size
    f_nodes = [forces(net, qp, r) for r in rho]
    lam = [lambda_explicit(net, qp, r) for r in rho]
    F_asym = asym_force(net, qp.pi)
    keys = ("L", "psi", "psistar_F", "F_w", "Fsym_w", "Fasym_w", "L_Fasym", "L_Fsym", "lam_sa", "lam_as")
    pairs = {k: [] for k in keys}
    for i in range(n - 1):
        v = (w[i + 1] - w[i]) / (times[i + 1] - times[i])
        vals = []
        for m in (i, i + 1):
            r, f = rho[m], f_nodes[m]
            psi = psi_flux(net, r, E0, v)
            vals.append(dict(
                L=flux_lagrangian(net, r, E0, v),
                psi=psi,
                psistar_F=psi_star_flux(net, r, E0, f.total),
                F_w=float(f.total @ v),
                Fsym_w=float(f.sym @ v),
                Fasym_w=float(f.asym @ v),
                L_Fasym=psi + psi_star_flux(net, r, E0, f.asym) - float(f.asym @ v),
                L_Fsym=psi + psi_star_flux(net, r, E0, f.sym) - float(f.sym @ v),
                lam_sa=lam[m][0],
                lam_as=lam[m][1],
            ))
        for k in keys:
            pairs[k].append((vals[0][k], vals[1][k]))
    I = {k: _trap(times, pairs[k]) for k in keys}
    V0, VT = value(qp, rho[0]), value(qp, rho[-1])
    work_asym = float(F_asym @ w[-1])
    sym_split = I["L_Fasym"] + I["lam_as"] + 0.5 * (VT - V0)
    asym_split = I["L_Fsym"] + I["lam_sa"] - work_asym
    J = I["L"]
    residuals = {
        "sym_split": abs(J - sym_split),
        "asym_split": abs(J - asym_split),
        "fsym_work_vs_dV": abs(-I["Fsym_w"] - 0.5 * (VT - V0)),
        "fasym_work_vs_endpoint": abs(I["Fasym_w"] - work_asym),
    }
    terms = {
        "sym_split": sym_split,
        "asym_split": asym_split,
        "L_Fasym": I["L_Fasym"],
        "L_Fsym": I["L_Fsym"],
        "half_dV": 0.5 * (VT - V0),
        "asym_work": work_asym,
        # expected path (J = 0): -dV/2 = int L_Fasym + int Lambda_asym^sym >= 0 and
        # F_asym.w(T) = int L_Fsym + int Lambda_sym^asym >= 0
        "lyapunov_slack": -0.5 * (VT - V0),
        "work_slack": work_asym,
        # arbitrary paths: V(T)/2 + int Lambda_asym^sym <= V(0)/2 + J and
        # -F_asym.w(T) + int Lambda_sym^asym <= J
        "estimate_sym_slack": 0.5 * V0 + J - 0.5 * VT - I["lam_as"],
        "estimate_asym_slack": J + work_asym - I["lam_sa"],
        # the same work estimates with the opposite sign of F_asym.w(T); these
        # do not follow from the decomposition and fail on long expected paths
        "work_slack_flipped": -work_asym,
        "estimate_asym_slack_flipped": J - work_asym - I["lam_sa"],
    }
    return DecompositionReport(J, I["psi"], I["psistar_F"], I["F_w"], I["lam_sa"], I["lam_as"], residuals, terms)


def perturbed_flux_path(net: Network, rho0, theta0: float, T: float, n_intervals: int,
                        rng: np.random.Generator, *, amplitude: float = 0.05, modes: int = 3,
                        max_halvings: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """A feasible flux path near the expected one: ``w_ode(t) + amp sum_k c_k sin(k pi t / T)``.

    Coefficients are standard normal with ``1/k`` decay; the amplitude is
    halved until the induced concentrations and temperature stay positive.
    Returns ``(times, w)`` with ``w[0] = 0``.
    """
    from .errors import InfeasibleError
    from .macro import integrate
    from .network import State

    rho0 = np.asarray(rho0, dtype=float)
    base = integrate(net, State(rho0, theta0), T, n_out=n_intervals, h=T / (10 * n_intervals))
    t = base.times
    R = net.n_pairs
    c = rng.standard_normal((modes, R)) / np.arange(1, modes + 1)[:, None]
    bump = np.sin(np.outer(t / T, np.arange(1, modes + 1)) * math.pi) @ c
    G = np.asarray(net.gamma, dtype=float)
    E0 = float(net.energies @ rho0 + net.heat_capacity * theta0)
    amp = amplitude
    for _ in range(max_halvings):
        w = base.fluxes + amp * bump
        rho = rho0[None, :] + w @ G.T
        theta = (E0 - rho @ net.energies) / net.heat_capacity
        if rho.min() > 0 and theta.min() > 0:
            return t, w
        amp *= 0.5
    raise InfeasibleError("could not find a feasible perturbation")
