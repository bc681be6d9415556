"""Quasipotential (free energy), its gradient, and the HJB check.

The quasipotential of an anisothermal network in isothermal detailed or
complex balance is

    V(rho) = S(rho | pi) - (c_H / k_B) log theta - C,

with ``theta`` fixed by energy conservation and ``C`` the minimum of the
first two terms over the attainable class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, InfeasibleError
from .kinetics import rates_energy_closed
from .network import Network, interior_point, range_basis, total_energy, State


def boltzmann_s(a: float, b: float) -> float:
    if a < 0 or b < 0:
        raise DomainError("boltzmann_s needs non-negative arguments")
    if a == 0:
        return float(b)
    if b == 0:
        return math.inf
    return a * math.log(a / b) - a + b


def relative_entropy(rho, pi) -> float:
    rho = np.asarray(rho, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if np.any(rho < 0) or np.any(pi < 0):
        return math.inf
    return float(sum(boltzmann_s(a, b) for a, b in zip(rho, pi)))


def _free_energy(net: Network, pi, E0, rho) -> float:
    """``S(rho|pi) - (c_H/k_B) log theta`` without normalisation."""
    theta = (E0 - float(net.energies @ rho)) / net.heat_capacity
    if theta <= 0:
        return math.inf
    S = relative_entropy(rho, pi)
    if not math.isfinite(S):
        return math.inf
    return S - net.heat_capacity / net.boltzmann_constant * math.log(theta)


def minimize_free_energy(net: Network, pi, rho0, theta0: float, *, start=None,
                         max_iter: int = 200, tol: float = 1e-13) -> tuple[np.ndarray, float, float]:
    """Minimise the free energy over the attainable class by damped Newton.

    Returns ``(rho_inf, theta_inf, minimum)``.

    Raises:
        InfeasibleError: the class has no interior point.
        ConvergenceError: Newton did not reach the tolerance.
    """
    pi = np.asarray(pi, dtype=float)
    rho0 = np.asarray(rho0, dtype=float)
    E0 = total_energy(net, State(rho0, theta0))
    Q = range_basis(net)
    kB, cH, e = net.boltzmann_constant, net.heat_capacity, net.energies
    if Q.shape[1] == 0:
        theta = theta0
        if theta <= 0 or np.any(rho0 <= 0):
            raise InfeasibleError("trivial class without positive interior")
        return rho0.copy(), theta, _free_energy(net, pi, E0, rho0)
    if start is None:
        rho, _ = interior_point(net, rho0, theta0)
    else:
        rho = np.asarray(start, dtype=float)
    f = _free_energy(net, pi, E0, rho)
    if not math.isfinite(f):
        raise InfeasibleError("starting point outside the open class")
    for _ in range(max_iter):
        theta = (E0 - e @ rho) / cH
        g = Q.T @ (np.log(rho / pi) + e / (kB * theta))
        H = Q.T @ (np.diag(1.0 / rho) + np.outer(e, e) / (kB * cH * theta ** 2)) @ Q
        step = np.linalg.solve(H, -g)
        decrement = float(-g @ step)
        if decrement <= tol ** 2 or np.linalg.norm(g) <= tol:
            return rho, theta, f
        t = 1.0
        while True:
            cand = rho + t * (Q @ step)
            f_new = _free_energy(net, pi, E0, cand) if np.all(cand > 0) else math.inf
            # Armijo with a rounding allowance near the optimum
            if f_new <= f - 1e-4 * t * decrement + 1e-15 * (1.0 + abs(f)):
                break
            t *= 0.5
            if t < 1e-20:
                raise ConvergenceError("free-energy line search failed")
        rho, f = cand, f_new
    raise ConvergenceError(f"free-energy Newton did not converge in {max_iter} iterations")


@dataclass(frozen=True, eq=False)
class Quasipotential:
    """Normalised quasipotential on one attainable class.

    ``C`` is computed once at construction; build a new object when the
    energy budget or the isothermal steady state changes.
    """

    net: Network
    pi: np.ndarray
    E0: float
    C: float
    rho_inf: np.ndarray
    theta_inf: float

    def theta(self, rho) -> float:
        return (self.E0 - float(self.net.energies @ np.asarray(rho, dtype=float))) / self.net.heat_capacity


def normalization_constant(net: Network, pi, rho0, theta0: float, start=None) -> float:
    return minimize_free_energy(net, pi, rho0, theta0, start=start)[2]


def build_quasipotential(net: Network, rho0, theta0: float, pi=None) -> Quasipotential:
    """Construct the quasipotential of the class through ``(rho0, theta0)``.

    ``pi`` defaults to the isothermal steady state in the class of ``rho0``.
    """
    if pi is None:
        from .balance import isothermal_steady_state

        pi = isothermal_steady_state(net, rho0)
    pi = np.asarray(pi, dtype=float)
    rho_inf, theta_inf, C = minimize_free_energy(net, pi, rho0, theta0)
    E0 = total_energy(net, State(np.asarray(rho0, dtype=float), theta0))
    for a in (pi, rho_inf):
        a.setflags(write=False)
    return Quasipotential(net, pi, E0, C, rho_inf, theta_inf)


def value(qp: Quasipotential, rho) -> float:
    rho = np.asarray(rho, dtype=float)
    return _free_energy(qp.net, qp.pi, qp.E0, rho) - qp.C


def value_alternative(qp: Quasipotential, rho) -> float:
    """Equivalent form ``S(rho|rho_inf) + (c_H/k_B) (r - 1 - log r)`` with ``r = theta/theta_inf``.

    Both terms are non-negative and vanish only at the minimiser, which
    makes this form handy as an independent check of the constant ``C``.
    """
    theta = qp.theta(rho)
    if theta <= 0:
        return math.inf
    net = qp.net
    r = theta / qp.theta_inf
    return relative_entropy(rho, qp.rho_inf) + net.heat_capacity / net.boltzmann_constant * (r - 1.0 - math.log(r))


def value_alternative_literal(qp: Quasipotential, rho) -> float:
    """``S(rho|pi) - S(rho|rho_inf) - (c_H/k_B) log(theta/theta_inf)``.

    Kept for comparison only: this expression is affine plus a thermal
    term on the class and does *not* reproduce :func:`value`.
    """
    theta = qp.theta(rho)
    if theta <= 0:
        return math.inf
    net = qp.net
    return (relative_entropy(rho, qp.pi) - relative_entropy(rho, qp.rho_inf)
            - net.heat_capacity / net.boltzmann_constant * math.log(theta / qp.theta_inf))


def gradient(qp: Quasipotential, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    theta = qp.theta(rho)
    if np.any(rho <= 0) or theta <= 0:
        raise DomainError("quasipotential gradient needs rho > 0 and theta > 0")
    net = qp.net
    return np.log(rho / qp.pi) + net.energies / (net.boltzmann_constant * theta)


def hamiltonian(net: Network, rho, E0: float, xi) -> float:
    """``sum_r k_r(rho) (exp(xi . gamma^r) - 1)`` over all directions."""
    k = rates_energy_closed(net, rho, E0)
    z = net.gamma_dir @ np.asarray(xi, dtype=float)
    return float(k @ np.expm1(z))


def hjb_residual(qp: Quasipotential, rho) -> float:
    return hamiltonian(qp.net, rho, qp.E0, gradient(qp, rho))
