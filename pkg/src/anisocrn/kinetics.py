"""Mass-action/Arrhenius reaction rates at macro and micro scale."""

from __future__ import annotations

import math

import numpy as np

from .network import Network, State, temperature_from_energy


def mass_action(net: Network, rho, r: int) -> float:
    """``prod_x rho_x ** alpha_x`` for direction ``r`` (``0 ** 0 == 1``)."""
    alpha = net.alpha_dir[r]
    rho = np.asarray(rho, dtype=float)
    out = 1.0
    for x in np.flatnonzero(alpha):
        out *= rho[x] ** int(alpha[x])
    return float(out)


def _arrhenius_scalar(barrier: float, theta: float, q: float, kB: float) -> float:
    if theta > 0:
        return theta ** q * math.exp(-barrier / (kB * theta))
    # theta == 0: continuous extension
    if barrier > 0:
        return 0.0
    if barrier < 0:
        return math.inf
    if q > 0:
        return 0.0
    return 1.0 if q == 0 else math.inf


def arrhenius(net: Network, theta: float, r: int) -> float:
    return _arrhenius_scalar(float(net.barrier_dir[r]), max(float(theta), 0.0),
                             net.arrhenius_exponent, net.boltzmann_constant)


def arrhenius_all(net: Network, theta: float) -> np.ndarray:
    theta = max(float(theta), 0.0)
    b = np.asarray(net.barrier_dir)
    if theta > 0:
        return theta ** net.arrhenius_exponent * np.exp(-b / (net.boltzmann_constant * theta))
    return np.array([_arrhenius_scalar(float(x), 0.0, net.arrhenius_exponent, net.boltzmann_constant) for x in b])


def mass_action_all(net: Network, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    alpha = net.alpha_dir
    with np.errstate(divide="ignore", invalid="ignore"):
        powered = np.where(alpha > 0, rho[None, :] ** alpha, 1.0)
    return np.prod(powered, axis=1)


def rates(net: Network, s: State) -> np.ndarray:
    """Rates of all 2R directions at state ``s``."""
    return net.kappa_dir * arrhenius_all(net, s.theta) * mass_action_all(net, s.rho)


def rate(net: Network, s: State, r: int) -> float:
    return float(net.kappa_dir[r] * arrhenius(net, s.theta, r) * mass_action(net, s.rho, r))


def rates_energy_closed(net: Network, rho, E0: float) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return rates(net, State(rho, temperature_from_energy(net, rho, E0)))


def rate_energy_closed(net: Network, rho, E0: float, r: int) -> float:
    rho = np.asarray(rho, dtype=float)
    return rate(net, State(rho, temperature_from_energy(net, rho, E0)), r)


def log_rate_energy_closed(net: Network, rho, E0: float, r: int) -> float:
    """``log k_r`` evaluated in log space, so vanishing rates give ``-inf``
    cleanly and tiny temperatures do not underflow."""
    rho = np.asarray(rho, dtype=float)
    theta = (E0 - float(net.energies @ rho)) / net.heat_capacity
    alpha = net.alpha_dir[r]
    out = math.log(net.kappa_dir[r]) if net.kappa_dir[r] > 0 else -math.inf
    for x in np.flatnonzero(alpha):
        if rho[x] <= 0:
            return -math.inf
        out += int(alpha[x]) * math.log(rho[x])
    b = float(net.barrier_dir[r])
    if theta <= 0:
        a = _arrhenius_scalar(b, 0.0, net.arrhenius_exponent, net.boltzmann_constant)
        return out + (math.log(a) if a > 0 else -math.inf)
    return out + net.arrhenius_exponent * math.log(theta) - b / (net.boltzmann_constant * theta)


def micro_mass_action(alpha, counts, V: int) -> float:
    """``V**-|alpha| * n! / (n - alpha)!``, zero when ``n < alpha``."""
    out = 1.0
    for a, n in zip(alpha, counts):
        a = int(a)
        if a == 0:
            continue
        n = int(n)
        if n < a:
            return 0.0
        for i in range(a):
            out *= (n - i) / V
    return out


def micro_rate(net: Network, counts, theta: float, V: int, r: int) -> float:
    """Per-volume micro rate; the jump rate of direction ``r`` is ``V`` times this."""
    e_gamma = float(net.energies @ net.gamma_dir[r])
    if V * net.heat_capacity * theta < e_gamma - 1e-12 * max(1.0, abs(e_gamma)):
        return 0.0
    B = micro_mass_action(net.alpha_dir[r], counts, V)
    if B == 0.0:
        return 0.0
    return float(net.kappa_dir[r] * arrhenius(net, theta, r) * B)


def net_flux(net: Network, s: State) -> np.ndarray:
    k = rates(net, s)
    R = net.n_pairs
    return k[:R] - k[R:]
