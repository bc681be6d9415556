"""Deterministic macroscopic dynamics: the coupled concentration/temperature ODE."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import StepFailureError
from .kinetics import net_flux
from .network import Network, State, range_basis, total_energy

CLAMP_TOL = 1e-9


@dataclass
class Trajectory:
    """Time-stamped states, optionally with the cumulative net flux ``w(t)``.

    Attributes:
        times: shape (n,), strictly increasing.
        rho: shape (n, X).
        theta: shape (n,).
        fluxes: shape (n, R) or ``None``.
    """

    times: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    fluxes: np.ndarray | None = None
    species: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.rho = np.atleast_2d(np.asarray(self.rho, dtype=float))
        self.theta = np.asarray(self.theta, dtype=float)
        if self.fluxes is not None:
            self.fluxes = np.asarray(self.fluxes, dtype=float).reshape(len(self.times), -1)

    def __len__(self) -> int:
        return self.times.size

    def state(self, i: int) -> State:
        return State(self.rho[i].copy(), float(self.theta[i]))

    @property
    def states(self) -> list[State]:
        return [self.state(i) for i in range(len(self))]

    @classmethod
    def from_flux(cls, net: Network, times, w, rho0, E0: float) -> "Trajectory":
        """Build the state path ``rho = rho0 + Gamma w`` with energy-closed temperature."""
        w = np.asarray(w, dtype=float)
        rho = np.asarray(rho0, dtype=float)[None, :] + w @ np.asarray(net.gamma, dtype=float).T
        theta = (E0 - rho @ net.energies) / net.heat_capacity
        return cls(times, rho, theta, w, net.species_names)

    def energy(self, net: Network) -> np.ndarray:
        return self.rho @ net.energies + net.heat_capacity * self.theta


def rhs(net: Network, s: State) -> tuple[np.ndarray, float]:
    """Right-hand side: ``drho = Gamma J``, ``dtheta = -(e . Gamma J)/c_H``."""
    J = net_flux(net, s)
    drho = net.gamma @ J
    return drho, float(-(net.energies @ drho) / net.heat_capacity)


def _augmented_rhs(net: Network):
    G = np.asarray(net.gamma, dtype=float)
    e, cH, X = net.energies, net.heat_capacity, net.n_species

    def f(y):
        rho = np.maximum(y[:X], 0.0)
        theta = max(y[X], 0.0)
        J = net_flux(net, State(rho, theta))
        drho = G @ J
        return np.concatenate([drho, [-(e @ drho) / cH], J])

    return f


def _check_and_clamp(y: np.ndarray, X: int, t: float, tol: float) -> np.ndarray:
    sub = y[:X + 1]
    if np.any(sub < -tol):
        raise StepFailureError(f"negative concentration or temperature at t={t:.6g}: min {sub.min():.3g}")
    y[:X + 1] = np.maximum(sub, 0.0)
    return y


def integrate(net: Network, s0: State, T: float, *, h: float | None = None, method: str = "rk4",
              n_out: int | None = None, rtol: float = 1e-10, atol: float = 1e-12,
              tol: float = CLAMP_TOL) -> Trajectory:
    """Integrate the macroscopic equation on ``[0, T]``.

    Args:
        net: the network.
        s0: initial state.
        T: final time (> 0).
        h: RK4 step; defaults to ``T / 1e4``.
        method: ``"rk4"`` (fixed step) or ``"rk45"`` (adaptive, via scipy).
        n_out: number of output intervals; defaults to every RK4 step, and
            to 1000 intervals for rk45.
        tol: negative components above ``-tol`` are clamped to zero.

    Returns:
        A Trajectory including the cumulative net flux ``w(t)``.

    Raises:
        StepFailureError: a component went below ``-tol``.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    X, R = net.n_species, net.n_pairs
    f = _augmented_rhs(net)
    y0 = np.concatenate([s0.rho, [s0.theta], np.zeros(R)])
    if method == "rk45":
        from scipy.integrate import solve_ivp

        n_out = n_out or 1000
        t_eval = np.linspace(0.0, T, n_out + 1)
        sol = solve_ivp(lambda t, y: f(y), (0.0, T), y0, method="RK45", t_eval=t_eval, rtol=rtol, atol=atol)
        if not sol.success:
            raise StepFailureError(sol.message)
        Y = sol.y.T.copy()
        for i in range(len(Y)):
            _check_and_clamp(Y[i], X, t_eval[i], tol)
        times = sol.t
    elif method == "rk4":
        n_steps = max(1, int(round(T / h))) if h else 10_000
        h = T / n_steps
        n_out = n_out or n_steps
        if n_steps % n_out:
            raise ValueError("n_out must divide the number of steps")
        every = n_steps // n_out
        Y = np.empty((n_out + 1, y0.size))
        Y[0] = y0
        y = y0.copy()
        for i in range(1, n_steps + 1):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = _check_and_clamp(y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), X, i * h, tol)
            if i % every == 0:
                Y[i // every] = y
        times = np.linspace(0.0, T, n_out + 1)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Trajectory(times, Y[:, :X], Y[:, X], Y[:, X + 1:], net.species_names)


def projection_matrix(net: Network) -> np.ndarray:
    """Orthogonal projector onto Ran Gamma."""
    Q = range_basis(net)
    return Q @ Q.T


def steady_state(net: Network, rho0, theta0: float, pi=None) -> State:
    """Anisothermal steady state: the minimiser of the quasipotential on the class.

    Requires isothermal detailed or complex balance (checked) and a
    strictly positive minimal temperature.

    Raises:
        HypothesisError: the network is neither IDB nor ICB, or theta_minus = 0.
        InfeasibleError: the class has empty interior.
        ConvergenceError: Newton did not converge.
    """
    from .balance import check_icb, isothermal_steady_state
    from .errors import HypothesisError
    from .network import temperature_bounds
    from .quasipotential import minimize_free_energy

    rho0 = np.asarray(rho0, dtype=float)
    if pi is None:
        pi = isothermal_steady_state(net, rho0)
    if not check_icb(net, pi)[0]:
        raise HypothesisError("network is neither isothermally detailed nor complex balanced")
    if temperature_bounds(net, rho0, theta0)[0] <= 0:
        raise HypothesisError("minimal attainable temperature is zero")
    rho, theta, _ = minimize_free_energy(net, pi, rho0, theta0)
    return State(rho, theta)


def energy_drift(net: Network, traj: Trajectory) -> float:
    E = traj.energy(net)
    return float(np.abs(E - E[0]).max())


# -- CSV --------------------------------------------------------------------

def trajectory_header(net: Network, with_flux: bool) -> list[str]:
    cols = ["t", *net.species_names, "theta"]
    if with_flux:
        cols += [f"w_{r}" for r in range(net.n_pairs)]
    return cols


def trajectory_to_csv(net: Network, traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    with_flux = traj.fluxes is not None
    w.writerow(trajectory_header(net, with_flux))
    for i in range(len(traj)):
        row = [traj.times[i], *traj.rho[i], traj.theta[i]]
        if with_flux:
            row += list(traj.fluxes[i])
        w.writerow(["%.12g" % v for v in row])
    return buf.getvalue()


def trajectory_from_csv(net: Network, text: str) -> Trajectory:
    """Parse a trajectory CSV; a ``w_*`` block is optional."""
    rows = list(csv.reader(io.StringIO(text)))
    header, data = rows[0], np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    names = list(net.species_names)
    if header[0] != "t" or header[1:1 + len(names)] != names or header[1 + len(names)] != "theta":
        raise ValueError(f"unexpected trajectory header {header}")
    X = len(names)
    fluxes = data[:, X + 2:] if len(header) > X + 2 else None
    return Trajectory(data[:, 0], data[:, 1:X + 1], data[:, X + 1], fluxes, net.species_names)
