"""Isothermal steady state and detailed/complex balance tests."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConvergenceError, IrreversibleNetworkError
from .network import Network, complement_basis, range_basis

DEFAULT_TOL = 1e-9


@dataclass
class BalanceReport:
    pi: np.ndarray
    idb: bool
    icb: bool
    max_idb_residual: float
    max_icb_residual: float
    wegscheider_ok: bool

    def to_json(self) -> str:
        d = asdict(self)
        for k in ("idb", "icb", "wegscheider_ok"):
            d[k] = bool(d[k])
        d["pi"] = [float("%.12g" % x) for x in self.pi]
        for k in ("max_idb_residual", "max_icb_residual"):
            d[k] = float("%.12g" % d[k])
        return json.dumps(d, sort_keys=True)


def _require_reversible(net: Network) -> None:
    if not net.is_reversible:
        raise IrreversibleNetworkError("operation requires kappa_bw > 0 for every reaction")


def isothermal_fluxes(net: Network, pi) -> np.ndarray:
    """Net isothermal fluxes ``kappa_r B_r(pi) - kappa_bw B_bw(pi)`` per pair."""
    pi = np.asarray(pi, dtype=float)
    B_fw = np.prod(pi[None, :] ** net.alpha_fw, axis=1)
    B_bw = np.prod(pi[None, :] ** net.alpha_bw, axis=1)
    return net.kappa_fw * B_fw - net.kappa_bw * B_bw


def wegscheider_check(net: Network, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``log(kappa_fw / kappa_bw)`` lies in the row space of Gamma."""
    _require_reversible(net)
    v = np.log(net.kappa_fw / net.kappa_bw)
    if v.size == 0:
        return True
    G = np.asarray(net.gamma, dtype=float)
    y, *_ = np.linalg.lstsq(G.T, v, rcond=None)
    return bool(np.linalg.norm(G.T @ y - v) <= tol * max(1.0, np.linalg.norm(v)))


def _detailed_balance_state(net: Network, rho0) -> np.ndarray:
    """Solve ``Gamma^T log pi = log(kappa_fw/kappa_bw)`` inside the class of ``rho0``.

    The solution set is ``log pi = u0 + N c`` with ``N`` spanning the
    conservation laws; ``c`` minimises the convex function
    ``sum exp(u0 + N c) - c . N^T rho0``.
    """
    G = np.asarray(net.gamma, dtype=float)
    v = np.log(net.kappa_fw / net.kappa_bw)
    u0 = np.linalg.lstsq(G.T, v, rcond=None)[0] if v.size else np.zeros(net.n_species)
    N = complement_basis(net)
    target = N.T @ np.asarray(rho0, dtype=float)
    c = np.zeros(N.shape[1])
    for _ in range(200):
        pi = np.exp(u0 + N @ c)
        g = N.T @ pi - target
        if np.linalg.norm(g) <= 1e-14 * max(1.0, np.linalg.norm(target)):
            return pi
        H = N.T @ (pi[:, None] * N)
        step = np.linalg.solve(H, -g)
        f = pi.sum() - c @ target
        t = 1.0
        while t > 1e-12:
            cn = c + t * step
            fn = np.exp(u0 + N @ cn).sum() - cn @ target
            if fn <= f + 1e-4 * t * (g @ step) + 1e-15 * abs(f):
                break
            t *= 0.5
        c = cn
    raise ConvergenceError("detailed-balance class projection did not converge")


def _newton_flux_balance(net, rho0, y, Q, N, max_iter, damping):
    rho0 = np.asarray(rho0, dtype=float)
    G = np.asarray(net.gamma, dtype=float)
    a_f, a_b = net.alpha_fw.astype(float), net.alpha_bw.astype(float)

    def F(y):
        pi = np.exp(y)
        j = net.kappa_fw * np.exp(a_f @ y) - net.kappa_bw * np.exp(a_b @ y)
        return np.concatenate([Q.T @ (G @ j), N.T @ (pi - rho0)])

    res = F(y)
    scale = max(1.0, float(np.abs(rho0).max(initial=0.0)))
    for _ in range(max_iter):
        if np.max(np.abs(res)) <= 1e-14 * scale:
            return y, res
        pi = np.exp(y)
        fw = net.kappa_fw * np.exp(a_f @ y)
        bw = net.kappa_bw * np.exp(a_b @ y)
        dj = fw[:, None] * a_f - bw[:, None] * a_b
        J = np.vstack([Q.T @ G @ dj, N.T * pi[None, :]])
        try:
            step = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -res, rcond=None)[0]
        t = 1.0
        norm0 = np.linalg.norm(res)
        while True:
            cand = y + t * step
            with np.errstate(over="ignore", invalid="ignore"):
                r_new = F(cand)
            if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new) < (1 - 1e-4 * t) * norm0:
                break
            t *= damping
            if t < 1e-10:
                # accept the tiny step only if converged to rounding level
                if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new) <= 10 * norm0:
                    break
                raise ConvergenceError("damped Newton stalled")
        y, res = cand, r_new
    if np.max(np.abs(res)) <= 1e-11 * scale:
        return y, res
    raise ConvergenceError(f"isothermal Newton did not converge (residual {np.abs(res).max():.3g})")


def isothermal_steady_state(net: Network, rho0, *, restarts: int = 20, seed: int = 0,
                            max_iter: int = 200, damping: float = 0.5,
                            check_unique: bool = False) -> np.ndarray:
    """Positive steady state of the isothermal equation in the class of ``rho0``.

    Uses the explicit detailed-balance solution when the Wegscheider
    conditions hold, otherwise damped Newton in log-concentrations with
    random restarts. With ``check_unique`` all restarts are run and a
    warning is emitted when they converge to different roots.
    """
    _require_reversible(net)
    rho0 = np.asarray(rho0, dtype=float)
    if net.n_pairs == 0:
        return rho0.copy()
    if wegscheider_check(net) and not check_unique:
        return _detailed_balance_state(net, rho0)
    Q = range_basis(net)
    N = complement_basis(net)
    rng = np.random.default_rng(seed)
    base = np.log(np.where(rho0 > 0, rho0, max(rho0.mean(), 1e-3) * 0.1 + 1e-12))
    roots = []
    last_err = None
    for attempt in range(restarts + 1):
        y0 = base if attempt == 0 else base + rng.normal(scale=1.0, size=base.size)
        try:
            y, _ = _newton_flux_balance(net, rho0, y0, Q, N, max_iter, damping)
        except ConvergenceError as exc:
            last_err = exc
            continue
        roots.append(np.exp(y))
        if not check_unique:
            break
    if not roots:
        raise ConvergenceError(f"no positive steady state found ({last_err})")
    pi = roots[0]
    if check_unique:
        spread = max(float(np.abs(r - pi).max()) for r in roots)
        if spread > 1e-6 * max(1.0, float(pi.max())):
            warnings.warn(f"multiple isothermal steady states suspected (spread {spread:.3g})", RuntimeWarning,
                          stacklevel=2)
    return pi


def check_idb(net: Network, pi, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    _require_reversible(net)
    r = float(np.abs(isothermal_fluxes(net, pi)).max(initial=0.0))
    return bool(r <= tol), r


def complexes(net: Network) -> list[tuple[int, ...]]:
    seen = []
    for row in net.alpha_dir:
        key = tuple(int(v) for v in row)
        if key not in seen:
            seen.append(key)
    return seen


def check_icb(net: Network, pi, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Per-complex inflow/outflow comparison, cross-checked with indicator test functions."""
    _require_reversible(net)
    pi = np.asarray(pi, dtype=float)
    k = net.kappa_dir * np.prod(pi[None, :] ** net.alpha_dir, axis=1)
    R = net.n_pairs
    src = [tuple(int(v) for v in row) for row in net.alpha_dir]
    dst = src[R:] + src[:R]
    worst = 0.0
    for cpx in complexes(net):
        out = sum(k[d] for d in range(2 * R) if src[d] == cpx)
        inn = sum(k[d] for d in range(2 * R) if dst[d] == cpx)
        worst = max(worst, abs(out - inn))
    j = k[:R] - k[R:]
    worst_test = 0.0
    for cpx in complexes(net):
        psi_bw = np.array([1.0 if dst[r] == cpx else 0.0 for r in range(R)])
        psi_fw = np.array([1.0 if src[r] == cpx else 0.0 for r in range(R)])
        worst_test = max(worst_test, abs(float(j @ (psi_bw - psi_fw))))
    if not math.isclose(worst, worst_test, rel_tol=1e-8, abs_tol=1e-12):
        raise AssertionError("complex-balance formulations disagree")
    return bool(worst <= tol), worst


def balance_report(net: Network, rho0, tol: float = DEFAULT_TOL) -> BalanceReport:
    pi = isothermal_steady_state(net, rho0)
    idb, r_idb = check_idb(net, pi, tol)
    icb, r_icb = check_icb(net, pi, tol)
    return BalanceReport(pi, bool(idb), bool(icb), r_idb, r_icb, wegscheider_check(net, tol))
