"""Boundary escape: can a rate that vanishes at the boundary be left at finite cost?

A boundary point ``rho_bd`` can be escaped along the inward direction
``g`` iff ``-int_0^tau log k_r(rho_bd + s g) ds -> 0`` as ``tau -> 0``.
Mass-action zeros give logarithmic singularities (integrable, escapable);
an Arrhenius zero at zero temperature gives a ``1/s`` singularity
(non-integrable, trapped: the "cold death").
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import InconclusiveError, UnboundedLPError
from .kinetics import log_rate_energy_closed
from .network import Network, is_bounded, temperature_bounds

DEFAULT_TAU_GRID = tuple(float(t) for t in np.geomspace(1e-1, 1e-8, 8))
R2_THRESHOLD = 0.99
_X_MAX = 80.0


@dataclass(frozen=True)
class BoundaryQuery:
    boundary_point: np.ndarray
    direction: np.ndarray
    reaction: int
    tau_grid: tuple[float, ...] = DEFAULT_TAU_GRID

    def __post_init__(self):
        object.__setattr__(self, "boundary_point", np.asarray(self.boundary_point, dtype=float))
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float))
        object.__setattr__(self, "tau_grid", tuple(float(t) for t in self.tau_grid))
        if not np.any(self.direction != 0):
            raise ValueError("direction must be non-zero")
        if any(t <= 0 for t in self.tau_grid):
            raise ValueError("tau grid must be positive")


def query_from_dict(net: Network, doc: dict) -> tuple[BoundaryQuery, float | None]:
    """Parse a query document; vectors may be lists or ``{species: value}`` maps.

    Returns the query and the optional ``E0`` entry.
    """
    def vec(v):
        if isinstance(v, dict):
            out = np.zeros(net.n_species)
            for k, x in v.items():
                out[net.index(k)] = float(x)
            return out
        return np.asarray(v, dtype=float)

    grid = doc.get("tau_grid", DEFAULT_TAU_GRID)
    q = BoundaryQuery(vec(doc["boundary_point"]), vec(doc["direction"]), int(doc["reaction"]), grid)
    return q, (float(doc["E0"]) if "E0" in doc else None)


def _integrand(net: Network, E0: float, q: BoundaryQuery, tau: float):
    """Integrand after substituting ``s = tau e^{-x}``: ``-log k(rho_bd + s g) * s``."""
    def f(x):
        s = tau * math.exp(-x)
        lk = log_rate_energy_closed(net, q.boundary_point + s * q.direction, E0, q.reaction)
        return -lk * s

    return f


def escape_integral(net: Network, E0: float, q: BoundaryQuery, tau: float) -> float:
    """``-int_0^tau log k_r(rho_bd + s g) ds``; returns ``+-inf`` when it diverges.

    Divergence is detected when the substituted integrand does not decay
    along the substitution variable (a non-integrable singularity at 0).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    f = _integrand(net, E0, q, tau)
    head = max(abs(f(x)) for x in (0.0, 1.0, 2.0))
    tail = [f(x) for x in (40.0, 60.0, _X_MAX)]
    if any(math.isinf(v) for v in tail):
        return math.copysign(math.inf, tail[-1])
    if abs(tail[-1]) > 1e-12 * max(head, 1e-300) and abs(tail[-1]) >= 0.5 * abs(tail[0]):
        return math.copysign(math.inf, tail[-1])
    val, _ = quad(f, 0.0, _X_MAX, limit=400, epsabs=1e-15, epsrel=1e-12)
    return float(val)


@dataclass
class BoundaryVerdict:
    verdict: str
    taus: np.ndarray
    values: np.ndarray
    r2: dict = field(default_factory=dict)

    def to_json(self) -> str:
        fmt = lambda x: "inf" if math.isinf(x) else ("-inf" if x == -math.inf else float("%.12g" % x))
        return json.dumps({"verdict": self.verdict, "r2": {k: fmt(v) for k, v in self.r2.items()}},
                          sort_keys=True)

    def table_csv(self) -> str:
        rows = ["tau,value"]
        for t, v in zip(self.taus, self.values):
            rows.append("%.12g,%s" % (t, "inf" if v == math.inf else ("-inf" if v == -math.inf else "%.12g" % v)))
        return "\n".join(rows) + "\n"


def _relative_r2(basis: np.ndarray, v: np.ndarray) -> float:
    """Goodness of a least-squares fit measured on relative residuals."""
    W = basis / np.abs(v)[:, None]
    y = np.sign(v)
    coef, *_ = np.linalg.lstsq(W, y, rcond=None)
    resid = y - W @ coef
    return float(1.0 - np.mean(resid ** 2))


def classify_boundary(net: Network, E0: float, q: BoundaryQuery) -> BoundaryVerdict:
    """Decide ``escapable`` vs ``trapped`` from the escape integral on the tau grid.

    Infinite values mean trapped. Otherwise the values are fitted against
    vanishing templates ``span{tau, tau |log tau|}`` and non-vanishing
    templates ``span{1, |log tau|, 1/tau}``; the better fit with relative
    ``R^2 >= 0.99`` decides.

    Raises:
        InconclusiveError: neither template family fits well enough.
    """
    taus = np.array(sorted(q.tau_grid, reverse=True))
    vals = np.array([escape_integral(net, E0, q, t) for t in taus])
    if np.any(np.isinf(vals)):
        return BoundaryVerdict("trapped", taus, vals, {})
    if np.all(np.abs(vals) <= 1e-300):
        return BoundaryVerdict("escapable", taus, vals, {"vanishing": 1.0, "persistent": 0.0})
    nz = np.abs(vals) > 1e-300
    t, v = taus[nz], vals[nz]
    L = np.abs(np.log(t))
    r2_esc = _relative_r2(np.column_stack([t, t * L]), v)
    r2_trap = _relative_r2(np.column_stack([np.ones_like(t), L, 1.0 / t]), v)
    r2 = {"vanishing": r2_esc, "persistent": r2_trap}
    if r2_esc >= R2_THRESHOLD and r2_esc >= r2_trap:
        return BoundaryVerdict("escapable", taus, vals, r2)
    if r2_trap >= R2_THRESHOLD and r2_trap > r2_esc:
        return BoundaryVerdict("trapped", taus, vals, r2)
    raise InconclusiveError(f"escape trend ambiguous (R2 vanishing={r2_esc:.4f}, persistent={r2_trap:.4f})")


@dataclass(frozen=True)
class HypothesisReport:
    bounded: bool
    theta_minus: float | None
    theta_plus: float | None

    @property
    def satisfied(self) -> bool:
        return self.bounded and self.theta_minus is not None and self.theta_minus > 0

    def as_dict(self) -> dict:
        return {"bounded": self.bounded, "theta_minus": self.theta_minus, "theta_plus": self.theta_plus,
                "satisfied": self.satisfied}


def hypothesis_check(net: Network, rho0, theta0: float) -> HypothesisReport:
    """Check the large-deviation hypotheses: bounded attainable set and ``theta_minus > 0``."""
    if not is_bounded(net, rho0, theta0):
        return HypothesisReport(False, None, None)
    try:
        lo, hi = temperature_bounds(net, rho0, theta0)
    except UnboundedLPError:
        return HypothesisReport(False, None, None)
    return HypothesisReport(True, lo, hi)
