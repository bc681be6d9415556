"""Anisothermal reversible reaction networks.

A network couples species concentrations to the solute temperature
through energy conservation: every species carries a chemical energy
level, and a reaction releases (or absorbs) the energy difference between
its complexes as heat into a solute of fixed heat capacity.

Reactions are stored as forward/backward pairs. Wherever a flat list of
reaction *directions* is needed, direction ``d < R`` is the forward
reaction of pair ``d`` and direction ``d >= R`` the backward reaction of
pair ``d - R``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    InfeasibleError,
    NegativeTemperatureError,
    NetworkSyntaxError,
    NetworkValidationError,
    UnboundedLPError,
)
from .simplex import linprog_max

MEMBERSHIP_TOL = 1e-9
_TOP_KEYS = ("species", "reactions", "heat_capacity", "arrhenius_exponent", "boltzmann_constant", "initial_state")
_REACTION_KEYS = ("reactants", "products", "kappa_fw", "kappa_bw", "transition_energy")


class TransitionEnergyWarning(UserWarning):
    """Transition state sits below one of the complexes it connects."""


@dataclass(frozen=True)
class Species:
    name: str
    energy: float


@dataclass(frozen=True)
class Complex:
    """Stoichiometric coefficients; absent species count as zero."""

    counts: tuple[tuple[str, int], ...] = ()

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, int]) -> "Complex":
        return cls(tuple((str(k), int(v)) for k, v in mapping.items()))

    def as_dict(self) -> dict[str, int]:
        return dict(self.counts)

    def vector(self, names: Sequence[str]) -> np.ndarray:
        d = self.as_dict()
        return np.array([d.get(n, 0) for n in names], dtype=np.int64)


@dataclass(frozen=True)
class ReactionPair:
    forward_complex: Complex
    backward_complex: Complex
    kappa_fw: float
    kappa_bw: float
    transition_energy: float

    @property
    def reversible(self) -> bool:
        return self.kappa_bw > 0


@dataclass
class State:
    rho: np.ndarray
    theta: float

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.theta = float(self.theta)


@dataclass(frozen=True)
class InitialState:
    """Optional initial condition carried by a network document."""

    rho: tuple[float, ...]
    theta: float

    def to_state(self) -> State:
        return State(np.array(self.rho), self.theta)


@dataclass(frozen=True)
class Network:
    species: tuple[Species, ...]
    reactions: tuple[ReactionPair, ...]
    heat_capacity: float
    arrhenius_exponent: float
    boltzmann_constant: float = 1.0
    initial_state: InitialState | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        _validate(self)

    # -- sizes and names -------------------------------------------------
    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_pairs(self) -> int:
        return len(self.reactions)

    @cached_property
    def species_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.species)

    # -- cached numeric views (read-only) -------------------------------
    @cached_property
    def energies(self) -> np.ndarray:
        return _ro(np.array([s.energy for s in self.species], dtype=float))

    @cached_property
    def alpha_fw(self) -> np.ndarray:
        """Reactant complexes of forward reactions, shape (R, X)."""
        return _ro(np.array([r.forward_complex.vector(self.species_names) for r in self.reactions],
                            dtype=np.int64).reshape(self.n_pairs, self.n_species))

    @cached_property
    def alpha_bw(self) -> np.ndarray:
        return _ro(np.array([r.backward_complex.vector(self.species_names) for r in self.reactions],
                            dtype=np.int64).reshape(self.n_pairs, self.n_species))

    @cached_property
    def gamma(self) -> np.ndarray:
        """Stoichiometric matrix, shape (X, R)."""
        return _ro((self.alpha_bw - self.alpha_fw).T.copy())

    @cached_property
    def kappa_fw(self) -> np.ndarray:
        return _ro(np.array([r.kappa_fw for r in self.reactions], dtype=float))

    @cached_property
    def kappa_bw(self) -> np.ndarray:
        return _ro(np.array([r.kappa_bw for r in self.reactions], dtype=float))

    @cached_property
    def transition_energy(self) -> np.ndarray:
        return _ro(np.array([r.transition_energy for r in self.reactions], dtype=float))

    # all 2R directions
    @cached_property
    def alpha_dir(self) -> np.ndarray:
        return _ro(np.vstack([self.alpha_fw, self.alpha_bw]))

    @cached_property
    def gamma_dir(self) -> np.ndarray:
        """Per-direction stoichiometric change, shape (2R, X)."""
        return _ro(np.vstack([self.gamma.T, -self.gamma.T]))

    @cached_property
    def kappa_dir(self) -> np.ndarray:
        return _ro(np.concatenate([self.kappa_fw, self.kappa_bw]))

    @cached_property
    def barrier_dir(self) -> np.ndarray:
        """Activation energy ``a_r - e.alpha^r`` of every direction."""
        a = np.concatenate([self.transition_energy, self.transition_energy])
        return _ro(a - self.alpha_dir @ self.energies)

    @property
    def is_reversible(self) -> bool:
        return all(r.reversible for r in self.reactions)

    @property
    def has_constant_transition_energy(self) -> bool:
        a = self.transition_energy
        return a.size == 0 or float(np.ptp(a)) <= 1e-12 * max(1.0, float(np.abs(a).max()))

    def index(self, name: str) -> int:
        return self.species_names.index(name)


def _ro(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _validate(net: Network) -> None:
    names = [s.name for s in net.species]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise NetworkValidationError(f"duplicate species: {', '.join(dup)}")
    for s in net.species:
        if not s.name:
            raise NetworkValidationError("species name must be non-empty")
        if not np.isfinite(s.energy) or s.energy < 0:
            raise NetworkValidationError(f"species energy must be finite and >= 0: {s.name}")
    if not (np.isfinite(net.heat_capacity) and net.heat_capacity > 0):
        raise NetworkValidationError("heat_capacity must be > 0")
    if not (-1.0 < net.arrhenius_exponent <= 1.0):
        raise NetworkValidationError("arrhenius_exponent out of range (-1, 1]")
    if not (np.isfinite(net.boltzmann_constant) and net.boltzmann_constant > 0):
        raise NetworkValidationError("boltzmann_constant must be > 0")
    known = set(names)
    for i, r in enumerate(net.reactions):
        for cpx in (r.forward_complex, r.backward_complex):
            for name, count in cpx.counts:
                if name not in known:
                    raise NetworkValidationError(f"reaction {i}: undeclared species {name!r}")
                if count < 0:
                    raise NetworkValidationError(f"reaction {i}: negative stoichiometric coefficient")
        if not (np.isfinite(r.kappa_fw) and r.kappa_fw > 0):
            raise NetworkValidationError(f"reaction {i}: kappa_fw must be > 0")
        if not (np.isfinite(r.kappa_bw) and r.kappa_bw >= 0):
            raise NetworkValidationError(f"reaction {i}: kappa_bw must be >= 0")
        if not np.isfinite(r.transition_energy):
            raise NetworkValidationError(f"reaction {i}: transition_energy must be finite")
    if net.initial_state is not None:
        ini = net.initial_state
        if len(ini.rho) != len(names):
            raise NetworkValidationError("initial_state.rho has wrong length")
        if min(ini.rho, default=0.0) < 0 or ini.theta < 0:
            raise NetworkValidationError("initial_state must be non-negative")
    e = {s.name: s.energy for s in net.species}
    for i, r in enumerate(net.reactions):
        top = max(sum(e[n] * c for n, c in cpx.counts) for cpx in (r.forward_complex, r.backward_complex))
        if r.transition_energy < top:
            warnings.warn(
                f"reaction {i}: transition energy {r.transition_energy} below complex energy {top}",
                TransitionEnergyWarning,
                stacklevel=3,
            )


# ---------------------------------------------------------------------------
# document format
# ---------------------------------------------------------------------------

def _require(obj, key, kind, where):
    if key not in obj:
        raise NetworkSyntaxError(f"{where}: missing key {key!r}")
    val = obj[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise NetworkSyntaxError(f"{where}.{key}: expected a number")
        return float(val)
    if not isinstance(val, kind):
        raise NetworkSyntaxError(f"{where}.{key}: expected {kind.__name__}")
    return val


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise NetworkSyntaxError(f"{where}: expected an object")
    unknown = [k for k in obj if k not in allowed]
    if unknown:
        raise NetworkSyntaxError(f"{where}: unknown key(s) {', '.join(map(repr, unknown))}")


def _complex(obj, where) -> Complex:
    if not isinstance(obj, dict):
        raise NetworkSyntaxError(f"{where}: expected an object mapping species to counts")
    for k, v in obj.items():
        if isinstance(v, bool) or not isinstance(v, int):
            raise NetworkSyntaxError(f"{where}.{k}: stoichiometric coefficient must be an integer")
    return Complex.from_mapping(obj)


def network_from_dict(doc: Mapping) -> Network:
    _check_keys(doc, _TOP_KEYS, "network")
    species_doc = _require(doc, "species", list, "network")
    species = []
    for i, s in enumerate(species_doc):
        _check_keys(s, ("name", "energy"), f"species[{i}]")
        species.append(Species(_require(s, "name", str, f"species[{i}]"), _require(s, "energy", float, f"species[{i}]")))
    reactions = []
    for i, r in enumerate(_require(doc, "reactions", list, "network")):
        where = f"reactions[{i}]"
        _check_keys(r, _REACTION_KEYS, where)
        reactions.append(
            ReactionPair(
                forward_complex=_complex(_require(r, "reactants", dict, where), where + ".reactants"),
                backward_complex=_complex(_require(r, "products", dict, where), where + ".products"),
                kappa_fw=_require(r, "kappa_fw", float, where),
                kappa_bw=_require(r, "kappa_bw", float, where),
                transition_energy=_require(r, "transition_energy", float, where),
            )
        )
    initial = None
    if "initial_state" in doc:
        ini = doc["initial_state"]
        _check_keys(ini, ("rho", "theta"), "initial_state")
        rho_map = _require(ini, "rho", dict, "initial_state")
        names = [s.name for s in species]
        unknown = [k for k in rho_map if k not in names]
        if unknown:
            raise NetworkValidationError(f"initial_state: undeclared species {unknown[0]!r}")
        for k, v in rho_map.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise NetworkSyntaxError(f"initial_state.rho.{k}: expected a number")
        initial = InitialState(tuple(float(rho_map.get(n, 0.0)) for n in names), _require(ini, "theta", float, "initial_state"))
    kb = doc.get("boltzmann_constant", 1.0)
    if isinstance(kb, bool) or not isinstance(kb, (int, float)):
        raise NetworkSyntaxError("network.boltzmann_constant: expected a number")
    return Network(
        species=tuple(species),
        reactions=tuple(reactions),
        heat_capacity=_require(doc, "heat_capacity", float, "network"),
        arrhenius_exponent=_require(doc, "arrhenius_exponent", float, "network"),
        boltzmann_constant=float(kb),
        initial_state=initial,
    )


def parse_network(text: str) -> Network:
    """Parse and validate a JSON network document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    return network_from_dict(doc)


def load_network(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def network_to_dict(net: Network) -> dict:
    doc = {
        "species": [{"name": s.name, "energy": s.energy} for s in net.species],
        "reactions": [
            {
                "reactants": r.forward_complex.as_dict(),
                "products": r.backward_complex.as_dict(),
                "kappa_fw": r.kappa_fw,
                "kappa_bw": r.kappa_bw,
                "transition_energy": r.transition_energy,
            }
            for r in net.reactions
        ],
        "heat_capacity": net.heat_capacity,
        "arrhenius_exponent": net.arrhenius_exponent,
        "boltzmann_constant": net.boltzmann_constant,
    }
    if net.initial_state is not None:
        doc["initial_state"] = {
            "rho": dict(zip(net.species_names, net.initial_state.rho)),
            "theta": net.initial_state.theta,
        }
    return doc


def serialize_network(net: Network) -> str:
    return json.dumps(network_to_dict(net), indent=2) + "\n"


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def stoichiometric_matrix(net: Network) -> np.ndarray:
    """Columns are ``products - reactants`` of each forward reaction."""
    return net.gamma


def total_energy(net: Network, s: State) -> float:
    return float(net.energies @ s.rho + net.heat_capacity * s.theta)


def temperature_from_energy(net: Network, rho, E0: float) -> float:
    theta = (E0 - float(net.energies @ np.asarray(rho, dtype=float))) / net.heat_capacity
    if theta < 0:
        # tolerate rounding at the zero-temperature face
        if theta > -1e-12 * max(1.0, abs(E0)) / net.heat_capacity:
            return 0.0
        raise NegativeTemperatureError(f"energy budget {E0} below chemical energy; theta = {theta}")
    return theta


def range_basis(net: Network, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of Ran Gamma, shape (X, rank)."""
    G = np.asarray(net.gamma, dtype=float)
    if G.size == 0:
        return np.zeros((net.n_species, 0))
    U, s, _ = np.linalg.svd(G, full_matrices=True)
    rank = int((s > tol * max(1.0, s.max(initial=0.0))).sum())
    return U[:, :rank]


def complement_basis(net: Network, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of Ran Gamma (conservation laws)."""
    G = np.asarray(net.gamma, dtype=float)
    if G.size == 0:
        return np.eye(net.n_species)
    U, s, _ = np.linalg.svd(G, full_matrices=True)
    rank = int((s > tol * max(1.0, s.max(initial=0.0))).sum())
    return U[:, rank:]


def attainable_set_membership(net: Network, rho0, theta0: float, rho, tol: float = MEMBERSHIP_TOL) -> bool:
    rho0 = np.asarray(rho0, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < -tol):
        return False
    Q = range_basis(net)
    d = rho - rho0
    if np.linalg.norm(d - Q @ (Q.T @ d)) > tol:
        return False
    E0 = total_energy(net, State(rho0, theta0))
    return bool(E0 - net.energies @ rho >= -tol * net.heat_capacity)


def _class_constraints(net: Network, rho0, theta0):
    """Inequalities ``A z <= b`` for rho = rho0 + Q z in the attainable set."""
    Q = range_basis(net)
    rho0 = np.asarray(rho0, dtype=float)
    A = np.vstack([-Q, (net.energies @ Q)[None, :] / net.heat_capacity])
    b = np.concatenate([rho0, [theta0]])
    return Q, A, b


def is_bounded(net: Network, rho0, theta0: float) -> bool:
    Q, A, b = _class_constraints(net, rho0, theta0)
    if Q.shape[1] == 0:
        return True
    try:
        linprog_max(np.ones(net.n_species) @ Q, A, b, free=np.ones(Q.shape[1], dtype=bool))
    except UnboundedLPError:
        return False
    return True


def temperature_bounds(net: Network, rho0, theta0: float) -> tuple[float, float]:
    """Minimal and maximal attainable temperatures.

    Raises:
        UnboundedLPError: the attainable set is unbounded.
    """
    rho0 = np.asarray(rho0, dtype=float)
    Q, A, b = _class_constraints(net, rho0, theta0)
    k = Q.shape[1]
    if k == 0:
        return float(theta0), float(theta0)
    free = np.ones(k, dtype=bool)
    linprog_max(np.ones(net.n_species) @ Q, A, b, free=free)
    c = net.energies @ Q
    hi = linprog_max(c, A, b, free=free).value
    lo = -linprog_max(-c, A, b, free=free).value
    E0 = float(net.energies @ rho0 + net.heat_capacity * theta0)
    e_max = float(net.energies @ rho0) + hi
    e_min = float(net.energies @ rho0) + lo
    theta_minus = max((E0 - e_max) / net.heat_capacity, 0.0)
    theta_plus = (E0 - e_min) / net.heat_capacity
    return theta_minus, theta_plus


def interior_point(net: Network, rho0, theta0: float) -> tuple[np.ndarray, float]:
    """A point of the attainable class maximising its smallest margin.

    Returns the point and the margin ``min(min_x rho_x, theta)``.

    Raises:
        InfeasibleError: the class has empty interior.
    """
    Q, A, b = _class_constraints(net, rho0, theta0)
    k = Q.shape[1]
    rho0 = np.asarray(rho0, dtype=float)
    if k == 0:
        return rho0.copy(), float(min(rho0.min(initial=np.inf), theta0))
    A_t = np.hstack([A, np.ones((A.shape[0], 1))])
    free = np.concatenate([np.ones(k, dtype=bool), [False]])
    c = np.zeros(k + 1)
    c[-1] = 1.0
    res = linprog_max(c, A_t, b, free=free)
    margin = res.x[-1]
    if margin <= 1e-12:
        raise InfeasibleError("attainable class has empty interior")
    return rho0 + Q @ res.x[:k], float(margin)


def interior_grid(net: Network, rho0, theta0: float, n: int = 50, margin: float = 0.05) -> np.ndarray:
    """Tensor grid over the attainable class shrunk by ``margin``.

    ``n`` points per free dimension are laid out on the bounding box of
    ``{rho >= margin, theta >= margin}`` (in orthonormal class
    coordinates); points outside the shrunk polytope are dropped. In one
    free dimension this yields exactly ``n`` points.
    """
    Q, A, b = _class_constraints(net, rho0, theta0)
    rho0 = np.asarray(rho0, dtype=float)
    k = Q.shape[1]
    if k == 0:
        return rho0[None, :].copy()
    b_in = b - margin
    free = np.ones(k, dtype=bool)
    lo, hi = np.empty(k), np.empty(k)
    for i in range(k):
        e = np.zeros(k)
        e[i] = 1.0
        try:
            hi[i] = linprog_max(e, A, b_in, free=free).value
            lo[i] = -linprog_max(-e, A, b_in, free=free).value
        except InfeasibleError:
            raise InfeasibleError(f"no interior points with margin {margin}") from None
    axes = [np.linspace(lo[i], hi[i], n) for i in range(k)]
    Z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
    keep = np.all(Z @ A.T <= b_in + 1e-12, axis=1)
    return rho0 + Z[keep] @ Q.T


def random_interior(net: Network, rho0, theta0: float, size: int, rng: np.random.Generator,
                    margin: float = 0.05) -> np.ndarray:
    """Uniform samples from the shrunk attainable class by rejection."""
    Q, A, b = _class_constraints(net, rho0, theta0)
    rho0 = np.asarray(rho0, dtype=float)
    k = Q.shape[1]
    if k == 0:
        return np.repeat(rho0[None, :], size, axis=0)
    b_in = b - margin
    free = np.ones(k, dtype=bool)
    lo, hi = np.empty(k), np.empty(k)
    for i in range(k):
        e = np.zeros(k)
        e[i] = 1.0
        hi[i] = linprog_max(e, A, b_in, free=free).value
        lo[i] = -linprog_max(-e, A, b_in, free=free).value
    out = []
    while len(out) < size:
        Z = rng.uniform(lo, hi, size=(4 * size, k))
        Z = Z[np.all(Z @ A.T <= b_in, axis=1)]
        out.extend(Z[: size - len(out)])
    return rho0 + np.asarray(out) @ Q.T
