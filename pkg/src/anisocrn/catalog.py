"""Small reference networks used by the tests, the CLI examples and the docs.

* ``unimolecular``   A <-> B, the exactly solvable case.
* ``triangle``       A -> B -> C -> A with a driven cycle: complex balanced
                     but not detailed balanced.
* ``two_channel``    A <-> B alongside 2A <-> 2B; generically neither
                     detailed nor complex balanced.
* ``cell_division``  A -> 2A, irreversible with unbounded growth.
* ``heating_room``   A -> 0, an exothermic decay started at zero temperature.
"""

from __future__ import annotations

from typing import Sequence

from .network import Complex, InitialState, Network, ReactionPair, Species


def _pair(fw: dict, bw: dict, kf: float, kb: float, a: float) -> ReactionPair:
    return ReactionPair(Complex.from_mapping(fw), Complex.from_mapping(bw), kf, kb, a)


def unimolecular(energies=(2.0, 1.0), transition_energy: float = 3.0, kappa_fw: float = 1.0,
                 kappa_bw: float = 1.0, heat_capacity: float = 1.0, q: float = 0.0,
                 rho0=(0.5, 0.5), theta0: float = 1.0) -> Network:
    return Network(
        species=(Species("A", energies[0]), Species("B", energies[1])),
        reactions=(_pair({"A": 1}, {"B": 1}, kappa_fw, kappa_bw, transition_energy),),
        heat_capacity=heat_capacity,
        arrhenius_exponent=q,
        initial_state=InitialState(tuple(rho0), theta0),
    )


def triangle(transition_energy: float | Sequence[float] = 2.5, kappa_fw=(2.0, 2.0, 2.0),
             kappa_bw=(1.0, 1.0, 1.0), energies=(0.5, 1.0, 1.5), heat_capacity: float = 1.0,
             q: float = 0.0, rho0=(1 / 3, 1 / 3, 1 / 3), theta0: float = 1.0) -> Network:
    """Cycle A -> B -> C -> A; forward rates drive it clockwise."""
    a = [transition_energy] * 3 if isinstance(transition_energy, (int, float)) else list(transition_energy)
    names = ("A", "B", "C")
    reactions = tuple(
        _pair({names[i]: 1}, {names[(i + 1) % 3]: 1}, kappa_fw[i], kappa_bw[i], a[i]) for i in range(3)
    )
    return Network(
        species=tuple(Species(n, e) for n, e in zip(names, energies)),
        reactions=reactions,
        heat_capacity=heat_capacity,
        arrhenius_exponent=q,
        initial_state=InitialState(tuple(rho0), theta0),
    )


def triangle_varying_barrier() -> Network:
    """The driven cycle with reaction-dependent transition energies."""
    return triangle(transition_energy=(2.0, 3.0, 4.0))


def two_channel(kappa=(1.0, 2.0, 1.0, 1.0), energies=(2.0, 1.0), transition_energy=(3.0, 5.0),
                heat_capacity: float = 1.0, q: float = 0.0, rho0=(0.5, 0.5), theta0: float = 1.0) -> Network:
    """A <-> B and 2A <-> 2B; ``kappa = (k1, k1', k2, k2')``.

    Complex balance fails unless ``(k1'/k1)**2 == k2'/k2``.
    """
    k1, k1b, k2, k2b = kappa
    return Network(
        species=(Species("A", energies[0]), Species("B", energies[1])),
        reactions=(
            _pair({"A": 1}, {"B": 1}, k1, k1b, transition_energy[0]),
            _pair({"A": 2}, {"B": 2}, k2, k2b, transition_energy[1]),
        ),
        heat_capacity=heat_capacity,
        arrhenius_exponent=q,
        initial_state=InitialState(tuple(rho0), theta0),
    )


def cell_division(kappa: float = 1.0, transition_energy: float = 0.0) -> Network:
    return Network(
        species=(Species("A", 0.0),),
        reactions=(_pair({"A": 1}, {"A": 2}, kappa, 0.0, transition_energy),),
        heat_capacity=1.0,
        arrhenius_exponent=0.0,
        initial_state=InitialState((0.0,), 1.0),
    )


def heating_room(energy: float = 1.0, barrier: float = 1.0, kappa: float = 1.0,
                 heat_capacity: float = 1.0, q: float = 0.0) -> Network:
    """Exothermic decay A -> 0 with activation barrier ``barrier``, started cold."""
    return Network(
        species=(Species("A", energy),),
        reactions=(_pair({"A": 1}, {}, kappa, 0.0, energy + barrier),),
        heat_capacity=heat_capacity,
        arrhenius_exponent=q,
        initial_state=InitialState((1.0,), 0.0),
    )


CATALOG = {
    "unimolecular": unimolecular,
    "triangle": triangle,
    "triangle_varying_barrier": triangle_varying_barrier,
    "two_channel": two_channel,
    "cell_division": cell_division,
    "heating_room": heating_room,
}
