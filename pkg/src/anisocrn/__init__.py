"""Anisothermal chemical reaction networks.

Deterministic and stochastic dynamics of reaction networks whose rates
depend on a solute temperature through the Arrhenius law, together with
the quasipotential, large-deviation cost functions and their
Onsager-Machlup / macroscopic-fluctuation-theory decompositions.
"""

from .errors import (
    AnisoError,
    ConvergenceError,
    DomainError,
    HypothesisError,
    InconclusiveError,
    InfeasibleError,
    IrreversibleNetworkError,
    NegativeTemperatureError,
    NetworkSyntaxError,
    NetworkValidationError,
    StepFailureError,
    TopologyError,
    UnboundedLPError,
)
from .network import (
    Complex,
    InitialState,
    Network,
    ReactionPair,
    Species,
    State,
    load_network,
    parse_network,
    serialize_network,
)

__version__ = "0.1.0"

__all__ = [
    "AnisoError",
    "Complex",
    "ConvergenceError",
    "DomainError",
    "HypothesisError",
    "InconclusiveError",
    "InfeasibleError",
    "InitialState",
    "IrreversibleNetworkError",
    "NegativeTemperatureError",
    "Network",
    "NetworkSyntaxError",
    "NetworkValidationError",
    "ReactionPair",
    "Species",
    "State",
    "StepFailureError",
    "TopologyError",
    "UnboundedLPError",
    "load_network",
    "parse_network",
    "serialize_network",
]
