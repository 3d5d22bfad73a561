"""Gambler's ruin for correlated random walks with and without delays."""
from .chains import (
    GeneralChain,
    SymmetricDelayChain,
    TwoStateChain,
    chain_from_json,
    chain_to_json,
    stationary,
    validate,
)
from .problem import Barriers, RuinSolution

__version__ = "0.1.0"

__all__ = [
    "Barriers",
    "GeneralChain",
    "RuinSolution",
    "SymmetricDelayChain",
    "TwoStateChain",
    "chain_from_json",
    "chain_to_json",
    "stationary",
    "validate",
]
