"""Simulation of a multiplexed Gaussian-conditioned state synthesizer.

Two exact engines are provided: a truncated Fock-basis engine and a
coherent-dyad engine for cat-state inputs. See :mod:`multisynth.protocol`
for the protocol itself and :mod:`multisynth.metrics` for fidelities and scans.
"""
from .coherent import CoherentRank
from .exceptions import ConsistencyError, HeraldUnderflowError, SynthError, TruncationError
from .fock import FockDensity, FockVector
from .metrics import fidelity, nearest_cat, nearest_gkp, nearest_squeezed_cat
from .protocol import ScenarioConfig, iterative_oracle, synthesize
from .states import GKPParams, TargetSpec
from .window import SIGMA0, HomodyneWindow

__version__ = "0.1.0"

__all__ = [
    "CoherentRank", "ConsistencyError", "FockDensity", "FockVector", "GKPParams",
    "HeraldUnderflowError", "HomodyneWindow", "SIGMA0", "ScenarioConfig", "SynthError",
    "TargetSpec", "TruncationError", "fidelity", "iterative_oracle", "nearest_cat",
    "nearest_gkp", "nearest_squeezed_cat", "synthesize",
]
