"""Voter model, coalescing walks and meeting times on directed configuration model graphs."""
from ._backend import BACKEND
from .degseq import DegreeSequence, DegreeStats, build_family, degree_stats, validate
from .graph import Digraph, NonErgodicError, ergodicity, sample_dcm, sample_ergodic
from .theory import TheoryConstants, theory_constants

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DegreeSequence",
    "DegreeStats",
    "Digraph",
    "NonErgodicError",
    "TheoryConstants",
    "build_family",
    "degree_stats",
    "ergodicity",
    "sample_dcm",
    "sample_ergodic",
    "theory_constants",
    "validate",
]
