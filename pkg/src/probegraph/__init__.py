"""Triangle-free probe graphs with forced-small independent sets.

Builds the recursive probe-graph families with their integer weightings,
verifies every claimed property with independent exact oracles, certifies
LP-optimality of the weighting, and realizes the graphs as families of
segments with exact rational coordinates.
"""

from .construction import (
    AlreadyTilde,
    BlowUp,
    LevelTooLarge,
    Structure,
    blow_up,
    build_structure,
    build_tilde,
    probe_count,
    total_weight,
    vertex_count,
)
from .graphs import Graph

__all__ = [
    "AlreadyTilde",
    "BlowUp",
    "Graph",
    "LevelTooLarge",
    "Structure",
    "blow_up",
    "build_structure",
    "build_tilde",
    "probe_count",
    "total_weight",
    "vertex_count",
]

__version__ = "0.1.0"
