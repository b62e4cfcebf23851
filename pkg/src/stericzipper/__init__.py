"""Steric-zipper amyloid fibril model building.

Parse a two-sheet template, mutate it to alanine/glycine model sequences,
optimize the inter-sheet contact with a hybrid annealer, stack the 12-chain
lattice and relax it under a Lennard-Jones plus hydrogen-bond energy.
"""

__version__ = "0.1.0"

from .assembly import PipelineConfig, run_pipeline
from .energy import HBParams, LJParams, PairList, detect_hbonds, total_energy
from .geometry import SHEET_PAIR, STACK_DOWN, STACK_UP, RigidTransform
from .optimizer import AnnealConfig, Objective, anneal, discrete_gradient_descent
from .pdb_io import Structure, parse_pdb, read_pdb, write_pdb

__all__ = [
    "AnnealConfig",
    "HBParams",
    "LJParams",
    "Objective",
    "PairList",
    "PipelineConfig",
    "RigidTransform",
    "SHEET_PAIR",
    "STACK_DOWN",
    "STACK_UP",
    "Structure",
    "anneal",
    "detect_hbonds",
    "discrete_gradient_descent",
    "parse_pdb",
    "read_pdb",
    "run_pipeline",
    "total_energy",
    "write_pdb",
]
