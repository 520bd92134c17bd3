"""TSP metaheuristics: nearest neighbor, ant colony optimization and a
belief-weighted ant colony variant, plus a seeded benchmark harness."""

from .core import (
    InstanceError,
    InvalidTourError,
    OracleRefusedError,
    Tour,
    TourDiagnostics,
    TspInstance,
    brute_force_optimum,
    tour_length,
    validate_tour,
)
from .generate import GenConfig, InstanceCharacteristics, generate_batch, generate_instance, instance_characteristics
from .solvers import AcoParams, SolveResult, nearest_neighbor, solve_ai_aco, solve_aco

__version__ = "0.1.0"
