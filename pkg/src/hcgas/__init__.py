"""Exact computation and simulation toolkit for the hierarchical Coulomb gas.

Closed-form ground-state energies and configurations, exact partition-function
evaluation by dynamic programming over the dyadic tree, perfect sampling from
the Gibbs measure, and Monte Carlo experiments for the hyperuniformity
predictions.
"""

from .dyadic import (
    CountTree,
    DyadicCube,
    PointConfiguration,
    hamiltonian,
    hamiltonian_points,
    induce_tree,
    pair_potential,
    perm_distance,
    separation_level,
)
from .groundstate import (
    GroundEnergyTable,
    count_ground_states,
    energy_increment,
    ground_energy,
    ground_state_weight,
    is_ground_state,
    log_z_ground,
    min_partition,
    sample_ground_state,
)
from .numtheory import DigitVector, DimConstant, base_level, digits_base, gamma
from .partition_function import (
    LevelTables,
    LogWeight,
    build_tables,
    log_partition,
    log_partition_ratio,
)
from .sampler import SamplerState, sample_configuration, sample_counts, sample_partition, sample_points

__version__ = "0.1.0"

__all__ = [
    "CountTree",
    "DigitVector",
    "DimConstant",
    "DyadicCube",
    "GroundEnergyTable",
    "LevelTables",
    "LogWeight",
    "PointConfiguration",
    "SamplerState",
    "base_level",
    "build_tables",
    "count_ground_states",
    "digits_base",
    "energy_increment",
    "gamma",
    "ground_energy",
    "ground_state_weight",
    "hamiltonian",
    "hamiltonian_points",
    "induce_tree",
    "is_ground_state",
    "log_partition",
    "log_partition_ratio",
    "log_z_ground",
    "min_partition",
    "pair_potential",
    "perm_distance",
    "sample_configuration",
    "sample_counts",
    "sample_ground_state",
    "sample_partition",
    "sample_points",
    "separation_level",
]
