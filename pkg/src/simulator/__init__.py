# Simulator Module - diamond graph sampling, enumeration and population dynamics
from src.simulator.graph import graph_stats
from src.simulator.streams import BLOCK_SIZE, block_generator
from src.simulator.sampler import (
    DEFAULT_BOND_BUDGET, ENUMERATION_CAP, enumerate_small, sample_w_batch, sample_w_exact,
)
from src.simulator.pool import pool_evolve, read_pool_binary, write_pool_binary, write_pool_csv
from src.simulator.statistics import MIN_SAMPLES, batch_means_se, empirical_moments

__all__ = [
    "graph_stats", "BLOCK_SIZE", "block_generator",
    "DEFAULT_BOND_BUDGET", "ENUMERATION_CAP", "enumerate_small", "sample_w_batch", "sample_w_exact",
    "pool_evolve", "read_pool_binary", "write_pool_binary", "write_pool_csv",
    "MIN_SAMPLES", "batch_means_se", "empirical_moments",
]
