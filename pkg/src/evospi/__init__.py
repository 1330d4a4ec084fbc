"""Ising machine on simulated single-pixel imaging with evolutionary illumination patterns."""
from ._accel import JIT_ENABLED
from .core import RngStream, WeightImage, as_spins, hamiltonian
from .evolve import GaConfig, RunResult, run
from .problems import (
    MaxCutInstance,
    NumberPartitionInstance,
    brute_force,
    decode_cut,
    decode_partition,
    encode_max_cut,
    encode_number_partition,
)
from .spi import IdealBackend, NoiseModel, NoisyBackend, ideal_intensity, measure_batch, pattern_from_spins, replay_load

__version__ = "0.1.0"
