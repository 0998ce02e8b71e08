"""Project-wide random number generation.

Every stochastic component draws from a numpy Generator backed by PCG64
so that identical seeds reproduce identical results bit for bit, across
machines and across runs.  Subsystems that need independent streams from
one master seed derive them with :func:`derive_rng` and a small integer
stream id instead of sharing a generator.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence


def make_rng(seed: int) -> Generator:
    """Return the project-standard generator for a plain integer seed."""
    return Generator(PCG64(seed))


def derive_rng(seed: int, stream: int, index: int = 0) -> Generator:
    """Return an independent generator for (seed, stream, index).

    Distinct (stream, index) pairs under the same seed give statistically
    independent, reproducible streams.
    """
    return Generator(PCG64(SeedSequence([int(seed), int(stream), int(index)])))


def derive_seed(seed: int, stream: int, index: int = 0) -> int:
    """A reproducible integer sub-seed for (seed, stream, index)."""
    return int(derive_rng(seed, stream, index).integers(0, 2**63 - 1))


def positive_uniform(rng: Generator, size: int) -> np.ndarray:
    """Uniform draws from (0, 1), resampling the measure-zero 0 outcomes."""
    u = rng.random(size)
    while np.any(u == 0.0):
        zeros = u == 0.0
        u[zeros] = rng.random(int(zeros.sum()))
    return u
