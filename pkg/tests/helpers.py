"""Shared random-instance helpers for the test suite."""
import numpy as np


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def unit_phases(rng, *shape):
    return np.exp(1j * rng.uniform(-np.pi, np.pi, shape))
