"""Pytest configuration and fixtures for tests."""

import numpy as np
import pytest

from gridsolve.backend import DirectBackend, use_backend
from gridsolve.transport import launch


@pytest.fixture(autouse=True)
def fresh_backend():
    """Install a fresh direct backend (and flop counter) for each test."""
    with use_backend(DirectBackend()) as backend:
        yield backend


@pytest.fixture
def rng():
    """Seeded generator so every run sees the same operands."""
    return np.random.default_rng(20240611)


@pytest.fixture
def run_ranks():
    """Launch a rank program with a short deadlock watchdog."""

    def run(ranks, program, timeout=20.0):
        return launch(ranks, program, timeout=timeout)

    return run


def well_conditioned(rng, n):
    """Random dense matrix with a dominant diagonal."""
    return rng.random((n, n)) + n * np.eye(n)


def spd(rng, n):
    """Symmetric positive definite ``M.T @ M + n * I``."""
    M = rng.random((n, n))
    S = M.T @ M + n * np.eye(n)
    return (S + S.T) / 2
