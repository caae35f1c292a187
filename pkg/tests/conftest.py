"""Shared generators and assertion helpers for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from reduction_machine.physics import PhysicsParams
from reduction_machine.quantum import DensityMatrix


def random_density(rng: np.random.Generator) -> DensityMatrix:
    """Random valid 2x2 density matrix (Hermitian, PSD, unit trace)."""
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    m = a @ a.conj().T
    m = m / np.trace(m).real
    return DensityMatrix.from_matrix(m)


def random_diagonal_density(rng: np.random.Generator) -> DensityMatrix:
    p1 = rng.random()
    return DensityMatrix.from_weights(1.0 - p1, p1)


def random_params(rng: np.random.Generator, d: int) -> PhysicsParams:
    """Random positive parameter set spanning six decades."""
    def draw() -> float:
        return float(10.0 ** rng.uniform(-3, 3))

    return PhysicsParams(
        e_star=draw(), m_star=draw(), u0=draw(), l_r=draw(), d=d, k_d=draw()
    )


def assert_valid_density(rho: DensityMatrix, tol: float = 1e-12) -> None:
    """Explicit re-check of the three matrix invariants."""
    m = rho.to_matrix()
    assert abs(np.trace(m) - 1.0) <= tol
    assert np.max(np.abs(m - m.conj().T)) <= tol
    eigs = np.linalg.eigvalsh(m)
    assert eigs.min() >= -tol


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)
