"""Shared helpers: random inputs and dense-vector oracles kept independent
of the package's sparse-state code paths."""

from __future__ import annotations

import numpy as np
import pytest

from cjrio import SU2Operator
from cjrio.hilbert import HybridState


def random_su2(rng: np.random.Generator) -> SU2Operator:
    z = rng.standard_normal(4)
    u = complex(z[0], z[1])
    v = complex(z[2], z[3])
    nrm = (abs(u) ** 2 + abs(v) ** 2) ** 0.5
    return SU2Operator(u / nrm, v / nrm)


def random_pair(rng: np.random.Generator) -> tuple[complex, complex]:
    z = rng.standard_normal(4)
    a = complex(z[0], z[1])
    b = complex(z[2], z[3])
    nrm = (abs(a) ** 2 + abs(b) ** 2) ** 0.5
    return a / nrm, b / nrm


def dense_vector(state: HybridState) -> np.ndarray:
    """Flatten a sparse state into the full 4^n-dimensional vector, one
    (spatial, polar) qubit pair per photon, independent numpy path."""
    n = len(state.register)
    vec = np.zeros(4 ** n, dtype=complex)
    for ket, amp in state.terms.items():
        idx = 0
        for i in range(n):
            idx = idx * 4 + ket.spatial[i] * 2 + ket.polar[i]
        vec[idx] += amp
    return vec


def dense_reduced_purity(state: HybridState, keep_indices, dof: str = "both") -> float:
    """Brute-force Tr(rho^2) via the dense density matrix."""
    n = len(state.register)
    vec = dense_vector(state).reshape([2] * (2 * n))
    # axis 2i = photon i spatial, axis 2i+1 = photon i polar
    keep_axes = []
    for i in keep_indices:
        if dof in ("both", "spatial"):
            keep_axes.append(2 * i)
        if dof in ("both", "polar"):
            keep_axes.append(2 * i + 1)
    other = [ax for ax in range(2 * n) if ax not in keep_axes]
    perm = keep_axes + other
    psi = np.transpose(vec, perm).reshape(2 ** len(keep_axes), 2 ** len(other))
    rho = psi @ psi.conj().T
    rho = rho / np.trace(rho)
    return float(np.real(np.trace(rho @ rho)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260808)
