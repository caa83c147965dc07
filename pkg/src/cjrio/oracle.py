"""Independent ground truth for the remote-operation task.

Everything here deliberately bypasses the protocol engine: the target state
comes from plain 2x2 matrix products, and corrections are found by exhaustive
search over the four Pauli powers against a factorization of the state.  The
protocol's frame-derived corrections are validated against this module, never
the other way around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hilbert import A, HybridState, PhotonId, PHASE_TOL, VERTICAL
from .optics import (ALL_PAULI_POWERS, PauliPower, SU2Operator,
                     apply_pauli_polar, apply_pauli_spatial)


class CorrectionSearchError(ValueError):
    """Exhaustive Pauli search found no (or no unique) working correction."""


@dataclass(frozen=True)
class TargetState:
    """Amplitudes on Alice's two paths with fixed V polarization."""

    a0: complex
    a1: complex

    def __post_init__(self) -> None:
        if abs(abs(self.a0) ** 2 + abs(self.a1) ** 2 - 1.0) > 1e-9:
            raise ValueError("target amplitudes are not normalized")


def direct_apply(
    unitaries: Sequence[SU2Operator], alpha: complex, beta: complex
) -> TargetState:
    """Left-to-right matrix product of all party operators applied to the
    input pair: U1 . U2 . ... . UM (alpha, beta)^T."""
    if not unitaries:
        raise ValueError("at least one operator is required")
    vec = np.array([alpha, beta], dtype=complex)
    for op in reversed(unitaries):
        vec = op.matrix @ vec
    return TargetState(complex(vec[0]), complex(vec[1]))


def target_fidelity(final: HybridState, target: TargetState) -> float:
    """|<target|final>| with the target embedded on photon A's path qubit.

    The final state must have photon A as its only live photon, V polarized.
    """
    for photon, alive in zip(final.photons, final.alive):
        if alive and photon != A:
            raise ValueError(f"protocol incomplete: photon {photon} still live")
    if not final.is_alive(A):
        raise ValueError("photon A must be live in the final state")
    if final.definite_bit(A, "polar") != VERTICAL:
        raise ValueError("final state must be V polarized on photon A")
    i = final.index_of(A)
    c = [0j, 0j]
    for ket, amp in final.terms.items():
        c[ket.spatial[i]] += amp
    return abs(target.a0.conjugate() * c[0] + target.a1.conjugate() * c[1])


def assert_equiv(final: HybridState, target: TargetState, tol: float = PHASE_TOL) -> bool:
    """Global-phase-insensitive equality of the final state and the target."""
    return target_fidelity(final, target) >= 1.0 - tol


def extract_qubit(
    state: HybridState, photon: PhotonId, dof: str, tol: float = 1e-9
) -> tuple[complex, complex]:
    """Factor out the photon's qubit on one DOF.

    Requires the state to split as (c0|0> + c1|1>) on that bit tensor an
    arbitrary remainder; returns the normalized (c0, c1).  Raises ValueError
    when the bit is entangled with the rest.
    """
    i = state.require_alive(photon)
    rests: tuple[dict, dict] = ({}, {})
    for ket, amp in state.terms.items():
        bit = ket.spatial[i] if dof == "spatial" else ket.polar[i]
        rest = ket.with_spatial(i, 0) if dof == "spatial" else ket.with_polar(i, 0)
        rests[bit][rest] = amp
    v0, v1 = rests
    if not v1:
        return (1.0 + 0j, 0j)
    if not v0:
        return (0j, 1.0 + 0j)
    if set(v0) != set(v1):
        raise ValueError(f"photon {photon} {dof} bit is entangled with the rest")
    anchor = max(v0, key=lambda k: abs(v0[k]))
    lam = v1[anchor] / v0[anchor]
    for k, a in v0.items():
        if abs(v1[k] - lam * a) > tol:
            raise ValueError(f"photon {photon} {dof} bit is entangled with the rest")
    scale = 1.0 / math.sqrt(1.0 + abs(lam) ** 2)
    return (scale + 0j, lam * scale)


def brute_force_correction(
    state: HybridState,
    photon: PhotonId,
    dof: str,
    want: tuple[complex, complex],
    tol: float = PHASE_TOL,
) -> PauliPower:
    """Search the four Pauli powers for the unique one that brings the
    photon's qubit to the wanted amplitude pair (up to global phase)."""
    w0, w1 = complex(want[0]), complex(want[1])
    wnorm = math.sqrt(abs(w0) ** 2 + abs(w1) ** 2)
    w0, w1 = w0 / wnorm, w1 / wnorm
    applier = apply_pauli_spatial if dof == "spatial" else apply_pauli_polar
    matches = []
    for power in ALL_PAULI_POWERS:
        candidate = applier(state, photon, power)
        try:
            c0, c1 = extract_qubit(candidate, photon, dof)
        except ValueError:
            continue
        if abs(w0.conjugate() * c0 + w1.conjugate() * c1) >= 1.0 - tol:
            matches.append(power)
    if len(matches) != 1:
        raise CorrectionSearchError(
            f"expected exactly one working correction on {photon} {dof}, "
            f"found {len(matches)}: {[str(p) for p in matches]}"
        )
    return matches[0]
