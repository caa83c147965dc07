"""Sparse amplitude algebra for hybrid path/polarization photonic states.

Every photon carries two qubits worth of structure: a spatial bit (which of
its two paths it occupies) and a polarization bit (0 = H, 1 = V).  A state is
a complex-weighted collection of basis kets over all photons of a run.  The
protocol never populates more than a handful of kets at a time, so terms live
in an associative map keyed by ket rather than a dense vector; that keeps
branch enumeration exact and cheap.

Measured-out photons stay in the registry with their bits frozen (identical
across every term) and their ``alive`` flag cleared, so transcripts keep
stable photon identities for the whole run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

PRUNE_TOL = 1e-14
INPUT_NORM_TOL = 1e-9
PHASE_TOL = 1e-10

HORIZONTAL = 0
VERTICAL = 1

_KINDS = ("X", "A", "B", "C")


@dataclass(frozen=True)
class PhotonId:
    """One photon: the input carrier X, Alice's channel photon A, or an
    indexed joint-party (B) / controller (C) photon."""

    kind: str
    index: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown photon kind {self.kind!r}")
        if self.kind in ("X", "A") and self.index != 0:
            raise ValueError(f"photon {self.kind} carries no index")
        if self.kind in ("B", "C") and self.index < 1:
            raise ValueError(f"photon {self.kind} index must be >= 1")

    def __str__(self) -> str:
        return self.kind if self.index == 0 else f"{self.kind}{self.index}"


X = PhotonId("X")
A = PhotonId("A")


def bob(i: int) -> PhotonId:
    return PhotonId("B", i)


def charlie(j: int) -> PhotonId:
    return PhotonId("C", j)


class BasisKet(NamedTuple):
    """One classical configuration: per-photon path bit and polarization bit,
    in registry order."""

    spatial: tuple[int, ...]
    polar: tuple[int, ...]

    def with_spatial(self, i: int, bit: int) -> "BasisKet":
        s = self.spatial
        return BasisKet(s[:i] + (bit,) + s[i + 1:], self.polar)

    def with_polar(self, i: int, bit: int) -> "BasisKet":
        p = self.polar
        return BasisKet(self.spatial, p[:i] + (bit,) + p[i + 1:])


class PhotonRegister:
    """Immutable photon list shared by every state of one run."""

    __slots__ = ("photons", "_index")

    def __init__(self, photons: Iterable[PhotonId]):
        self.photons = tuple(photons)
        self._index = {p: i for i, p in enumerate(self.photons)}
        if len(self._index) != len(self.photons):
            raise ValueError("duplicate photon in register")

    def index(self, photon: PhotonId) -> int:
        try:
            return self._index[photon]
        except KeyError:
            raise ValueError(f"photon {photon} not in register") from None

    def __len__(self) -> int:
        return len(self.photons)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PhotonRegister) and self.photons == other.photons

    def __hash__(self) -> int:
        return hash(self.photons)

    def __repr__(self) -> str:
        return f"PhotonRegister({', '.join(str(p) for p in self.photons)})"


def registry(m: int, n: int) -> PhotonRegister:
    """Standard registry for a run: X, A, B1..Bm, C1..Cn."""
    photons = [X, A]
    photons += [bob(i) for i in range(1, m + 1)]
    photons += [charlie(j) for j in range(1, n + 1)]
    return PhotonRegister(photons)


class HybridState:
    """Normalized pure state with value semantics.

    ``terms`` maps :class:`BasisKet` to a complex amplitude.  Instances are
    treated as immutable; every operation returns a new state.
    """

    __slots__ = ("register", "alive", "terms")

    def __init__(
        self,
        register: PhotonRegister,
        alive: tuple[bool, ...],
        terms: Mapping[BasisKet, complex],
    ):
        if len(alive) != len(register):
            raise ValueError("alive flags do not match register")
        self.register = register
        self.alive = tuple(alive)
        self.terms = dict(terms)

    # -- registry helpers -------------------------------------------------

    @property
    def photons(self) -> tuple[PhotonId, ...]:
        return self.register.photons

    def index_of(self, photon: PhotonId) -> int:
        return self.register.index(photon)

    def is_alive(self, photon: PhotonId) -> bool:
        return self.alive[self.index_of(photon)]

    def require_alive(self, photon: PhotonId) -> int:
        i = self.index_of(photon)
        if not self.alive[i]:
            raise ValueError(f"photon {photon} has been measured out")
        return i

    def definite_bit(self, photon: PhotonId, dof: str) -> int:
        """The photon's bit on the given DOF, required constant over terms."""
        i = self.index_of(photon)
        vals = {(k.spatial[i] if dof == "spatial" else k.polar[i]) for k in self.terms}
        if len(vals) != 1:
            raise ValueError(f"photon {photon} {dof} bit is in superposition")
        return vals.pop()

    # -- construction helpers ---------------------------------------------

    def replace_terms(self, terms: Mapping[BasisKet, complex]) -> "HybridState":
        s = HybridState.__new__(HybridState)
        s.register = self.register
        s.alive = self.alive
        s.terms = dict(terms)
        return s

    def mark_dead(self, photon: PhotonId) -> "HybridState":
        """Freeze a photon out of the live registry.

        Both of its bits must already be definite; the frozen values stay in
        every ket so later records can still report where it ended up.
        """
        i = self.require_alive(photon)
        self.definite_bit(photon, "spatial")
        self.definite_bit(photon, "polar")
        alive = self.alive[:i] + (False,) + self.alive[i + 1:]
        s = HybridState.__new__(HybridState)
        s.register = self.register
        s.alive = alive
        s.terms = dict(self.terms)
        return s

    # -- numerics ----------------------------------------------------------

    def norm(self) -> float:
        return math.sqrt(sum((a.real * a.real + a.imag * a.imag) for a in self.terms.values()))

    def normalized(self) -> "HybridState":
        nrm = self.norm()
        if nrm < PRUNE_TOL:
            raise ValueError("cannot normalize a null state")
        inv = 1.0 / nrm
        return self.replace_terms({k: a * inv for k, a in self.terms.items()})

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        live = [str(p) for p, al in zip(self.photons, self.alive) if al]
        return f"HybridState({len(self.terms)} terms, live={','.join(live)})"


def prune(terms: Mapping[BasisKet, complex]) -> dict[BasisKet, complex]:
    return {k: a for k, a in terms.items() if abs(a) > PRUNE_TOL}


def build_initial_state(alpha: complex, beta: complex, m: int, n: int) -> HybridState:
    """Input qubit on photon X tensored with the (2+m+n)-photon channel.

    X sits in the path superposition alpha|x0> + beta|x1> with fixed V
    polarization; the channel photons share one GHZ-like branch in their path
    bits and another in their polarization bits.  Eight terms for generic
    amplitudes, always normalized.
    """
    if m < 1:
        raise ValueError("at least one joint party is required (m >= 1)")
    if n < 0:
        raise ValueError("controller count must be >= 0")
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > INPUT_NORM_TOL:
        raise ValueError("input amplitudes are not normalized")
    for w in (alpha, beta):
        w = complex(w)
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            raise ValueError("input amplitudes must be finite")

    reg = registry(m, n)
    n_channel = len(reg) - 1
    terms: dict[BasisKet, complex] = {}
    for xbit, w in ((0, complex(alpha)), (1, complex(beta))):
        for branch in (0, 1):
            for pol in (0, 1):
                ket = BasisKet(
                    (xbit,) + (branch,) * n_channel,
                    (VERTICAL,) + (pol,) * n_channel,
                )
                terms[ket] = w / 2.0
    state = HybridState(reg, (True,) * len(reg), prune(terms))
    return state.normalized()


def overlap(a: HybridState, b: HybridState) -> complex:
    """Inner product <a|b>; conjugate-symmetric by construction."""
    if a.register != b.register or a.alive != b.alive:
        raise ValueError("states live on different photon registries")
    small, big = (a.terms, b.terms) if len(a.terms) <= len(b.terms) else (b.terms, a.terms)
    total = 0j
    if small is a.terms:
        for ket, amp in small.items():
            other = big.get(ket)
            if other is not None:
                total += amp.conjugate() * other
    else:
        for ket, amp in small.items():
            other = big.get(ket)
            if other is not None:
                total += other.conjugate() * amp
    return total


def equal_up_to_global_phase(a: HybridState, b: HybridState, tol: float = PHASE_TOL) -> bool:
    """True iff |<a|b>| >= 1 - tol (states assumed normalized)."""
    return abs(overlap(a, b)) >= 1.0 - tol


def reduced_purity(
    state: HybridState,
    keep: Iterable[PhotonId],
    dof: str = "both",
) -> float:
    """Tr(rho^2) of the subsystem spanned by ``keep``.

    ``dof`` selects which degrees of freedom of the kept photons form the
    subsystem ("both", "spatial" or "polar"); everything else, including the
    other DOF of the kept photons, is traced out.
    """
    keep_set = set(keep)
    if not keep_set:
        raise ValueError("keep set must be non-empty")
    if dof not in ("both", "spatial", "polar"):
        raise ValueError(f"unknown dof selector {dof!r}")
    keep_idx = set()
    for p in keep_set:
        i = state.index_of(p)
        if not state.alive[i]:
            raise ValueError(f"photon {p} is not alive")
        keep_idx.add(i)

    want_spatial = dof in ("both", "spatial")
    want_polar = dof in ("both", "polar")
    n = len(state.register)

    groups: dict[tuple, dict[tuple, complex]] = {}
    for ket, amp in state.terms.items():
        sub = []
        env = []
        for i in range(n):
            if i in keep_idx and want_spatial:
                sub.append(ket.spatial[i])
            else:
                env.append(ket.spatial[i])
            if i in keep_idx and want_polar:
                sub.append(ket.polar[i])
            else:
                env.append(ket.polar[i])
        groups.setdefault(tuple(env), {})[tuple(sub)] = amp

    norm_sq = sum(abs(a) ** 2 for vec in groups.values() for a in vec.values())
    vectors = list(groups.values())
    total = 0.0
    for ve in vectors:
        for vf in vectors:
            ip = 0j
            for sub, amp in ve.items():
                other = vf.get(sub)
                if other is not None:
                    ip += amp * other.conjugate()
            total += ip.real * ip.real + ip.imag * ip.imag
    return total / (norm_sq * norm_sq)


def enumerate_measurement(
    state: HybridState,
    photon: PhotonId,
    dofs: Sequence[str] = ("polar", "spatial"),
) -> list[tuple[tuple[int, ...], float, HybridState]]:
    """Projective measurement of a photon in the computational basis of the
    listed DOFs, returning every outcome with its probability and collapsed
    state (photon marked dead), ordered by outcome bits."""
    i = state.require_alive(photon)
    for d in dofs:
        if d not in ("polar", "spatial"):
            raise ValueError(f"unknown dof {d!r}")

    buckets: dict[tuple[int, ...], dict[BasisKet, complex]] = {}
    for ket, amp in state.terms.items():
        bits = tuple(ket.polar[i] if d == "polar" else ket.spatial[i] for d in dofs)
        buckets.setdefault(bits, {})[ket] = amp

    out = []
    for bits in sorted(buckets):
        terms = buckets[bits]
        p = sum(abs(a) ** 2 for a in terms.values())
        if p <= PRUNE_TOL ** 2:
            continue
        collapsed = state.replace_terms(prune(terms)).normalized().mark_dead(photon)
        out.append((bits, p, collapsed))
    return out
