"""State machine for controlled-joint remote implementation of operators.

A run walks nine stages over one shared hyperentangled channel: Alice
entangles her carrier photon with the channel and measures it out (bits k,
then m and n), each controller consents by disentangling her photon (s_j),
all but the last joint party measure out so the secret amplitudes concentrate
on the last one (l_i), the parties apply their operators while shuttling the
amplitudes down the chain two at a time (r_i, g_i), everything moves into the
polarization degree of freedom through local measurements (p, q, w_i), the
controllers release it (v_j), and Alice converts her polarization qubit back
into a path qubit.

Every measurement node exposes its full outcome fan-out, so a run can either
sample one branch or enumerate all of them with exact probabilities.  The
classical Pauli fixes between measurements are never hard-coded per branch:
they are derived once, symbolically, as XOR-linear functions of the broadcast
bits (see :class:`PauliFrame`) and can be cross-checked on every branch
against exhaustive Pauli search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from . import oracle
from .hilbert import (A, HybridState, PhotonId, X, bob, build_initial_state,
                      charlie, enumerate_measurement)
from .kerr import enumerate_homodyne, fresh_probe, kerr
from .optics import (PauliPower, SU2Operator, apply_bbs, apply_hwp,
                     apply_pauli_polar, apply_pauli_spatial, apply_pbs,
                     apply_qwp, apply_su2_spatial)

BLOCKED = "blocked"
FIDELITY_THRESHOLD = 1.0 - 1e-10

VARIANTS = ("cjrio", "jrio", "crio", "rio")


class FrameInconsistencyError(RuntimeError):
    """A frame-derived correction disagreed with exhaustive search."""

    def __init__(self, node: str, bits: Mapping[str, int], derived: PauliPower, found: PauliPower):
        super().__init__(
            f"frame correction {derived} at {node} disagrees with searched "
            f"{found} on branch {dict(bits)}"
        )
        self.node = node
        self.bits = dict(bits)
        self.derived = derived
        self.found = found


# ---------------------------------------------------------------------------
# XOR-linear expressions and the Pauli frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class XorExpr:
    """Affine GF(2) form over named outcome bits: const XOR (sym1 ^ sym2 ...)."""

    const: int = 0
    syms: frozenset = frozenset()

    @staticmethod
    def bit(name: str) -> "XorExpr":
        return XorExpr(0, frozenset((name,)))

    @staticmethod
    def of(value: int) -> "XorExpr":
        return XorExpr(value & 1)

    def __xor__(self, other) -> "XorExpr":
        if isinstance(other, int):
            return XorExpr(self.const ^ (other & 1), self.syms)
        if isinstance(other, str):
            other = XorExpr.bit(other)
        return XorExpr(self.const ^ other.const, self.syms ^ other.syms)

    def evaluate(self, bits: Mapping[str, int]) -> int:
        v = self.const
        for s in self.syms:
            v ^= bits[s]
        return v

    def __str__(self) -> str:
        parts = sorted(self.syms)
        if self.const:
            parts.append("1")
        return "^".join(parts) if parts else "0"


@dataclass(frozen=True)
class CorrectionSpec:
    """One deferred Pauli fix: which party, which DOF, and the exponents as
    XOR-linear functions of the broadcast outcome bits."""

    node: str
    party: PhotonId
    dof: str
    x: XorExpr
    z: XorExpr

    def power(self, bits: Mapping[str, int]) -> PauliPower:
        return PauliPower(self.x.evaluate(bits), self.z.evaluate(bits))


@dataclass(frozen=True)
class CorrectionPlan:
    specs: tuple[CorrectionSpec, ...]

    def by_node(self, node: str) -> CorrectionSpec:
        for s in self.specs:
            if s.node == node:
                return s
        raise KeyError(node)


class PauliFrame:
    """Tracks, symbolically, the relative sign between the two amplitude
    branches and where each photon's path lands.

    Two parity rules generate every correction.  A photon whose branch paths
    are complementary that is re-mixed, tapped on path T and read out with
    bit o lands on path T^o^1 and flips the relative branch sign exactly when
    that landing path is 1.  A photon sitting on a single definite path d that
    is re-mixed into superposition flips the sign exactly when d is 1.  Both
    rules are validated per branch against exhaustive Pauli search in the
    test suite.
    """

    def __init__(self) -> None:
        self.sign = XorExpr()

    def collapse_complementary(self, tap: XorExpr, outcome: XorExpr) -> XorExpr:
        landing = tap ^ outcome ^ 1
        self.sign = self.sign ^ landing
        return landing

    def resplit_single(self, path: XorExpr) -> None:
        self.sign = self.sign ^ path

    def take_sign(self) -> XorExpr:
        out = self.sign
        self.sign = XorExpr()
        return out


@dataclass(frozen=True)
class OutcomeLabels:
    """Outcome-bit names in broadcast order for an (m, n) configuration.

    Index suffixes appear only when a family has more than one member, so the
    canonical two-party/one-controller run reads exactly
    (k, m, n, s, l, r, g, p, q, w, v).
    """

    s: tuple[str, ...]
    l: tuple[str, ...]
    rg: tuple[tuple[str, str], ...]  # chronological: receiver m-1 down to 1
    w: tuple[str, ...]
    v: tuple[str, ...]
    order: tuple[str, ...]


def outcome_labels(m: int, n: int) -> OutcomeLabels:
    def fam(base: str, count: int, start: int = 1) -> tuple[str, ...]:
        if count == 1:
            return (base,)
        return tuple(f"{base}{i}" for i in range(start, start + count))

    s = fam("s", n) if n else ()
    l = fam("l", m - 1) if m > 1 else ()
    r = fam("r", m - 1) if m > 1 else ()
    g = fam("g", m - 1) if m > 1 else ()
    w = tuple(f"w{i}" for i in range(2, m + 1)) if m > 2 else (("w",) if m == 2 else ())
    v = fam("v", n) if n else ()
    rg = tuple((r[i - 1], g[i - 1]) for i in range(m - 1, 0, -1))
    order = ("k", "m", "n") + s + l
    for rj, gj in rg:
        order += (rj, gj)
    order += ("p", "q") + w + v
    return OutcomeLabels(s=s, l=l, rg=rg, w=w, v=v, order=order)


def derive_correction_plan(m: int, n: int) -> CorrectionPlan:
    """Build every correction of an (m, n) run from the frame rules alone."""
    labels = outcome_labels(m, n)
    k = XorExpr.bit("k")
    frame = PauliFrame()

    # Alice's transfer measurement: X was tapped on path 0 (bit n fires it),
    # A on path k (bit m fires it); both collapse together.
    frame.collapse_complementary(XorExpr.of(0), XorExpr.bit("n"))
    a_path = frame.collapse_complementary(k, XorExpr.bit("m"))

    for s_lbl in labels.s:
        frame.collapse_complementary(k, XorExpr.bit(s_lbl))

    landing: dict[int, XorExpr] = {}
    for i, l_lbl in enumerate(labels.l, start=1):
        landing[i] = frame.collapse_complementary(k, XorExpr.bit(l_lbl))

    specs = [CorrectionSpec("first_op", bob(m), "spatial", x=k, z=frame.take_sign())]

    for (r_lbl, g_lbl), i in zip(labels.rg, range(m - 1, 0, -1)):
        frame.resplit_single(landing[i])
        frame.collapse_complementary(XorExpr.of(1), XorExpr.bit(g_lbl))
        specs.append(
            CorrectionSpec(
                f"hop_close[{i}]",
                bob(i),
                "spatial",
                x=landing[i] ^ r_lbl,
                z=frame.take_sign(),
            )
        )

    polar_sign = XorExpr.bit("q")
    for w_lbl in labels.w:
        polar_sign = polar_sign ^ w_lbl
    for v_lbl in labels.v:
        polar_sign = polar_sign ^ v_lbl
    specs.append(CorrectionSpec("polar_fix", A, "polar", x=XorExpr.bit("p"), z=polar_sign))
    specs.append(CorrectionSpec("to_spatial", A, "spatial", x=a_path, z=XorExpr()))
    return CorrectionPlan(tuple(specs))


def derive_corrections(
    plan: CorrectionPlan, bits: Mapping[str, int]
) -> list[tuple[PhotonId, str, PauliPower]]:
    """Evaluate the plan on one branch's broadcast bits."""
    return [(s.party, s.dof, s.power(bits)) for s in plan.specs]


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProtocolConfig:
    """Full description of one run: party counts, operators, the secret input
    pair, and per-controller consent at both gates."""

    m: int
    n: int
    unitaries: tuple[SU2Operator, ...]
    alpha: complex
    beta: complex
    consent: tuple[bool, ...] | None = None
    consent_phase2: tuple[bool, ...] | None = None

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("at least one joint party is required")
        if self.n < 0:
            raise ValueError("controller count must be >= 0")
        if len(self.unitaries) != self.m:
            raise ValueError(f"expected {self.m} operators, got {len(self.unitaries)}")
        if abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1.0) > 1e-9:
            raise ValueError("input amplitudes are not normalized")
        for name in ("consent", "consent_phase2"):
            val = getattr(self, name)
            if val is None:
                object.__setattr__(self, name, (True,) * self.n)
            elif len(val) != self.n:
                raise ValueError(f"{name} must list one flag per controller")

    @property
    def labels(self) -> OutcomeLabels:
        return outcome_labels(self.m, self.n)


def check_variant(variant: str, m: int, n: int) -> None:
    """Reject configurations that do not match the named reduction."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "jrio" and (n != 0 or m < 2):
        raise ValueError("jrio requires n = 0 and m >= 2")
    if variant == "crio" and (m != 1 or n < 1):
        raise ValueError("crio requires m = 1 and n >= 1")
    if variant == "rio" and (m != 1 or n != 0):
        raise ValueError("rio requires m = 1 and n = 0")


def branch_bit_count(m: int, n: int) -> int:
    return len(outcome_labels(m, n).order)


# ---------------------------------------------------------------------------
# Protocol nodes
# ---------------------------------------------------------------------------


@dataclass
class NodeOutcome:
    bits: tuple[int, ...]
    prob: float
    state: HybridState
    blocked: bool = False
    correction: tuple[PhotonId, str, PauliPower] | None = None


@dataclass
class Node:
    name: str
    stage: int
    party: str
    bit_labels: tuple[str, ...]
    run: Callable[[HybridState, Mapping[str, int]], tuple[list[NodeOutcome], int]]
    check_id: str | None = None


@dataclass
class Protocol:
    config: ProtocolConfig
    plan: CorrectionPlan
    labels: OutcomeLabels
    nodes: list[Node]
    initial_state: HybridState


def build_protocol(
    config: ProtocolConfig,
    *,
    validate_corrections: bool = False,
    polar_override: PauliPower | None = None,
) -> Protocol:
    m, n = config.m, config.n
    labels = config.labels
    plan = derive_correction_plan(m, n)
    initial = build_initial_state(config.alpha, config.beta, m, n)
    checks_on = m == 2 and n == 1

    # Oracle pairs the validator compares each correction against.
    wants: dict[str, tuple[complex, complex]] = {}
    if validate_corrections:
        wants["first_op"] = (config.alpha, config.beta)
        for i in range(m - 1, 0, -1):
            t = oracle.direct_apply(config.unitaries[i:], config.alpha, config.beta)
            wants[f"hop_close[{i}]"] = (t.a0, t.a1)
        t = oracle.direct_apply(config.unitaries, config.alpha, config.beta)
        wants["polar_fix"] = (t.a0, t.a1)
        wants["to_spatial"] = (t.a0, t.a1)

    def correct(state: HybridState, bits: Mapping[str, int], node: str):
        spec = plan.by_node(node)
        power = spec.power(bits)
        if validate_corrections:
            found = oracle.brute_force_correction(state, spec.party, spec.dof, wants[node])
            if found != power:
                raise FrameInconsistencyError(node, bits, power, found)
        applier = apply_pauli_spatial if spec.dof == "spatial" else apply_pauli_polar
        return applier(state, spec.party, power), (spec.party, spec.dof, power)

    nodes: list[Node] = []

    def run_entangle(state, bits):
        probe = fresh_probe(state)
        probe = kerr(probe, state, X, 0, +1)
        probe = kerr(probe, state, A, 0, -1)
        outs = [NodeOutcome((c,), p, st) for c, p, st in enumerate_homodyne(probe, state)]
        return outs, len(state.terms)

    nodes.append(Node("entangle", 1, "A", ("k",), run_entangle,
                      "entangle" if checks_on else None))

    def run_transfer(state, bits):
        st = apply_bbs(state, X)
        st = apply_bbs(st, A)
        peak = len(st.terms)
        probe = fresh_probe(st)
        probe = kerr(probe, st, X, 0, +1)
        probe = kerr(probe, st, A, bits["k"], +2)
        outs = []
        for c, p, collapsed in enumerate_homodyne(probe, st):
            outs.append(NodeOutcome(((c >> 1) & 1, c & 1), p, collapsed.mark_dead(X)))
        return outs, peak

    nodes.append(Node("transfer", 2, "A", ("m", "n"), run_transfer,
                      "transfer" if checks_on else None))

    for j, s_lbl in enumerate(labels.s, start=1):
        def run_consent(state, bits, _j=j, _lbl=s_lbl):
            if not config.consent[_j - 1]:
                return [NodeOutcome((), 1.0, state, blocked=True)], len(state.terms)
            st = apply_bbs(state, charlie(_j))
            peak = len(st.terms)
            probe = kerr(fresh_probe(st), st, charlie(_j), bits["k"], +1)
            outs = [NodeOutcome((c,), p, s2) for c, p, s2 in enumerate_homodyne(probe, st)]
            return outs, peak

        nodes.append(Node(f"consent[{j}]", 3, f"C{j}", (s_lbl,), run_consent,
                          "consent" if checks_on and j == n else None))

    for i, l_lbl in enumerate(labels.l, start=1):
        def run_concentrate(state, bits, _i=i):
            st = apply_bbs(state, bob(_i))
            peak = len(st.terms)
            probe = kerr(fresh_probe(st), st, bob(_i), bits["k"], +1)
            outs = [NodeOutcome((c,), p, s2) for c, p, s2 in enumerate_homodyne(probe, st)]
            return outs, peak

        nodes.append(Node(f"concentrate[{i}]", 4, f"B{i}", (l_lbl,), run_concentrate,
                          "concentrate" if checks_on and i == m - 1 else None))

    def run_first_op(state, bits):
        st, corr = correct(state, bits, "first_op")
        st = apply_su2_spatial(st, bob(m), config.unitaries[m - 1])
        return [NodeOutcome((), 1.0, st, correction=corr)], len(st.terms)

    nodes.append(Node("first_op", 4, f"B{m}", (), run_first_op,
                      "first-op" if checks_on else None))

    for (r_lbl, g_lbl), i in zip(labels.rg, range(m - 1, 0, -1)):
        def run_hop_link(state, bits, _i=i):
            d = state.definite_bit(bob(_i), "spatial")
            st = apply_bbs(state, bob(_i))
            peak = len(st.terms)
            probe = kerr(fresh_probe(st), st, bob(_i), d, +1)
            probe = kerr(probe, st, bob(_i + 1), 0, -1)
            outs = [NodeOutcome((c,), p, s2) for c, p, s2 in enumerate_homodyne(probe, st)]
            return outs, peak

        nodes.append(Node(f"hop_link[{i}]", 5, f"B{i + 1}", (r_lbl,), run_hop_link,
                          "hop-link" if checks_on and i == 1 else None))

        def run_hop_close(state, bits, _i=i, _g=g_lbl):
            st = apply_bbs(state, bob(_i + 1))
            peak = len(st.terms)
            probe = kerr(fresh_probe(st), st, bob(_i + 1), 1, +1)
            outs = []
            for c, p, s2 in enumerate_homodyne(probe, st):
                nbits = dict(bits)
                nbits[_g] = c
                s3, corr = correct(s2, nbits, f"hop_close[{_i}]")
                s3 = apply_su2_spatial(s3, bob(_i), config.unitaries[_i - 1])
                outs.append(NodeOutcome((c,), p, s3, correction=corr))
            return outs, peak

        nodes.append(Node(f"hop_close[{i}]", 5, f"B{i + 1}", (g_lbl,), run_hop_close,
                          "hop-done" if checks_on and i == 1 else None))

    def run_joint_b1(state, bits):
        st = apply_hwp(state, bob(1), 1)
        st = apply_bbs(st, bob(1))
        peak = len(st.terms)
        outs = [NodeOutcome(b, p, s2) for b, p, s2 in
                enumerate_measurement(st, bob(1), ("polar", "spatial"))]
        return outs, peak

    nodes.append(Node("joint_measure[1]", 7, "B1", ("p", "q"), run_joint_b1))

    for i, w_lbl in zip(range(2, m + 1), labels.w):
        def run_joint_w(state, bits, _i=i):
            path = state.definite_bit(bob(_i), "spatial")
            st = apply_qwp(state, bob(_i), path)
            peak = len(st.terms)
            outs = [NodeOutcome(b, p, s2) for b, p, s2 in
                    enumerate_measurement(st, bob(_i), ("polar",))]
            return outs, peak

        nodes.append(Node(f"joint_measure[{i}]", 7, f"B{i}", (w_lbl,), run_joint_w,
                          "joint-measure" if checks_on and i == m else None))

    for j, v_lbl in enumerate(labels.v, start=1):
        def run_control(state, bits, _j=j):
            if not config.consent_phase2[_j - 1]:
                return [NodeOutcome((), 1.0, state, blocked=True)], len(state.terms)
            path = state.definite_bit(charlie(_j), "spatial")
            st = apply_qwp(state, charlie(_j), path)
            st = apply_pbs(st, charlie(_j), path)
            peak = len(st.terms)
            outs = [NodeOutcome(b, p, s2) for b, p, s2 in
                    enumerate_measurement(st, charlie(_j), ("polar",))]
            return outs, peak

        nodes.append(Node(f"control_measure[{j}]", 8, f"C{j}", (v_lbl,), run_control,
                          "control-measure" if checks_on and j == n else None))

    def run_polar_fix(state, bits):
        if polar_override is not None:
            st = apply_pauli_polar(state, A, polar_override)
            corr = (A, "polar", polar_override)
        else:
            st, corr = correct(state, bits, "polar_fix")
        return [NodeOutcome((), 1.0, st, correction=corr)], len(st.terms)

    nodes.append(Node("polar_fix", 8, "A", (), run_polar_fix,
                      "polar-fixed" if checks_on else None))

    def run_to_spatial(state, bits):
        in_path = state.definite_bit(A, "spatial")
        st = apply_pbs(state, A, in_path)
        st = apply_hwp(st, A, in_path)
        peak = len(st.terms)
        st, corr = correct(st, bits, "to_spatial")
        return [NodeOutcome((), 1.0, st, correction=corr)], peak

    nodes.append(Node("to_spatial", 9, "A", (), run_to_spatial, None))

    return Protocol(config, plan, labels, nodes, initial)


# ---------------------------------------------------------------------------
# Transcripts and results
# ---------------------------------------------------------------------------


@dataclass
class OutcomeRecord:
    step: str
    party: str
    bits: dict[str, int]


@dataclass
class CorrectionRecord:
    party: str
    dof: str
    power: PauliPower


@dataclass
class Transcript:
    """Classical-communication ledger of one branch: every outcome bit in
    broadcast order, every correction applied, and the bit total."""

    outcomes: list[OutcomeRecord]
    corrections: list[CorrectionRecord]
    classical_bits: int
    seed: int | None = None

    def bit_names(self) -> tuple[str, ...]:
        names: list[str] = []
        for rec in self.outcomes:
            names.extend(rec.bits)
        return tuple(names)


@dataclass
class BranchResult:
    """One protocol branch: its outcome bits, probability, final (or halt)
    state, transcript and any stage-check mismatch records."""

    bits: dict[str, int]
    probability: float
    state: HybridState
    blocked: bool
    blocked_at: str | None
    transcript: Transcript
    errata: list
    max_terms: int

    def bit_values(self, order: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.bits[name] for name in order if name in self.bits)


def _leaf(bits, prob, state, blocked, blocked_at, records, corrections, errata,
          max_terms, seed=None) -> BranchResult:
    transcript = Transcript(
        outcomes=list(records),
        corrections=[CorrectionRecord(str(p), d, pw) for p, d, pw in corrections],
        classical_bits=sum(len(r.bits) for r in records),
        seed=seed,
    )
    return BranchResult(dict(bits), prob, state, blocked, blocked_at,
                        transcript, list(errata), max_terms)


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


def iter_branches(
    config: ProtocolConfig,
    *,
    check_stages: bool = False,
    validate_corrections: bool = False,
    polar_override: PauliPower | None = None,
) -> Iterator[BranchResult]:
    """Depth-first enumeration of every outcome branch, in lexicographic
    order of the outcome-bit sequence.  Blocked branches absorb their whole
    subtree probability."""
    proto = build_protocol(
        config,
        validate_corrections=validate_corrections,
        polar_override=polar_override,
    )
    checker = None
    if check_stages:
        from .stages import make_stage_checker

        checker = make_stage_checker(config)
    nodes = proto.nodes

    def walk(idx, state, bits, prob, records, corrections, errata, max_terms):
        if idx == len(nodes):
            yield _leaf(bits, prob, state, False, None, records, corrections,
                        errata, max_terms)
            return
        node = nodes[idx]
        outcomes, peak = node.run(state, bits)
        max_terms = max(max_terms, peak)
        for out in outcomes:
            if out.blocked:
                yield _leaf(bits, prob, out.state, True, node.name, records,
                            corrections, errata, max_terms)
                continue
            nbits = bits
            nrecords = records
            if node.bit_labels:
                nbits = dict(bits)
                new = dict(zip(node.bit_labels, out.bits))
                nbits.update(new)
                nrecords = records + (OutcomeRecord(node.name, node.party, new),)
            ncorr = corrections + (out.correction,) if out.correction else corrections
            nerrata = errata
            if checker is not None and node.check_id is not None:
                mismatch = checker(node.check_id, nbits, out.state)
                if mismatch is not None:
                    nerrata = errata + (mismatch,)
            yield from walk(idx + 1, out.state, nbits, prob * out.prob,
                            nrecords, ncorr, nerrata,
                            max(max_terms, len(out.state.terms)))

    yield from walk(0, proto.initial_state, {}, 1.0, (), (), (),
                    len(proto.initial_state.terms))


def run_all_branches(config: ProtocolConfig, **kwargs) -> list[BranchResult]:
    """Materialized :func:`iter_branches`; fine at desk scale (<= 2^13 or so),
    prefer the iterator for bigger configurations."""
    return list(iter_branches(config, **kwargs))


class ProtocolRun:
    """One sampled execution with stepwise control, for interactive use and
    stage-by-stage tests.  ``run_full`` drives it end to end."""

    def __init__(
        self,
        config: ProtocolConfig,
        seed: int | None = None,
        rng: np.random.Generator | None = None,
        *,
        check_stages: bool = False,
        validate_corrections: bool = False,
        polar_override: PauliPower | None = None,
    ):
        self.config = config
        self._proto = build_protocol(
            config,
            validate_corrections=validate_corrections,
            polar_override=polar_override,
        )
        self._checker = None
        if check_stages:
            from .stages import make_stage_checker

            self._checker = make_stage_checker(config)
        self._seed = seed
        self._rng = rng if rng is not None else np.random.default_rng(seed)
        self._idx = 0
        self.state = self._proto.initial_state
        self.bits: dict[str, int] = {}
        self.probability = 1.0
        self.blocked = False
        self.blocked_at: str | None = None
        self._records: tuple = ()
        self._corrections: tuple = ()
        self._errata: tuple = ()
        self.max_terms = len(self.state.terms)

    @property
    def plan(self) -> CorrectionPlan:
        return self._proto.plan

    def _advance_stage(self, stage: int) -> dict[str, int]:
        got: dict[str, int] = {}
        nodes = self._proto.nodes
        while self._idx < len(nodes) and nodes[self._idx].stage == stage:
            if self.blocked:
                break
            node = nodes[self._idx]
            outcomes, peak = node.run(self.state, self.bits)
            self.max_terms = max(self.max_terms, peak)
            if len(outcomes) == 1:
                pick = outcomes[0]
            else:
                pick = outcomes[-1]
                r = self._rng.random()
                acc = 0.0
                for out in outcomes:
                    acc += out.prob
                    if r < acc:
                        pick = out
                        break
            if pick.blocked:
                self.blocked = True
                self.blocked_at = node.name
                self._idx += 1
                break
            self.probability *= pick.prob
            self.state = pick.state
            self.max_terms = max(self.max_terms, len(pick.state.terms))
            if node.bit_labels:
                new = dict(zip(node.bit_labels, pick.bits))
                self.bits.update(new)
                got.update(new)
                self._records = self._records + (OutcomeRecord(node.name, node.party, new),)
            if pick.correction is not None:
                self._corrections = self._corrections + (pick.correction,)
            if self._checker is not None and node.check_id is not None:
                mismatch = self._checker(node.check_id, self.bits, self.state)
                if mismatch is not None:
                    self._errata = self._errata + (mismatch,)
            self._idx += 1
        return got

    # Stage-wise public surface -------------------------------------------

    def step1_entangle(self) -> int:
        return self._advance_stage(1)["k"]

    def step2_disentangle(self) -> tuple[int, int]:
        got = self._advance_stage(2)
        return got["m"], got["n"]

    def step3_controller_consent(self):
        got = self._advance_stage(3)
        if self.blocked:
            return BLOCKED
        return tuple(got[lbl] for lbl in self._proto.labels.s)

    def step4_first_operator(self) -> tuple[int, ...]:
        got = self._advance_stage(4)
        return tuple(got[lbl] for lbl in self._proto.labels.l)

    def step5_6_shift_chain(self) -> tuple[tuple[int, int], ...]:
        got = self._advance_stage(5)
        return tuple((got[r], got[g]) for r, g in self._proto.labels.rg)

    def step7_joint_measure(self):
        got = self._advance_stage(7)
        return got["p"], got["q"], tuple(got[lbl] for lbl in self._proto.labels.w)

    def step8_controller_measure_and_fix(self):
        got = self._advance_stage(8)
        if self.blocked:
            return BLOCKED
        return tuple(got[lbl] for lbl in self._proto.labels.v)

    def step9_pdof_to_sdof(self) -> HybridState:
        self._advance_stage(9)
        return self.state

    def finish(self) -> BranchResult:
        for stage in (1, 2, 3, 4, 5, 7, 8, 9):
            if self.blocked:
                break
            self._advance_stage(stage)
        return _leaf(self.bits, self.probability, self.state, self.blocked,
                     self.blocked_at, self._records, self._corrections,
                     self._errata, self.max_terms, seed=self._seed)


def run_full(
    config: ProtocolConfig,
    seed: int | None = None,
    *,
    rng: np.random.Generator | None = None,
    check_stages: bool = False,
    validate_corrections: bool = False,
    polar_override: PauliPower | None = None,
) -> BranchResult:
    """Sample one branch end to end and return it with its transcript."""
    return ProtocolRun(
        config,
        seed=seed,
        rng=rng,
        check_stages=check_stages,
        validate_corrections=validate_corrections,
        polar_override=polar_override,
    ).finish()


def run_reduction(
    variant: str,
    config: ProtocolConfig,
    seed: int | None = None,
    *,
    enumerate_branches: bool = False,
    **kwargs,
):
    """Run a named special case of the scheme.  The channel and the skipped
    stages follow from the party counts: jrio drops the controllers (and with
    them the consent and release stages), crio drops all joint parties but
    one (no concentrate stage and no hops), rio drops both."""
    check_variant(variant, config.m, config.n)
    if enumerate_branches:
        return run_all_branches(config, **kwargs)
    return run_full(config, seed=seed, **kwargs)


def branch_fidelity(config: ProtocolConfig, result: BranchResult) -> float | None:
    """Overlap magnitude of a finished branch against the oracle target."""
    if result.blocked:
        return None
    target = oracle.direct_apply(config.unitaries, config.alpha, config.beta)
    return oracle.target_fidelity(result.state, target)
