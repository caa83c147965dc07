"""Command-line front door: configure runs, enumerate branches, verify
against the oracle, and emit JSON reports.

One JSON document goes to stdout (or --output); a short human summary goes to
stderr.  Identical seeds and flags produce byte-identical reports.  Exit
codes: 0 all checks pass, 1 fidelity failure, 2 blocked by a controller,
3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .optics import SQRT_HALF, SU2Operator
from .oracle import direct_apply, target_fidelity
from .protocol import (FIDELITY_THRESHOLD, BranchResult, ProtocolConfig,
                       branch_bit_count, branch_fidelity, check_variant,
                       iter_branches, run_full)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_FIDELITY = 1
EXIT_BLOCKED = 2
EXIT_CONFIG = 3

ENUMERATE_MAX_BITS = 17
MAX_PARTIES = 4
MAX_CONTROLLERS = 3
MAX_U_FLAGS = 9

PRESETS = {
    "identity": (1.0 + 0j, 0j),
    "pauli-x": (0j, 1.0 + 0j),
    "pauli-z": (1j, 0j),
    "hadamard-like": (SQRT_HALF + 0j, SQRT_HALF + 0j),
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors for exit-code purposes
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", ""))
    except ValueError:
        raise ConfigError(f"cannot parse complex number {text!r}") from None


def parse_unitary(text: str) -> SU2Operator:
    body = text.strip()
    if body.startswith("preset:"):
        body = body[len("preset:"):]
    if body in PRESETS:
        return SU2Operator(*PRESETS[body])
    parts = body.split(",")
    if len(parts) != 2:
        raise ConfigError(
            f"operator {text!r}: expected 'preset:<name>' or '<u>,<v>' "
            f"(presets: {', '.join(sorted(PRESETS))})"
        )
    try:
        return SU2Operator(parse_complex(parts[0]), parse_complex(parts[1]))
    except ValueError as exc:
        raise ConfigError(f"operator {text!r}: {exc}") from None


def parse_consent(text: str | None, n: int) -> tuple[bool, ...]:
    if text is None:
        return (True,) * n
    bits = text.strip()
    if n == 0 and bits in ("", "1"):
        return ()
    if len(bits) != n or any(c not in "01" for c in bits):
        raise ConfigError(
            f"consent mask {text!r} must be {n} characters of 0/1 "
            "(one per controller)"
        )
    return tuple(c == "1" for c in bits)


def _add_shared_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, default=2, help="number of joint parties (default 2)")
    p.add_argument("--n", type=int, default=1, help="number of controllers (default 1)")
    p.add_argument("--alpha", default="1", help="input amplitude on path 0 (complex, e.g. 0.6 or 0.6+0.2j)")
    p.add_argument("--beta", default="0", help="input amplitude on path 1")
    for i in range(1, MAX_U_FLAGS + 1):
        p.add_argument(f"--u{i}", default=None, metavar="OP",
                       help=argparse.SUPPRESS if i > 2 else
                       f"operator of party {i}: preset:<name> or '<u>,<v>'")
    p.add_argument("--consent", default=None, metavar="MASK",
                   help="per-controller consent bits, e.g. 1 or 101 (default: all consent)")
    p.add_argument("--consent2", default=None, metavar="MASK",
                   help="per-controller consent bits for the release stage (default: same as --consent)")
    p.add_argument("--seed", type=int, default=None, help="seed for sampled runs")
    p.add_argument("--mode", choices=("sample", "enumerate"), default=None,
                   help="override the subcommand's run mode")
    p.add_argument("--check-paper-eqs", action="store_true",
                   help="cross-check simulator states against the per-stage closed forms (m=2, n=1 only)")
    p.add_argument("--variant", choices=("cjrio", "jrio", "crio", "rio"), default="cjrio")
    p.add_argument("--output", default=None, metavar="PATH",
                   help="write the JSON report here instead of stdout")


def build_config(args) -> ProtocolConfig:
    m, n = args.m, args.n
    if m < 1 or n < 0:
        raise ConfigError("need m >= 1 joint parties and n >= 0 controllers")
    try:
        check_variant(args.variant, m, n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    unitaries = []
    for i in range(1, MAX_U_FLAGS + 1):
        text = getattr(args, f"u{i}")
        if i <= m:
            unitaries.append(parse_unitary(text) if text else SU2Operator(*PRESETS["identity"]))
        elif text is not None:
            raise ConfigError(f"--u{i} given but only {m} parties configured")
    alpha = parse_complex(args.alpha)
    beta = parse_complex(args.beta)
    consent = parse_consent(args.consent, n)
    consent2 = parse_consent(args.consent2, n) if args.consent2 is not None else consent
    try:
        return ProtocolConfig(m, n, tuple(unitaries), alpha, beta, consent, consent2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _c2j(z: complex) -> list[float]:
    return [z.real, z.imag]


def _config_json(config: ProtocolConfig, args, mode: str) -> dict:
    return {
        "m": config.m,
        "n": config.n,
        "alpha": _c2j(config.alpha),
        "beta": _c2j(config.beta),
        "unitaries": [{"u": _c2j(complex(op.u)), "v": _c2j(complex(op.v))}
                      for op in config.unitaries],
        "consent": [int(c) for c in config.consent],
        "consent_phase2": [int(c) for c in config.consent_phase2],
        "variant": args.variant,
        "seed": args.seed,
        "mode": mode,
    }


def _transcript_json(result: BranchResult) -> dict:
    t = result.transcript
    return {
        "outcomes": [
            {"step": rec.step, "party": rec.party, "bits": rec.bits}
            for rec in t.outcomes
        ],
        "corrections": [
            {"party": rec.party, "dof": rec.dof,
             "x_pow": rec.power.x_pow, "z_pow": rec.power.z_pow}
            for rec in t.corrections
        ],
        "classical_bits": t.classical_bits,
        "seed": t.seed,
    }


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary(line: str) -> None:
    print(line, file=sys.stderr)


def cmd_simulate(args) -> int:
    config = build_config(args)
    if (args.mode or "sample") == "enumerate":
        return cmd_enumerate(args)
    if args.check_paper_eqs and (config.m, config.n) != (2, 1):
        raise ConfigError("--check-paper-eqs needs the m=2, n=1 configuration")
    seed = args.seed if args.seed is not None else int(np.random.SeedSequence().entropy % (2 ** 32))
    args.seed = seed
    result = run_full(config, seed=seed, check_stages=args.check_paper_eqs)
    fid = branch_fidelity(config, result)
    labels = [lbl for lbl in config.labels.order if lbl in result.bits]
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "config": _config_json(config, args, "sample"),
        "outcome_labels": labels,
        "branch": {
            "bits": [result.bits[lbl] for lbl in labels],
            "probability": result.probability,
            "fidelity": fid,
            "blocked": result.blocked,
            "blocked_at": result.blocked_at,
        },
        "transcript": _transcript_json(result),
        "errata": [e.to_json() for e in result.errata],
        "max_terms": result.max_terms,
    }
    _emit(report, args)
    if result.blocked:
        _summary(f"blocked by controller at {result.blocked_at}")
        return EXIT_BLOCKED
    _summary(f"fidelity {fid:.15f} over {len(labels)} outcome bits (seed {seed})")
    return EXIT_OK if fid >= FIDELITY_THRESHOLD else EXIT_FIDELITY


def cmd_enumerate(args) -> int:
    if args.mode == "sample":
        args.mode = None
        return cmd_simulate(args)
    config = build_config(args)
    bits = branch_bit_count(config.m, config.n)
    if config.m > MAX_PARTIES or config.n > MAX_CONTROLLERS or bits > ENUMERATE_MAX_BITS:
        raise ConfigError(
            f"enumeration rejected: m={config.m}, n={config.n} spans "
            f"2^{bits} = {2 ** bits} branches (limit 2^{ENUMERATE_MAX_BITS}; "
            f"m <= {MAX_PARTIES}, n <= {MAX_CONTROLLERS})"
        )
    if args.check_paper_eqs and (config.m, config.n) != (2, 1):
        raise ConfigError("--check-paper-eqs needs the m=2, n=1 configuration")
    target = direct_apply(config.unitaries, config.alpha, config.beta)
    labels = list(config.labels.order)

    branches = []
    errata = []
    prob_sum = 0.0
    min_fid = None
    blocked_count = 0
    classical_bits = None
    max_terms = 0
    count = 0
    for res in iter_branches(config, check_stages=args.check_paper_eqs):
        count += 1
        prob_sum += res.probability
        max_terms = max(max_terms, res.max_terms)
        if res.blocked:
            blocked_count += 1
            branches.append({
                "bits": [res.bits[lbl] for lbl in labels if lbl in res.bits],
                "probability": res.probability,
                "fidelity": None,
                "blocked": True,
            })
            continue
        fid = target_fidelity(res.state, target)
        min_fid = fid if min_fid is None else min(min_fid, fid)
        classical_bits = res.transcript.classical_bits
        errata.extend(res.errata)
        branches.append({
            "bits": [res.bits[lbl] for lbl in labels],
            "probability": res.probability,
            "fidelity": fid,
            "blocked": False,
        })

    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "enumerate",
        "config": _config_json(config, args, "enumerate"),
        "outcome_labels": labels,
        "branches": branches,
        "aggregate": {
            "branch_count": count,
            "blocked_count": blocked_count,
            "probability_sum": prob_sum,
            "min_fidelity": min_fid,
            "classical_bits": classical_bits,
            "max_terms": max_terms,
        },
        "errata": [e.to_json() for e in errata],
    }
    _emit(report, args)
    _summary(
        f"{count} branches, probability sum {prob_sum:.12f}, "
        f"min fidelity {min_fid if min_fid is not None else 'n/a'}, "
        f"{blocked_count} blocked, {len(errata)} stage mismatches"
    )
    if blocked_count:
        return EXIT_BLOCKED
    if min_fid is None or min_fid < FIDELITY_THRESHOLD:
        return EXIT_FIDELITY
    return EXIT_OK


def cmd_stats(args) -> int:
    config = build_config(args)
    if args.samples < 100:
        raise ConfigError("stats needs at least 100 samples")
    bits = branch_bit_count(config.m, config.n)
    if config.m > MAX_PARTIES or config.n > MAX_CONTROLLERS or bits > ENUMERATE_MAX_BITS:
        raise ConfigError("configuration too large to enumerate the exact marginals")
    if not all(config.consent) or not all(config.consent_phase2):
        raise ConfigError("stats needs a fully consenting configuration")
    labels = list(config.labels.order)

    expected = {lbl: 0.0 for lbl in labels}
    for res in iter_branches(config):
        for lbl in labels:
            if res.bits[lbl]:
                expected[lbl] += res.probability

    seed = args.seed if args.seed is not None else 0
    args.seed = seed
    rng = np.random.default_rng(seed)
    counts = {lbl: 0 for lbl in labels}
    for _ in range(args.samples):
        res = run_full(config, rng=rng)
        for lbl in labels:
            counts[lbl] += res.bits[lbl]

    all_within = True
    table = {}
    for lbl in labels:
        p = expected[lbl]
        freq = counts[lbl] / args.samples
        sigma = math.sqrt(max(p * (1.0 - p), 1e-300) / args.samples)
        within = abs(freq - p) <= 3.0 * sigma
        all_within = all_within and within
        table[lbl] = {
            "expected": p,
            "count": counts[lbl],
            "frequency": freq,
            "sigma": sigma,
            "within_3_sigma": within,
        }

    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "stats",
        "config": _config_json(config, args, "sample"),
        "samples": args.samples,
        "outcome_labels": labels,
        "bits": table,
        "all_within_3_sigma": all_within,
    }
    _emit(report, args)
    _summary(f"{args.samples} samples over {len(labels)} bits; "
             f"{'all' if all_within else 'NOT all'} within 3 sigma")
    return EXIT_OK if all_within else EXIT_FIDELITY


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cjrio", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cjrio {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", parents=[], help="sample one protocol branch")
    _add_shared_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_enum = sub.add_parser("enumerate", help="verify every outcome branch")
    _add_shared_flags(p_enum)
    p_enum.set_defaults(func=cmd_enumerate)

    p_stats = sub.add_parser("stats", help="empirical outcome frequencies vs exact marginals")
    _add_shared_flags(p_stats)
    p_stats.add_argument("--samples", type=int, default=10000)
    p_stats.set_defaults(func=cmd_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"cjrio: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
