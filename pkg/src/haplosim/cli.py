"""Command-line front-end.

Subcommands: simulate (channel draws to a fragment file), decode (either
decoder on a fragment file), analyze (closed-form quantities), experiment
(Monte Carlo sweeps to CSV).

Standard out carries machine-parseable `key=value` lines only; prose goes
to standard error. Exit codes: 0 success (exact when --truth is given),
1 decoded but not exact, 2 usage or parse error, 3 decoding failure,
4 eigen non-convergence.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import channel, erasure, experiments, fragio, planted, spectral
from .model import Haplotype, MembershipVector, hamming_up_to_flip
from .spectral import NonConvergedError, SpectralConfig

EXIT_OK = 0
EXIT_INEXACT = 1
EXIT_USAGE = 2
EXIT_DECODE_FAILURE = 3
EXIT_NON_CONVERGED = 4


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def _emit(key: str, value) -> None:
    print(f"{key}={value}")


def _signs(values) -> str:
    return " ".join("+1" if v == 1 else "-1" for v in values)


def _cmd_simulate(args, parser) -> int:
    if (args.m is None) == (args.coverage is None):
        parser.error("exactly one of --m or --coverage is required")
    m = args.m if args.m is not None else max(1, math.ceil(args.coverage * args.n / args.k))
    try:
        cfg = channel.ChannelConfig(n=args.n, m=m, k=args.k, p=args.p, seed=args.seed)
    except ValueError as exc:
        parser.error(str(exc))
    root = np.random.SeedSequence(entropy=args.seed, spawn_key=(0,))
    truth_ss, channel_ss = root.spawn(2)
    rng = np.random.Generator(np.random.Philox(truth_ss))
    h = Haplotype(tuple(rng.integers(0, 2, size=cfg.n) * 2 - 1))
    c = MembershipVector(tuple(rng.integers(0, 2, size=cfg.m) * 2 - 1))
    cfg = channel.ChannelConfig(
        n=cfg.n, m=cfg.m, k=cfg.k, p=cfg.p,
        seed=int(channel_ss.generate_state(1, dtype=np.uint64)[0]),
    )
    observed, noise = channel.transmit(h, c, cfg)
    fragio.save_fragments(observed, args.out)
    if args.truth:
        fragio.save_truth(h, c, args.truth)
    _emit("n", cfg.n)
    _emit("m", cfg.m)
    _emit("k", cfg.k)
    _emit("p", cfg.p)
    _emit("flips", len(noise))
    _emit("out", args.out)
    if args.truth:
        _emit("truth", args.truth)
    return EXIT_OK


def _cmd_decode(args, parser) -> int:
    try:
        observed = fragio.load_fragments(args.input)
    except (OSError, ValueError) as exc:
        _say(f"cannot load {args.input}: {exc}")
        return EXIT_USAGE

    if args.algo == "ed":
        result = erasure.decode(observed, strict=args.strict)
        if not result.ok:
            _say(f"FAILURE {result.describe()}")
            _emit("status", "failure")
            _emit("reason", result.describe())
            return EXIT_DECODE_FAILURE
        estimate, membership = result.haplotype, result.membership
    else:
        cfg = SpectralConfig(tolerance=args.tol, max_iterations=args.max_iter, seed=args.seed)
        try:
            result = spectral.decode(observed, cfg)
        except NonConvergedError as exc:
            _say(f"FAILURE NonConverged (residual {exc.residual:.3e})")
            _emit("status", "failure")
            _emit("reason", "NonConverged")
            return EXIT_NON_CONVERGED
        estimate = result.haplotype
        membership = spectral.infer_memberships(observed, estimate) if args.memberships else None

    _emit("status", "success")
    _emit("h", _signs(estimate.alleles))
    if membership is not None:
        _emit("c", _signs(membership.members))
    if args.truth:
        try:
            true_h, _true_c = fragio.load_truth(args.truth)
        except (OSError, ValueError) as exc:
            _say(f"cannot load truth file {args.truth}: {exc}")
            return EXIT_USAGE
        errors, flip = hamming_up_to_flip(true_h, estimate)
        _emit("errors", errors)
        _emit("flip", f"{flip:+d}")
        return EXIT_OK if errors == 0 else EXIT_INEXACT
    return EXIT_OK


def _require(parser, args, names: list[str]) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        parser.error(f"--what {args.what} requires {' '.join(missing)}")


def _cmd_analyze(args, parser) -> int:
    try:
        if args.what == "e1":
            _require(parser, args, ["n", "m"])
            _emit("e1", repr(channel.prob_uncovered_column(args.n, args.m)))
        elif args.what == "e2":
            _require(parser, args, ["n", "m", "u", "v"])
            _emit("e2", repr(channel.prob_disconnected_split(args.n, args.m, args.u, args.v)))
        elif args.what == "fano":
            _require(parser, args, ["n", "pe"])
            value = planted.fano_min_reads(args.n, args.pe, args.p)
            _emit("fano_min_reads", repr(value))
            if value == math.inf:
                _say("unbounded: p=0.5 observations carry no information")
        elif args.what == "lemma1":
            _require(parser, args, ["n", "p", "k1", "k2", "k3"])
            m = args.m if args.m is not None else round(args.k1 * args.n * math.log(args.n))
            alpha_lo, beta_hi = planted.alpha_beta_bounds(args.n, m, args.p, args.k1, args.k2, args.k3)
            alpha = planted.alpha_exact(args.n, m, args.p)
            beta = planted.beta_exact(args.n, m, args.p)
            alpha_ok = alpha >= alpha_lo
            beta_ok = beta <= beta_hi
            _emit("m", m)
            _emit("alpha_exact", repr(alpha))
            _emit("alpha_lower", repr(alpha_lo))
            _emit("beta_exact", repr(beta))
            _emit("beta_upper", repr(beta_hi))
            _emit("alpha_check", "PASS" if alpha_ok else "FAIL")
            _emit("beta_check", "PASS" if beta_ok else "FAIL")
            _emit(
                "assumptions",
                "PASS" if planted.bound_assumptions_hold(args.n, args.k1, args.k2, args.k3) else "FAIL",
            )
            _say(("PASS" if alpha_ok else "FAIL") + " " + ("PASS" if beta_ok else "FAIL"))
        elif args.what == "spectrum":
            _require(parser, args, ["n1", "n2", "alpha", "beta"])
            spec = planted.spectrum(
                planted.PlantedParams(args.n1, args.n2, args.alpha, args.beta)
            )
            _emit("lambda1", repr(spec.lambda1))
            _emit("lambda2", repr(spec.lambda2))
            _emit("mu1", repr(spec.mu1))
            _emit("mu2", repr(spec.mu2))
            _emit("v1_block1", repr(float(spec.v1[0])))
            _emit("v1_block2", repr(float(spec.v1[-1])))
            _emit("v2_block1", repr(float(spec.v2[0])))
            _emit("v2_block2", repr(float(spec.v2[-1])))
    except ValueError as exc:
        parser.error(str(exc))
    return EXIT_OK


def _cmd_experiment(args, parser) -> int:
    if (args.config is None) == (args.preset is None):
        parser.error("exactly one of --config or --preset is required")
    try:
        if args.preset is not None:
            config = experiments.preset(
                args.preset, trials=args.trials, base_seed=args.seed or 0
            )
        else:
            with open(args.config, encoding="ascii") as fh:
                config = experiments.parse_config_text(fh.read())
            trials = args.trials if args.trials is not None else config.trials
            seed = args.seed if args.seed is not None else config.base_seed
            config = experiments.ExperimentConfig(config.cells, trials, seed)
    except (OSError, ValueError) as exc:
        _say(str(exc))
        return EXIT_USAGE
    summaries = experiments.run(config, threads=args.threads, measure_time=not args.no_timing)
    experiments.emit_csv(summaries, args.out)
    for s in summaries:
        _say(
            f"cell n={s.n} {s.m_rule}={s.kappa_or_c:g} p={s.p:g} {s.decoder}: "
            f"exact={s.exact_rate:.3f} err={s.mean_err_frac:.4f} fail={s.failure_rate:.3f}"
        )
    _emit("cells", len(summaries))
    _emit("out", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="haplosim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a random instance and write a fragment file")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--m", type=int)
    sim.add_argument("--coverage", type=float, help="expected observations per column; m = ceil(c*n/k)")
    sim.add_argument("--p", type=float, default=0.0)
    sim.add_argument("--k", type=int, default=2)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.add_argument("--truth", help="also write ground-truth h and c here")

    dec = sub.add_parser("decode", help="decode a fragment file")
    dec.add_argument("--algo", choices=("ed", "sp"), required=True)
    dec.add_argument("--in", dest="input", required=True)
    dec.add_argument("--truth")
    dec.add_argument("--strict", action="store_true", help="ed: abort on conflicting entries")
    dec.add_argument("--memberships", action="store_true", help="sp: also infer read memberships")
    dec.add_argument("--tol", type=float, default=1e-8)
    dec.add_argument("--max-iter", type=int, default=None)
    dec.add_argument("--seed", type=int, default=0)

    ana = sub.add_parser("analyze", help="closed-form probabilities, bounds, and spectra")
    ana.add_argument("--what", choices=("e1", "e2", "fano", "lemma1", "spectrum"), required=True)
    ana.add_argument("--n", type=int)
    ana.add_argument("--m", type=int)
    ana.add_argument("--u", type=int)
    ana.add_argument("--v", type=int)
    ana.add_argument("--pe", type=float)
    ana.add_argument("--p", type=float)
    ana.add_argument("--k1", type=float)
    ana.add_argument("--k2", type=float)
    ana.add_argument("--k3", type=float)
    ana.add_argument("--n1", type=int)
    ana.add_argument("--n2", type=int)
    ana.add_argument("--alpha", type=float)
    ana.add_argument("--beta", type=float)

    exp = sub.add_parser("experiment", help="run a sweep and write a CSV")
    exp.add_argument("--config", help="sweep description file")
    exp.add_argument("--preset", choices=("fig3", "fig4", "table1"))
    exp.add_argument("--out", required=True)
    exp.add_argument("--trials", type=int, default=None)
    exp.add_argument("--seed", type=int, default=None, help="override the base seed")
    exp.add_argument("--threads", type=int, default=max(1, os.cpu_count() or 1))
    exp.add_argument(
        "--no-timing", action="store_true",
        help="write 0.0 in the timing column for byte-reproducible output",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate":
        return _cmd_simulate(args, parser)
    if args.command == "decode":
        return _cmd_decode(args, parser)
    if args.command == "analyze":
        return _cmd_analyze(args, parser)
    return _cmd_experiment(args, parser)


if __name__ == "__main__":
    sys.exit(main())
