"""Command-line entry point: reproducible experiments with machine-readable output.

Every command is a pure function of (config, master seed): output documents
are byte-identical across re-runs and embed the config hash, seed, and tool
version.  Wall-clock measurements never enter the canonical documents.

Exit codes: 0 ok, 2 usage error, 3 size-cap exceeded, 4 abort-dominated
simulation (abort rate above 50%).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np
import yaml

from . import __version__
from .channels import (
    Correlation,
    SbcParams,
    correlation_from,
    find_redundant_inputs,
    is_perfect,
    merge_redundant_outputs,
)
from .chanspec import ChannelSpecError, channel_from_document, channel_to_document, parse_channel
from .capacity import region_hbc_capacity, region_hbc_upper, region_malicious, region_ska_upper
from .errors import SizeCapError
from .info import (
    check_lemma1,
    chain_rule_bounds,
    entropy_continuity_bound,
    entropy_ordering_ok,
)
from .probcore import Distribution, JointDistribution, SeededRng
from .protocol import ProtocolParams
from .seceval import (
    MacSimConfig,
    TwoPartySimConfig,
    fct_bias,
    receiver_privacy_exact,
    run_trials,
    sender_privacy_exact,
)
from .typicality import CheatStrategy, run_test_unit

ENV_SEED = "OTMAC_SEED"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SIZE_CAP = 3
EXIT_ABORT_DOMINATED = 4


class UsageError(ValueError):
    pass


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _emit(document: dict, config: dict, seed: int, args) -> None:
    document = dict(document)
    document["config_hash"] = _config_hash(config)
    document["seed"] = seed
    document["version"] = __version__
    if args.format == "csv":
        text = _to_csv(document)
    else:
        text = yaml.safe_dump(document, sort_keys=True, default_flow_style=False)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _to_csv(document: dict) -> str:
    rows = document.pop("rows", None)
    lines = []
    if rows:
        header = sorted(rows[0])
        lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(str(row[k]) for k in header))
    for key in sorted(document):
        lines.append(f"# {key}={document[key]}")
    return "\n".join(lines) + "\n"


def _load_channel(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            doc = yaml.safe_load(fh)
        channel_doc = doc.get("channel", doc)
        return channel_from_document(channel_doc), doc
    if not getattr(args, "channel", None):
        raise UsageError("either --channel or --config is required")
    return parse_channel(args.channel), {}


def _region_to_doc(region) -> dict:
    d1, d2 = region.argmax
    return {
        "r1_max": round(float(region.r1_max), 9),
        "r2_max": round(float(region.r2_max), 9),
        "sum_max": round(float(region.sum_max), 9),
        "argmax_p_x1": [round(float(v), 6) for v in d1.probs],
        "argmax_p_x2": [round(float(v), 6) for v in d2.probs],
        "method": region.method,
        "grid_step": region.grid_step,
        "strict": region.strict,
    }


def cmd_regions(args) -> int:
    channel, _ = _load_channel(args)
    fns = {
        "hbc-upper": region_hbc_upper,
        "hbc": region_hbc_capacity,
        "malicious": region_malicious,
        "ska": region_ska_upper,
    }
    region = fns[args.which](channel, grid_step=args.grid)
    config = {
        "command": "regions", "channel": args.channel or args.config,
        "which": args.which, "grid": args.grid,
    }
    _emit({"region": _region_to_doc(region)}, config, args.seed, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    channel, _ = _load_channel(args)
    if isinstance(channel, SbcParams):
        params = ProtocolParams(n=args.n, k1=args.k, k2=args.k, p=channel.p, eta=args.eta)
        config_obj = MacSimConfig(channel, params)
    else:
        # point-to-point erasure channel: the two-party protocol
        p_erase = float(channel.w[0, 0, 2]) if channel.y_size == 3 else 0.5
        config_obj = TwoPartySimConfig(p_erase, args.n, args.r, args.k)
    stats = run_trials(config_obj, args.trials, args.seed)
    config = {
        "command": "simulate", "channel": args.channel or args.config,
        "n": args.n, "k": args.k, "r": args.r, "eta": args.eta, "trials": args.trials,
    }
    _emit({"trials": stats.to_dict()}, config, args.seed, args)
    if stats.abort_rate > 0.5:
        return EXIT_ABORT_DOMINATED
    return EXIT_OK


def cmd_testunit(args) -> int:
    channel, _ = _load_channel(args)
    from .channels import transmit_arrays

    detected = 0
    for t in range(args.trials):
        rng = SeededRng(args.seed, t)
        gen = rng.generator
        x1 = gen.integers(0, 2, size=args.n).astype(np.intp)
        x2 = gen.integers(0, 2, size=args.n).astype(np.intp)
        strategy = (
            CheatStrategy(role="sender1", delta=args.delta, mode="flip")
            if args.delta > 0 else None
        )
        report = run_test_unit(channel, x1, x2, args.eps, rng, strategy)
        detected += not report.typical
    rate = detected / args.trials
    config = {
        "command": "testunit", "channel": args.channel or args.config,
        "delta": args.delta, "n": args.n, "eps": args.eps, "trials": args.trials,
    }
    doc = {"detection_rate": rate, "detected": detected, "trials": args.trials,
           "role": "honest" if args.delta == 0 else "sender1-flip"}
    _emit(doc, config, args.seed, args)
    return EXIT_OK


def cmd_bounds(args) -> int:
    rng = SeededRng(args.seed, 0)
    gen = rng.generator
    violations = {"lemma1": 0, "chain_rules": 0, "continuity": 0, "ordering": 0}
    for _ in range(args.count):
        shape = tuple(int(gen.integers(2, 5)) for _ in range(3))
        probs = gen.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
        joint3 = JointDistribution(probs)
        flat = JointDistribution(probs.reshape(shape[0], -1))
        chk = check_lemma1(flat, args.eps)
        if not (chk.lower_ok and chk.upper_ok):
            violations["lemma1"] += 1
        if not chain_rule_bounds(joint3, args.eps, args.eps_prime).all_ok():
            violations["chain_rules"] += 1
        pz = probs.sum(axis=(0, 1))
        zs = [z for z in range(shape[2]) if pz[z] > 0]
        if len(zs) >= 2 and not entropy_continuity_bound(joint3, zs[0], zs[1]).ok:
            violations["continuity"] += 1
        if not entropy_ordering_ok(Distribution(probs.reshape(-1))):
            violations["ordering"] += 1
    config = {"command": "bounds", "count": args.count,
              "eps": args.eps, "eps_prime": args.eps_prime}
    doc = {"count": args.count, "violations": violations,
           "total_violations": sum(violations.values())}
    _emit(doc, config, args.seed, args)
    return EXIT_OK


def cmd_reduce(args) -> int:
    channel, _ = _load_channel(args)
    if isinstance(channel, SbcParams):
        kernel = channel.composite_kernel()
    else:
        kernel = channel
    d1 = Distribution.uniform(kernel.x1_size)
    d2 = Distribution.uniform(kernel.x2_size)
    corr = correlation_from(kernel, d1, d2)
    redundant = sorted(find_redundant_inputs(kernel))
    merged = merge_redundant_outputs(corr)
    doc = {
        "perfect": bool(is_perfect(corr)),
        "redundant_input_pairs": [list(p) for p in redundant],
        "outputs_before_merge": kernel.y_size,
        "outputs_after_merge": merged.joint.shape[2],
        "channel": channel_to_document(channel),
    }
    config = {"command": "reduce", "channel": args.channel or args.config}
    _emit(doc, config, args.seed, args)
    return EXIT_OK


def cmd_fct(args) -> int:
    rows = []
    for rounds in args.rounds:
        est = fct_bias(args.strategy, rounds, args.runs, master_seed=args.seed)
        rows.append({"rounds": rounds, "bias": round(est["bias"], 6),
                     "pr_one": round(est["pr_one"], 6)})
    config = {"command": "fct", "strategy": args.strategy,
              "rounds": args.rounds, "runs": args.runs}
    _emit({"rows": rows}, config, args.seed, args)
    return EXIT_OK


def cmd_privacy(args) -> int:
    if args.which == "receiver":
        rep = receiver_privacy_exact(args.n, args.p, eta=args.eta,
                                     asymmetric_bug=args.inject_bug)
    else:
        rep = sender_privacy_exact(args.set_size, args.k,
                                   known_positions=args.known)
    config = {"command": "privacy", "which": args.which, "n": args.n,
              "p": args.p, "set_size": args.set_size, "k": args.k}
    _emit({"leakage": rep.to_dict()}, config, args.seed, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int,
                        default=int(os.environ.get(ENV_SEED, "0")),
                        help=f"master seed (env {ENV_SEED})")
    common.add_argument("--out", help="write the document here instead of stdout")
    common.add_argument("--format", choices=("yaml", "csv"), default="yaml")
    parser = argparse.ArgumentParser(
        prog="otmac",
        description="Oblivious transfer over noisy multiple-access channels: "
        "simulation, security evaluation, and rate regions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def sub_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    def add_channel(p):
        p.add_argument("--channel", help="inline channel spec, e.g. su-sbc:p=0.4,w=identity")
        p.add_argument("--config", help="YAML config file with a channel document")

    p = sub_parser("regions", help="compute a rate region")
    add_channel(p)
    p.add_argument("--which", choices=("hbc-upper", "hbc", "malicious", "ska"),
                   required=True)
    p.add_argument("--grid", type=float, default=None, help="grid step")
    p.set_defaults(func=cmd_regions)

    p = sub_parser("simulate", help="Monte-Carlo protocol runs")
    add_channel(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=float, default=0.45, help="two-party rate parameter")
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_simulate)

    p = sub_parser("testunit", help="cheating-detection statistics")
    add_channel(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.02)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_testunit)

    p = sub_parser("bounds", help="bound-inequality property suite")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--eps-prime", dest="eps_prime", type=float, default=0.1)
    p.set_defaults(func=cmd_bounds)

    p = sub_parser("reduce", help="redundancy/perfectness report")
    add_channel(p)
    p.set_defaults(func=cmd_reduce)

    p = sub_parser("fct", help="coin-flip bias table")
    p.add_argument("--strategy", choices=("honest", "abort_when_losing"),
                   default="honest")
    p.add_argument("--rounds", type=int, nargs="+", default=[1, 9, 25])
    p.add_argument("--runs", type=int, default=2000)
    p.set_defaults(func=cmd_fct)

    p = sub_parser("privacy", help="exact privacy enumerations")
    p.add_argument("--which", choices=("receiver", "sender"), required=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--set-size", dest="set_size", type=int, default=8)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--known", type=int, default=0)
    p.add_argument("--inject-bug", dest="inject_bug", action="store_true")
    p.set_defaults(func=cmd_privacy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if args.command == "fct" and args.strategy == "honest":
        args.strategy = None
    try:
        return args.func(args)
    except SizeCapError as exc:
        yaml.safe_dump({"error": "size-cap", "message": str(exc),
                        "cap": exc.cap, "requested": exc.requested},
                       sys.stderr)
        return EXIT_SIZE_CAP
    except (UsageError, ChannelSpecError, ValueError, OSError) as exc:
        yaml.safe_dump({"error": "usage", "message": str(exc)}, sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
