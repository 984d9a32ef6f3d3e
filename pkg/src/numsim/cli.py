"""Command-line front end: run scenarios, write CSV traces, render figures."""
from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from .engine import (IterationRecord, LossPolicy, ScenarioConfig, Summary,
                     run_scenario, summary)
from .topology import BUILTIN_NETWORKS, TopologyError, load_topology

CSV_HEADER = ["iter", "link", "price", "user", "rate", "h_actual",
              "h_estimated", "delta_h", "w", "w_x", "loss", "objective"]


@dataclass
class RunOptions:
    scenario: Optional[str]
    topology: Optional[str]
    iterations: int
    seed: int
    sigma0: float
    lambda_min: float
    loss: LossPolicy
    gamma: Optional[int]
    feed_estimates: bool
    out: Optional[str]
    summary: bool
    hex_frames: bool
    plots: Optional[str]


def _parse_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected A:B iteration range, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="numsim",
        description="Price-based congestion control simulator with "
                    "least-squares recovery of lost feedback messages.")
    src = parser.add_mutually_exclusive_group()
    src.add_argument("--scenario", choices=sorted(BUILTIN_NETWORKS),
                     help="built-in topology (default: single-link)")
    src.add_argument("--topology", metavar="PATH",
                     help="topology description file")
    parser.add_argument("--iterations", type=int, default=500)
    parser.add_argument("--seed", type=int,
                        default=int(os.environ.get("NUMSIM_SEED", "42")))
    parser.add_argument("--sigma0", type=float, default=1.0,
                        help="initial step size of the price update")
    parser.add_argument("--lambda-min", type=float, default=0.0,
                        help="price floor")
    loss = parser.add_mutually_exclusive_group()
    loss.add_argument("--loss-every", type=int, metavar="K",
                      help="drop messages every Kth iteration")
    loss.add_argument("--loss-range", type=_parse_range, metavar="A:B",
                      help="drop messages for all iterations in [A, B]")
    loss.add_argument("--loss-prob", type=float, metavar="P",
                      help="drop messages independently with probability P")
    parser.add_argument("--loss-target", choices=["notify", "response", "random"],
                        default="random",
                        help="which message class the loss policy hits")
    parser.add_argument("--gamma", type=int,
                        help="error-correction window length in iterations "
                             "(default: last recorded RTT)")
    parser.add_argument("--feed-estimates", action="store_true",
                        help="feed raw predictions back into the estimator "
                             "during losses (naive compounding variant)")
    parser.add_argument("--out", metavar="PATH", help="CSV trace output path")
    parser.add_argument("--summary", action="store_true",
                        help="print a run summary")
    parser.add_argument("--hex-frames", action="store_true",
                        help="dump first-iteration wire frames as hex")
    parser.add_argument("--plots", metavar="DIR",
                        help="render report figures into DIR")
    return parser


def parse_args(argv: Sequence[str]) -> RunOptions:
    ns = build_parser().parse_args(argv)
    if ns.loss_every is not None:
        if ns.loss_every < 1:
            raise SystemExit("--loss-every must be >= 1")
        policy = LossPolicy.periodic(ns.loss_every, target=ns.loss_target)
    elif ns.loss_range is not None:
        policy = LossPolicy.loss_range(*ns.loss_range, target=ns.loss_target)
    elif ns.loss_prob is not None:
        policy = LossPolicy.bernoulli(ns.loss_prob, target=ns.loss_target)
    else:
        policy = LossPolicy.none()
    scenario = ns.scenario
    if scenario is None and ns.topology is None:
        scenario = "single-link"
    return RunOptions(
        scenario=scenario, topology=ns.topology, iterations=ns.iterations,
        seed=ns.seed, sigma0=ns.sigma0, lambda_min=ns.lambda_min, loss=policy,
        gamma=ns.gamma, feed_estimates=ns.feed_estimates, out=ns.out,
        summary=ns.summary, hex_frames=ns.hex_frames, plots=ns.plots)


def build_config(opts: RunOptions) -> ScenarioConfig:
    network = None
    scenario = opts.scenario or "single-link"
    if opts.topology is not None:
        network = load_topology(opts.topology)
        scenario = opts.topology
    return ScenarioConfig(
        scenario=scenario, network=network, iterations=opts.iterations,
        sigma0=opts.sigma0, lambda_min=opts.lambda_min, loss=opts.loss,
        seed=opts.seed, gamma=opts.gamma, feed_estimates=opts.feed_estimates)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _bottleneck_link(record: IterationRecord, route: tuple[str, ...]) -> str:
    return max(route, key=lambda lid: (record.prices[lid], -route.index(lid)))


def write_trace(trace: list[IterationRecord], path: str, config: ScenarioConfig) -> None:
    """One CSV row per (iteration, user), carrying the user's
    bottleneck-link price columns. Reruns are byte-identical."""
    if not trace:
        raise ValueError("empty trace")
    net = config.resolve_network()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in trace:
            for uid, user in net.users.items():
                lid = _bottleneck_link(rec, user.route)
                writer.writerow([
                    rec.t, lid, _fmt(rec.prices[lid]), uid,
                    _fmt(rec.rates[uid]), _fmt(rec.h_actual),
                    _fmt(rec.h_estimated), _fmt(rec.delta_h), _fmt(rec.w),
                    _fmt(rec.w_x[uid]), 1 if rec.loss is not None else 0,
                    _fmt(rec.objective),
                ])


def _describe_loss(policy: LossPolicy) -> str:
    if policy.kind == "none":
        return "none"
    if policy.kind == "periodic":
        return f"periodic k={policy.k} target={policy.target}"
    if policy.kind == "range":
        return f"range [{policy.a},{policy.b}] target={policy.target}"
    return f"bernoulli p={policy.p} target={policy.target}"


def print_summary(opts: RunOptions, stats: Summary, out=None) -> None:
    w = (out if out is not None else sys.stdout).write
    w("# run options\n")
    w(f"scenario: {opts.topology or opts.scenario}\n")
    w(f"iterations: {opts.iterations}  seed: {opts.seed}  "
      f"sigma0: {_fmt(opts.sigma0)}  lambda_min: {_fmt(opts.lambda_min)}\n")
    w(f"loss: {_describe_loss(opts.loss)}  gamma: {opts.gamma or 'auto'}  "
      f"feed-estimates: {'on' if opts.feed_estimates else 'off'}\n")
    w(f"out: {opts.out or '-'}  plots: {opts.plots or '-'}\n")
    w("# results\n")
    conv = stats.convergence_iteration
    w(f"convergence iteration: {conv if conv is not None else 'not reached'}\n")
    w("final prices: " + "  ".join(
        f"{lid}={_fmt(v)}" for lid, v in stats.final_prices.items()) + "\n")
    w("final rates: " + "  ".join(
        f"{uid}={_fmt(v)}" for uid, v in stats.final_rates.items()) + "\n")
    w("final flows: " + "  ".join(
        f"{lid}={_fmt(v)}" for lid, v in stats.final_flows.items()) + "\n")
    w(f"objective: {_fmt(stats.objective)}\n")
    w(f"w: first={_fmt(stats.w_first)} last={_fmt(stats.w_last)}\n")
    if stats.loss_errors:
        w(f"estimation: losses={len(stats.loss_iterations)} "
          f"max|h-hhat|={_fmt(stats.max_loss_error)} "
          f"mean|h-hhat|={_fmt(stats.mean_loss_error)}\n")
    else:
        w("estimation: n/a (no predictions used)\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        opts = parse_args(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return code
    try:
        config = build_config(opts)
        frame_log: Optional[list[str]] = [] if opts.hex_frames else None
        trace = run_scenario(config, frame_log=frame_log)
        if opts.hex_frames and frame_log:
            for line in frame_log:
                print(line)
        if opts.out:
            write_trace(trace, opts.out, config)
        if opts.plots:
            from .plotting import render_figures
            render_figures(trace, opts.plots)
        if opts.summary:
            print_summary(opts, summary(trace))
    except (OSError, TopologyError, ValueError) as exc:
        print(f"numsim: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
