"""Iteration-indexed feedback loop: price broadcast, user response, loss
injection, least-squares recovery, and subgradient price updates.

Every run is a pure function of (config, seed): the only randomness comes
from one random.Random instance (CPython's Mersenne Twister, stable across
platforms), so traces are reproducible byte for byte.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from . import delay_model, ls_estimator, num_core, wire_codec
from .ls_estimator import CorrectionWindow, InsufficientHistory, LsAggregates, WindowStats
from .topology import BUILTIN_NETWORKS, Network, aggregate_flow, path_price

LOSS_NOTIFY = "notify"
LOSS_RESPONSE = "response"


@dataclass(frozen=True)
class LossPolicy:
    """When and which message class gets dropped."""

    kind: str = "none"  # none | periodic | range | bernoulli
    k: int = 0
    a: int = 0
    b: int = 0
    p: float = 0.0
    target: str = "random"  # notify | response | random

    def __post_init__(self):
        if self.kind not in ("none", "periodic", "range", "bernoulli"):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.target not in (LOSS_NOTIFY, LOSS_RESPONSE, "random"):
            raise ValueError(f"unknown loss target {self.target!r}")
        if self.kind == "periodic" and self.k < 1:
            raise ValueError("periodic loss needs k >= 1")
        if self.kind == "range" and self.a > self.b:
            raise ValueError("loss range needs a <= b")
        if self.kind == "bernoulli" and not 0 <= self.p <= 1:
            raise ValueError("loss probability must be in [0, 1]")

    @classmethod
    def none(cls) -> "LossPolicy":
        return cls()

    @classmethod
    def periodic(cls, k: int, target: str = "random") -> "LossPolicy":
        return cls(kind="periodic", k=k, target=target)

    @classmethod
    def loss_range(cls, a: int, b: int, target: str = "random") -> "LossPolicy":
        return cls(kind="range", a=a, b=b, target=target)

    @classmethod
    def bernoulli(cls, p: float, target: str = "random") -> "LossPolicy":
        return cls(kind="bernoulli", p=p, target=target)


def inject_loss(policy: LossPolicy, t: int, rng: random.Random) -> Optional[str]:
    """Decide whether iteration t drops a message class, and which one.

    All packets of the chosen class are dropped for that iteration; the
    'random' target flips a seeded coin between notifications and responses.
    """
    if policy.kind == "none":
        drop = False
    elif policy.kind == "periodic":
        drop = t % policy.k == 0
    elif policy.kind == "range":
        drop = policy.a <= t <= policy.b
    else:  # bernoulli
        drop = rng.random() < policy.p
    if not drop:
        return None
    if policy.target == "random":
        return LOSS_NOTIFY if rng.random() < 0.5 else LOSS_RESPONSE
    return policy.target


@dataclass
class ScenarioConfig:
    scenario: str = "single-link"
    network: Optional[Network] = None
    iterations: int = 500
    sigma0: float = 1.0
    lambda_min: float = 0.0
    loss: LossPolicy = field(default_factory=LossPolicy.none)
    seed: int = 42
    epsilon_rtt: float = 0.0
    noise_eps: float = 0.0
    gamma: Optional[int] = None
    eps_correct: Optional[float] = None
    feed_estimates: bool = False
    min_interval: float = 1e-6
    trust_tol: float = 0.01
    recovery_damping: float = 0.1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.gamma is not None and self.gamma < 1:
            raise ValueError("gamma must be >= 1")

    def resolve_network(self) -> Network:
        if self.network is not None:
            return self.network
        try:
            return BUILTIN_NETWORKS[self.scenario]()
        except KeyError:
            raise ValueError(f"unknown scenario {self.scenario!r}") from None


@dataclass
class IterationRecord:
    t: int
    prices: dict[str, float]
    rates: dict[str, float]
    flows: dict[str, float]
    h_actual: float
    h_estimated: Optional[float]
    delta_h: Optional[float]
    w: Optional[float]
    w_x: dict[str, Optional[float]]
    loss: Optional[str]
    objective: float


class Simulation:
    """Owns all mutable loop state; strictly sequential."""

    def __init__(self, config: ScenarioConfig,
                 frame_log: Optional[list[str]] = None):
        self.config = config
        self.net = config.resolve_network()
        self.rng = random.Random(config.seed)
        self.t = 0
        # users start at full blast, which congests the bottleneck
        self.rates = {uid: u.x_max for uid, u in self.net.users.items()}
        self.believed_rates = dict(self.rates)
        self.lam = {lid: config.lambda_min for lid in self.net.links}
        self.interval_est = LsAggregates()
        self.demand_est = {uid: LsAggregates() for uid in self.net.users}
        self.rtt_records = {
            lid: delay_model.RttRecord(lid, 0.0, 0.0, config.epsilon_rtt)
            for lid in self.net.links
        }
        self.last_h: Optional[float] = None
        self.rtt_seen = 0.0
        # the estimator is consulted only after it has tracked one full
        # window of measurements within trust_tol relative error
        self.trusted = False
        self._trust_err = 0.0
        self._trust_h = 0.0
        self._trust_n = 0
        self.interval_stats: Optional[WindowStats] = None
        self.demand_stats: dict[str, Optional[WindowStats]] = {
            uid: None for uid in self.net.users
        }
        self.window = CorrectionWindow(t_i=1, gamma=config.gamma or 1, t_timeout=2)
        self.demand_windows = {
            uid: CorrectionWindow(t_i=1, gamma=config.gamma or 1, t_timeout=2)
            for uid in self.net.users
        }
        self.frame_log = frame_log
        self.trace: list[IterationRecord] = []

    # -- wire helpers -----------------------------------------------------

    def _broadcast_frames(self) -> dict[str, bytes]:
        ts = (self.t * 1000) & 0xFFFFFFFF
        frames = {}
        for idx, lid in enumerate(self.net.links):
            msg = wire_codec.PriceMessage(
                code=wire_codec.CODE_PRICE, identifier=idx,
                sequence=self.t & 0xFFFF, timestamp=ts, payload=self.lam[lid])
            frames[lid] = wire_codec.encode(msg)
        return frames

    def _response_frame(self, user_idx: int, rate: float) -> bytes:
        msg = wire_codec.PriceMessage(
            code=wire_codec.CODE_RESPONSE, identifier=user_idx,
            sequence=self.t & 0xFFFF,
            timestamp=(self.t * 1000) & 0xFFFFFFFF, payload=rate)
        return wire_codec.encode(msg)

    def _log_frames(self, frames):
        if self.frame_log is not None and self.t == 1:
            self.frame_log.extend(wire_codec.hex_dump(f) for f in frames)

    # -- correction plumbing ----------------------------------------------

    def _eps_correct(self, stats: Optional[WindowStats]) -> float:
        if self.config.eps_correct is not None:
            return self.config.eps_correct
        if stats is None:
            return math.inf
        return 0.01 * stats.mean_h

    def _predict(self, agg: LsAggregates, lam: float) -> Optional[float]:
        try:
            return agg.predict(lam)
        except InsufficientHistory:
            return None

    def _rtt_iters(self, fallback: float) -> int:
        base = self.last_h if self.last_h is not None else fallback
        return max(1, math.ceil(base))

    def _roll_windows(self, rtt_now: float) -> None:
        if self.t < self.window.closes_at():
            return
        if (not self.trusted and self._trust_n > 0
                and self._trust_err <= self.config.trust_tol * self._trust_h):
            self.trusted = True
        self._trust_err = self._trust_h = 0.0
        self._trust_n = 0
        stats = self.window.stats()
        if stats is not None:
            self.interval_stats = stats
        for uid, win in self.demand_windows.items():
            ustats = win.stats()
            if ustats is not None:
                self.demand_stats[uid] = ustats
        t_i = self.t + 1
        rtt_iters = self._rtt_iters(rtt_now)
        gamma = self.config.gamma or rtt_iters
        self.window = CorrectionWindow(t_i=t_i, gamma=gamma,
                                       t_timeout=t_i + rtt_iters)
        self.demand_windows = {
            uid: CorrectionWindow(t_i=t_i, gamma=gamma, t_timeout=t_i + rtt_iters)
            for uid in self.net.users
        }

    # -- one feedback iteration --------------------------------------------

    def step(self) -> IterationRecord:
        cfg = self.config
        self.t += 1
        t = self.t
        sigma_t = num_core.step_size(t - 1, cfg.sigma0)
        drop = inject_loss(cfg.loss, t, self.rng)
        prices = dict(self.lam)  # broadcast snapshot

        # price notifications go out every iteration; users respond unless
        # the notification never reached them
        frames = self._broadcast_frames()
        self._log_frames(frames.values())
        responses_received = False
        if drop != LOSS_NOTIFY:
            response_frames = []
            for idx, (uid, user) in enumerate(self.net.users.items()):
                decoded = {lid: wire_codec.decode(frames[lid]).payload
                           for lid in user.route}
                lam_s = sum(decoded.values())
                demand = num_core.user_demand(lam_s, user.x_max)
                # users never transmit below their minimum requirement,
                # which keeps the delay model finite
                self.rates[uid] = max(demand, user.x_min_req)
                response_frames.append(self._response_frame(idx, self.rates[uid]))
            self._log_frames(response_frames)
            if drop != LOSS_RESPONSE:
                for uid, frame in zip(self.net.users, response_frames):
                    self.believed_rates[uid] = wire_codec.decode(frame).payload
                responses_received = True

        # ground-truth delays for this iteration's traffic
        flows = aggregate_flow(self.net, self.rates)
        rtts = {}
        for lid, link in self.net.links.items():
            d_max = delay_model.link_max_delay(self.net, flows, self.rates, lid)
            rtts[lid] = delay_model.link_rtt(d_max, link.serv_delay)
        # the update interval is the worst RTT seen so far plus slack: the
        # network must wait out the slowest historical round trip
        self.rtt_seen = max(self.rtt_seen, max(rtts.values()))
        rtt_now = max(rtts.values()) + cfg.epsilon_rtt
        farthest = max(self.net.users,
                       key=lambda uid: (delay_model.path_delay(
                           self.net, flows, self.rates, uid), uid))
        noise = self.rng.uniform(-cfg.noise_eps, cfg.noise_eps) if cfg.noise_eps else 0.0
        h_actual = rtt_now + noise

        lam_pair = path_price(self.net, prices, farthest)
        user_prices = {uid: path_price(self.net, prices, uid)
                       for uid in self.net.users}
        raw_hhat = self._predict(self.interval_est, lam_pair)
        raw_xhat = {uid: self._predict(self.demand_est[uid], user_prices[uid])
                    for uid in self.net.users}
        corrected_hhat = None
        if raw_hhat is not None:
            stats = self.window.stats() or self.interval_stats
            corrected_hhat = ls_estimator.correct(
                raw_hhat, stats, self._eps_correct(stats),
                floor=cfg.min_interval)

        if responses_received:
            h_estimated = corrected_hhat if self.trusted else None
            if corrected_hhat is not None:
                self._trust_err += abs(h_actual - corrected_hhat)
                self._trust_h += h_actual
                self._trust_n += 1
            self.interval_est.observe(h_actual, lam_pair)
            self.last_h = h_actual
            for lid in self.net.links:
                self.rtt_records[lid] = delay_model.rtt_max_update(
                    self.rtt_records[lid], rtts[lid])
            self.window.note_response(t)
            for uid in self.net.users:
                self.demand_windows[uid].note_response(t)
                self.demand_est[uid].observe(self.rates[uid], user_prices[uid])
                if raw_xhat[uid] is not None:
                    self.demand_windows[uid].record(t, self.rates[uid], raw_xhat[uid])
            if raw_hhat is not None:
                self.window.record(t, h_actual, raw_hhat)
        elif not self.trusted:
            # the estimator has not proven itself yet, so the network falls
            # back on the last values it actually measured
            h_estimated = None
        else:
            # recover the missing interval and per-user demands
            if cfg.feed_estimates:
                h_used = raw_hhat
            else:
                h_used = corrected_hhat
            if h_used is None:
                h_used = self.last_h if self.last_h is not None else rtt_now
            h_used = max(h_used, cfg.min_interval)
            h_estimated = h_used
            for uid, user in self.net.users.items():
                xhat = raw_xhat[uid]
                if xhat is not None and not cfg.feed_estimates:
                    ustats = (self.demand_windows[uid].stats()
                              or self.demand_stats[uid])
                    xhat = ls_estimator.correct(
                        xhat, ustats, self._eps_correct(ustats),
                        floor=cfg.min_interval)
                    # recovered demand is damped: trusting extrapolation at
                    # full strength feeds estimation error straight back
                    # into the price loop
                    xhat *= 1.0 - cfg.recovery_damping
                    xhat = min(max(xhat, user.x_min_req), user.x_max)
                elif xhat is not None:
                    xhat = min(max(xhat, cfg.min_interval), user.x_max)
                if xhat is not None:
                    self.believed_rates[uid] = xhat
                # else: keep the stale belief
            if cfg.feed_estimates:
                # the naive variant trusts its own predictions as if observed
                self.interval_est.observe(h_used, lam_pair)
                if raw_hhat is not None:
                    self.window.record(t, h_used, raw_hhat)
                for uid in self.net.users:
                    self.demand_est[uid].observe(
                        max(self.believed_rates[uid], cfg.min_interval),
                        user_prices[uid])
                    if raw_xhat[uid] is not None:
                        self.demand_windows[uid].record(
                            t, self.believed_rates[uid], raw_xhat[uid])

        believed_flows = aggregate_flow(self.net, self.believed_rates)
        for lid, link in self.net.links.items():
            self.lam[lid] = num_core.price_update(
                self.lam[lid], sigma_t, link.capacity, believed_flows[lid],
                cfg.lambda_min)

        self._roll_windows(rtt_now)

        try:
            w = self.interval_est.estimator()
        except InsufficientHistory:
            w = None
        w_x = {}
        for uid in self.net.users:
            try:
                w_x[uid] = self.demand_est[uid].estimator()
            except InsufficientHistory:
                w_x[uid] = None
        record = IterationRecord(
            t=t, prices=prices, rates=dict(self.rates), flows=flows,
            h_actual=h_actual, h_estimated=h_estimated,
            delta_h=abs(h_actual - h_estimated) if h_estimated is not None else None,
            w=w, w_x=w_x, loss=drop,
            objective=num_core.objective(self.net, self.rates))
        self.trace.append(record)
        return record

    def run(self) -> list[IterationRecord]:
        while self.t < self.config.iterations:
            self.step()
        return self.trace


def run_scenario(config: ScenarioConfig,
                 frame_log: Optional[list[str]] = None) -> list[IterationRecord]:
    """Execute a full scenario; identical config and seed give an
    identical trace."""
    return Simulation(config, frame_log=frame_log).run()


@dataclass
class Summary:
    iterations: int
    final_prices: dict[str, float]
    final_rates: dict[str, float]
    final_flows: dict[str, float]
    objective: float
    w_first: Optional[float]
    w_last: Optional[float]
    convergence_iteration: Optional[int]
    loss_iterations: list[int]
    loss_errors: list[float]

    @property
    def max_loss_error(self) -> Optional[float]:
        return max(self.loss_errors) if self.loss_errors else None

    @property
    def mean_loss_error(self) -> Optional[float]:
        if not self.loss_errors:
            return None
        return sum(self.loss_errors) / len(self.loss_errors)


def summary(trace: list[IterationRecord], price_tol: float = 1e-3) -> Summary:
    """Condense a trace: final state, estimator endpoints, loss-time errors
    and the first iteration after which prices stop moving."""
    if not trace:
        raise ValueError("empty trace")
    w_values = [r.w for r in trace if r.w is not None]
    loss_records = [r for r in trace if r.loss is not None]
    convergence = None
    for i in range(1, len(trace)):
        moved = sum(abs(trace[i].prices[l] - trace[i - 1].prices[l])
                    for l in trace[i].prices)
        if moved >= price_tol:
            convergence = None
        elif convergence is None:
            convergence = trace[i].t
    last = trace[-1]
    return Summary(
        iterations=len(trace),
        final_prices=dict(last.prices),
        final_rates=dict(last.rates),
        final_flows=dict(last.flows),
        objective=last.objective,
        w_first=w_values[0] if w_values else None,
        w_last=w_values[-1] if w_values else None,
        convergence_iteration=convergence,
        loss_iterations=[r.t for r in loss_records],
        loss_errors=[r.delta_h for r in loss_records if r.delta_h is not None],
    )
