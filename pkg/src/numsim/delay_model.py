"""M/M/1-style deterministic delay and RTT bounds derived from rate allocations."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

from .topology import Network


class SaturatedLinkError(ValueError):
    """Flow at or below the link's minimum rate: use the buffer branch."""


def link_term(flow: float, min_rate: float) -> float:
    """Per-link queueing term rho/(flow - min_rate) + 1/min_rate.

    Only valid on the smooth branch flow > min_rate > 0; saturation is
    signalled so callers can switch to the buffer-drain delay.
    """
    if min_rate <= 0:
        raise ValueError("min_rate must be > 0")
    if flow <= min_rate:
        raise SaturatedLinkError(f"flow {flow} <= min_rate {min_rate}")
    rho = min_rate / flow
    return rho / (flow - min_rate) + 1.0 / min_rate


def saturated_delay(buffer: float, rate: float) -> float:
    """Buffer-drain delay B/x used when a link is saturated."""
    if rate <= 0:
        raise ValueError("rate must be > 0")
    if buffer < 0:
        raise ValueError("buffer must be >= 0")
    return buffer / rate


def path_delay(network: Network, flows: Mapping[str, float],
               rates: Mapping[str, float], user_id: str) -> float:
    """One-way message delay along a user's route, plus propagation.

    Saturated links contribute the user's buffer-drain time instead of
    the queueing term.
    """
    user = network.users[user_id]
    total = 0.0
    for lid in user.route:
        link = network.links[lid]
        try:
            total += link_term(flows[lid], link.min_rate)
        except SaturatedLinkError:
            total += saturated_delay(user.buffer, rates[user_id])
        total += link.prop_delay
    return total


def link_max_delay(network: Network, flows: Mapping[str, float],
                   rates: Mapping[str, float], link_id: str) -> float:
    """Longest one-way delay among the users traversing a link."""
    users = network.incidence[link_id]
    if not users:
        raise ValueError(f"link {link_id!r} carries no users")
    return max(path_delay(network, flows, rates, uid) for uid in users)


def link_rtt(d_l_max: float, serv_delay: float) -> float:
    """Round-trip bound 2*d_max + serv_delay, taken with equality."""
    if d_l_max < 0 or serv_delay < 0:
        raise ValueError("delays must be >= 0")
    return 2.0 * d_l_max + serv_delay


@dataclass(frozen=True)
class RttRecord:
    """Running maximum RTT for a link, with the configured slack epsilon."""

    link_id: str
    rtt: float
    rtt_max_seen: float
    epsilon: float = 0.0

    @property
    def rtt_max(self) -> float:
        return self.rtt_max_seen + self.epsilon


def rtt_max_update(record: RttRecord, rtt_now: float) -> RttRecord:
    """Fold a new RTT observation into the running maximum."""
    if rtt_now <= 0:
        raise ValueError("rtt must be > 0")
    return replace(record, rtt=rtt_now,
                   rtt_max_seen=max(record.rtt_max_seen, rtt_now))
