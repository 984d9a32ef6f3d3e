"""Optimization math: logistic utility, user demand response, subgradient pricing."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .topology import Network


@dataclass
class PriceState:
    """Per-link dual prices plus the step-size schedule state."""

    lam: dict[str, float]
    lambda_min: float = 0.0
    iteration: int = 0
    sigma0: float = 1.0

    def __post_init__(self):
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be > 0")
        if self.lambda_min < 0:
            raise ValueError("lambda_min must be >= 0")
        for lid, v in self.lam.items():
            if v < self.lambda_min:
                raise ValueError(f"price on {lid!r} below lambda_min")


def utility(x: float) -> float:
    """Logistic utility 1/(1 + e^-x) of a transmission rate."""
    if x < 0:
        raise ValueError("rate must be >= 0")
    return 1.0 / (1.0 + math.exp(-x))


def utility_slope(x: float) -> float:
    """Derivative of the logistic utility; peaks at 1/4 when x = 0."""
    u = math.exp(-x)
    return u / (1.0 + u) ** 2


def user_demand(lambda_s: float, x_max: float) -> float:
    """Rate maximizing utility(x) - lambda_s * x over [0, x_max].

    Closed form: the slope equation u/(1+u)^2 = lambda with u = e^-x has
    the admissible root u = 2*lambda / ((1 - 2*lambda) + sqrt(1 - 4*lambda)),
    written in conjugate form to stay stable for small prices. Prices at or
    above the maximum slope 1/4 drive demand to zero; a free link yields
    the full x_max.
    """
    if lambda_s < 0:
        raise ValueError("price must be >= 0")
    if x_max <= 0:
        raise ValueError("x_max must be > 0")
    if lambda_s == 0:
        return x_max
    if lambda_s >= 0.25:
        return 0.0
    u = 2.0 * lambda_s / ((1.0 - 2.0 * lambda_s) + math.sqrt(1.0 - 4.0 * lambda_s))
    x = -math.log(u)
    return min(max(x, 0.0), x_max)


def step_size(t: int, sigma0: float = 1.0) -> float:
    """Diminishing schedule sigma0/(t+1): vanishes but sums to infinity."""
    if t < 0:
        raise ValueError("iteration must be >= 0")
    return sigma0 / (t + 1)


def price_update(lam: float, sigma_t: float, capacity: float, flow: float,
                 lambda_min: float = 0.0) -> float:
    """One projected subgradient step on a link price.

    Price rises when flow exceeds capacity and falls otherwise, floored
    at lambda_min.
    """
    if sigma_t <= 0:
        raise ValueError("step size must be > 0")
    return max(lambda_min, lam - sigma_t * (capacity - flow))


def objective(network: Network, rates: Mapping[str, float]) -> float:
    """Summed user utility at the given rate allocation."""
    return sum(utility(rates[uid]) for uid in network.users)
