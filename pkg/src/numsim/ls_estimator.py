"""Streaming least-squares recovery of update intervals and bandwidth demand.

The model is strictly proportional: price = interval * w. The estimator
keeps only two running sums and a count, so memory stays constant no
matter how long the history grows. Windowed error statistics drive the
post-hoc correction of predictions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional


class InsufficientHistory(Exception):
    """No usable samples yet; callers fall back to the last measurement."""


@dataclass
class LsAggregates:
    """Constant-memory normal-equation sums for the proportional fit."""

    s_xy: float = 0.0
    s_xx: float = 0.0
    count: int = 0

    def observe(self, h: float, lam: float) -> None:
        """Fold one (sample, price) pair into the running sums."""
        if h <= 0:
            raise ValueError("sample must be > 0")
        if lam < 0:
            raise ValueError("price must be >= 0")
        self.s_xy += h * lam
        self.s_xx += h * h
        self.count += 1

    def estimator(self) -> float:
        """Current fitted weight w = sum(h*lam) / sum(h^2)."""
        if self.count < 1 or self.s_xx <= 0:
            raise InsufficientHistory("no samples observed")
        return self.s_xy / self.s_xx

    def predict(self, lam_next: float) -> float:
        """Invert the fit: predicted sample = lam_next / w."""
        w = self.estimator()
        if w <= 0:
            raise InsufficientHistory("fitted weight is not positive")
        return lam_next / w


def predict_interval(agg: LsAggregates, lam_next: float) -> float:
    """Predicted next update interval from price history."""
    return agg.predict(lam_next)


def predict_demand(agg_x: LsAggregates, lam_next: float) -> float:
    """Predicted user bandwidth demand from (rate, price) history."""
    return agg_x.predict(lam_next)


@dataclass(frozen=True)
class WindowStats:
    """Means of observed and predicted samples over one correction window."""

    mean_h: float
    mean_hhat: float
    mean_abs_err: float
    count: int


def window_stats(history: Mapping[int, tuple[float, float]],
                 t_i: int, t_j: int) -> WindowStats:
    """Means over iterations in [t_i, t_j]; iterations without both an
    observation and a prediction are skipped."""
    if t_i >= t_j:
        raise ValueError("window must satisfy t_i < t_j")
    pairs = [history[t] for t in range(t_i, t_j + 1) if t in history]
    if not pairs:
        raise ValueError("empty correction window")
    n = len(pairs)
    mean_h = sum(h for h, _ in pairs) / n
    mean_hhat = sum(hh for _, hh in pairs) / n
    mean_abs_err = sum(abs(h - hh) for h, hh in pairs) / n
    return WindowStats(mean_h, mean_hhat, mean_abs_err, n)


def correct(h_hat_next: float, stats: Optional[WindowStats],
            eps_correct: float, floor: float = 1e-9) -> float:
    """Nudge a prediction by the window's mean error.

    Applied only when the mean error exceeds the threshold; the direction
    follows the sign of the observed-vs-predicted mean gap. Output is
    floored to stay positive.
    """
    if stats is None or stats.mean_abs_err <= eps_correct:
        return h_hat_next
    if abs(stats.mean_h - stats.mean_hhat) <= eps_correct:
        return h_hat_next
    if stats.mean_h < stats.mean_hhat:
        adjusted = h_hat_next - stats.mean_abs_err
    else:
        adjusted = h_hat_next + stats.mean_abs_err
    return max(adjusted, floor)


def advance_window(t_i: int, gamma: int, response_arrived_by: Optional[int],
                   t_timeout: int) -> int:
    """End iteration of the current window.

    Normally t_i + gamma; if the nominal end overshoots the timeout and no
    response has arrived by then, the window is cut at the timeout.
    """
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    nominal = t_i + gamma
    if nominal > t_timeout and (response_arrived_by is None
                                or response_arrived_by > t_timeout):
        return t_timeout
    return nominal


@dataclass
class CorrectionWindow:
    """Bookkeeping for one sliding error-measurement window."""

    t_i: int
    gamma: int
    t_timeout: int
    history: dict[int, tuple[float, float]] = None
    first_response: Optional[int] = None

    def __post_init__(self):
        if self.history is None:
            self.history = {}

    def record(self, t: int, h: float, h_hat: float) -> None:
        self.history[t] = (h, h_hat)

    def note_response(self, t: int) -> None:
        if self.first_response is None:
            self.first_response = t

    def closes_at(self) -> int:
        return advance_window(self.t_i, self.gamma, self.first_response,
                              self.t_timeout)

    def stats(self) -> Optional[WindowStats]:
        if not self.history:
            return None
        t_j = max(self.closes_at(), self.t_i + 1)
        return window_stats(self.history, self.t_i, t_j)
