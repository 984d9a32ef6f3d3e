"""Render the standard report figures for a simulation trace."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .engine import IterationRecord


def render_figures(trace: list[IterationRecord], outdir: str | Path,
                   stem: str = "trace") -> list[Path]:
    """Write the RTT, price, rate and estimator figures as PNG files.

    Returns the paths written, in a fixed order.
    """
    if not trace:
        raise ValueError("empty trace")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    iters = [r.t for r in trace]
    paths = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(iters, [r.h_actual for r in trace], label="actual RTT", lw=1.2)
    est = [(r.t, r.h_estimated) for r in trace if r.h_estimated is not None]
    if est:
        ax.plot([t for t, _ in est], [v for _, v in est],
                label="estimated RTT", lw=1.0, ls="--")
    losses = [r.t for r in trace if r.loss is not None]
    if losses:
        ymin = min(r.h_actual for r in trace)
        ax.plot(losses, [ymin] * len(losses), "|", color="red",
                label="loss", markersize=8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("interval (s)")
    ax.legend()
    ax.set_title("Update interval: actual vs estimated")
    paths.append(_save(fig, outdir / f"{stem}_rtt.png"))

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for lid in trace[0].prices:
        ax.plot(iters, [r.prices[lid] for r in trace], label=f"link {lid}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("price")
    ax.legend()
    ax.set_title("Link prices")
    paths.append(_save(fig, outdir / f"{stem}_prices.png"))

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for uid in trace[0].rates:
        ax.plot(iters, [r.rates[uid] for r in trace], label=f"user {uid}")
    for lid in trace[0].flows:
        ax.plot(iters, [r.flows[lid] for r in trace], ls=":", alpha=0.6,
                label=f"flow {lid}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("bandwidth")
    ax.legend(ncol=2, fontsize="small")
    ax.set_title("Rates and link flows")
    paths.append(_save(fig, outdir / f"{stem}_rates.png"))

    fig, ax = plt.subplots(figsize=(8, 4.5))
    w_pts = [(r.t, r.w) for r in trace if r.w is not None]
    if w_pts:
        ax.plot([t for t, _ in w_pts], [v for _, v in w_pts], label="w")
    for uid in trace[0].w_x:
        pts = [(r.t, r.w_x[uid]) for r in trace if r.w_x[uid] is not None]
        if pts:
            ax.plot([t for t, _ in pts], [v for _, v in pts],
                    ls="--", alpha=0.7, label=f"w_x {uid}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("estimator weight")
    ax.legend(fontsize="small")
    ax.set_title("Least-squares estimator weights")
    paths.append(_save(fig, outdir / f"{stem}_estimators.png"))
    return paths


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
