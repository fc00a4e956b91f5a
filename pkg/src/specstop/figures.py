"""File-based matplotlib renderings of benchmark output.

Everything here consumes the plain-dict form of a report (or the curve rows)
and writes a PNG; nothing is shown interactively.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _ordered_rules(entries: Sequence[Mapping]) -> list[str]:
    seen: list[str] = []
    for entry in entries:
        if entry["rule"] not in seen:
            seen.append(entry["rule"])
    return seen


def plot_error_vs_n(report: Mapping, path) -> None:
    """Mean error against sample size, one line per rule, log-log axes,
    error bars at two standard errors."""
    summaries = report["summaries"]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for rule in _ordered_rules(summaries):
        points = [
            s
            for s in summaries
            if s["rule"] == rule and s["mean_error"] is not None
        ]
        if not points:
            continue
        ns = [s["n"] for s in points]
        means = [s["mean_error"] for s in points]
        spread = [2.0 * (s["se_error"] or 0.0) for s in points]
        ax.errorbar(ns, means, yerr=spread, marker="o", capsize=3, label=rule)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("mean squared error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_stopping_times(report: Mapping, path) -> None:
    """Overlaid stopping-time histograms per rule at the largest sample size."""
    records = [r for r in report["records"] if r["t_stop"] is not None]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    if records:
        n_max = max(r["n"] for r in records)
        at_max = [r for r in records if r["n"] == n_max]
        times = [r["t_stop"] for r in at_max]
        lo, hi = min(times), max(times)
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        for rule in _ordered_rules(at_max):
            vals = [r["t_stop"] for r in at_max if r["rule"] == rule]
            ax.hist(vals, bins=30, range=(lo, hi), alpha=0.55, label=rule)
        ax.set_title(f"n = {n_max}")
        ax.legend()
    ax.set_xlabel("stopping time")
    ax.set_ylabel("trials")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_curves(rows: Sequence[Mapping], path) -> None:
    """Error decomposition and observable risks against iteration time."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ts = [row["t"] for row in rows]
    for column, style in [
        ("bias2", "--"),
        ("variance", ":"),
        ("risk", "-"),
        ("empirical_risk", "-."),
        ("reduced_risk", "-."),
    ]:
        ax.plot(ts, [row[column] for row in rows], style, label=column)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("iteration time t")
    ax.set_ylabel("value")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
