"""Figure rendering for the report-emitting CLI paths.

Renders compact matplotlib figures next to the delimited output when asked;
the data files remain the primary artifact.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

plt.rcParams["figure.figsize"] = (6.0, 3.6)
plt.rcParams["figure.dpi"] = 150
plt.rcParams["savefig.bbox"] = "tight"
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3


def save_rate_figure(path: str, d: Sequence[float], rate: Sequence[float], b: float) -> None:
    fig, ax = plt.subplots()
    ax.plot(d, rate, lw=1.5)
    ax.axvline(b, color="crimson", ls=":", lw=1, label="d = b (rate 0)")
    ax.set_xlabel("threshold d")
    ax.set_ylabel("rate")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path)
    plt.close(fig)


def save_cgf_figure(path: str, lam: Sequence[float], total: Sequence[float]) -> None:
    fig, ax = plt.subplots()
    ax.plot(lam, total, lw=1.5)
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xlabel("tilt lambda")
    ax.set_ylabel("normalized CGF")
    fig.savefig(path)
    plt.close(fig)


def save_tail_figure(path: str, x: Sequence[float], log_value: Sequence[float], xlabel: str) -> None:
    fig, ax = plt.subplots()
    ax.plot(x, log_value, marker="o", ms=3, lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("log tail value")
    fig.savefig(path)
    plt.close(fig)


def save_mc_figure(
    path: str,
    T: Sequence[float],
    ratio: Sequence[float],
    rel_err: Sequence[float],
) -> None:
    fig, ax = plt.subplots()
    ax.errorbar(T, ratio, yerr=[3 * r * e for r, e in zip(ratio, rel_err)], marker="o", ms=4,
                lw=1.2, capsize=3)
    ax.axhline(1.0, color="gray", lw=0.8)
    ax.set_xlabel("horizon T")
    ax.set_ylabel("MC / approximation")
    fig.savefig(path)
    plt.close(fig)
