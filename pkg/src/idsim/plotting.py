"""Figure rendering for the CLI report path.

Every runner that emits a delimited table can also render a matching
matplotlib figure next to it; rendering is presentation only and never
feeds back into the statistics.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_identity(report: dict, path: str, title: str = "") -> str:
    """Two bars with standard-error whiskers, one per identity arm."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    means = [report["lhs_mean"], report["rhs_mean"]]
    errs = [report["lhs_se"], report["rhs_se"]]
    ax.bar(["translated arm", "weighted arm"], means, yerr=errs, capsize=6,
           color=["#4878cf", "#6acc65"])
    ax.set_ylabel("estimate")
    ax.set_title(title or f"{report.get('name', 'identity')}  z = {report['z']:.2f}")
    return _save(fig, path)


def plot_cf(thetas, deviations, bound: float, path: str) -> str:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.plot(thetas, deviations, "o-", label="|empirical - oracle|")
    ax.axhline(bound, color="crimson", ls="--", label="pass bound")
    ax.set_xlabel("frequency")
    ax.set_ylabel("modulus deviation")
    ax.legend()
    ax.set_title("characteristic function check")
    return _save(fig, path)


def plot_limit(h_values, estimates, std_errors, oracle: float, extrapolated: float,
               path: str) -> str:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.errorbar(h_values, estimates, yerr=std_errors, fmt="o-", label="h^-1 E f(X_h)")
    ax.axhline(oracle, color="crimson", ls="--", label=f"oracle {oracle:.4g}")
    ax.axhline(extrapolated, color="gray", ls=":", label=f"extrapolated {extrapolated:.4g}")
    ax.set_xscale("log")
    ax.set_xlabel("h")
    ax.legend()
    ax.set_title("small-time limit")
    return _save(fig, path)


def plot_path(times, values, path: str, title: str = "series realization") -> str:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.step(times, values, where="post")
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_title(title)
    return _save(fig, path)


def plot_samples(values: np.ndarray, labels, path: str,
                 title: str = "sampled vectors") -> str:
    values = np.asarray(values)
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for j, lab in enumerate(labels):
        ax.hist(values[:, j], bins=60, histtype="step", density=True, label=str(lab))
    ax.set_xlabel("value")
    ax.set_ylabel("density")
    ax.legend()
    ax.set_title(title)
    return _save(fig, path)
