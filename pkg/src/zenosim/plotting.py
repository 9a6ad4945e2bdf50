"""Figure renderers for scenario outputs. Files only, no interactive UI."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .channels import BranchMixture
from .estimates import EstimateReport
from .zeno import LeakageSweepResult, SurvivalCurve


def save_survival_history(curve: SurvivalCurve, path: str | Path) -> Path:
    """Survival after each event, one marker per question."""
    path = Path(path)
    ns = [n for n, _ in curve.points]
    ws = [w for _, w in curve.points]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ns, ws, marker="o", markersize=3, linewidth=1.0)
    ax.set_xlabel("events so far")
    ax.set_ylabel("survival weight in subspace")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    title = f"survival history, N = {curve.metadata.get('event_count')}"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_leakage_fit(sweep: LeakageSweepResult, path: str | Path) -> Path:
    """Log-log leakage against event count with the fitted power law."""
    path = Path(path)
    ns = np.array([n for n, _ in sweep.curve.points], dtype=float)
    leaks = np.array(sweep.leakages)
    keep = leaks > 0.0
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(ns[keep], leaks[keep], "o", label="measured leakage")
    grid = np.geomspace(ns[keep].min(), ns[keep].max(), 64)
    fit = np.exp(sweep.intercept) * grid**sweep.slope
    ax.loglog(grid, fit, "-", label=f"fit, slope {sweep.slope:.3f}")
    ax.set_xlabel("event count N")
    ax.set_ylabel("1 - survival")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_branch_classes(mixture: BranchMixture, path: str | Path) -> Path:
    """Total weight per count of released terminals."""
    path = Path(path)
    classes = mixture.hamming_class_weights()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(np.arange(classes.size), classes)
    ax.set_xlabel("terminals released")
    ax.set_ylabel("total branch weight")
    ax.set_title(f"{mixture.terminal_count} terminals, {2**mixture.terminal_count} branches")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_ion_estimate(report: EstimateReport, path: str | Path) -> Path:
    """Two-panel summary: velocity comparison and spread vs ion size."""
    path = Path(path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.6))

    ax1.barh(
        ["quantum spread", "thermal speed"],
        [report.delta_v, report.v_thermal],
        color=["tab:orange", "tab:blue"],
    )
    ax1.set_xscale("log")
    ax1.set_xlabel("velocity (m/s)")
    ax1.set_title(f"ratio {report.velocity_ratio:.0f}")

    nm = 1e9
    ax2.barh(
        ["ion diameter", "spread at trigger"],
        [report.parameters.ion_diameter * nm, report.spread_at_trigger * nm],
        color=["tab:gray", "tab:orange"],
    )
    ax2.set_xlabel("length (nm)")
    ax2.set_title(f"spread / ion size {report.spread_to_ion_size:.2f}")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
