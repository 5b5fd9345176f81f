"""Figure rendering from parsed trace frames.

Outputs are vector graphics (format inferred from the output suffix; SVG
and PDF both work). Rendering is deterministic for fixed inputs: the SVG
hash salt is pinned and date metadata stripped.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .frames import load_trace

LOG_FLOOR = 1e-16
RATE_BOUND_DEFAULT = 0.02
INPUT_BOUND_DEFAULT = 2.0

plt.rcParams["svg.hashsalt"] = "sspc-plots"


def _save(fig, out):
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata={"Date": None} if out.suffix == ".svg" else None)
    plt.close(fig)
    return out


def _bound_lines(ax, bound):
    for b in (bound, -bound):
        ax.axhline(b, color="0.4", linestyle="--", linewidth=0.9)


def plot_traces(trace_paths, out, rate_bound: float = RATE_BOUND_DEFAULT,
                input_bound: float = INPUT_BOUND_DEFAULT) -> Path:
    """State/input trajectory panels, one column per trace.

    For attitude traces (6 states, 3 inputs): angular rates with the rate
    bound, Euler angles, torques with the torque bound. Other shapes fall
    back to generic state/input rows without bound lines.
    """
    if not trace_paths:
        raise ValueError("at least one trace is required")
    frames = [load_trace(p) for p in trace_paths]
    attitude = all(f.n_x == 6 and f.n_u == 3 for f in frames)
    n_rows = 3 if attitude else 2
    fig, axes = plt.subplots(n_rows, len(frames),
                             figsize=(4.2 * len(frames), 2.4 * n_rows),
                             sharex=True, squeeze=False)
    for col, frame in enumerate(frames):
        if attitude:
            ax = axes[0][col]
            for i in range(3):
                ax.plot(frame.t, frame.states[:, i], label=f"$\\omega_{i + 1}$")
            _bound_lines(ax, rate_bound)
            ax.set_title(frame.label())
            ax.set_ylabel("rate [rad/s]")
            ax.legend(fontsize=7, loc="upper right")

            ax = axes[1][col]
            for i in range(3):
                ax.plot(frame.t, frame.states[:, 3 + i],
                        label=f"$\\theta_{i + 1}$")
            ax.set_ylabel("angle [rad]")
            ax.legend(fontsize=7, loc="upper right")

            ax = axes[2][col]
            for i in range(3):
                ax.plot(frame.t, frame.inputs[:, i], label=f"$u_{i + 1}$")
            _bound_lines(ax, input_bound)
            ax.set_ylabel("torque [N m]")
            ax.set_xlabel("t [s]")
            ax.legend(fontsize=7, loc="upper right")
        else:
            ax = axes[0][col]
            for i in range(frame.n_x):
                ax.plot(frame.t, frame.states[:, i], label=f"x_{i}")
            ax.set_title(frame.label())
            ax.set_ylabel("state")
            ax.legend(fontsize=7)
            ax = axes[1][col]
            for i in range(frame.n_u):
                ax.plot(frame.t, frame.inputs[:, i], label=f"u_{i}")
            ax.set_ylabel("input")
            ax.set_xlabel("t [s]")
            ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out)


def plot_residuals(trace_paths, out) -> Path:
    """Stacked tracking-residual (log scale) and plan-cost panels, one line
    per trace."""
    if not trace_paths:
        raise ValueError("at least one trace is required")
    frames = [load_trace(p) for p in trace_paths]
    fig, (ax_res, ax_cost) = plt.subplots(2, 1, figsize=(6.0, 5.2), sharex=True)
    for frame in frames:
        ax_res.semilogy(frame.t, np.maximum(frame.residual, LOG_FLOOR),
                        label=frame.label())
        ax_cost.plot(frame.t, frame.cost, label=frame.label())
    ax_res.set_ylabel(r"$\|F(z_k, x_k)\|_2$")
    ax_res.legend(fontsize=8)
    ax_res.grid(True, which="both", alpha=0.3)
    ax_cost.set_ylabel("plan cost")
    ax_cost.set_xlabel("t [s]")
    ax_cost.legend(fontsize=8)
    ax_cost.grid(True, alpha=0.3)
    fig.tight_layout()
    return _save(fig, out)
