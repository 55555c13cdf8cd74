"""Figure rendering for simulation batches.

Renders the aggregate rows produced by ``simulator.run_batch`` into PNG
files next to the CSV/JSON output: open rate against the noise axis and
median steps per digit position.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_DIGIT_COLS = ["median_steps_d1", "median_steps_d2",
               "median_steps_d3", "median_steps_d4"]


def _noise_axis(rows: list[dict]) -> tuple[str, list[float]]:
    """Pick the varying noise column (sigma for continuous, p_err else)."""
    sigmas = {row["sigma"] for row in rows}
    if len(sigmas) > 1:
        return "sigma", [row["sigma"] for row in rows]
    return "p_err", [row["p_err"] for row in rows]


def render_open_rate(rows: list[dict], path: Path) -> None:
    name, _ = _noise_axis(rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    for flipped in (False, True):
        sub = [r for r in rows if r["flipped"] == flipped]
        if not sub:
            continue
        sub.sort(key=lambda r: r[name])
        ax.plot([r[name] for r in sub], [r["open_rate"] for r in sub],
                marker="o", label="flipped" if flipped else "unflipped")
    ax.set_xlabel(name)
    ax.set_ylabel("open rate")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title("Vault open rate vs noise")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_median_steps(rows: list[dict], path: Path) -> None:
    name, _ = _noise_axis(rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    for row in rows:
        ys = [row[c] for c in _DIGIT_COLS]
        label = f"{name}={row[name]:g}" + (" flipped" if row["flipped"] else "")
        ax.plot([1, 2, 3, 4], ys, marker="s", label=label)
    ax.set_xticks([1, 2, 3, 4])
    ax.set_xlabel("digit position")
    ax.set_ylabel("median steps")
    ax.set_title("Median steps per digit")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_figures(rows: list[dict], out_dir) -> list[Path]:
    """Write all batch figures into ``out_dir``; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "open_rate.png", out_dir / "median_steps.png"]
    render_open_rate(rows, paths[0])
    render_median_steps(rows, paths[1])
    return paths
