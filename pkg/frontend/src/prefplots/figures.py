"""Figure construction from simulator CSV artifacts.

Five figure kinds are supported:

* ``regret_curves``    - average-regret curves (one per aggregate file) with
                         an optional fitted ``c*sqrt(k (log k)^2)/k`` rate
                         reference,
* ``trajectories``     - cumulative scaled inter-vehicle distances of one run
                         against the engineering-best reference,
* ``gp_snapshot``      - learned satisfaction curve of one user at one
                         checkpoint: mean (red), +-1 sigma predictive band
                         (green), feedback points (grey),
* ``baseline_regret``  - average-regret overlay across algorithms,
* ``uc_comparison``    - rolling-averaged per-user satisfaction, one series
                         per algorithm per user.

``build_figure`` is a pure function of the input files: rendering the same
spec twice produces the same data layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .csvio import SchemaError, read_config, read_csv, user_columns

KINDS = ("regret_curves", "trajectories", "gp_snapshot", "baseline_regret", "uc_comparison")

MEAN_COLOR = "tab:red"
BAND_COLOR = "tab:green"
POINT_COLOR = "0.55"


@dataclass
class FigureSpec:
    """What to draw and from which artifacts."""

    kind: str
    inputs: list[str]
    output: str
    labels: list[str] = field(default_factory=list)
    config: str | None = None  # config.json accompanying the run artifacts
    checkpoint: int | None = None  # gp_snapshot: keep feedback up to this tick
    user: int | None = None  # gp_snapshot: which user's feedback to scatter
    windows: list[int] = field(default_factory=list)  # uc_comparison smoothing
    reference: bool = True  # regret_curves: overlay the fitted rate curve
    title: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; available: {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input file is required")
        for p in self.inputs:
            if not Path(p).exists():
                raise SchemaError(f"input file does not exist: {p}")

    def label(self, i: int) -> str:
        if i < len(self.labels):
            return self.labels[i]
        return Path(self.inputs[i]).stem


def rolling_mean(values: np.ndarray, window: int) -> np.ndarray:
    if window < 1 or window > values.shape[0]:
        raise ValueError("window must lie in [1, len(values)]")
    return np.convolve(values, np.full(window, 1.0 / window), mode="valid")


def _target_scalar(config: dict, t: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Engineering reference distance per tick from the run configuration."""
    omega = float(config.get("omega", 0.0))
    base = 0.33 + 0.25 * np.sin(np.pi * omega * t)
    if config.get("trajectory") == "vanishing":
        return 0.33 + (base - 0.33) / np.sqrt(np.maximum(k, 1.0))
    return base


# ----------------------------------------------------------------------
# builders (one per kind)


def _build_regret_curves(spec: FigureSpec, ax) -> None:
    first_curve = None
    for i, path in enumerate(spec.inputs):
        cols = read_csv(path, required=("k", "regret_avg_mean"))
        ax.plot(cols["k"], cols["regret_avg_mean"], label=spec.label(i))
        if first_curve is None:
            first_curve = cols
    if spec.reference and first_curve is not None:
        k = first_curve["k"]
        mask = k >= 2
        kk = k[mask]
        rate = np.sqrt(kk * np.log(kk) ** 2) / kk
        c = first_curve["regret_avg_mean"][mask][0] / rate[0]
        ax.plot(kk, c * rate, linestyle="--", color="0.3", label="rate reference")
    ax.set_xlabel("optimization step k")
    ax.set_ylabel("average regret")
    ax.set_xscale("log")
    ax.legend()


def _build_trajectories(spec: FigureSpec, ax) -> None:
    cols = read_csv(spec.inputs[0], required=("k", "t", "x_1"))
    config = read_config(spec.config) if spec.config else {}
    scale = float(config.get("distance_scale", 3.0))
    xs = user_columns(cols, "x")
    t = cols["t"]
    ref = _target_scalar(config, t, cols["k"]) if config else None
    cum = np.zeros_like(t)
    cum_ref = np.zeros_like(t)
    for i, name in enumerate(xs):
        cum = cum + scale * cols[name]
        ax.plot(t, cum, label=f"vehicle {i + 1}")
        if ref is not None:
            cum_ref = cum_ref + scale * ref
            ax.plot(t, cum_ref, linestyle="--", color="0.4", alpha=0.8,
                    label=f"eng. best {i + 1}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("distance to platoon leader")
    ax.legend()


def _build_gp_snapshot(spec: FigureSpec, ax) -> None:
    curve = read_csv(spec.inputs[0], required=("x", "mean", "std", "std_pred"))
    ax.fill_between(
        curve["x"],
        curve["mean"] - curve["std_pred"],
        curve["mean"] + curve["std_pred"],
        color=BAND_COLOR,
        alpha=0.35,
        label="+-1 sigma",
    )
    ax.plot(curve["x"], curve["mean"], color=MEAN_COLOR, label="posterior mean")
    if len(spec.inputs) > 1:
        fb = read_csv(spec.inputs[1], required=("k", "user", "d", "y"))
        keep = np.ones(fb["k"].shape[0], dtype=bool)
        if spec.checkpoint is not None:
            keep &= fb["k"] <= spec.checkpoint
        if spec.user is not None:
            keep &= fb["user"].astype(int) == spec.user
        ax.scatter(fb["d"][keep], fb["y"][keep], s=8, color=POINT_COLOR, alpha=0.6,
                   label="feedback")
    ax.set_xlabel("decision")
    ax.set_ylabel("satisfaction")
    ax.legend()


def _build_baseline_regret(spec: FigureSpec, ax) -> None:
    for i, path in enumerate(spec.inputs):
        cols = read_csv(path, required=("k", "regret_avg_mean"))
        ax.plot(cols["k"], cols["regret_avg_mean"], label=spec.label(i))
    ax.set_xlabel("optimization step k")
    ax.set_ylabel("average regret")
    ax.set_xscale("log")
    ax.legend()


def _build_uc_comparison(spec: FigureSpec, ax) -> None:
    for i, path in enumerate(spec.inputs):
        cols = read_csv(path, required=("k", "uc_1"))
        window = spec.windows[i] if i < len(spec.windows) else 5
        ucs = user_columns(cols, "uc")
        for j, name in enumerate(ucs):
            w = min(window, cols[name].shape[0])
            smooth = rolling_mean(cols[name], w)
            ks = cols["k"][w - 1 :]
            ax.plot(ks, smooth, label=f"{spec.label(i)} user {j + 1}")
    ax.set_xlabel("optimization step k")
    ax.set_ylabel("normalized satisfaction")
    ax.set_ylim(-0.05, 1.1)
    ax.legend(fontsize=7)


_BUILDERS = {
    "regret_curves": _build_regret_curves,
    "trajectories": _build_trajectories,
    "gp_snapshot": _build_gp_snapshot,
    "baseline_regret": _build_baseline_regret,
    "uc_comparison": _build_uc_comparison,
}


def build_figure(spec: FigureSpec):
    """Create the matplotlib figure for a spec (no file output)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    _BUILDERS[spec.kind](spec, ax)
    ax.set_title(spec.title or spec.kind.replace("_", " "))
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Render the figure to ``spec.output`` (vector for .svg/.pdf, raster
    for .png) and return the output path."""
    fig = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return str(out)


def line_data(fig) -> list[np.ndarray]:
    """All line xy arrays of a figure, for purity checks."""
    out = []
    for ax in fig.axes:
        for line in ax.get_lines():
            out.append(np.asarray(line.get_xydata()))
    return out
