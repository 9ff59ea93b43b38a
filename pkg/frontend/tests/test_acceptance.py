"""Figure-generation acceptance: all kinds render, snapshot band coverage."""

import time

import numpy as np

from prefplots import FigureSpec, render
from prefplots.csvio import read_csv


def test_all_five_kinds_render(artifacts):
    t0 = time.time()
    out = artifacts["out"]
    specs = [
        FigureSpec(
            kind="regret_curves",
            inputs=[str(artifacts["w00"] / "aggregate.csv"), str(artifacts["w04"] / "aggregate.csv")],
            labels=["omega=0", "omega=0.4"],
            output=str(out / "accept_regret.svg"),
        ),
        FigureSpec(
            kind="trajectories",
            inputs=[str(artifacts["w04"] / "run_000.csv")],
            config=str(artifacts["w04"] / "config.json"),
            output=str(out / "accept_traj.svg"),
        ),
        FigureSpec(
            kind="gp_snapshot",
            inputs=[
                str(artifacts["w04"] / "gp_user1_k400.csv"),
                str(artifacts["w04"] / "feedback_run000.csv"),
            ],
            checkpoint=400,
            user=0,
            output=str(out / "accept_snapshot.svg"),
        ),
        FigureSpec(
            kind="baseline_regret",
            inputs=[
                str(artifacts["w04"] / "aggregate.csv"),
                str(artifacts["syn"] / "aggregate.csv"),
                str(artifacts["zero2"] / "aggregate.csv"),
            ],
            labels=["agp_ucb", "synthetic", "zero2"],
            output=str(out / "accept_baselines.svg"),
        ),
        FigureSpec(
            kind="uc_comparison",
            inputs=[
                str(artifacts["w04"] / "run_000.csv"),
                str(artifacts["syn"] / "run_000.csv"),
                str(artifacts["zero2"] / "run_000.csv"),
            ],
            labels=["agp_ucb", "synthetic", "zero2"],
            windows=[5, 5, 400],
            output=str(out / "accept_uc.svg"),
        ),
    ]
    for spec in specs:
        path = render(spec)
        assert path.endswith(".svg")
    print(f"[ACCEPT] PASS Figure kinds (all 5 rendered; {time.time() - t0:.1f}s)")


def test_snapshot_band_coverage(artifacts):
    t0 = time.time()
    fb = read_csv(artifacts["w04"] / "feedback_run000.csv", required=("k", "user", "d", "y"))
    covered = total = 0
    for user in (0, 1):
        curve = read_csv(
            artifacts["w04"] / f"gp_user{user + 1}_k400.csv",
            required=("x", "mean", "std", "std_pred"),
        )
        keep = (fb["user"].astype(int) == user) & (fb["k"] <= 400)
        d, y = fb["d"][keep], fb["y"][keep]
        mean = np.interp(d, curve["x"], curve["mean"])
        band = np.interp(d, curve["x"], curve["std_pred"])
        covered += int(np.sum(np.abs(y - mean) <= band))
        total += d.shape[0]
    frac = covered / total
    assert frac >= 0.60
    print(
        f"[ACCEPT] PASS Snapshot band coverage ({covered}/{total} = {frac:.2f} >= 0.60; "
        f"{time.time() - t0:.1f}s)"
    )
