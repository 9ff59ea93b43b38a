"""Configuration, seeded replicate execution, aggregation and CSV artifacts.

A single :class:`ExperimentConfig` describes one benchmark scenario (the
vehicle-platooning setup by default: two users, unit box, coupled quadratic
tracking term, sampled satisfaction curves with one interior comfort peak
each).  ``run_experiment``
executes ``runs`` independent seeded replicates, writes one CSV per run plus
a cross-run aggregate, and optionally dumps the learned posterior on a grid
at checkpoint ticks for snapshot figures.

CSV conventions: comma separated, header row, UTF-8, LF line endings, floats
with 17 significant digits (value round-trips exactly), so rerunning the
same configuration with the same seed reproduces byte-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import loop
from .baselines import SyntheticUserModel, run_synthetic, run_zero_order
from .gp import sample_path
from .kernels import KernelSpec
from .loop import FeedbackSchedule, SamplePathUser, UserModel
from .objectives import TimeVaryingQuadratic, make_periodic_target, make_vanishing_target
from .regret import RegretLedger, TrueObjective, oracle_opt, uc_metric, user_maxima
from .solver import BoxDomain, SolverConfig
from .ucb import ConfidenceParams

ALGORITHMS = ("agp_ucb", "synthetic", "zero2", "zero4")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class ScheduleConfig:
    mode: str = "every_step"
    q: int = 4
    p: float = 1.0

    def build(self) -> FeedbackSchedule:
        if self.mode == "every_q":
            return FeedbackSchedule.every_q(self.q)
        if self.mode == "bernoulli":
            return FeedbackSchedule.bernoulli(self.p)
        return FeedbackSchedule.every_step()


@dataclass
class TruthConfig:
    """True user-satisfaction functions.

    ``gp_sample`` draws each user's function as a GP sample path and keeps
    redrawing until it resembles a comfort curve (a pronounced positive peak
    away from the domain edges); ``lognormal`` uses the parametric curves
    with the given shape parameters directly.
    """

    kind: str = "gp_sample"  # or "lognormal"
    xi: tuple[float, ...] = (0.6, 0.7)
    grid_resolution: int = 201
    min_peak: float = 0.8
    interior_margin: float = 0.05
    max_attempts: int = 64


@dataclass
class OracleConfig:
    grid_points: int = 501
    polish_steps: int = 50
    alpha: float = 0.1


@dataclass
class OutputConfig:
    directory: str = "preftrack-out"
    gp_dump: bool = False
    checkpoints: tuple[int, ...] = (25, 100, 400)
    dump_points: int = 201
    workers: int = 1


@dataclass
class ExperimentConfig:
    n_users: int = 2
    steps: int = 2000
    runs: int = 25
    seed: int = 0
    delta: float = 0.1
    alpha: float = 0.1
    inner_steps: int = 1
    noise_std: float = 0.1
    omega: float = 0.0
    trajectory: str = "periodic"  # or "vanishing"
    q_matrix: tuple = ((1.0, 0.25), (0.25, 1.0))
    gamma: float = 1.0
    kernel: KernelSpec = field(default_factory=KernelSpec)
    a: float = 1.1
    b: float = 2.0
    r: float = 1.0
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    algorithm: str = "agp_ucb"
    belief: str = "separable"
    truth: TruthConfig = field(default_factory=TruthConfig)
    synthetic_xi: float = 0.9
    sample_period: float = 0.8
    oracle: OracleConfig = field(default_factory=OracleConfig)
    uc_points: int = 10001
    collect_lr: bool = False
    probe_points: int = 101
    distance_scale: float = 3.0
    output: OutputConfig = field(default_factory=OutputConfig)

    # ------------------------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        if self.n_users < 1:
            raise ConfigError("n_users: must be >= 1")
        if self.steps < 1:
            raise ConfigError("steps: must be >= 1")
        if self.runs < 1:
            raise ConfigError("runs: must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta: must lie in (0, 1)")
        if self.alpha <= 0.0:
            raise ConfigError("alpha: must be positive")
        if self.inner_steps < 1:
            raise ConfigError("inner_steps: must be >= 1")
        if self.noise_std <= 0.0:
            raise ConfigError("noise_std: must be positive")
        if self.trajectory not in ("periodic", "vanishing"):
            raise ConfigError(f"trajectory: unknown kind {self.trajectory!r}")
        Q = np.asarray(self.q_matrix, dtype=float)
        if Q.shape != (self.n_users, self.n_users):
            raise ConfigError("q_matrix: shape must be (n_users, n_users)")
        if self.gamma <= 0.0:
            raise ConfigError("gamma: must be positive")
        if min(self.a, self.b, self.r) <= 0.0:
            raise ConfigError("a/b/r: must be positive")
        if self.schedule.mode not in ("every_step", "every_q", "bernoulli"):
            raise ConfigError(f"schedule.mode: unknown mode {self.schedule.mode!r}")
        if self.schedule.mode == "every_q" and self.schedule.q < 1:
            raise ConfigError("schedule.q: must be >= 1")
        if self.schedule.mode == "bernoulli" and not 0.0 < self.schedule.p <= 1.0:
            raise ConfigError("schedule.p: must lie in (0, 1]")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm: unknown algorithm {self.algorithm!r}")
        if self.algorithm in ("zero2", "zero4") and self.schedule.mode != "every_step":
            raise ConfigError(
                "algorithm: zeroth-order methods require schedule.mode == every_step"
            )
        if self.belief not in ("separable", "joint"):
            raise ConfigError(f"belief: unknown mode {self.belief!r}")
        if self.belief == "joint" and self.n_users > 2:
            raise ConfigError("belief: joint mode supports n_users <= 2")
        if self.truth.kind not in ("lognormal", "gp_sample"):
            raise ConfigError(f"truth.kind: unknown kind {self.truth.kind!r}")
        if self.truth.kind == "lognormal" and len(self.truth.xi) < self.n_users:
            raise ConfigError("truth.xi: one shape parameter per user required")
        if self.truth.grid_resolution < 2:
            raise ConfigError("truth.grid_resolution: must be >= 2")
        if self.sample_period <= 0.0:
            raise ConfigError("sample_period: must be positive")
        if self.oracle.grid_points < 2:
            raise ConfigError("oracle.grid_points: must be >= 2")
        if self.output.workers < 1:
            raise ConfigError("output.workers: must be >= 1")
        if self.output.gp_dump and self.belief != "separable":
            raise ConfigError("output.gp_dump: posterior dumps need separable beliefs")
        return self

    # ------------------------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)

        def sub(key, factory, tuple_fields=()):
            if key in d and isinstance(d[key], dict):
                payload = dict(d[key])
                for tf in tuple_fields:
                    if tf in payload and isinstance(payload[tf], list):
                        payload[tf] = tuple(payload[tf])
                d[key] = factory(**payload)

        sub("kernel", KernelSpec)
        sub("schedule", ScheduleConfig)
        sub("truth", TruthConfig, tuple_fields=("xi",))
        sub("oracle", OracleConfig)
        sub("output", OutputConfig, tuple_fields=("checkpoints",))
        if "q_matrix" in d:
            d["q_matrix"] = tuple(tuple(row) for row in d["q_matrix"])
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown configuration field")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# ----------------------------------------------------------------------
# single-run execution


@dataclass
class GpSnapshot:
    k: int
    user: int
    grid: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    std_pred: np.ndarray


@dataclass
class RunResult:
    run_id: int
    columns: dict[str, np.ndarray]
    lr_errors: list[float]
    feedback: list[tuple[int, int, int, float, float]]  # (k, n, user, d, y)
    snapshots: list[GpSnapshot]

    def column_names(self, m: int) -> list[str]:
        names = ["run_id", "k", "n", "t"]
        names += [f"x_{i + 1}" for i in range(m)]
        names += ["f_star", "f_x", "regret_inst", "regret_cum", "regret_avg"]
        names += [f"uc_{i + 1}" for i in range(m)]
        names += ["feedback_given", "beta_n"]
        return names


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _select_comfort_path(cfg: ExperimentConfig, run_id: int, user: int) -> SamplePathUser:
    """Draw sample paths until one has a positive interior peak."""
    domain1 = BoxDomain.unit(1, side=cfg.r)
    tc = cfg.truth
    lo, hi = tc.interior_margin * cfg.r, (1.0 - tc.interior_margin) * cfg.r
    for attempt in range(tc.max_attempts):
        seed = _derived_seed(cfg.seed, run_id, 3, user, attempt)
        path = sample_path(cfg.kernel, domain1, tc.grid_resolution, seed)
        grid = path.grid[:, 0]
        best = int(np.argmax(path.values))
        if path.values[best] >= tc.min_peak and lo <= grid[best] <= hi:
            return SamplePathUser(path)
    raise ConfigError(
        "truth.min_peak: no acceptable sample path found; lower the peak requirement"
    )


def build_truths(cfg: ExperimentConfig, run_id: int) -> tuple:
    truths = []
    for i in range(cfg.n_users):
        if cfg.truth.kind == "lognormal":
            truths.append(SyntheticUserModel(cfg.truth.xi[i]))
        else:
            truths.append(_select_comfort_path(cfg, run_id, i))
    return tuple(truths)


def build_objective(cfg: ExperimentConfig) -> TimeVaryingQuadratic:
    if cfg.trajectory == "vanishing":
        target = make_vanishing_target(cfg.omega, cfg.n_users, cfg.sample_period)
    else:
        target = make_periodic_target(cfg.omega, cfg.n_users)
    return TimeVaryingQuadratic(np.asarray(cfg.q_matrix, dtype=float), target, cfg.gamma)


def run_single(cfg: ExperimentConfig, run_id: int) -> RunResult:
    """Execute one seeded replicate and assemble its per-step record."""
    cfg.validate()
    m = cfg.n_users
    domain = BoxDomain.unit(m, side=cfg.r)
    objective = build_objective(cfg)
    truths = build_truths(cfg, run_id)
    schedule = cfg.schedule.build()
    users = UserModel(truths=truths, noise_std=cfg.noise_std, schedule=schedule)
    run_seed = _derived_seed(cfg.seed, run_id)

    snapshots: list[GpSnapshot] = []
    want_dump = cfg.output.gp_dump and run_id == 0

    if cfg.algorithm == "agp_ucb":
        learn_dim = 1 if cfg.belief == "separable" else m
        params = ConfidenceParams(delta=cfg.delta, dim=learn_dim, a=cfg.a, b=cfg.b, r=cfg.r)
        solver_cfg = SolverConfig(step_size=cfg.alpha, inner_steps=cfg.inner_steps)

        def on_checkpoint(k: int, beliefs) -> None:
            for u, post in enumerate(beliefs.posteriors):
                grid = np.linspace(domain.lo[u], domain.hi[u], cfg.output.dump_points)
                mean = np.asarray(post.posterior_mean(grid[:, None]))
                var = np.asarray(post.posterior_var(grid[:, None]))
                snapshots.append(
                    GpSnapshot(
                        k=k,
                        user=u,
                        grid=grid,
                        mean=mean,
                        std=np.sqrt(var),
                        std_pred=np.sqrt(var + cfg.noise_std**2),
                    )
                )

        outcomes = loop.run(
            cfg.steps,
            objective,
            users,
            solver_cfg,
            params,
            domain,
            cfg.sample_period,
            cfg.kernel,
            seed=run_seed,
            belief_mode=cfg.belief,
            collect_lr=cfg.collect_lr,
            probe_points=cfg.probe_points,
            on_checkpoint=on_checkpoint if want_dump else None,
            checkpoints=cfg.output.checkpoints if want_dump else (),
        )
    elif cfg.algorithm == "synthetic":
        models = tuple(SyntheticUserModel(cfg.synthetic_xi) for _ in range(m))
        outcomes = run_synthetic(
            cfg.steps,
            objective,
            users,
            models,
            SolverConfig(step_size=cfg.alpha, inner_steps=cfg.inner_steps),
            domain,
            cfg.sample_period,
            seed=run_seed,
        )
    else:
        points = 2 if cfg.algorithm == "zero2" else 4
        outcomes = run_zero_order(
            cfg.steps,
            objective,
            users,
            points,
            SolverConfig(step_size=cfg.alpha, inner_steps=cfg.inner_steps),
            domain,
            cfg.sample_period,
            seed=run_seed,
        )

    true_obj = TrueObjective(objective, truths, domain)
    maxima = user_maxima(users, domain, cfg.uc_points)
    ledger = RegretLedger()

    T = cfg.steps
    cols = {
        name: np.zeros(T)
        for name in ("t", "f_star", "f_x", "regret_inst", "regret_cum", "regret_avg", "beta_n")
    }
    cols["run_id"] = np.full(T, run_id, dtype=np.int64)
    cols["k"] = np.zeros(T, dtype=np.int64)
    cols["n"] = np.zeros(T, dtype=np.int64)
    cols["feedback_given"] = np.zeros(T, dtype=np.int64)
    for i in range(m):
        cols[f"x_{i + 1}"] = np.zeros(T)
        cols[f"uc_{i + 1}"] = np.zeros(T)

    # periodic targets revisit the same reference vector every cycle; the
    # oracle depends on t only through it, so cache on the rounded vector
    oracle_cache: dict[tuple, tuple[np.ndarray, float]] = {}
    lr_errors: list[float] = []
    feedback: list[tuple[int, int, int, float, float]] = []

    for idx, out in enumerate(outcomes):
        key = tuple(np.round(objective.target(out.t), 12))
        cached = oracle_cache.get(key)
        if cached is not None:
            x_star, f_star = cached
        else:
            x_star, f_star = oracle_opt(
                true_obj,
                out.t,
                domain,
                grid_points=cfg.oracle.grid_points,
                polish_steps=cfg.oracle.polish_steps,
                alpha=cfg.oracle.alpha,
            )
            oracle_cache[key] = (x_star, f_star)
        f_x = true_obj.value(out.x, out.t)
        ledger.update(f_star, f_x)
        uc = uc_metric(users, out.x, domain, maxima)
        cols["k"][idx] = out.k
        cols["n"][idx] = out.n
        cols["t"][idx] = out.t
        cols["f_star"][idx] = f_star
        cols["f_x"][idx] = f_x
        cols["regret_inst"][idx] = ledger.instantaneous[idx]
        cols["regret_cum"][idx] = ledger.cumulative[idx]
        cols["regret_avg"][idx] = ledger.cumulative[idx] / (idx + 1)
        cols["feedback_given"][idx] = int(out.feedback_given)
        cols["beta_n"][idx] = out.beta
        for i in range(m):
            cols[f"x_{i + 1}"][idx] = out.x[i]
            cols[f"uc_{i + 1}"][idx] = uc[i]
        if out.lr_error is not None:
            lr_errors.append(out.lr_error)
        if out.feedback_given and out.y is not None:
            for i in range(min(m, out.y.shape[0])):
                feedback.append((out.k, out.n, i, float(out.x[i]), float(out.y[i])))

    return RunResult(
        run_id=run_id, columns=cols, lr_errors=lr_errors, feedback=feedback, snapshots=snapshots
    )


# ----------------------------------------------------------------------
# CSV artifacts


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_run_csv(path: Path, result: RunResult, m: int) -> None:
    names = result.column_names(m)
    cols = [result.columns[name] for name in names]
    rows = zip(*cols)
    write_csv(path, names, rows)


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    """Execute all replicates and write the CSV artifact set.

    Returns a manifest dictionary with the paths of everything written.
    """
    cfg.validate()
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")

    run_ids = list(range(cfg.runs))
    if cfg.output.workers > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=cfg.output.workers) as pool:
            results = list(pool.map(run_single, [cfg] * len(run_ids), run_ids))
    else:
        results = [run_single(cfg, rid) for rid in run_ids]

    manifest: dict = {"runs": [], "aggregate": None, "config": None, "gp_dumps": [], "feedback": None}
    m = cfg.n_users
    for res in results:
        path = out / f"run_{res.run_id:03d}.csv"
        _write_run_csv(path, res, m)
        manifest["runs"].append(str(path))

    # cross-run mean of the running average regret, per tick
    ks = results[0].columns["k"]
    ts = results[0].columns["t"]
    avg = np.mean([res.columns["regret_avg"] for res in results], axis=0)
    agg_path = out / "aggregate.csv"
    write_csv(agg_path, ["k", "t", "regret_avg_mean"], zip(ks, ts, avg))
    manifest["aggregate"] = str(agg_path)

    cfg_path = out / "config.json"
    cfg.to_json(cfg_path)
    manifest["config"] = str(cfg_path)

    if cfg.output.gp_dump:
        res0 = results[0]
        for snap in res0.snapshots:
            path = out / f"gp_user{snap.user + 1}_k{snap.k}.csv"
            write_csv(
                path,
                ["x", "mean", "std", "std_pred"],
                zip(snap.grid, snap.mean, snap.std, snap.std_pred),
            )
            manifest["gp_dumps"].append(str(path))
        fb_path = out / "feedback_run000.csv"
        write_csv(fb_path, ["k", "n", "user", "d", "y"], res0.feedback)
        manifest["feedback"] = str(fb_path)

    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def parse_schedule(text: str) -> ScheduleConfig:
    """Parse ``every_step``, ``every_q:4`` or ``bernoulli:0.5``."""
    parts = text.split(":")
    mode = parts[0]
    if mode == "every_step":
        return ScheduleConfig(mode="every_step")
    if mode == "every_q":
        return ScheduleConfig(mode="every_q", q=int(parts[1]) if len(parts) > 1 else 4)
    if mode == "bernoulli":
        return ScheduleConfig(mode="bernoulli", p=float(parts[1]) if len(parts) > 1 else 1.0)
    raise ConfigError(f"schedule: cannot parse {text!r}")


def schedule_label(sc: ScheduleConfig) -> str:
    if sc.mode == "every_q":
        return f"every_q{sc.q}"
    if sc.mode == "bernoulli":
        return f"bernoulli{sc.p:g}"
    return "every_step"


def sweep(
    cfg: ExperimentConfig,
    omegas: list[float],
    schedules: list[ScheduleConfig],
    out_dir: str | Path | None = None,
) -> dict:
    """Cartesian sweep over trajectory speed and feedback schedule."""
    cfg.validate()
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for omega in omegas:
        for sc in schedules:
            sub = dataclasses.replace(
                cfg,
                omega=float(omega),
                schedule=sc,
                output=dataclasses.replace(cfg.output, directory=str(out)),
            )
            name = f"omega{omega:g}_{schedule_label(sc)}"
            sub_dir = out / name
            sub_manifest = run_experiment(sub, sub_dir)
            entries.append(
                {
                    "name": name,
                    "omega": float(omega),
                    "schedule": schedule_label(sc),
                    "directory": str(sub_dir),
                    "aggregate": sub_manifest["aggregate"],
                    "runs": sub_manifest["runs"],
                }
            )
    manifest = {"entries": entries}
    path = out / "sweep_manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest["path"] = str(path)
    return manifest
