"""Command-line interface.

Subcommands
-----------
run          execute one experiment configuration (seeded replicates -> CSV)
sweep        cartesian sweep over trajectory speeds and feedback schedules
bounds       emit (T, gamma_T, beta_T, bound) rows for the regret reference
estimate-ab  empirical derivative-tail constants for a kernel
info-gain    greedy information-gain curve on a lattice
gp-dump      single run with posterior grid dumps at checkpoint ticks

Flags override values loaded from ``--config`` (a JSON document matching
``ExperimentConfig``).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import regret, ucb
from .experiment import (
    ExperimentConfig,
    OutputConfig,
    parse_schedule,
    run_experiment,
    sweep,
    write_csv,
)
from .kernels import KernelSpec
from .objectives import metadata
from .solver import BoxDomain
from .ucb import ConfidenceParams


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    updates: dict = {}
    for name in ("seed", "runs", "steps", "omega", "algorithm", "trajectory"):
        value = getattr(args, name, None)
        if value is not None:
            key = "steps" if name == "steps" else name
            updates[key] = value
    if getattr(args, "schedule", None):
        updates["schedule"] = parse_schedule(args.schedule)
    out_updates: dict = {}
    if getattr(args, "out", None):
        out_updates["directory"] = args.out
    if getattr(args, "workers", None) is not None:
        out_updates["workers"] = args.workers
    if getattr(args, "gp_dump", False):
        out_updates["gp_dump"] = True
    if out_updates:
        updates["output"] = dataclasses.replace(cfg.output, **out_updates)
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg.validate()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--omega", type=float)
    p.add_argument("--algorithm", choices=("agp_ucb", "synthetic", "zero2", "zero4"))
    p.add_argument("--trajectory", choices=("periodic", "vanishing"))
    p.add_argument("--schedule", help="every_step | every_q:Q | bernoulli:P")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    manifest = run_experiment(cfg)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    omegas = [float(x) for x in args.omegas.split(",")]
    schedules = [parse_schedule(s) for s in args.schedules.split(",")]
    manifest = sweep(cfg, omegas, schedules)
    print(json.dumps({"entries": [e["name"] for e in manifest["entries"]], "path": manifest["path"]}, indent=2))
    return 0


def _cmd_gp_dump(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    cfg = dataclasses.replace(
        cfg, runs=1, output=dataclasses.replace(cfg.output, gp_dump=True)
    )
    manifest = run_experiment(cfg.validate())
    print(json.dumps({"gp_dumps": manifest["gp_dumps"], "feedback": manifest["feedback"]}, indent=2))
    return 0


def _cmd_bounds(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    horizons = sorted(int(x) for x in args.horizons.split(","))
    max_t = horizons[-1]
    learn_dim = 1 if cfg.belief == "separable" else cfg.n_users
    domain1 = BoxDomain.unit(learn_dim, side=cfg.r)
    grid = max(2 * max_t, 501)
    gains = regret.info_gain_greedy(cfg.kernel, domain1, grid, max_t, cfg.noise_std)
    params = ConfidenceParams(delta=cfg.delta, dim=learn_dim, a=cfg.a, b=cfg.b, r=cfg.r)
    from .experiment import build_objective

    objective = build_objective(cfg)
    domain = BoxDomain.unit(cfg.n_users, side=cfg.r)
    probe = np.arange(1, min(max_t, 2000) + 1) * cfg.sample_period
    meta = metadata(objective, domain, probe)
    eta = args.eta
    if eta is None:
        eta = max(0.0, 1.0 - cfg.alpha * objective.curvature_min)
    rows = []
    for T in horizons:
        bi = regret.BoundInputs(
            horizon=T,
            delta=cfg.delta,
            sigma=cfg.noise_std,
            dim=learn_dim,
            a=cfg.a,
            b=cfg.b,
            r=cfg.r,
            smoothness=meta.smoothness,
            grad_bound=meta.grad_bound,
            drift=meta.drift,
            eta=eta,
            gamma_t=float(gains[T - 1]),
        )
        p = q = cfg.schedule.q if cfg.schedule.mode == "every_q" else 1
        bound = regret.theoretical_bound(bi, steps_per_feedback=(p, q))
        rows.append((T, gains[T - 1], ucb.beta(T, params), bound))
    header = ["T", "gamma_T", "beta_T", "bound"]
    if args.out:
        write_csv(args.out, header, rows)
        print(args.out)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(format(float(v), ".17g") if isinstance(v, float) else str(v) for v in row))
    return 0


def _cmd_estimate_ab(args: argparse.Namespace) -> int:
    spec = KernelSpec(length_scale=args.length_scale, output_variance=args.output_variance)
    domain = BoxDomain.unit(args.dim, side=args.side)
    est = ucb.estimate_ab(
        spec,
        domain,
        eps=args.epsilon,
        n_paths=args.paths,
        grid_resolution=args.grid,
        seed=args.seed,
    )
    if args.format == "json":
        payload = {
            "a": est.a,
            "b": est.b,
            "table": [
                {"coord": j, "level": m, "freq": f, "bound": b, "ratio": r}
                for (j, m, f, b, r) in est.rows()
            ],
        }
        text = json.dumps(payload, indent=2)
        if args.out:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
            print(args.out)
        else:
            print(text)
    else:
        header = ["coord", "level", "freq", "bound", "ratio"]
        if args.out:
            write_csv(args.out, header, est.rows())
            print(args.out)
        else:
            print(f"# a={est.a:.17g} b={est.b:.17g}")
            print(",".join(header))
            for row in est.rows():
                print(",".join(format(float(v), ".17g") if isinstance(v, float) else str(v) for v in row))
    return 0


def _cmd_info_gain(args: argparse.Namespace) -> int:
    spec = KernelSpec(length_scale=args.length_scale, output_variance=args.output_variance)
    domain = BoxDomain.unit(args.dim, side=args.side)
    gains = regret.info_gain_greedy(spec, domain, args.grid, args.steps, args.sigma)
    rows = [(t + 1, gains[t]) for t in range(args.steps)]
    header = ["T", "gamma_T"]
    if args.out:
        write_csv(args.out, header, rows)
        print(args.out)
    else:
        print(",".join(header))
        for row in rows:
            print(f"{row[0]},{format(row[1], '.17g')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="preftrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment configuration")
    _add_common(p)
    p.add_argument("--gp-dump", action="store_true", dest="gp_dump")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="sweep over omegas and schedules")
    _add_common(p)
    p.add_argument("--omegas", default="0,0.2,0.4")
    p.add_argument("--schedules", default="every_step,every_q:4")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bounds", help="regret-bound reference values")
    _add_common(p)
    p.add_argument("--horizons", default="100,500,2000")
    p.add_argument("--eta", type=float, default=None)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("estimate-ab", help="empirical derivative-tail constants")
    p.add_argument("--length-scale", type=float, default=1.0)
    p.add_argument("--output-variance", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=2000)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--side", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_estimate_ab)

    p = sub.add_parser("info-gain", help="greedy information-gain curve")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--grid", type=int, default=1001)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--side", type=float, default=1.0)
    p.add_argument("--length-scale", type=float, default=1.0)
    p.add_argument("--output-variance", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_info_gain)

    p = sub.add_parser("gp-dump", help="single run with posterior grid dumps")
    _add_common(p)
    p.set_defaults(func=_cmd_gp_dump)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
