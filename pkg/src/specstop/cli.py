"""Command line interface.

Subcommands:

* ``simulate``   run a configured benchmark, writing report.json, comparison
  CSVs, and PNG figures into an output directory
* ``curves``     tabulate the error decomposition and risk curves for one
  seeded draw of a config, with a rendered plot alongside
* ``stop``       evaluate one stopping rule on a two-column CSV dataset
* ``estimate``   noise level, spectral decay rate, or smoothing exponent
* ``complexity`` critical radius, statistical dimension, and spectrum audit

Config files are TOML (preferred) or JSON with the same structure; see the
README for the schema.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import figures
from .complexity import assumption_audit, critical_radius
from .estimators import (
    default_alpha,
    estimate_beta,
    estimate_sigma_finite_rank,
    estimate_sigma_smoothed,
)
from .filters import FilterPolicy
from .kernels import DesignSample, build_gram, eigensystem, rotate
from .serialize import dump_json, read_two_column_csv, write_csv, write_json
from .simulate import (
    config_from_mapping,
    emit_curves,
    generate_dataset,
    kernel_from_mapping,
    run_experiment,
    trial_seed,
)
from .stopping import run_stopping_rule


def _load_config_mapping(path: Path) -> dict:
    suffix = path.suffix.lower()
    text = path.read_text(encoding="utf-8")
    if suffix == ".toml":
        try:
            import tomllib
        except ImportError:  # python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    if suffix == ".json":
        return json.loads(text)
    raise ValueError(f"config must be a .toml or .json file, got {path.name!r}")


def _add_kernel_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--kernel",
        default="sobolev_min",
        help="kernel kind: sobolev_min, polynomial, gaussian, laplace",
    )
    parser.add_argument("--degree", type=int, help="polynomial kernel degree")
    parser.add_argument("--bandwidth", type=float, help="gaussian/laplace bandwidth")


def _add_filter_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", default="gd", help="filter family: gd or krr")
    parser.add_argument(
        "--eta", default="auto", help="step size / regularization scale, or 'auto'"
    )


def _kernel_from_args(args) -> object:
    section = {"kind": args.kernel}
    if args.degree is not None:
        section["degree"] = args.degree
    if args.bandwidth is not None:
        section["bandwidth"] = args.bandwidth
    return kernel_from_mapping(section)


def _policy_from_args(args) -> FilterPolicy:
    eta = None if args.eta == "auto" else float(args.eta)
    return FilterPolicy(family=args.family, eta=eta)


def _load_eigensystem(args):
    xs, ys = read_two_column_csv(args.data)
    kind = _kernel_from_args(args)
    eig = eigensystem(build_gram(kind, xs))
    return xs, ys, kind, eig


def _emit(payload: dict) -> None:
    sys.stdout.write(dump_json(payload))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    config = config_from_mapping(_load_config_mapping(Path(args.config)))
    report = run_experiment(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = report.as_dict()
    write_json(out / "report.json", payload)
    write_csv(out / "summary.csv", payload["summaries"])
    write_csv(out / "stopping_times.csv", payload["records"])
    figures.plot_error_vs_n(payload, out / "error_vs_n.png")
    figures.plot_stopping_times(payload, out / "stopping_times.png")
    for name in (
        "report.json",
        "summary.csv",
        "stopping_times.csv",
        "error_vs_n.png",
        "stopping_times.png",
    ):
        print(f"wrote {out / name}")
    return 0


def _cmd_curves(args) -> int:
    config = config_from_mapping(_load_config_mapping(Path(args.config)))
    n = config.n_grid[-1]
    seed = trial_seed(config.master_seed, len(config.n_grid) - 1, 0)
    sample, f_star = generate_dataset(config, n, seed)
    eig = eigensystem(build_gram(config.kernel, sample.xs))
    rot = rotate(eig, sample.ys, f_star=f_star, sigma2=config.sigma**2)
    spec = config.policy.resolve(eig)
    grid = np.geomspace(args.t_min, spec.t_max, args.points)
    rows = emit_curves(rot, eig, spec, grid)
    out = Path(args.out)
    write_csv(out, rows)
    plot_path = out.with_suffix(".png")
    figures.plot_curves(rows, plot_path)
    print(f"wrote {out}")
    print(f"wrote {plot_path}")
    return 0


def _cmd_stop(args) -> int:
    xs, ys, kind, eig = _load_eigensystem(args)
    policy = _policy_from_args(args)
    outcome = run_stopping_rule(
        args.rule,
        eig=eig,
        rot=rotate(eig, ys),
        spec=policy.resolve(eig),
        sigma2=args.sigma2,
        alpha=args.alpha,
        sample=DesignSample(xs=xs, ys=ys),
        kind=kind,
        policy=policy,
        split_seed=args.seed,
        n_folds=args.folds,
    )
    _emit(asdict(outcome))
    return 0


def _cmd_estimate(args) -> int:
    xs, ys, kind, eig = _load_eigensystem(args)
    rot = rotate(eig, ys)
    if args.what == "sigma2":
        method = args.method or "tail"
        if method == "tail":
            est = estimate_sigma_finite_rank(rot, eig)
        elif method == "smoothed":
            spec = _policy_from_args(args).resolve(eig)
            est = estimate_sigma_smoothed(rot, eig, spec, t=args.time)
        else:
            raise ValueError(
                f"noise estimation method must be tail or smoothed, got {method!r}"
            )
        _emit(asdict(est))
        return 0
    method = args.method or "ratio"
    beta = estimate_beta(eig, method=method)
    if args.what == "beta":
        _emit({"beta_hat": beta, "method": method})
    else:
        _emit({"alpha": default_alpha(beta), "beta_hat": beta, "method": method})
    return 0


def _cmd_complexity(args) -> int:
    xs, _, kind, eig = _load_eigensystem(args)
    result = critical_radius(
        eig,
        radius=args.radius,
        sigma=args.sigma,
        alpha=args.alpha,
        fixed_point_const=args.fixed_point_const,
    )
    audit = assumption_audit(eig, result.epsilon, args.alpha)
    _emit(
        {
            "critical_radius": result.epsilon,
            "residual": result.residual,
            "alpha": result.alpha,
            "radius": result.radius,
            "sigma": result.sigma,
            "fixed_point_const": result.fixed_point_const,
            "statistical_dimension": audit.dimension,
            "tail_mass_const": audit.tail_mass_const,
            "tail_weight_const": audit.tail_weight_const,
            "top_eigenvalue": audit.top_eigenvalue,
            "top_exceeds_one": audit.top_exceeds_one,
            "n": eig.n,
            "rank": eig.rank,
        }
    )
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specstop",
        description="Spectral-filter regression with data-driven early stopping.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured benchmark")
    p.add_argument("--config", required=True, help="TOML or JSON config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("curves", help="tabulate risk curves for one draw")
    p.add_argument("--config", required=True, help="TOML or JSON config file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--points", type=int, default=200, help="grid size")
    p.add_argument("--t-min", type=float, default=1e-2, help="first grid time")
    p.set_defaults(handler=_cmd_curves)

    p = sub.add_parser("stop", help="evaluate one stopping rule on a dataset")
    p.add_argument("--rule", required=True, help="stopping rule name")
    p.add_argument("--data", required=True, help="two-column CSV dataset")
    p.add_argument("--alpha", type=float, default=0.0, help="smoothing exponent")
    p.add_argument("--sigma2", type=float, help="noise variance for the threshold")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--folds", type=int, default=4, help="fold count for VFold")
    _add_kernel_args(p)
    _add_filter_args(p)
    p.set_defaults(handler=_cmd_stop)

    p = sub.add_parser("estimate", help="estimate noise/decay/smoothing values")
    p.add_argument(
        "--what", required=True, choices=("sigma2", "beta", "alpha"), help="quantity"
    )
    p.add_argument("--data", required=True, help="two-column CSV dataset")
    p.add_argument(
        "--method",
        help="sigma2: tail|smoothed (default tail); beta/alpha: ratio|fit "
        "(default ratio)",
    )
    p.add_argument(
        "--time", type=float, help="evaluation time for the smoothed noise estimate"
    )
    _add_kernel_args(p)
    _add_filter_args(p)
    p.set_defaults(handler=_cmd_estimate)

    p = sub.add_parser("complexity", help="critical radius and spectrum audit")
    p.add_argument("--data", required=True, help="two-column CSV dataset")
    p.add_argument("--radius", type=float, default=1.0, help="function-class radius")
    p.add_argument("--sigma", type=float, default=0.15, help="noise level")
    p.add_argument("--alpha", type=float, default=0.0, help="smoothing exponent")
    p.add_argument(
        "--fixed-point-const",
        type=float,
        default=2.0,
        help="constant on the right side of the balance equation",
    )
    _add_kernel_args(p)
    p.set_defaults(handler=_cmd_complexity)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, RuntimeError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
