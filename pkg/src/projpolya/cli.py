"""Command line surface: prior simulation, fitting, scoring, data
simulation, and the score-grid experiment.

Exit codes: 0 on success, 1 on data or runtime errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .centering import CenteringMeasure
from .data import (
    DEFAULT_MIXTURE,
    AngleParseError,
    MixtureSpec,
    TRIUNFO_SPECIES,
    load_angles,
    save_angles,
    simulate_mixture,
    simulate_projected_normal,
    triunfo,
)
from .fitstats import density_estimate, lpml, moment_posterior, savage_dickey_bf
from .mcmc import DEFAULT_ALPHA_PRIOR, DEFAULT_MU_PRIOR, McmcConfig, load_posterior, run_chain, save_posterior
from .projection import default_grid, marginal_density, moment_grid, moments_from_values
from .report import (
    angles_figure,
    density_figure,
    lpml_grid_figure,
    paths_figure,
    versions,
    write_manifest,
    write_table,
)
from .tree import TreeParams, sample_prior_tree


def _pair(text: str):
    try:
        a, b = (float(tok) for tok in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return (a, b)


def _weights(text: str):
    try:
        vals = tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("expected exactly four weights")
    return vals


def _locations(text: str):
    pairs = text.split(":")
    if len(pairs) != 4:
        raise argparse.ArgumentTypeError("expected four colon-separated x,y pairs")
    return tuple(_pair(p) for p in pairs)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, command: str, args, outputs: dict, elapsed: float, extra: dict | None = None):
    entries = {"command": command, "elapsed_seconds": round(elapsed, 3)}
    entries.update(versions())
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        entries[f"option.{key}"] = value if not isinstance(value, Path) else str(value)
    for key, path in outputs.items():
        entries[f"output.{key}"] = Path(path).name
    if extra:
        entries.update(extra)
    return write_manifest(out / "manifest.json", entries)


def cmd_prior_sim(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    params = TreeParams(M=args.depth, alpha=args.alpha, delta=args.delta)
    c = CenteringMeasure(*args.mu)
    grid = default_grid(c, args.quad_L)
    th = moment_grid(args.angles_grid)
    rng = np.random.default_rng(args.seed)

    path_rows = []
    moment_rows = []
    dens = np.empty((args.paths, th.size))
    for p in range(args.paths):
        tree = sample_prior_tree(params, rng)
        dens[p] = marginal_density(tree, c, th, grid)
        mom = moments_from_values(th, dens[p])
        moment_rows.append((p, mom.a1, mom.b1, mom.mean_direction, mom.concentration, mom.mean_defined))
        path_rows.extend((p, t, f) for t, f in zip(th, dens[p]))

    outputs = {
        "paths": write_table(out / "paths.csv", ["path", "theta", "density"], path_rows),
        "moments": write_table(
            out / "moments.csv",
            ["path", "a1", "b1", "mean_direction", "concentration", "mean_defined"],
            moment_rows,
        ),
    }
    if args.plot:
        outputs["figure"] = paths_figure(out / "paths.svg", th, dens, title=f"prior paths, mu={args.mu}")
    _manifest(out, "prior-sim", args, outputs, time.perf_counter() - t0)
    return 0


def _load_fit_data(args):
    if args.dataset is not None:
        return triunfo(args.dataset)
    return load_angles(args.data, unit=args.unit, name=Path(args.data).stem)


def cmd_fit(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    sample = _load_fit_data(args)

    alpha_fixed = args.alpha if args.alpha is not None else 1.0
    params = TreeParams(M=args.depth, alpha=alpha_fixed, delta=args.delta)
    config = McmcConfig(
        iterations=args.iterations,
        burn_in=args.burn_in,
        thin=args.thin,
        kappa=args.kappa,
        alpha_prior=args.alpha_prior,
        mu_prior=args.mu_prior,
        kappa_alpha=args.kappa_alpha,
        seed=args.seed,
    )
    centering = CenteringMeasure(*(args.mu if args.mu is not None else (0.0, 0.0)))
    report_th = moment_grid(args.grid_angles)

    samples = run_chain(
        sample.angles, params, config,
        centering=centering, quad_L=args.quad_L, report_angles=report_th,
    )

    est = density_estimate(samples)
    moments = moment_posterior(samples, n_angles=args.grid_angles)
    score = lpml(samples)
    nu_lo, nu_hi = moments.mean_direction_ci()
    rho_lo, rho_hi = moments.concentration_ci()
    alphas = samples.alphas
    mus = samples.mus

    outputs = {
        "density": write_table(
            out / "density.csv",
            ["theta", "mean", "lower", "upper"],
            zip(est.grid, est.mean, est.lower, est.upper),
        ),
        "moments": write_table(
            out / "moments.csv",
            ["draw", "mean_direction", "concentration"],
            zip(range(len(samples)), moments.mean_directions, moments.concentrations),
        ),
        "diagnostics": write_table(
            out / "diagnostics.csv",
            ["metric", "value"],
            [
                ("n", sample.n),
                ("stored_draws", len(samples)),
                ("lpml", score.lpml),
                ("accept_rate_r_mean", float(samples.accept_rate_r.mean())),
                ("accept_rate_r_min", float(samples.accept_rate_r.min())),
                ("accept_rate_r_max", float(samples.accept_rate_r.max())),
                ("accept_rate_alpha", float(samples.accept_rate_alpha)),
                ("alpha_mean", float(alphas.mean())),
                ("alpha_ci_lower", float(np.percentile(alphas, 2.5))),
                ("alpha_ci_upper", float(np.percentile(alphas, 97.5))),
                ("mu1_mean", float(mus[:, 0].mean())),
                ("mu2_mean", float(mus[:, 1].mean())),
                ("mean_direction_ci_lower", nu_lo),
                ("mean_direction_ci_upper", nu_hi),
                ("concentration_ci_lower", rho_lo),
                ("concentration_ci_upper", rho_hi),
            ],
        ),
    }
    posterior_path = out / "posterior.npz"
    save_posterior(samples, posterior_path)
    outputs["posterior"] = posterior_path
    if args.plot:
        outputs["figure"] = density_figure(
            out / "density.svg", est.grid, est.mean, est.lower, est.upper,
            data_angles=sample.angles, title=f"fit: {sample.name}",
        )
    _manifest(out, "fit", args, outputs, time.perf_counter() - t0)
    return 0


def cmd_score(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    samples = load_posterior(args.posterior)
    do_lpml = args.lpml or not args.bf

    rows = []
    outputs = {}
    if do_lpml:
        score = lpml(samples)
        rows.append(("lpml", score.lpml))
        outputs["cpo"] = write_table(
            out / "cpo.csv",
            ["index", "theta", "cpo", "degenerate"],
            zip(range(samples.angles.size), samples.angles, score.cpo, score.degenerate),
        )
    if args.bf:
        sd = savage_dickey_bf(samples)
        rows.extend(
            [("bf10", sd.bf10), ("bf_log_numerator", sd.log_numerator), ("bf_log_denominator", sd.log_denominator)]
        )
    outputs["score"] = write_table(out / "score.csv", ["metric", "value"], rows)
    _manifest(out, "score", args, outputs, time.perf_counter() - t0)
    return 0


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    rng = np.random.default_rng(args.seed)
    if args.model == "mixture":
        spec = MixtureSpec(weights=args.weights, locations=args.locations)
        sample = simulate_mixture(args.n, spec, rng)
    else:
        sample = simulate_projected_normal(args.n, args.mu, rng)
    sample_path = out / "sample.csv"
    save_angles(sample, sample_path)
    outputs = {"sample": sample_path}
    if args.plot:
        outputs["figure"] = angles_figure(out / "sample.svg", sample.angles, title=f"simulated {args.model}, n={args.n}")
    _manifest(out, "simulate", args, outputs, time.perf_counter() - t0)
    return 0


TABLE1_MUS = ((0.0, 0.0), (1.0, 1.0), (2.0, 2.0))
TABLE1_ALPHAS = (0.5, 1.0, 2.0)


def cmd_experiment_table1(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    data_rng = np.random.default_rng(args.seed)
    sample = simulate_mixture(args.n, DEFAULT_MIXTURE, data_rng)

    rows = []
    cell = 0
    for mu in TABLE1_MUS:
        for alpha in TABLE1_ALPHAS:
            cell += 1
            params = TreeParams(M=args.depth, alpha=alpha, delta=args.delta)
            config = McmcConfig(
                iterations=args.iterations, burn_in=args.burn_in, thin=args.thin,
                kappa=args.kappa, seed=args.seed + cell,
            )
            samples = run_chain(sample.angles, params, config,
                                centering=CenteringMeasure(*mu), quad_L=args.quad_L)
            rows.append((mu[0], mu[1], alpha, lpml(samples).lpml))

    outputs = {
        "data": out / "sample.csv",
        "table": write_table(out / "table1.csv", ["mu1", "mu2", "alpha", "lpml"], rows),
    }
    save_angles(sample, outputs["data"])
    if args.plot:
        outputs["figure"] = lpml_grid_figure(
            out / "table1.svg",
            [(f"({r[0]:g},{r[1]:g})", r[2], r[3]) for r in rows],
            title=f"score grid, n={args.n}",
        )
    _manifest(out, "experiment-table1", args, outputs, time.perf_counter() - t0)
    return 0


def _add_common_mcmc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--iterations", type=int, default=10000, help="total Gibbs sweeps")
    p.add_argument("--burn-in", type=int, default=1000, dest="burn_in", help="sweeps discarded up front")
    p.add_argument("--thin", type=int, default=5, help="keep one of every THIN sweeps after burn-in")
    p.add_argument("--kappa", type=float, default=0.5, help="resultant proposal tuning")
    p.add_argument("--quad-L", type=int, default=100, dest="quad_L", help="radial quadrature size")
    p.add_argument("--depth", type=int, default=4, help="tree depth M")
    p.add_argument("--delta", type=float, default=1.1, help="level-scaling exponent (> 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projpolya",
        description="Projected tree prior for circular data: prior simulation, Gibbs fitting, and model scores.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prior-sim", help="simulate prior density paths and their circular moments")
    p.add_argument("--mu", type=_pair, default=(0.0, 0.0), help="centering location x,y")
    p.add_argument("--alpha", type=float, default=1.0, help="tree precision")
    p.add_argument("--delta", type=float, default=1.1)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--paths", type=int, default=10, help="number of prior draws")
    p.add_argument("--angles-grid", type=int, default=128, dest="angles_grid", help="angle grid size (>= 64)")
    p.add_argument("--quad-L", type=int, default=100, dest="quad_L")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plot", action="store_true", help="also render an SVG figure")
    p.set_defaults(func=cmd_prior_sim)

    p = sub.add_parser("fit", help="run the Gibbs sampler on a dataset")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="path to a one-angle-per-row text file")
    src.add_argument("--dataset", choices=TRIUNFO_SPECIES, help="embedded camera-trap dataset")
    p.add_argument("--unit", choices=("radians", "degrees", "clock24"), default="radians")
    p.add_argument("--alpha", type=float, default=None, help="fixed tree precision (default 1.0)")
    p.add_argument("--alpha-prior", type=_pair, nargs="?", const=DEFAULT_ALPHA_PRIOR,
                   default=None, dest="alpha_prior",
                   help="gamma hyper-prior shape,rate for the precision (bare flag: 1,2)")
    p.add_argument("--mu", type=_pair, default=None, help="fixed centering location x,y (default 0,0)")
    p.add_argument("--mu-prior", type=_pair, nargs="?", const=DEFAULT_MU_PRIOR,
                   default=None, dest="mu_prior",
                   help="normal hyper-prior location,precision for the centering (bare flag: 0,1)")
    p.add_argument("--kappa-alpha", type=float, default=0.5, dest="kappa_alpha", help="precision proposal tuning")
    p.add_argument("--grid-angles", type=int, default=128, dest="grid_angles", help="reporting grid size (>= 64)")
    _add_common_mcmc(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="score a saved posterior")
    p.add_argument("--posterior", required=True, help="posterior.npz written by fit")
    p.add_argument("--lpml", action="store_true", help="pseudo-marginal likelihood (default)")
    p.add_argument("--bf", action="store_true", help="density-ratio Bayes factor against the flat-tree null")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("simulate", help="generate synthetic angle samples")
    p.add_argument("--model", choices=("mixture", "projnormal"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--weights", type=_weights, default=DEFAULT_MIXTURE.weights,
                   help="mixture weights w1,w2,w3,w4")
    p.add_argument("--locations", type=_locations, default=DEFAULT_MIXTURE.locations,
                   help="mixture locations x1,y1:x2,y2:x3,y3:x4,y4")
    p.add_argument("--mu", type=_pair, default=(0.0, 0.0), help="plane normal location (projnormal)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment-table1", help="fit the 3x3 location/precision grid to one mixture sample")
    p.add_argument("--n", type=int, default=500)
    _add_common_mcmc(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_experiment_table1)

    return parser


def _validate(parser: argparse.ArgumentParser, args) -> None:
    if getattr(args, "angles_grid", 64) < 64 or getattr(args, "grid_angles", 64) < 64:
        parser.error("angle grids need at least 64 points")
    if getattr(args, "paths", 1) < 1:
        parser.error("--paths must be >= 1")
    if getattr(args, "n", 1) < 1:
        parser.error("--n must be >= 1")
    if getattr(args, "quad_L", 1) < 1:
        parser.error("--quad-L must be >= 1")
    if hasattr(args, "depth") and (args.depth < 1 or args.delta <= 1):
        parser.error("need depth >= 1 and delta > 1")
    if args.command in ("fit", "experiment-table1"):
        if args.iterations <= args.burn_in or args.burn_in < 0 or args.thin < 1:
            parser.error("need iterations > burn-in >= 0 and thin >= 1")
        if args.kappa <= 0:
            parser.error("--kappa must be positive")
    if args.command == "prior-sim" and args.alpha <= 0:
        parser.error("--alpha must be positive")
    if args.command == "fit":
        if args.alpha is not None and args.alpha_prior is not None:
            parser.error("--alpha and --alpha-prior are mutually exclusive")
        if args.mu is not None and args.mu_prior is not None:
            parser.error("--mu and --mu-prior are mutually exclusive")
        if args.alpha is not None and args.alpha <= 0:
            parser.error("--alpha must be positive")
    if args.command == "simulate" and args.model == "mixture":
        try:
            MixtureSpec(weights=args.weights, locations=args.locations)
        except ValueError as exc:
            parser.error(str(exc))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    try:
        return args.func(args)
    except AngleParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
