"""Data-augmented Gibbs sampler for the projected tree model.

Each sweep refreshes the branching probabilities from their conjugate
Dirichlet update given the augmented plane points, then refreshes every
latent resultant length with a gamma random-walk Metropolis step, and
optionally refreshes the tree precision (random-walk Metropolis) and the
centering location (conjugate normal draw).

Randomness is split into dedicated streams: one for the tree, one for the
precision, one for the location, and one per datum keyed to the rank of
its angle. Permuting the input angles therefore permutes the per-datum
output and leaves every tree/precision/location draw unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .centering import CenteringMeasure
from .projection import TWO_PI, QuadratureGrid, marginal_density
from .tree import (
    BranchingTree,
    TreeParams,
    child_quadruples,
    count_data,
    dirichlet_log_density,
    log_joint_density,
    rho,
    sample_posterior_tree,
    sample_prior_tree,
    with_alpha,
)

__all__ = [
    "McmcConfig",
    "McmcState",
    "PosteriorSamples",
    "DEFAULT_ALPHA_PRIOR",
    "DEFAULT_MU_PRIOR",
    "resultant_log_target",
    "update_tree",
    "update_resultant",
    "update_resultants",
    "update_alpha",
    "update_mu",
    "run_chain",
    "save_posterior",
    "load_posterior",
]

DEFAULT_ALPHA_PRIOR = (1.0, 2.0)
DEFAULT_MU_PRIOR = (0.0, 1.0)

# Sweeps of per-datum proposal noise drawn per allocation.
_CHUNK = 2048


@dataclass(frozen=True)
class McmcConfig:
    """Run lengths, proposal tunings, and optional hyper-priors.

    ``alpha_prior`` is a (shape, rate) gamma pair; ``mu_prior`` is a
    (location, precision) normal pair shared by both coordinates. Either
    being None keeps the corresponding parameter fixed.
    """

    iterations: int = 10000
    burn_in: int = 1000
    thin: int = 5
    kappa: float = 0.5
    alpha_prior: tuple | None = None
    mu_prior: tuple | None = None
    kappa_alpha: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (self.iterations > self.burn_in >= 0):
            raise ValueError("need iterations > burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not (self.kappa > 0 and self.kappa_alpha > 0):
            raise ValueError("proposal tunings must be positive")
        if self.alpha_prior is not None:
            c_a, d_a = self.alpha_prior
            if not (c_a > 0 and d_a > 0):
                raise ValueError("alpha prior needs positive shape and rate")
        if self.mu_prior is not None:
            g0, tau = self.mu_prior
            if not (math.isfinite(g0) and tau > 0):
                raise ValueError("mu prior needs finite location and positive precision")

    @property
    def n_stored(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class McmcState:
    """One sweep's snapshot of the augmented model."""

    tree: BranchingTree
    resultants: np.ndarray
    alpha: float
    mu: CenteringMeasure
    accept_r: np.ndarray
    accept_alpha: int = 0

    def snapshot(self) -> "McmcState":
        return McmcState(
            tree=self.tree.copy(),
            resultants=self.resultants.copy(),
            alpha=self.alpha,
            mu=self.mu,
            accept_r=self.accept_r.copy(),
            accept_alpha=self.accept_alpha,
        )


@dataclass
class PosteriorSamples:
    """Thinned chain with cached density evaluations.

    ``density_at_data[t, i]`` is the draw-t marginal density at observed
    angle i (the input of the predictive-ordinate score);
    ``density_at_grid`` is the same on the reporting grid when one was
    requested.
    """

    states: list
    config: McmcConfig
    params: TreeParams
    angles: np.ndarray
    density_at_data: np.ndarray
    report_angles: np.ndarray | None = None
    density_at_grid: np.ndarray | None = None
    quad_L: int = 100
    sweeps_run: int = 0

    def __len__(self) -> int:
        return len(self.states)

    @property
    def alpha_fixed(self) -> bool:
        return self.config.alpha_prior is None

    @property
    def alphas(self) -> np.ndarray:
        return np.array([s.alpha for s in self.states])

    @property
    def mus(self) -> np.ndarray:
        return np.array([[s.mu.mu1, s.mu.mu2] for s in self.states])

    @property
    def accept_rate_r(self) -> np.ndarray:
        """Per-datum acceptance rate of the resultant updates."""
        return self.states[-1].accept_r / max(self.sweeps_run, 1)

    @property
    def accept_rate_alpha(self) -> float:
        return self.states[-1].accept_alpha / max(self.sweeps_run, 1)


def _augmented_points(resultants: np.ndarray, cos_t: np.ndarray, sin_t: np.ndarray) -> np.ndarray:
    return np.column_stack([resultants * cos_t, resultants * sin_t])


def update_tree(state: McmcState, angles: np.ndarray, params: TreeParams, rng: np.random.Generator) -> McmcState:
    """Refresh every branching quadruple from its conjugate update given
    the current augmented plane points."""
    th = np.asarray(angles, dtype=float)
    pts = _augmented_points(state.resultants, np.cos(th), np.sin(th))
    counts = count_data(state.mu, pts, params.M)
    state.tree = sample_posterior_tree(counts, with_alpha(params, state.alpha), rng)
    return state


def resultant_log_target(state: McmcState, theta: float, r):
    """Unnormalized log conditional of a latent resultant at angle theta.

    The tree-modulated plane density times the polar Jacobian r, up to an
    additive constant.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("resultant must be positive")
    out = log_joint_density(state.tree, state.mu, r * math.cos(theta), r * math.sin(theta)) + np.log(r)
    return float(out) if out.ndim == 0 else out


def _log_target_batch(tree, mu, cos_t, sin_t, r):
    return log_joint_density(tree, mu, r * cos_t, r * sin_t) + np.log(r)


def resultant_log_acceptance(state: McmcState, angles, r_prop, kappa: float):
    """Vectorized log Metropolis ratio for moving each resultant to r_prop.

    The gamma random-walk proposal Ga(kappa, kappa/r_current) is not
    symmetric, so the ratio carries the forward/backward proposal
    densities; the acceptance probability is this ratio capped at one.
    """
    th = np.asarray(angles, dtype=float)
    cos_t, sin_t = np.cos(th), np.sin(th)
    r_cur = state.resultants
    r_prop = np.asarray(r_prop, dtype=float)
    lt_cur = _log_target_batch(state.tree, state.mu, cos_t, sin_t, r_cur)
    lt_prop = _log_target_batch(state.tree, state.mu, cos_t, sin_t, r_prop)
    log_ratio = np.log(r_cur) - np.log(r_prop)
    log_q = (2.0 * kappa - 1.0) * log_ratio - kappa * (r_cur / r_prop - r_prop / r_cur)
    return lt_prop - lt_cur + log_q


def _apply_resultant_updates(state, angles, gammas, uniforms, kappa):
    r_prop = gammas * state.resultants / kappa
    ok = r_prop > 0.0
    r_prop = np.where(ok, r_prop, state.resultants)
    log_acc = resultant_log_acceptance(state, angles, r_prop, kappa)
    accept = ok & (np.log(uniforms) < np.minimum(log_acc, 0.0))
    state.resultants = np.where(accept, r_prop, state.resultants)
    state.accept_r += accept
    return accept


def update_resultants(state: McmcState, angles, kappa: float, rng: np.random.Generator) -> McmcState:
    """One Metropolis step on every latent resultant.

    The updates are conditionally independent given the tree, so the whole
    vector moves at once.
    """
    n = state.resultants.size
    gammas = rng.standard_gamma(kappa, size=n)
    uniforms = rng.random(n)
    _apply_resultant_updates(state, np.asarray(angles, dtype=float), gammas, uniforms, kappa)
    return state


def update_resultant(state: McmcState, angles, i: int, kappa: float, rng: np.random.Generator) -> McmcState:
    """Metropolis step on the single resultant of datum i."""
    th = np.asarray(angles, dtype=float)
    g = rng.standard_gamma(kappa)
    u = rng.random()
    r_prop = g * state.resultants[i] / kappa
    if r_prop > 0.0:
        sub = McmcState(state.tree, state.resultants[i : i + 1], state.alpha, state.mu, np.zeros(1, dtype=np.int64))
        log_acc = resultant_log_acceptance(sub, th[i : i + 1], np.array([r_prop]), kappa)[0]
        if math.log(u) < min(log_acc, 0.0):
            state.resultants[i] = r_prop
            state.accept_r[i] += 1
    return state


def _alpha_log_target(tree: BranchingTree, params: TreeParams, alpha: float, c_a: float, d_a: float) -> float:
    if alpha <= 0.0 or not math.isfinite(alpha):
        return -math.inf
    total = (c_a - 1.0) * math.log(alpha) - d_a * alpha
    for m in range(params.M):
        a = alpha * rho(m + 1, params.delta)
        quads = child_quadruples(tree.levels[m])
        total += float(np.sum(dirichlet_log_density(quads, np.full(4, a))))
    return total


def update_alpha(state: McmcState, params: TreeParams, config: McmcConfig, rng: np.random.Generator) -> McmcState:
    """Metropolis step on the tree precision under its gamma hyper-prior.

    Mirrors the resultant update: gamma random walk Ga(kappa_alpha,
    kappa_alpha/alpha) with the proposal-density correction, targeting the
    product of the Dirichlet densities of all branching quadruples times
    the gamma prior.
    """
    if config.alpha_prior is None:
        raise ValueError("alpha hyper-prior is disabled for this run")
    c_a, d_a = config.alpha_prior
    kappa = config.kappa_alpha
    a_cur = state.alpha
    g = rng.standard_gamma(kappa)
    u = rng.random()
    a_prop = g * a_cur / kappa
    if a_prop > 0.0:
        lt_cur = _alpha_log_target(state.tree, params, a_cur, c_a, d_a)
        lt_prop = _alpha_log_target(state.tree, params, a_prop, c_a, d_a)
        log_ratio = math.log(a_cur) - math.log(a_prop)
        log_q = (2.0 * kappa - 1.0) * log_ratio - kappa * (a_cur / a_prop - a_prop / a_cur)
        log_acc = lt_prop - lt_cur + log_q
        if math.log(u) < min(log_acc, 0.0):
            state.alpha = a_prop
            state.accept_alpha += 1
    return state


def update_mu(state: McmcState, angles, config: McmcConfig, rng: np.random.Generator) -> McmcState:
    """Conjugate normal draw of the centering location.

    Given the augmented plane points the two coordinates are independent
    normals with precision n + tau and mean (sum of coordinates + tau*g0)
    over (n + tau).
    """
    if config.mu_prior is None:
        raise ValueError("mu hyper-prior is disabled for this run")
    g0, tau = config.mu_prior
    th = np.asarray(angles, dtype=float)
    n = th.size
    prec = n + tau
    # sum the coordinate products in a canonical order so the draw is
    # invariant to permutations of the data
    s1 = float(np.sort(state.resultants * np.cos(th)).sum())
    s2 = float(np.sort(state.resultants * np.sin(th)).sum())
    m1 = (s1 + tau * g0) / prec
    m2 = (s2 + tau * g0) / prec
    z = rng.standard_normal(2)
    sd = 1.0 / math.sqrt(prec)
    state.mu = CenteringMeasure(m1 + sd * z[0], m2 + sd * z[1])
    return state


def _check_state(state: McmcState) -> None:
    if not np.all(np.isfinite(state.resultants)) or np.any(state.resultants <= 0.0):
        raise FloatingPointError("latent resultants left (0, inf)")
    if not (math.isfinite(state.alpha) and state.alpha > 0.0):
        raise FloatingPointError("tree precision left (0, inf)")


def _initial_alpha(params: TreeParams, config: McmcConfig) -> float:
    if config.alpha_prior is None:
        return params.alpha
    c_a, d_a = config.alpha_prior
    return c_a / d_a  # prior mean


def run_chain(
    angles,
    params: TreeParams,
    config: McmcConfig,
    centering: CenteringMeasure | None = None,
    quad_L: int = 100,
    report_angles=None,
) -> PosteriorSamples:
    """Run the full Gibbs sampler and return the thinned chain.

    Parameters
    ----------
    angles : array-like
        Observed angles, all in (0, 2*pi].
    params : TreeParams
        Depth, precision (used as the fixed value when no alpha prior is
        configured), and level-scaling exponent.
    config : McmcConfig
        Run lengths, tunings, hyper-priors, and the seed that makes the
        run fully reproducible.
    centering : CenteringMeasure, optional
        Fixed centering location; ignored when a mu prior is configured
        (the location then starts at the prior mean). Defaults to the
        origin.
    quad_L : int
        Radial quadrature size for the cached density evaluations.
    report_angles : array-like, optional
        Reporting grid at which each stored draw's density is also cached.

    Notes
    -----
    Initial values: resultants start at 1, the tree at a prior draw, the
    precision at its fixed value or prior mean, the location at its fixed
    value or prior mean. Sweep order: tree, resultants, precision,
    location.
    """
    th = np.asarray(angles, dtype=float)
    if th.ndim != 1 or th.size == 0:
        raise ValueError("need a one-dimensional, nonempty array of angles")
    if np.any(~np.isfinite(th)) or np.any((th <= 0.0) | (th > TWO_PI)):
        raise ValueError("angles must lie in (0, 2*pi]")
    n = th.size

    if config.mu_prior is not None:
        g0 = config.mu_prior[0]
        mu = CenteringMeasure(g0, g0)
    else:
        mu = centering if centering is not None else CenteringMeasure(0.0, 0.0)

    root = np.random.SeedSequence(config.seed)
    tree_ss, alpha_ss, mu_ss, data_ss = root.spawn(4)
    rng_tree = np.random.default_rng(tree_ss)
    rng_alpha = np.random.default_rng(alpha_ss)
    rng_mu = np.random.default_rng(mu_ss)
    # One stream per datum, keyed to the rank of its angle so that chains
    # on permuted data consume identical randomness per angle value.
    order = np.argsort(th, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    data_rngs = [np.random.default_rng(s) for s in data_ss.spawn(n)]

    alpha0 = _initial_alpha(params, config)
    state = McmcState(
        tree=sample_prior_tree(with_alpha(params, alpha0), rng_tree),
        resultants=np.ones(n),
        alpha=alpha0,
        mu=mu,
        accept_r=np.zeros(n, dtype=np.int64),
    )

    report = None if report_angles is None else np.asarray(report_angles, dtype=float)
    states: list[McmcState] = []
    dens_data: list[np.ndarray] = []
    dens_grid: list[np.ndarray] = []

    gammas = uniforms = None
    filled = 0
    for it in range(1, config.iterations + 1):
        col = (it - 1) % _CHUNK
        if col == 0:
            size = min(_CHUNK, config.iterations - filled)
            gammas = np.empty((n, size))
            uniforms = np.empty((n, size))
            for rank, gen in enumerate(data_rngs):
                gammas[rank] = gen.standard_gamma(config.kappa, size=size)
                uniforms[rank] = gen.random(size)
            filled += size

        update_tree(state, th, params, rng_tree)
        _apply_resultant_updates(state, th, gammas[ranks, col], uniforms[ranks, col], config.kappa)
        if config.alpha_prior is not None:
            update_alpha(state, params, config, rng_alpha)
        if config.mu_prior is not None:
            update_mu(state, th, config, rng_mu)
        _check_state(state)

        if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
            grid = QuadratureGrid.uniform(quad_L, state.mu.norm + 6.0)
            if report is None:
                dens_data.append(marginal_density(state.tree, state.mu, th, grid))
            else:
                both = marginal_density(state.tree, state.mu, np.concatenate([th, report]), grid)
                dens_data.append(both[:n])
                dens_grid.append(both[n:])
            states.append(state.snapshot())

    return PosteriorSamples(
        states=states,
        config=config,
        params=params,
        angles=th,
        density_at_data=np.asarray(dens_data),
        report_angles=report,
        density_at_grid=np.asarray(dens_grid) if report is not None else None,
        quad_L=quad_L,
        sweeps_run=config.iterations,
    )


def save_posterior(samples: PosteriorSamples, path) -> None:
    """Serialize a thinned chain to a compressed npz archive."""
    meta = {
        "config": vars(samples.config).copy(),
        "params": vars(samples.params).copy(),
        "quad_L": samples.quad_L,
        "sweeps_run": samples.sweeps_run,
        "has_grid": samples.report_angles is not None,
    }
    arrays = {
        "meta": np.frombuffer(json.dumps(meta, default=list).encode(), dtype=np.uint8),
        "angles": samples.angles,
        "density_at_data": samples.density_at_data,
        "resultants": np.array([s.resultants for s in samples.states]),
        "alphas": samples.alphas,
        "mus": samples.mus,
        "accept_r": samples.states[-1].accept_r,
        "accept_alpha": np.array(samples.states[-1].accept_alpha),
    }
    for m in range(1, samples.params.M + 1):
        arrays[f"tree_level_{m}"] = np.array([s.tree.levels[m - 1] for s in samples.states])
    if samples.report_angles is not None:
        arrays["report_angles"] = samples.report_angles
        arrays["density_at_grid"] = samples.density_at_grid
    np.savez_compressed(path, **arrays)


def load_posterior(path) -> PosteriorSamples:
    """Rebuild a PosteriorSamples from :func:`save_posterior` output."""
    try:
        npz = np.load(path)
    except Exception as exc:
        raise ValueError(f"{path} is not a posterior archive: {exc}") from exc
    with npz:
        meta = json.loads(bytes(npz["meta"]).decode())
        cfg = meta["config"]
        for key in ("alpha_prior", "mu_prior"):
            if cfg.get(key) is not None:
                cfg[key] = tuple(cfg[key])
        config = McmcConfig(**cfg)
        params = TreeParams(**meta["params"])
        angles = npz["angles"]
        levels = [npz[f"tree_level_{m}"] for m in range(1, params.M + 1)]
        resultants = npz["resultants"]
        alphas = npz["alphas"]
        mus = npz["mus"]
        accept_r = npz["accept_r"]
        accept_alpha = int(npz["accept_alpha"])
        states = []
        for t in range(resultants.shape[0]):
            states.append(
                McmcState(
                    tree=BranchingTree([lv[t] for lv in levels]),
                    resultants=resultants[t],
                    alpha=float(alphas[t]),
                    mu=CenteringMeasure(float(mus[t, 0]), float(mus[t, 1])),
                    accept_r=accept_r,
                    accept_alpha=accept_alpha,
                )
            )
        report = npz["report_angles"] if meta["has_grid"] else None
        dens_grid = npz["density_at_grid"] if meta["has_grid"] else None
        return PosteriorSamples(
            states=states,
            config=config,
            params=params,
            angles=angles,
            density_at_data=npz["density_at_data"],
            report_angles=report,
            density_at_grid=dens_grid,
            quad_L=int(meta["quad_L"]),
            sweeps_run=int(meta["sweeps_run"]),
        )
