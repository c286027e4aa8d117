"""Projected tree prior for circular data.

A bivariate branching-probability tree on the plane, centered on a
product normal, is radially projected to the unit circle. The package
provides prior simulation, posterior inference by data-augmented Gibbs
sampling, and model-comparison scores, plus a CLI that writes delimited
tables, manifests, and figures.
"""

__version__ = "0.1.0"

from .centering import (
    CenteringMeasure,
    PartitionIndex,
    density_at,
    partition_index,
    std_normal_cdf,
    std_normal_quantile,
)
from .data import (
    AngleSample,
    MixtureSpec,
    DEFAULT_MIXTURE,
    load_angles,
    save_angles,
    simulate_mixture,
    simulate_projected_normal,
    triunfo,
)
from .fitstats import (
    DensityEstimate,
    FitScore,
    MomentPosterior,
    SavageDickey,
    density_estimate,
    lpml,
    mean_direction_difference,
    moment_posterior,
    savage_dickey_bf,
)
from .mcmc import (
    McmcConfig,
    McmcState,
    PosteriorSamples,
    load_posterior,
    run_chain,
    save_posterior,
)
from .projection import (
    QuadratureGrid,
    TrigMoments,
    cartesian_to_polar,
    default_grid,
    marginal_density,
    polar_to_cartesian,
    sample_moments,
    trig_moments,
    wrap_angle,
)
from .tree import (
    BranchingTree,
    CountTree,
    TreeParams,
    count_data,
    dirichlet_log_density,
    joint_density,
    posterior_dirichlet_params,
    rho,
    sample_prior_tree,
    set_probability,
    uniform_tree,
)

__all__ = [
    "__version__",
    "CenteringMeasure",
    "PartitionIndex",
    "density_at",
    "partition_index",
    "std_normal_cdf",
    "std_normal_quantile",
    "AngleSample",
    "MixtureSpec",
    "DEFAULT_MIXTURE",
    "load_angles",
    "save_angles",
    "simulate_mixture",
    "simulate_projected_normal",
    "triunfo",
    "DensityEstimate",
    "FitScore",
    "MomentPosterior",
    "SavageDickey",
    "density_estimate",
    "lpml",
    "mean_direction_difference",
    "moment_posterior",
    "savage_dickey_bf",
    "McmcConfig",
    "McmcState",
    "PosteriorSamples",
    "load_posterior",
    "run_chain",
    "save_posterior",
    "QuadratureGrid",
    "TrigMoments",
    "cartesian_to_polar",
    "default_grid",
    "marginal_density",
    "polar_to_cartesian",
    "sample_moments",
    "trig_moments",
    "wrap_angle",
    "BranchingTree",
    "CountTree",
    "TreeParams",
    "count_data",
    "dirichlet_log_density",
    "joint_density",
    "posterior_dirichlet_params",
    "rho",
    "sample_prior_tree",
    "set_probability",
    "uniform_tree",
]
