"""Streaming principal component estimation at desk scale.

The package implements the one-pass, O(d)-per-sample stochastic
approximation for the top eigenvector of a covariance matrix, together with
the stepsize rules, convergence diagnostics, batch baseline, and a seeded
Monte-Carlo harness that reproduces the (d-1) log N / N error law
empirically.
"""

from .diagnostics import (
    DecompositionReport,
    RegionTag,
    StoppingTimes,
    Trajectory,
    TrajectoryRecorder,
    classify_region,
    decay_horizon,
    increment_decomposition,
    magnitude_threshold,
    ratio_increment_decomposition,
    rescaled_stepsize,
    stopping_times,
    trajectory_to_csv,
    warmup_horizon,
)
from .harness import (
    AggregateReport,
    ExperimentConfig,
    FitResult,
    RunRecord,
    fit_rate,
    run_experiment,
    run_replicate,
    sweep,
)
from .model import (
    AngleReport,
    SpectralModel,
    angle_report,
    coordinate_ratios,
    effective_noise_variance,
    project_to_sphere,
    random_orthogonal,
    rescale_to_eigenbasis,
)
from .oja import OjaState, StepsizeSchedule, oja_step, product_oracle, run_stream
from .oracle import (
    BatchPcaResult,
    RestrictedMean,
    batch_pca,
    bound_curve,
    empirical_covariance,
    restricted_mean,
)
from .sampling import (
    StreamSource,
    derive_seed,
    fourth_moment_check,
    psi1_norm_estimate,
    psi2_norm_estimate,
    sphere_marginal_density,
    tail_check,
    uniform_sphere,
)
from .verify import run_suite

__version__ = "0.1.0"
