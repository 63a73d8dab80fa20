"""Batch (sample-average) baseline and reference rate curves.

The batch estimator diagonalizes nothing: it builds the empirical second
moment matrix and extracts the top eigenpair by power iteration.  The bound
curves evaluate the shapes of the theoretical rate estimates with a
caller-supplied constant -- the absolute constants of the underlying theory
are never pretended to be known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SpectralModel, effective_noise_variance
from .sampling import make_generator

BOUND_KINDS = ("minimax", "thm3a", "thm3b", "thm1")


def empirical_covariance(samples) -> np.ndarray:
    """Average of outer products (no mean centering; the model is mean-zero)."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("need at least one sample vector")
    cov = x.T @ x / x.shape[0]
    return (cov + cov.T) / 2.0


class PowerIterationError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class BatchPcaResult:
    eigenvalue: float
    eigenvector: np.ndarray
    iterations: int
    residual: float


def batch_pca(
    samples, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0
) -> BatchPcaResult:
    """Top eigenpair of the empirical covariance by power iteration.

    Converges when ||S v - lam v|| <= tol * max(lam, 1).  The eigenvector
    sign is fixed so its largest-magnitude coordinate is positive.  Raises
    :class:`PowerIterationError` (with the last residual attached) if the
    iteration stalls; callers may retry on a shifted matrix S + cI.
    """
    cov = empirical_covariance(samples)
    d = cov.shape[0]
    gen = make_generator(seed)
    v = gen.standard_normal(d)
    v /= np.linalg.norm(v)
    residual = math.inf
    for it in range(1, max_iter + 1):
        w = cov @ v
        lam = float(np.dot(v, w))
        residual = float(np.linalg.norm(w - lam * v))
        if residual <= tol * max(lam, 1.0):
            idx = int(np.argmax(np.abs(v)))
            if v[idx] < 0:
                v = -v
            return BatchPcaResult(lam, v, it, residual)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            # Zero matrix: every direction is an eigenvector for eigenvalue 0.
            idx = int(np.argmax(np.abs(v)))
            if v[idx] < 0:
                v = -v
            return BatchPcaResult(0.0, v, it, 0.0)
        v = w / norm
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} iterations", residual
    )


def bound_curve(
    kind: str,
    model: SpectralModel,
    n_samples: int,
    constant: float,
    *,
    beta: float | None = None,
    step: int | None = None,
    warm_steps: int | None = None,
    epsilon: float | None = None,
) -> float:
    """Evaluate one reference rate curve at sample size ``n_samples``.

    Kinds (the labels match the CLI wire format):

    - ``minimax``: C * sigma*^2 * (d-1) / N, the information floor.
    - ``thm3b``:   C * sigma*^2 * (d-1) * log N / N.
    - ``thm3a``:   C * (lam1/gap) * sum_k lam_k/(lam1-lam_k) * log N / N,
      the spectrum-resolved refinement of ``thm3b``.
    - ``thm1``:    decay-plus-floor curve for a constant stepsize; requires
      ``beta``, ``step``, ``warm_steps`` and ``epsilon``.

    ``constant`` is always caller-supplied and scales the whole curve.
    """
    if kind not in BOUND_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}")
    if n_samples < 2:
        raise ValueError("need n_samples >= 2")
    if not constant > 0:
        raise ValueError("constant must be positive")
    lam = model.eigenvalues
    lam1 = float(lam[0])
    gap = model.gap
    d = model.dim
    if kind == "minimax":
        return constant * effective_noise_variance(model) * (d - 1) / n_samples
    if kind == "thm3b":
        return (
            constant
            * effective_noise_variance(model)
            * (d - 1)
            * math.log(n_samples)
            / n_samples
        )
    gaps = lam1 - lam[1:]
    if np.any(gaps <= 0):
        raise ValueError("trailing eigenvalue equals the top eigenvalue")
    if kind == "thm3a":
        spectral_sum = float(np.sum(lam[1:] / gaps))
        return constant * (lam1 / gap) * spectral_sum * math.log(n_samples) / n_samples
    # thm1
    if beta is None or step is None or warm_steps is None or epsilon is None:
        raise ValueError("thm1 needs beta, step, warm_steps and epsilon")
    beta_hat = lam1 * lam1 * beta / gap
    decay = (1.0 - beta * gap) ** (2 * (step - warm_steps))
    floor = float(
        np.sum((lam1 * lam[1:] + lam1 * lam1 * beta_hat ** (0.5 - 4 * epsilon)) / gaps)
    )
    return decay + constant * floor * beta


@dataclass(frozen=True)
class RestrictedMean:
    """Mean over an event: ``restricted`` divides by the total count
    (E[X; A]), ``conditional`` by the event count (E[X | A]; None when the
    event is empty), and ``frequency`` is the event rate."""

    restricted: float
    conditional: float | None
    frequency: float


def restricted_mean(values, mask) -> RestrictedMean:
    values = np.asarray(values, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if values.size == 0:
        raise ValueError("empty value list")
    if values.shape != mask.shape:
        raise ValueError("values and mask must have equal length")
    hits = int(np.count_nonzero(mask))
    total = float(np.sum(values[mask])) if hits else 0.0
    restricted = total / values.size
    conditional = total / hits if hits else None
    return RestrictedMean(restricted, conditional, hits / values.size)
