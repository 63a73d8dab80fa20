"""Seeded data streams and empirical subgaussian machinery.

Streams draw isotropic noise Z (zero mean, identity covariance) and color it
with the model's covariance square root.  Everything is keyed by 64-bit seeds
through numpy's counter-based Philox generator so that runs replay exactly;
:data:`RNG_ALGORITHM` names the generator in experiment records.

The second half of the module estimates subgaussian / subexponential norms
from samples and checks the tail and fourth-moment properties those norms
imply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SpectralModel, project_to_sphere

RNG_ALGORITHM = "philox4x64-numpy"

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15

NOISE_KINDS = ("gaussian", "rademacher", "sphere_scaled")

# Truncation of the sup over p >= 1 in the norm definitions; for the
# distributions used here the sup is attained at small p, and empirical
# moments beyond p ~ 10 are noise-dominated.
DEFAULT_P_GRID = tuple(1.0 + 0.5 * i for i in range(19))


def splitmix64(x: int) -> int:
    """One output of the splitmix64 mixer (Steele, Lea & Flood 2014)."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(base_seed: int, index: int) -> int:
    """Replicate seed: splitmix64 of the base seed advanced ``index+1`` times
    by the golden-ratio increment.  Documented so layouts can be reproduced
    elsewhere."""
    return splitmix64((base_seed + index * _GOLDEN) & _MASK64)


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def draw_noise(gen: np.random.Generator, kind: str, n: int, d: int) -> np.ndarray:
    """(n, d) block of isotropic noise: E[Z] = 0, E[Z Z^T] = I."""
    if kind == "gaussian":
        return gen.standard_normal((n, d))
    if kind == "rademacher":
        return gen.integers(0, 2, size=(n, d)).astype(float) * 2.0 - 1.0
    if kind == "sphere_scaled":
        z = gen.standard_normal((n, d))
        norms = np.sqrt(np.einsum("nd,nd->n", z, z))
        return z * (math.sqrt(d) / norms)[:, None]
    raise ValueError(f"unknown noise kind {kind!r}")


class StreamSource:
    """Deterministic stream of samples X = (covariance)^{1/2} Z.

    Single-owner mutable: the counter advances with every draw.  Two sources
    built from the same (model, noise, seed) replay the identical sequence,
    regardless of how draws are batched.
    """

    def __init__(self, model: SpectralModel, noise: str, seed: int):
        if noise not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {noise!r}")
        self.model = model
        self.noise = noise
        self.seed = int(seed)
        self.counter = 0
        self._gen = make_generator(self.seed)
        self._root = model.sqrt_covariance

    def take(self, n: int) -> np.ndarray:
        """Next ``n`` samples as an (n, d) array."""
        z = draw_noise(self._gen, self.noise, n, self.model.dim)
        self.counter += n
        return z @ self._root

    def next_sample(self) -> np.ndarray:
        return self.take(1)[0]


def uniform_sphere(seed_or_gen, d: int) -> np.ndarray:
    """Uniform draw from the unit sphere (normalized standard normals)."""
    if d < 1:
        raise ValueError("dimension must be positive")
    gen = seed_or_gen
    if not isinstance(gen, np.random.Generator):
        gen = make_generator(int(seed_or_gen))
    return project_to_sphere(gen.standard_normal(d))


def sphere_surface_area(m: int) -> float:
    """Surface area of the unit sphere in R^m: 2 pi^{m/2} / Gamma(m/2)."""
    if m < 1:
        raise ValueError("dimension must be positive")
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


def sphere_marginal_density(d: int, x) -> float | np.ndarray:
    """Density of one coordinate of a uniform point on the sphere in R^d.

    (omega_{d-1}/omega_d) (1 - x^2)^{(d-3)/2} on [-1, 1].  For d = 3 this is
    the constant 1/2; for d = 2 it diverges at the endpoints.
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("argument outside [-1, 1]")
    const = sphere_surface_area(d - 1) / sphere_surface_area(d)
    expo = (d - 3) / 2.0
    with np.errstate(divide="ignore"):
        dens = const * np.power(1.0 - x * x, expo)
    if dens.ndim == 0:
        return float(dens)
    return dens


def _moment_norm(samples, p_grid, scaling) -> float:
    y = np.abs(np.asarray(samples, dtype=float).ravel())
    if y.size == 0:
        raise ValueError("empty sample set")
    p_grid = [float(p) for p in p_grid]
    if not p_grid or any(p < 1.0 for p in p_grid):
        raise ValueError("p grid must be nonempty with every p >= 1")
    best = 0.0
    for p in p_grid:
        moment = float(np.mean(y**p)) ** (1.0 / p)
        best = max(best, scaling(p) * moment)
    return best


def psi2_norm_estimate(samples, p_grid=DEFAULT_P_GRID) -> float:
    """Empirical subgaussian norm: max over p of p^{-1/2} (mean |Y|^p)^{1/p}."""
    return _moment_norm(samples, p_grid, lambda p: p**-0.5)


def psi1_norm_estimate(samples, p_grid=DEFAULT_P_GRID) -> float:
    """Empirical subexponential norm: max over p of p^{-1} (mean |Y|^p)^{1/p}."""
    return _moment_norm(samples, p_grid, lambda p: 1.0 / p)


@dataclass(frozen=True)
class TailCheckResult:
    """Per-threshold comparison of the empirical tail against the
    subgaussian bound 2 exp(-t^2 / psi2^2) plus binomial sampling slack."""

    passed: bool
    thresholds: tuple
    empirical: tuple
    bounds: tuple

    @property
    def margins(self) -> tuple:
        return tuple(b - e for b, e in zip(self.bounds, self.empirical))


def tail_check(samples, psi2: float, t_grid) -> TailCheckResult:
    """Check P(|Y| >= t) <= 2 exp(-t^2/psi2^2) + 3 sqrt(p(1-p)/n) per t."""
    if not psi2 > 0:
        raise ValueError("psi2 must be positive")
    y = np.abs(np.asarray(samples, dtype=float).ravel())
    if y.size == 0:
        raise ValueError("empty sample set")
    n = y.size
    thresholds, empirical, bounds = [], [], []
    for t in t_grid:
        t = float(t)
        p_hat = float(np.mean(y >= t))
        slack = 3.0 * math.sqrt(p_hat * (1.0 - p_hat) / n)
        bound = 2.0 * math.exp(-(t * t) / (psi2 * psi2)) + slack
        thresholds.append(t)
        empirical.append(p_hat)
        bounds.append(bound)
    passed = all(e <= b for e, b in zip(empirical, bounds))
    return TailCheckResult(passed, tuple(thresholds), tuple(empirical), tuple(bounds))


@dataclass(frozen=True)
class FourthMomentResult:
    passed: bool
    estimate: float
    limit: float


def fourth_moment_check(noise: str, w, n: int, seed: int = 0) -> FourthMomentResult:
    """Monte-Carlo check of E (w . Z)^4 <= 16 ||w||^4 for isotropic noise.

    The limit carries a 5/sqrt(n) sampling allowance.
    """
    w = np.asarray(w, dtype=float)
    if n < 1:
        raise ValueError("need at least one sample")
    gen = make_generator(seed)
    z = draw_noise(gen, noise, n, w.size)
    estimate = float(np.mean((z @ w) ** 4))
    norm4 = float(np.dot(w, w)) ** 2
    limit = 16.0 * norm4 * (1.0 + 5.0 / math.sqrt(n))
    return FourthMomentResult(estimate <= limit, estimate, limit)
