"""Computable convergence diagnostics for the streaming iteration.

Everything here works in eigenbasis coordinates v (see
:func:`streampca.model.rescale_to_eigenbasis`): regions of the sphere keyed
by the leading coordinate, stopping times of a recorded run, the rescaled
stepsize and horizons that calibrate stepsize conditions, and first-order
decompositions of single-step increments with exactly-accounted remainders.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import SpectralModel, rescale_to_eigenbasis, report_from_cosine

# |v1| >= WARM_THRESHOLD is the warm half of the sphere (angle within 45
# degrees of the principal axis, either sign); the ratio process is
# well-conditioned while |v1| stays above RATIO_SAFE_LOWER.
WARM_THRESHOLD = 1.0 / math.sqrt(2.0)
RATIO_SAFE_LOWER = 1.0 / 3.0


@dataclass(frozen=True)
class RegionTag:
    """Sphere-region membership of an iterate, keyed by |v1|.

    ``cold`` and ``warm`` partition the sphere at |v1| = 1/sqrt(2); the wider
    ``ratio_safe`` band |v1| in [1/3, 1] contains the warm region.
    """

    cold: bool
    warm: bool
    ratio_safe: bool


def classify_region(v) -> RegionTag:
    v = np.asarray(v, dtype=float)
    a = abs(float(v[0]))
    warm = a >= WARM_THRESHOLD
    return RegionTag(cold=not warm, warm=warm, ratio_safe=a >= RATIO_SAFE_LOWER)


@dataclass(frozen=True)
class StoppingTimes:
    """First-passage indices of a run; ``None`` means the event never fired.

    n_w: first step at which the iterate leaves the ratio-safe band.
    n_m: first step whose sample magnitude statistic reaches sqrt(M), where
         the statistic is max(max_k |Y_k|, |v_prev . Y|).
    n_c: first step at which the iterate enters the warm region.
    """

    n_w: int | None
    n_m: int | None
    n_c: int | None


def rescaled_stepsize(lam1: float, lam2: float, beta: float) -> float:
    """Dimensionless stepsize lam1^2 beta / (lam1 - lam2)."""
    return lam1 * lam1 * beta / (lam1 - lam2)


def magnitude_threshold(lam1: float, beta_hat: float, epsilon: float) -> float:
    """Sample-magnitude cutoff M = lam1 * beta_hat^(-2 epsilon)."""
    if not (0.0 < epsilon < 0.125):
        raise ValueError("epsilon out of theorem range")
    if not beta_hat > 0:
        raise ValueError("rescaled stepsize must be positive")
    return lam1 * beta_hat ** (-2.0 * epsilon)


def _per_step_decay(beta: float, lam1: float, lam2: float) -> float:
    gap = lam1 - lam2
    if not gap > 0:
        raise ValueError("eigengap must be positive")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if beta * gap >= 1.0:
        raise ValueError("contraction factor non-positive")
    return -math.log1p(-beta * gap)


def decay_horizon(beta: float, s: float, lam1: float, lam2: float) -> int:
    """Steps until the deterministic contraction factor shrinks to the s-th
    power of the rescaled stepsize.

    Clamps to 0 (with a warning) in the large-stepsize regime where the
    rescaled stepsize is >= 1 and the definition would go nonpositive.
    """
    rate = _per_step_decay(beta, lam1, lam2)
    argument = (lam1 - lam2) / (lam1 * lam1 * beta)  # = 1 / rescaled stepsize
    if argument <= 1.0:
        warnings.warn("decay horizon clamped to 0: rescaled stepsize >= 1")
        return 0
    return math.ceil(s * math.log(argument) / rate)


def warmup_horizon(beta: float, c_init: float, d: int, lam1: float, lam2: float) -> int:
    """Steps within which an iterate with tan^2 <= c_init * d reaches the
    warm region (with high probability for small stepsizes)."""
    if not c_init > 0:
        raise ValueError("c_init must be positive")
    if d < 1:
        raise ValueError("dimension must be positive")
    rate = _per_step_decay(beta, lam1, lam2)
    return math.ceil(math.log(4.0 * c_init * d) / rate)


@dataclass(frozen=True)
class DecompositionReport:
    """Exact one-step increment split into a first-order term and the
    remainder, with ``exact == leading + remainder`` holding bitwise
    (the remainder is defined by subtraction)."""

    exact: float
    leading: float
    remainder: float
    beta: float


def increment_decomposition(v, y, beta: float, k: int) -> DecompositionReport:
    """Projected-update increment on coordinate k (1-based) and its
    first-order approximation beta [ (v.y) y_k - v_k (v.y)^2 (1 + beta |y|^2 / 2) ].

    The approximation degrades once beta times the squared magnitude
    statistic exceeds ~1/3; a warning flags that regime.
    """
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    if not 1 <= k <= v.size:
        raise ValueError("coordinate index out of range")
    s = float(np.dot(v, y))
    mag2 = max(float(np.max(np.abs(y))) if y.size else 0.0, abs(s)) ** 2
    if beta * mag2 > 1.0 / 3.0:
        warnings.warn("stepsize times squared sample magnitude exceeds 1/3")
    w = v + (beta * s) * y
    exact = float(w[k - 1] / np.linalg.norm(w) - v[k - 1])
    leading = beta * (
        s * float(y[k - 1])
        - float(v[k - 1]) * s * s * (1.0 + 0.5 * beta * float(np.dot(y, y)))
    )
    return DecompositionReport(exact, leading, exact - leading, beta)


def ratio_increment_decomposition(v, y, beta: float, k: int) -> DecompositionReport:
    """Increment of the coordinate ratio v_k / v_1 (k >= 2, 1-based) and its
    first-order approximation beta (v.y / v_1) (y_k - (v_k / v_1) y_1)."""
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    if not 2 <= k <= v.size:
        raise ValueError("coordinate index out of range")
    v1 = float(v[0])
    if abs(v1) < RATIO_SAFE_LOWER:
        warnings.warn("iterate outside the ratio-safe band")
    s = float(np.dot(v, y))
    new_v1 = v1 + beta * s * float(y[0])
    if new_v1 == 0.0:
        raise ValueError("ratio undefined")
    vk = float(v[k - 1])
    exact = (vk + beta * s * float(y[k - 1])) / new_v1 - vk / v1
    leading = beta * (s / v1) * (float(y[k - 1]) - (vk / v1) * float(y[0]))
    return DecompositionReport(exact, leading, exact - leading, beta)


@dataclass
class Trajectory:
    """Strided per-step metrics of one run plus optional full-resolution
    diagnostic channels.

    ``steps`` etc. hold the recorded (strided) rows; ``v1_abs_full`` has the
    leading coordinate for every step 0..N and ``magnitude_full`` the sample
    magnitude statistic for steps 1..N, when the recorder kept them.
    """

    steps: np.ndarray
    sin2: np.ndarray
    tan2: np.ndarray
    v1_abs: np.ndarray
    nw_hit: np.ndarray
    nm_hit: np.ndarray
    nc_hit: np.ndarray
    stopping: StoppingTimes | None = None
    v1_abs_full: np.ndarray | None = None
    magnitude_full: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.steps)


def stopping_times(traj: Trajectory, threshold_m: float) -> StoppingTimes:
    """First-passage times recomputed by brute force from the trajectory's
    full-resolution channels (the independent check of streaming detection)."""
    if traj.v1_abs_full is None or traj.magnitude_full is None:
        raise ValueError("trajectory lacks diagnostics channel")
    v1 = np.asarray(traj.v1_abs_full, dtype=float)
    mag = np.asarray(traj.magnitude_full, dtype=float)
    exits = np.nonzero(v1 < RATIO_SAFE_LOWER)[0]
    n_w = int(exits[0]) if exits.size else None
    entries = np.nonzero(v1 >= WARM_THRESHOLD)[0]
    n_c = int(entries[0]) if entries.size else None
    hits = np.nonzero(mag >= math.sqrt(threshold_m))[0]
    n_m = int(hits[0]) + 1 if hits.size else None  # channel starts at step 1
    return StoppingTimes(n_w=n_w, n_m=n_m, n_c=n_c)


class _StoppingDetector:
    """Streaming first-passage detection; feed it every step in order."""

    def __init__(self, sqrt_m: float | None):
        self.sqrt_m = sqrt_m
        self.n_w = None
        self.n_m = None
        self.n_c = None

    def see_iterate(self, n: int, v1_abs: float):
        if self.n_w is None and v1_abs < RATIO_SAFE_LOWER:
            self.n_w = n
        if self.n_c is None and v1_abs >= WARM_THRESHOLD:
            self.n_c = n

    def see_magnitude(self, n: int, magnitude: float):
        if self.n_m is None and self.sqrt_m is not None and magnitude >= self.sqrt_m:
            self.n_m = n

    def result(self) -> StoppingTimes:
        return StoppingTimes(self.n_w, self.n_m, self.n_c)


def default_stride(n_steps: int, target: int = 10_000) -> int:
    """Record every step up to the target trajectory length, then thin."""
    return max(1, math.ceil(n_steps / target))


class TrajectoryRecorder:
    """Recorder hook for :func:`streampca.oja.run_stream`.

    Rescales the ambient iterate into the model's eigenbasis, records strided
    angle metrics, runs streaming stopping-time detection at full resolution,
    and (by default) keeps the full-resolution channels needed by
    :func:`stopping_times`.
    """

    def __init__(
        self,
        model: SpectralModel,
        threshold_m: float | None = None,
        stride: int = 1,
        keep_channels: bool = True,
    ):
        self.model = model
        self.stride = max(1, int(stride))
        self.keep_channels = keep_channels
        sqrt_m = math.sqrt(threshold_m) if threshold_m is not None else None
        self._detector = _StoppingDetector(sqrt_m)
        self._rows = []
        self._v1_full = []
        self._mag_full = []
        self._last_step = 0

    def _record_row(self, n: int, v1: float):
        report = report_from_cosine(v1)
        det = self._detector
        self._rows.append(
            (
                n,
                report.sin2,
                report.tan2,
                abs(v1),
                det.n_w is not None,
                det.n_m is not None,
                det.n_c is not None,
            )
        )

    def start(self, u0):
        v0 = rescale_to_eigenbasis(self.model, u0)
        v1 = float(v0[0])
        self._detector.see_iterate(0, abs(v1))
        if self.keep_channels:
            self._v1_full.append(abs(v1))
        self._record_row(0, v1)

    def observe(self, step: int, x, u_prev, u_next):
        y = rescale_to_eigenbasis(self.model, x)
        magnitude = max(float(np.max(np.abs(y))), abs(float(np.dot(u_prev, x))))
        self._detector.see_magnitude(step, magnitude)
        v1 = float(np.dot(self.model.principal, u_next))
        self._detector.see_iterate(step, abs(v1))
        if self.keep_channels:
            self._v1_full.append(abs(v1))
            self._mag_full.append(magnitude)
        if step % self.stride == 0:
            self._record_row(step, v1)
        self._last_step = step

    def trajectory(self) -> Trajectory:
        rows = self._rows
        if rows and rows[-1][0] != self._last_step and self._last_step > 0:
            # Always include the final step even off-stride.
            last = self._v1_full[-1] if self.keep_channels else None
            if last is not None:
                self._record_row(self._last_step, last)
                rows = self._rows
        cols = list(zip(*rows)) if rows else [[]] * 7
        return Trajectory(
            steps=np.asarray(cols[0], dtype=int),
            sin2=np.asarray(cols[1], dtype=float),
            tan2=np.asarray(cols[2], dtype=float),
            v1_abs=np.asarray(cols[3], dtype=float),
            nw_hit=np.asarray(cols[4], dtype=bool),
            nm_hit=np.asarray(cols[5], dtype=bool),
            nc_hit=np.asarray(cols[6], dtype=bool),
            stopping=self._detector.result(),
            v1_abs_full=np.asarray(self._v1_full) if self.keep_channels else None,
            magnitude_full=np.asarray(self._mag_full) if self.keep_channels else None,
        )


def trajectory_to_csv(traj: Trajectory, fh) -> None:
    """Write the strided rows as CSV: step, sin2, tan2, v1_abs, region, and
    cumulative stopping flags."""
    fh.write("# schema=1\n")
    fh.write("step,sin2,tan2,v1_abs,region,nw_hit,nm_hit,nc_hit\n")
    for i in range(len(traj)):
        region = "warm" if traj.v1_abs[i] >= WARM_THRESHOLD else "cold"
        fh.write(
            f"{traj.steps[i]},{float(traj.sin2[i])!r},{float(traj.tan2[i])!r},"
            f"{float(traj.v1_abs[i])!r},{region},"
            f"{int(traj.nw_hit[i])},{int(traj.nm_hit[i])},{int(traj.nc_hit[i])}\n"
        )
