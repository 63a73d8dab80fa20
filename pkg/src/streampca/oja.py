"""The streaming principal-component iteration and its stepsize rules.

One pass of the estimator costs O(d): project the sample onto the current
iterate, take a rank-one step, renormalize.  ``product_oracle`` recomputes the
same composition as an unnormalized product of rank-one-updated matrix-vector
products and serves as an independent check of the engine.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .model import project_to_sphere
from .sampling import StreamSource

# Stepsize rule names.  "paper_optimal" is the horizon rule
# 2 log N / (gap * N); the others are the competitor rules this package
# benchmarks against, each keyed by the publication's first author.
SCHEDULE_VARIANTS = (
    "constant",
    "paper_optimal",
    "balsubramani",
    "desa",
    "shamir",
    "jain",
)

_HORIZON_VARIANTS = ("paper_optimal", "desa", "shamir")
_DECREASING_VARIANTS = ("balsubramani", "jain")

BETA_X2_GUARD = 1e12


@dataclass(frozen=True)
class StepsizeSchedule:
    """Rule mapping the 0-based step index to a stepsize.

    Horizon rules (constant over n) bake in the sample budget N; the
    decreasing rules carry a starting offset that the source publications
    leave unspecified -- it must be chosen explicitly for experiments.
    """

    variant: str
    beta0: float | None = None
    gap: float | None = None
    horizon: int | None = None
    lam1: float | None = None
    offset: int | None = None

    def __post_init__(self):
        if self.variant not in SCHEDULE_VARIANTS:
            raise ValueError(f"unknown schedule variant {self.variant!r}")
        if self.variant != "constant":
            if self.gap is None or not self.gap > 0:
                raise ValueError("eigengap must be positive")
        if self.variant == "constant" and not (self.beta0 and self.beta0 > 0):
            raise ValueError("constant schedule needs beta > 0")
        if self.variant in _HORIZON_VARIANTS:
            if self.horizon is None or self.horizon < 2:
                raise ValueError("degenerate horizon")
        if self.variant in _DECREASING_VARIANTS:
            if self.offset is None or self.offset < 1:
                raise ValueError("decreasing schedules need a positive offset")
        if self.variant == "shamir" and (self.lam1 is None or self.lam1 <= 0):
            raise ValueError("shamir schedule needs lam1 > 0")
        gap = self.gap if self.gap is not None else 1.0
        if self.beta(0) * gap >= 1.0:
            # The contraction factor 1 - beta * gap is non-positive here; the
            # iteration is still defined but the rate guarantees are vacuous.
            warnings.warn("stepsize * eigengap >= 1: contraction factor non-positive")

    # -- constructors --------------------------------------------------

    @classmethod
    def constant(cls, beta: float) -> "StepsizeSchedule":
        return cls("constant", beta0=float(beta))

    @classmethod
    def paper_optimal(cls, horizon: int, gap: float) -> "StepsizeSchedule":
        """2 log N / (gap * N) for a known sample budget N."""
        return cls("paper_optimal", gap=float(gap), horizon=int(horizon))

    @classmethod
    def balsubramani(cls, gap: float, offset: int = 25) -> "StepsizeSchedule":
        """2 / (gap * (n + offset)), decreasing."""
        return cls("balsubramani", gap=float(gap), offset=int(offset))

    @classmethod
    def desa(cls, gap: float, horizon: int) -> "StepsizeSchedule":
        """16 / (gap * N)."""
        return cls("desa", gap=float(gap), horizon=int(horizon))

    @classmethod
    def shamir(cls, lam1: float, gap: float, horizon: int) -> "StepsizeSchedule":
        """lam1 log N / (gap * N)."""
        return cls("shamir", gap=float(gap), horizon=int(horizon), lam1=float(lam1))

    @classmethod
    def jain(cls, gap: float, offset: int = 25) -> "StepsizeSchedule":
        """1 / (gap * (n + offset)), decreasing."""
        return cls("jain", gap=float(gap), offset=int(offset))

    # -- evaluation ----------------------------------------------------

    @property
    def is_constant(self) -> bool:
        return self.variant not in _DECREASING_VARIANTS

    def beta(self, n: int) -> float:
        """Stepsize for the 0-based step index ``n``."""
        if self.variant == "constant":
            return self.beta0
        if self.variant == "paper_optimal":
            return 2.0 * math.log(self.horizon) / (self.gap * self.horizon)
        if self.variant == "desa":
            return 16.0 / (self.gap * self.horizon)
        if self.variant == "shamir":
            return self.lam1 * math.log(self.horizon) / (self.gap * self.horizon)
        if self.variant == "balsubramani":
            return 2.0 / (self.gap * (n + self.offset))
        return 1.0 / (self.gap * (n + self.offset))  # jain

    def beta_array(self, start: int, stop: int) -> np.ndarray:
        """Stepsizes for indices start..stop-1 as a vector."""
        if self.is_constant:
            return np.full(stop - start, self.beta(start))
        n = np.arange(start, stop, dtype=float)
        if self.variant == "balsubramani":
            return 2.0 / (self.gap * (n + self.offset))
        return 1.0 / (self.gap * (n + self.offset))

    def describe(self) -> str:
        parts = []
        for name in ("beta0", "gap", "horizon", "lam1", "offset"):
            value = getattr(self, name)
            if value is not None:
                parts.append(f"{name}={value:g}")
        return f"{self.variant}({'; '.join(parts)})"

    def summary(self, n_steps: int) -> str:
        """Compact stepsize summary for experiment records."""
        if self.is_constant:
            return f"beta={self.beta(0):.8g}"
        last = max(n_steps - 1, 0)
        return f"beta0={self.beta(0):.8g};betaN={self.beta(last):.8g}"


@dataclass(frozen=True)
class OjaState:
    """Iterate, step count, and the schedule driving the run."""

    iterate: np.ndarray
    step_count: int
    schedule: StepsizeSchedule

    @classmethod
    def start(cls, u0, schedule: StepsizeSchedule) -> "OjaState":
        return cls(project_to_sphere(u0), 0, schedule)


def oja_step(state: OjaState, x) -> OjaState:
    """One rank-one update followed by projection back onto the sphere.

    The update matrix I + beta x x^T is positive definite for beta > 0, so
    the projected vector can never vanish.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite sample")
    beta = state.schedule.beta(state.step_count)
    norm2 = float(np.dot(x, x))
    if beta * norm2 >= BETA_X2_GUARD:
        raise ValueError("stepsize times sample energy too large")
    u = state.iterate
    w = u + (beta * float(np.dot(x, u))) * x
    nrm = float(np.linalg.norm(w))
    assert nrm > 0.0, "positive-definite update produced zero vector"
    return replace(state, iterate=w / nrm, step_count=state.step_count + 1)


def run_stream(
    state: OjaState, source: StreamSource, n_steps: int, recorder=None
) -> OjaState:
    """Advance the iterate by ``n_steps`` samples from ``source``.

    ``recorder`` may supply ``start(u0)`` and
    ``observe(step, x, u_prev, u_next)`` hooks; the diagnostics module's
    trajectory recorder implements them.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    if recorder is not None:
        recorder.start(state.iterate)
    for _ in range(n_steps):
        x = source.next_sample()
        new_state = oja_step(state, x)
        if recorder is not None:
            recorder.observe(new_state.step_count, x, state.iterate, new_state.iterate)
        state = new_state
    return state


def product_oracle(u0, samples, beta: float) -> np.ndarray:
    """Direction of (I + beta x_n x_n^T) ... (I + beta x_1 x_1^T) u0.

    Computed without per-step projection; the norm is only reset when it
    threatens overflow, so this is an independent oracle for the composition
    of constant-stepsize updates (projections commute with the positive
    scalings dropped here).
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    v = project_to_sphere(u0)
    for x in np.asarray(samples, dtype=float):
        v = v + (beta * float(np.dot(x, v))) * x
        norm2 = float(np.dot(v, v))
        if not math.isfinite(norm2):
            raise ValueError("overflow in unnormalized product")
        if norm2 > 1e120:
            v = v / math.sqrt(norm2)
    return project_to_sphere(v)
