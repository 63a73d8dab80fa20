"""Seeded Monte-Carlo experiment orchestration.

An :class:`ExperimentConfig` pins everything a run depends on: model,
noise, stepsize rule, sample budget, replicate count, seeds, initialization
and the success event.  Replicate ``i`` always consumes the stream keyed by
``derive_seed(base_seed, i)``, so any record can be reproduced in isolation.

Replicates are advanced together in fixed-size groups with row-wise numpy
kernels: every reduction acts on one replicate's row at a time, which makes
the results bitwise independent of group composition and hence of the
parallelism level (``OJA_THREADS``).  The iteration itself runs in eigenbasis
coordinates, where a single coordinate tracks the alignment with the true
principal component; it is the same process as the ambient-coordinates
reference path in :mod:`streampca.oja` up to an orthogonal change of basis.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import (
    StoppingTimes,
    Trajectory,
    default_stride,
    magnitude_threshold,
    rescaled_stepsize,
)
from .model import SpectralModel, project_to_sphere, report_from_cosine
from .oja import StepsizeSchedule
from .sampling import (
    NOISE_KINDS,
    RNG_ALGORITHM,
    derive_seed,
    draw_noise,
    make_generator,
)

SCHEMA_VERSION = 1

# Replicates vectorized together.  Fixed so that group composition (and with
# it the parallelism level) can never influence per-replicate arithmetic.
GROUP_SIZE = 256
# Samples generated per replicate per block; bounds peak memory.
BLOCK_STEPS = 1024

DEFAULT_SUCCESS_EVENT = {"any": [{"tan2_le": 1.0}, {"nm_never": True}]}

RECORD_COLUMNS = (
    "schema",
    "config_hash",
    "replicate",
    "seed",
    "d",
    "N",
    "schedule",
    "beta_summary",
    "noise",
    "sin2",
    "tan2",
    "theta",
    "n_w",
    "n_m",
    "n_c",
    "success",
    "wall_ms",
    "error",
)

AGGREGATE_COLUMNS = (
    "schema",
    "config_hash",
    "base_seed",
    "d",
    "N",
    "schedule",
    "beta_summary",
    "noise",
    "replicates",
    "failed",
    "sin2_mean",
    "sin2_median",
    "sin2_q10",
    "sin2_q25",
    "sin2_q75",
    "sin2_q90",
    "tan2_mean",
    "tan2_median",
    "tan2_q10",
    "tan2_q25",
    "tan2_q75",
    "tan2_q90",
    "tan2_unbounded",
    "success_freq",
    "sin2_restricted",
    "sin2_conditional",
    "tan2_restricted",
    "tan2_conditional",
    "error",
)


def thread_count(requested: int | None = None) -> int:
    """Parallelism level: explicit argument, else OJA_THREADS, else machine."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("OJA_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Deterministic description of one experiment.

    ``model``, ``schedule``, ``init`` and ``success_event`` are JSON-shaped
    dicts so configs round-trip through files unchanged.  The model spec
    holds either explicit ``eigenvalues`` or a parametric
    ``{"spiked": {"lam1": ..., "tail": ...}}`` form, which is what allows
    dimension sweeps.
    """

    model: dict
    noise: str
    schedule: dict
    n_steps: int
    replicates: int
    base_seed: int
    init: dict = field(default_factory=lambda: {"kind": "uniform"})
    success_event: dict = field(default_factory=lambda: DEFAULT_SUCCESS_EVENT)
    epsilon: float = 0.1
    gap_override: float | None = None
    record_stride: int | None = None

    def __post_init__(self):
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.noise!r}")
        if self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def to_canonical(self) -> dict:
        return {
            "model": self.model,
            "noise": self.noise,
            "schedule": self.schedule,
            "n_steps": self.n_steps,
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "init": self.init,
            "success_event": self.success_event,
            "epsilon": self.epsilon,
            "gap_override": self.gap_override,
            "record_stride": self.record_stride,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_canonical(), indent=2, sort_keys=True)

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.to_canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def build_model(config: ExperimentConfig) -> SpectralModel:
    spec = config.model
    basis = spec.get("basis", "identity")
    if "eigenvalues" in spec:
        lam = np.asarray(spec["eigenvalues"], dtype=float)
        if "dim" in spec and int(spec["dim"]) != lam.size:
            raise ValueError("model dim does not match eigenvalue count")
    elif "spiked" in spec:
        dim = int(spec["dim"])
        spiked = spec["spiked"]
        lam = np.full(dim, float(spiked["tail"]))
        lam[0] = float(spiked["lam1"])
    else:
        raise ValueError("model spec needs eigenvalues or spiked form")
    return SpectralModel.from_eigenvalues(lam, basis)


def build_schedule(config: ExperimentConfig, model: SpectralModel) -> StepsizeSchedule:
    spec = config.schedule
    variant = spec["variant"]
    gap = config.gap_override if config.gap_override is not None else model.gap
    if variant == "constant":
        return StepsizeSchedule.constant(spec["beta"])
    if variant == "paper_optimal":
        return StepsizeSchedule.paper_optimal(config.n_steps, gap)
    if variant == "desa":
        return StepsizeSchedule.desa(gap, config.n_steps)
    if variant == "shamir":
        return StepsizeSchedule.shamir(
            float(model.eigenvalues[0]), gap, config.n_steps
        )
    # The decreasing rules leave their starting offset unspecified upstream;
    # experiments must pin it explicitly.
    if variant == "balsubramani":
        return StepsizeSchedule.balsubramani(gap, int(spec["n1"]))
    if variant == "jain":
        return StepsizeSchedule.jain(gap, int(spec["n2"]))
    raise ValueError(f"unknown schedule variant {variant!r}")


def evaluate_event(spec: dict, sin2: float, tan2: float, stopping: StoppingTimes) -> bool:
    """Evaluate a success-event spec against one replicate's final metrics."""
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError("event spec must be a single-key dict")
    key, value = next(iter(spec.items()))
    if key == "any":
        return any(evaluate_event(s, sin2, tan2, stopping) for s in value)
    if key == "all":
        return all(evaluate_event(s, sin2, tan2, stopping) for s in value)
    if key == "tan2_le":
        return tan2 <= float(value)
    if key == "sin2_le":
        return sin2 <= float(value)
    if key == "nm_never":
        return (stopping.n_m is None) == bool(value)
    if key == "always":
        return bool(value)
    raise ValueError(f"unknown event key {key!r}")


@dataclass(frozen=True)
class RunRecord:
    """Flat result row for one replicate."""

    config_hash: str
    replicate: int
    seed: int
    d: int
    n_steps: int
    schedule: str
    beta_summary: str
    noise: str
    sin2: float
    tan2: float
    theta: float
    n_w: int | None
    n_m: int | None
    n_c: int | None
    success: bool
    wall_ms: float
    error: str = ""
    rng: str = RNG_ALGORITHM


def _initial_rescaled(init: dict, model: SpectralModel, gen) -> np.ndarray:
    """Initial iterate in eigenbasis coordinates; may consume generator draws."""
    kind = init.get("kind", "uniform")
    if kind == "uniform":
        u0 = gen.standard_normal(model.dim)
        u0 /= np.linalg.norm(u0)
        return u0 @ model.basis
    if kind == "warm":
        target = float(init["v1"])
        if not 0.0 < target <= 1.0:
            raise ValueError("warm init target must be in (0, 1]")
        tail = gen.standard_normal(model.dim - 1)
        norm = float(np.linalg.norm(tail))
        v = np.empty(model.dim)
        v[0] = target
        scale = math.sqrt(max(0.0, 1.0 - target * target))
        v[1:] = tail * (scale / norm) if norm > 0 else 0.0
        return v / np.linalg.norm(v)
    if kind == "explicit":
        u0 = project_to_sphere(np.asarray(init["vector"], dtype=float))
        if u0.size != model.dim:
            raise ValueError("explicit init has wrong dimension")
        return u0 @ model.basis
    raise ValueError(f"unknown init kind {kind!r}")


def _mark_first(arr: np.ndarray, cond: np.ndarray, step: int) -> None:
    newly = (arr < 0) & cond
    if newly.any():
        arr[newly] = step


def _run_group(
    config: ExperimentConfig,
    model: SpectralModel,
    schedule: StepsizeSchedule,
    indices,
    keep_trajectory: bool = False,
):
    """Advance a group of replicates together; returns (records, trajectories).

    Per-replicate arithmetic is independent of the group: sample blocks are
    generated and rotated one replicate at a time at fixed shapes, and all
    per-step reductions are row-wise.
    """
    d = model.dim
    group = len(indices)
    n_total = config.n_steps
    basis = model.basis
    sqrt_lam = np.sqrt(model.eigenvalues)
    lam1, lam2 = float(model.eigenvalues[0]), float(model.eigenvalues[1])

    seeds = [derive_seed(config.base_seed, i) for i in indices]
    gens = [make_generator(s) for s in seeds]
    iterates = np.empty((group, d))
    for g, gen in enumerate(gens):
        iterates[g] = _initial_rescaled(config.init, model, gen)

    beta0 = schedule.beta(0)
    threshold_m = magnitude_threshold(
        lam1, rescaled_stepsize(lam1, lam2, beta0), config.epsilon
    )
    sqrt_m = math.sqrt(threshold_m)

    n_w = np.full(group, -1, dtype=np.int64)
    n_m = np.full(group, -1, dtype=np.int64)
    n_c = np.full(group, -1, dtype=np.int64)
    v1_abs = np.abs(iterates[:, 0])
    _mark_first(n_w, v1_abs < 1.0 / 3.0, 0)
    _mark_first(n_c, v1_abs >= 1.0 / math.sqrt(2.0), 0)

    stride = config.record_stride or default_stride(n_total)
    if keep_trajectory:
        recorded_steps = sorted({0, n_total, *range(stride, n_total + 1, stride)})
        rec_pos = {s: j for j, s in enumerate(recorded_steps)}
        rec_v1 = np.empty((group, len(recorded_steps)))
        rec_flags = np.zeros((group, len(recorded_steps), 3), dtype=bool)
        rec_v1[:, 0] = iterates[:, 0]
        rec_flags[:, 0, 0] = n_w >= 0
        rec_flags[:, 0, 2] = n_c >= 0
        chan_v1 = np.empty((group, n_total + 1))
        chan_mag = np.empty((group, n_total))
        chan_v1[:, 0] = v1_abs

    start = time.perf_counter()
    done = 0
    while done < n_total:
        block = min(BLOCK_STEPS, n_total - done)
        samples = np.empty((group, block, d))
        rotated = np.empty((block, d))
        for g, gen in enumerate(gens):
            z = draw_noise(gen, config.noise, block, d)
            np.matmul(z, basis, out=rotated)
            np.multiply(rotated, sqrt_lam, out=samples[g])
        betas = schedule.beta_array(done, done + block)
        for t in range(block):
            y = samples[:, t, :]
            proj = np.einsum("gd,gd->g", y, iterates)
            iterates += (betas[t] * proj)[:, None] * y
            inv_norm = 1.0 / np.sqrt(np.einsum("gd,gd->g", iterates, iterates))
            iterates *= inv_norm[:, None]
            step = done + t + 1
            v1_abs = np.abs(iterates[:, 0])
            magnitude = np.maximum(np.max(np.abs(y), axis=1), np.abs(proj))
            _mark_first(n_m, magnitude >= sqrt_m, step)
            _mark_first(n_w, v1_abs < 1.0 / 3.0, step)
            _mark_first(n_c, v1_abs >= 1.0 / math.sqrt(2.0), step)
            if keep_trajectory:
                chan_v1[:, step] = v1_abs
                chan_mag[:, step - 1] = magnitude
                pos = rec_pos.get(step)
                if pos is not None:
                    rec_v1[:, pos] = iterates[:, 0]
                    rec_flags[:, pos, 0] = n_w >= 0
                    rec_flags[:, pos, 1] = n_m >= 0
                    rec_flags[:, pos, 2] = n_c >= 0
        if not np.all(np.isfinite(iterates)):
            raise FloatingPointError("iterate left the finite range")
        done += block
    wall_ms = (time.perf_counter() - start) * 1000.0 / group

    records, trajectories = [], []
    schedule_name = schedule.variant
    beta_summary = schedule.summary(n_total)
    for g, i in enumerate(indices):
        report = report_from_cosine(float(iterates[g, 0]))
        stopping = StoppingTimes(
            n_w=int(n_w[g]) if n_w[g] >= 0 else None,
            n_m=int(n_m[g]) if n_m[g] >= 0 else None,
            n_c=int(n_c[g]) if n_c[g] >= 0 else None,
        )
        success = evaluate_event(
            config.success_event, report.sin2, report.tan2, stopping
        )
        records.append(
            RunRecord(
                config_hash=config.config_hash,
                replicate=int(i),
                seed=seeds[g],
                d=d,
                n_steps=n_total,
                schedule=schedule_name,
                beta_summary=beta_summary,
                noise=config.noise,
                sin2=report.sin2,
                tan2=report.tan2,
                theta=report.theta,
                n_w=stopping.n_w,
                n_m=stopping.n_m,
                n_c=stopping.n_c,
                success=success,
                wall_ms=wall_ms,
            )
        )
        if keep_trajectory:
            steps = np.asarray(recorded_steps, dtype=int)
            cosines = rec_v1[g]
            sin2 = 1.0 - cosines * cosines
            cos2 = cosines * cosines
            with np.errstate(divide="ignore"):
                tan2 = np.where(np.abs(cosines) <= 1e-14, np.inf, sin2 / cos2)
            trajectories.append(
                Trajectory(
                    steps=steps,
                    sin2=sin2,
                    tan2=tan2,
                    v1_abs=np.abs(cosines),
                    nw_hit=rec_flags[g, :, 0].copy(),
                    nm_hit=rec_flags[g, :, 1].copy(),
                    nc_hit=rec_flags[g, :, 2].copy(),
                    stopping=stopping,
                    v1_abs_full=chan_v1[g].copy(),
                    magnitude_full=chan_mag[g].copy(),
                )
            )
        else:
            trajectories.append(None)
    return records, trajectories


def run_replicate(config: ExperimentConfig, index: int, keep_trajectory: bool = False):
    """Run replicate ``index`` on its own; identical to its in-experiment result."""
    model = build_model(config)
    schedule = build_schedule(config, model)
    records, trajectories = _run_group(
        config, model, schedule, [index], keep_trajectory
    )
    return records[0], trajectories[0]


def _error_record(config: ExperimentConfig, index: int, message: str) -> RunRecord:
    return RunRecord(
        config_hash=config.config_hash,
        replicate=index,
        seed=derive_seed(config.base_seed, index),
        d=0,
        n_steps=config.n_steps,
        schedule=config.schedule.get("variant", "?"),
        beta_summary="",
        noise=config.noise,
        sin2=math.nan,
        tan2=math.nan,
        theta=math.nan,
        n_w=None,
        n_m=None,
        n_c=None,
        success=False,
        wall_ms=0.0,
        error=message,
    )


def run_experiment(config: ExperimentConfig, threads: int | None = None):
    """Run all replicates; returns (records, AggregateReport).

    Failed replicates are kept as error-tagged records, never dropped; the
    experiment only raises if every replicate failed.
    """
    model = build_model(config)
    schedule = build_schedule(config, model)
    groups = [
        list(range(lo, min(lo + GROUP_SIZE, config.replicates)))
        for lo in range(0, config.replicates, GROUP_SIZE)
    ]

    def run_one(indices):
        try:
            return _run_group(config, model, schedule, indices)[0]
        except Exception:
            # Isolate the failing replicate(s) so the rest of the group is kept.
            out = []
            for i in indices:
                try:
                    out.extend(_run_group(config, model, schedule, [i])[0])
                except Exception as exc:  # noqa: BLE001 - recorded, not dropped
                    out.append(_error_record(config, i, str(exc) or repr(exc)))
            return out

    workers = min(thread_count(threads), len(groups))
    if workers <= 1:
        results = [run_one(g) for g in groups]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, groups))
    records = [r for chunk in results for r in chunk]
    records.sort(key=lambda r: r.replicate)
    return records, aggregate_records(records, config)


def _quantile(values: np.ndarray, q: float) -> float:
    """Linear-interpolation quantile that propagates infinities instead of
    producing NaN."""
    vals = np.sort(np.asarray(values, dtype=float))
    pos = q * (vals.size - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    a, b = float(vals[lo]), float(vals[hi])
    if lo == hi:
        return a
    if math.isinf(b):
        return b if pos > lo else a
    return a + (pos - lo) * (b - a)


@dataclass(frozen=True)
class AggregateReport:
    """Summary of one experiment's successful replicates.

    ``tan2_mean`` averages the finite values only; ``tan2_unbounded`` counts
    the replicates that ended exactly on the equator.  The ``*_restricted``
    fields divide by the full replicate count (mean over the success event),
    the ``*_conditional`` fields by the event count.
    """

    config_hash: str
    base_seed: int
    d: int
    n_steps: int
    schedule: str
    beta_summary: str
    noise: str
    replicates: int
    failed: int
    sin2_mean: float
    sin2_median: float
    sin2_q10: float
    sin2_q25: float
    sin2_q75: float
    sin2_q90: float
    tan2_mean: float
    tan2_median: float
    tan2_q10: float
    tan2_q25: float
    tan2_q75: float
    tan2_q90: float
    tan2_unbounded: int
    success_freq: float
    sin2_restricted: float
    sin2_conditional: float | None
    tan2_restricted: float
    tan2_conditional: float | None

    def to_row(self) -> dict:
        row = {"schema": SCHEMA_VERSION}
        for name in AGGREGATE_COLUMNS:
            if name in ("schema", "error"):
                continue
            row[name] = getattr(self, "n_steps" if name == "N" else name)
        row["error"] = ""
        return row


def aggregate_records(records, config: ExperimentConfig) -> AggregateReport:
    ok = [r for r in records if not r.error]
    if not ok:
        raise RuntimeError("all replicates failed")
    sin2 = np.array([r.sin2 for r in ok])
    tan2 = np.array([r.tan2 for r in ok])
    success = np.array([r.success for r in ok], dtype=bool)
    hits = int(np.count_nonzero(success))
    n = len(ok)

    def restricted(values):
        total = float(np.sum(values[success])) if hits else 0.0
        return total / n, (total / hits if hits else None)

    sin2_restricted, sin2_conditional = restricted(sin2)
    tan2_restricted, tan2_conditional = restricted(tan2)
    finite = tan2[np.isfinite(tan2)]
    sample = ok[0]
    return AggregateReport(
        config_hash=config.config_hash,
        base_seed=config.base_seed,
        d=sample.d,
        n_steps=config.n_steps,
        schedule=sample.schedule,
        beta_summary=sample.beta_summary,
        noise=config.noise,
        replicates=config.replicates,
        failed=len(records) - n,
        sin2_mean=float(np.mean(sin2)),
        sin2_median=_quantile(sin2, 0.5),
        sin2_q10=_quantile(sin2, 0.10),
        sin2_q25=_quantile(sin2, 0.25),
        sin2_q75=_quantile(sin2, 0.75),
        sin2_q90=_quantile(sin2, 0.90),
        tan2_mean=float(np.mean(finite)) if finite.size else math.inf,
        tan2_median=_quantile(tan2, 0.5),
        tan2_q10=_quantile(tan2, 0.10),
        tan2_q25=_quantile(tan2, 0.25),
        tan2_q75=_quantile(tan2, 0.75),
        tan2_q90=_quantile(tan2, 0.90),
        tan2_unbounded=int(np.sum(~np.isfinite(tan2))),
        success_freq=hits / n,
        sin2_restricted=sin2_restricted,
        sin2_conditional=sin2_conditional,
        tan2_restricted=tan2_restricted,
        tan2_conditional=tan2_conditional,
    )


# -- sweeps ------------------------------------------------------------


def _cell_config(config: ExperimentConfig, n, d, schedule, noise) -> ExperimentConfig:
    model = dict(config.model)
    if d is not None and d != model.get("dim", len(model.get("eigenvalues", []))):
        if "spiked" not in model:
            raise ValueError("dimension sweep requires a spiked model spec")
        model["dim"] = int(d)
    return replace(
        config,
        model=model,
        n_steps=int(n) if n is not None else config.n_steps,
        schedule=schedule if schedule is not None else config.schedule,
        noise=noise if noise is not None else config.noise,
    )


def sweep(config: ExperimentConfig, grid: dict, threads: int | None = None):
    """Cartesian sweep over N x d x schedule x noise; one aggregate row per
    cell, in lexicographic grid order.  Per-cell failures land in the row's
    error column."""
    known = set(grid) - {"N", "d", "schedule", "noise"}
    if known:
        raise ValueError(f"unknown grid axes: {sorted(known)}")
    n_axis = grid.get("N", [None])
    d_axis = grid.get("d", [None])
    s_axis = grid.get("schedule", [None])
    noise_axis = grid.get("noise", [None])
    if not (n_axis and d_axis and s_axis and noise_axis):
        raise ValueError("grid axes must be nonempty")
    rows = []
    for n in n_axis:
        for d in d_axis:
            for sched in s_axis:
                for noise in noise_axis:
                    try:
                        cell = _cell_config(config, n, d, sched, noise)
                        _, agg = run_experiment(cell, threads)
                        rows.append(agg.to_row())
                    except Exception as exc:  # noqa: BLE001 - recorded per cell
                        row = {name: "" for name in AGGREGATE_COLUMNS}
                        row["schema"] = SCHEMA_VERSION
                        row["N"] = n if n is not None else config.n_steps
                        row["d"] = d if d is not None else ""
                        row["noise"] = noise if noise is not None else config.noise
                        row["base_seed"] = config.base_seed
                        row["error"] = str(exc) or repr(exc)
                        rows.append(row)
    return rows


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float


def fit_rate(rows) -> FitResult:
    """OLS of log(error) against log(N / log N) over (N, error) pairs."""
    rows = list(rows)
    if len(rows) < 3:
        raise ValueError("insufficient points")
    n = np.array([float(r[0]) for r in rows])
    err = np.array([float(r[1]) for r in rows])
    if np.any(err <= 0):
        raise ValueError("errors must be positive")
    if np.any(n <= 1):
        raise ValueError("sample sizes must exceed 1")
    x = np.log(n / np.log(n))
    y = np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(float(slope), float(intercept), r2)


# -- serialization -----------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return "never"
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_cell(value) -> str:
    text = _fmt(value)
    if "," in text or '"' in text or "\n" in text:
        text = '"' + text.replace('"', '""') + '"'
    return text


def _headers(config: ExperimentConfig | None, timestamp: bool = True):
    lines = [f"# schema={SCHEMA_VERSION}"]
    if timestamp:
        lines.append(f"# generated={time.strftime('%Y-%m-%dT%H:%M:%S%z')}")
    lines.append(f"# rng={RNG_ALGORITHM}")
    if config is not None:
        event = json.dumps(config.success_event, sort_keys=True, separators=(",", ":"))
        lines.append(f"# success_event={event}")
    return lines


def write_records_csv(records, fh, config: ExperimentConfig) -> None:
    """Record CSV; byte-deterministic apart from the ``# generated`` header
    line and the wall_ms column."""
    for line in _headers(config):
        fh.write(line + "\n")
    fh.write(",".join(RECORD_COLUMNS) + "\n")
    for r in records:
        row = (
            SCHEMA_VERSION,
            r.config_hash,
            r.replicate,
            r.seed,
            r.d,
            r.n_steps,
            r.schedule,
            r.beta_summary,
            r.noise,
            r.sin2,
            r.tan2,
            r.theta,
            r.n_w,
            r.n_m,
            r.n_c,
            r.success,
            r.wall_ms,
            r.error,
        )
        fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def write_aggregate_csv(rows, fh, config: ExperimentConfig | None = None) -> None:
    """Aggregate/sweep CSV; byte-deterministic apart from ``# generated``."""
    for line in _headers(config):
        fh.write(line + "\n")
    fh.write(",".join(AGGREGATE_COLUMNS) + "\n")
    for row in rows:
        if hasattr(row, "to_row"):
            row = row.to_row()
        fh.write(
            ",".join(
                _csv_cell("" if row.get(c, "") is None else row.get(c, ""))
                for c in AGGREGATE_COLUMNS
            )
            + "\n"
        )
