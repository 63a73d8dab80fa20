"""Command line entry point: run / sweep / verify / bounds."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .harness import (
    ExperimentConfig,
    run_experiment,
    sweep,
    write_aggregate_csv,
    write_records_csv,
)
from .model import SpectralModel
from .oracle import bound_curve
from .verify import SUITES, run_suite


def _load_json(path: str):
    return json.loads(Path(path).read_text())


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_dict(_load_json(args.config))
    if args.seed is not None:
        config = dataclasses.replace(config, base_seed=args.seed)
    records, aggregate = run_experiment(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "records.csv", "w") as fh:
        write_records_csv(records, fh, config)
    with open(out / "aggregate.csv", "w") as fh:
        write_aggregate_csv([aggregate], fh, config)
    print(
        f"{config.config_hash}: {config.replicates} replicates, "
        f"median sin2 {aggregate.sin2_median:.6g}, "
        f"success freq {aggregate.success_freq:.3g}"
    )
    return 0


def _cmd_sweep(args) -> int:
    config = ExperimentConfig.from_dict(_load_json(args.config))
    grid = _load_json(args.grid)
    rows = sweep(config, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w") as fh:
        write_aggregate_csv(rows, fh, config)
    failures = sum(1 for r in rows if r.get("error"))
    print(f"sweep: {len(rows)} cells, {failures} failed -> {out / 'sweep.csv'}")
    return 1 if failures else 0


def _cmd_verify(args) -> int:
    report = run_suite(args.suite)
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        detail = ", ".join(
            f"{k}={v}" for k, v in check.items() if k not in ("name", "passed")
        )
        print(f"{status} {report['suite']}.{check['name']}" + (f" ({detail})" if detail else ""))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0 if report["passed"] else 1


def _cmd_bounds(args) -> int:
    model = SpectralModel.from_json(Path(args.model).read_text())
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for kind in kinds:
        if kind not in ("minimax", "thm3a", "thm3b"):
            raise SystemExit(
                f"unsupported bound kind {kind!r} on the CLI "
                "(thm1 needs per-run context; use the API)"
            )
    n_grid = [int(n) for n in args.n_grid.split(",") if n.strip()]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write("# schema=1\n")
        fh.write("N,kind,value\n")
        for n in n_grid:
            for kind in kinds:
                value = bound_curve(kind, model, n, args.big_c)
                fh.write(f"{n},{kind},{value!r}\n")
    print(f"bounds: {len(n_grid) * len(kinds)} rows -> {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="streampca",
        description="Streaming PCA experiments: run, sweep, verify, bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override base_seed")
    p_run.add_argument("--out", default=".")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="cartesian grid of experiments")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--grid", required=True)
    p_sweep.add_argument("--out", default=".")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run a property suite")
    p_verify.add_argument("--suite", required=True, choices=SUITES)
    p_verify.add_argument("--out", default=None, help="write JSON report here")
    p_verify.set_defaults(func=_cmd_verify)

    p_bounds = sub.add_parser("bounds", help="evaluate reference rate curves")
    p_bounds.add_argument("--model", required=True)
    p_bounds.add_argument("--kinds", required=True)
    p_bounds.add_argument("--C", dest="big_c", type=float, required=True)
    p_bounds.add_argument("--N-grid", dest="n_grid", required=True)
    p_bounds.add_argument("--out", required=True)
    p_bounds.set_defaults(func=_cmd_bounds)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
