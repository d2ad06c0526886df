"""Measurement-angle sweep: per-angle analysis fanned over a worker pool.

Every angle gets its own derived seed (stable mix of the base seed and the
angle index), so results are identical no matter how many workers run the
jobs or in which order they finish.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .dimension import dimension_report
from .mixed_state import (
    EnumerationBudgetExceeded,
    enumerate_msp,
    write_point_cloud,
)
from .quantum import ProjectiveMeasurement, QubitHMM, measure_machine

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """Stable 64-bit mixer; the per-index hash behind derived seeds."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def angle_seed(base_seed: int, index: int) -> int:
    """Worker-order-independent seed for one sweep angle."""
    return (int(base_seed) ^ _splitmix64(index + 1)) & _MASK64


def angle_grid(start: float, stop: float, count: int) -> tuple:
    if count < 1:
        raise ValueError("grid count must be >= 1")
    if count == 1:
        return (float(start),)
    return tuple(np.linspace(start, stop, count))


DEFAULT_GRID = (0.0, float(np.pi), 500)


@dataclass(frozen=True)
class RunConfig:
    """Everything one sweep needs; serialized verbatim into the manifest."""

    thetas: tuple
    phi: float = 0.0
    length: int = 1_000_000
    burn_in: int = 1_000
    seed: int = 0
    decimation: int = 1
    compute_bc: bool = False
    store_clouds: bool = False
    render_svg: bool = False
    workers: int = 1
    msp_max_states: int = 10_000
    msp_merge_tol: float = 1e-9
    reorth_every: int = 1
    machine_path: Optional[str] = None

    def __post_init__(self):
        if len(self.thetas) < 1:
            raise ValueError("need at least one angle")
        if self.length < 1_000:
            raise ValueError("length must be >= 1000")

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["thetas"] = list(self.thetas)
        return out


@dataclass
class SweepRow:
    """One measurement angle's record in sweep.csv."""

    index: int
    theta: Optional[float]
    phi: float
    hmu_B: Optional[float] = None
    hmu_stderr: Optional[float] = None
    lambdas: tuple = ()
    k: Optional[int] = None
    d_lce: Optional[float] = None
    msp_states: Optional[int] = None
    cmu_exact_msp: Optional[float] = None
    d_bc: Optional[float] = None
    error: str = ""


def csv_header(n_states: int) -> list:
    lams = [f"lambda_{i + 1}" for i in range(n_states - 1)]
    return (["index", "theta", "phi", "hmu_B", "hmu_stderr"] + lams
            + ["k", "d_lce", "msp_states", "cmu_exact_msp", "d_bc", "error"])


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_sweep_csv(path, rows, n_states: int) -> None:
    """Schema-stable CSV, sorted by index; byte-identical across reruns."""
    rows = sorted(rows, key=lambda r: r.index)
    n_lams = n_states - 1
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(csv_header(n_states))
        for row in rows:
            lams = list(row.lambdas) + [None] * (n_lams - len(row.lambdas))
            writer.writerow(
                [_fmt(row.index), _fmt(row.theta), _fmt(row.phi),
                 _fmt(row.hmu_B), _fmt(row.hmu_stderr)]
                + [_fmt(l) for l in lams]
                + [_fmt(row.k), _fmt(row.d_lce), _fmt(row.msp_states),
                   _fmt(row.cmu_exact_msp), _fmt(row.d_bc), row.error]
            )


def write_manifest(out_dir, command: str, config: dict, seed) -> None:
    """Sidecar recording what produced the artifacts in this directory."""
    payload = {
        "tool": "qmsp",
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def run_angle(source: QubitHMM, config: RunConfig, index: int,
              theta: float, out_dir=None) -> SweepRow:
    """Measure at one angle, analyze, and write this angle's artifacts."""
    row = SweepRow(index=index, theta=float(theta), phi=config.phi)
    seed = angle_seed(config.seed, index)
    try:
        measured = measure_machine(
            source, ProjectiveMeasurement(float(theta), config.phi)
        )
        report, cloud = dimension_report(
            measured, config.length, seed,
            burn_in=config.burn_in,
            reorth_every=config.reorth_every,
            compute_bc=config.compute_bc,
            decimation=config.decimation,
            check_open_set=False,
            keep_cloud=config.store_clouds,
        )
        row.hmu_B = report.entropy_rate
        row.hmu_stderr = report.entropy_stderr
        row.lambdas = tuple(float(l) for l in report.lce.exponents)
        row.k = report.k
        row.d_lce = report.d_lce
        row.d_bc = report.d_bc
    except Exception as exc:  # per-angle failure: record, keep sweeping
        row.error = f"{type(exc).__name__}: {exc}"
        return row

    try:
        msp = enumerate_msp(measured, config.msp_merge_tol, config.msp_max_states)
        if isinstance(msp, EnumerationBudgetExceeded):
            row.msp_states = -1
        else:
            row.msp_states = msp.n_states
            row.cmu_exact_msp = msp.statistical_complexity
    except Exception as exc:
        row.error = f"msp: {type(exc).__name__}: {exc}"

    if config.store_clouds and out_dir is not None and cloud is not None:
        write_point_cloud(Path(out_dir) / f"cloud_{index}.csv", cloud)
        if config.render_svg:
            from .plots import cloud_figure, save_figure

            fig = cloud_figure(cloud, title=f"theta = {theta:.6g}")
            save_figure(fig, Path(out_dir) / f"cloud_{index}.svg")
    return row


def _job(args):
    source, config, index, theta, out_dir = args
    return run_angle(source, config, index, theta, out_dir)


def run_sweep(source: QubitHMM, config: RunConfig, out_dir) -> list:
    """Sweep all configured angles and write sweep.csv (+ optional figures).

    Returns the sorted rows.  Worker count changes scheduling only, never
    results; aggregation re-sorts by index before anything is written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(source, config, i, theta, out_dir)
            for i, theta in enumerate(config.thetas)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_job, jobs))
    else:
        rows = [_job(j) for j in jobs]
    rows.sort(key=lambda r: r.index)

    write_sweep_csv(out_dir / "sweep.csv", rows, source.machine.n_states)
    if config.render_svg:
        from .hmm import entropy_rate_unifilar, unifilarity_witness
        from .plots import entropy_curve_figure, save_figure

        ok = [r for r in rows if not r.error and r.hmu_B is not None]
        reference = None
        if unifilarity_witness(source.machine) is None:
            reference = entropy_rate_unifilar(source.machine)
        fig = entropy_curve_figure(
            [r.theta for r in ok], [r.hmu_B for r in ok], reference
        )
        save_figure(fig, out_dir / "hmu_vs_theta.svg")
    return rows
