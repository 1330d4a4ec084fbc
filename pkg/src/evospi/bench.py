"""Desk-scale reruns of the convergence, scaling and detector-noise experiments.

Every function is reproducible from its seeds alone. Trials may be spread
over worker processes; rows always come back in (n, trial) order.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import problems
from .evolve import GaConfig, run
from .spi import NoiseModel, NoisyBackend

SWEEP_HEADER = ["n", "seed", "iterations_to_solve", "wall_time_s"]
CURVE_HEADER = ["iteration", "best_objective", "best_intensity"]
NOISE_HEADER = ["sigma", "success_rate", "mean_iterations"]

DESK_MAX_N = 200
SWEEP_CAP = 5000


@dataclass(frozen=True)
class CurvePoint:
    iteration: int
    best_objective: float
    best_intensity: float
    best_spins: tuple


@dataclass(frozen=True)
class SweepRow:
    n: int
    seed: int
    iterations_to_solve: int | None  # None means unsolved
    wall_time: float

    @property
    def solved(self) -> bool:
        return self.iterations_to_solve is not None


@dataclass(frozen=True)
class NoiseRow:
    sigma: float
    success_rate: float
    mean_iterations: float


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def convergence_experiment(instance, config: GaConfig, backend=None) -> list:
    """Per-iteration curve of one run, including the best state vector of each iteration."""
    result = run(instance, backend, config)
    return [
        CurvePoint(h.iteration, h.decoded_quality, h.best_intensity, tuple(int(v) for v in h.best_spins))
        for h in result.history
    ]


def trial_seeds(sweep_seed: int, n: int, trial: int) -> tuple:
    """(instance seed, run seed) for one sweep trial."""
    seq = np.random.SeedSequence(sweep_seed, spawn_key=(n, trial))
    a, b = seq.generate_state(2, dtype=np.uint64)
    return int(a), int(b)


def _sweep_trial(task):
    n, trial, sweep_seed, perfect, template = task
    inst_seed, run_seed = trial_seeds(sweep_seed, n, trial)
    start = time.perf_counter()
    if perfect:
        inst = problems.perfect_partition(n, inst_seed)
        optimum = 0
    else:
        inst = problems.random_partition(n, inst_seed)
        optimum, _ = problems.brute_force(inst)
    result = run(inst, None, template.replace(master_seed=run_seed, target=optimum))
    solved = result.converged_at is not None
    if solved and n <= problems.MAX_ORACLE_N:
        # never trust the solver's own report when the oracle is affordable
        oracle, _ = problems.brute_force(inst)
        solved = result.final_objective == oracle
    iterations = result.converged_at + 1 if solved else None
    return SweepRow(n, run_seed, iterations, time.perf_counter() - start)


def scaling_sweep(
    n_from: int,
    n_to: int,
    n_step: int,
    trials_per_n: int,
    config_template: GaConfig | None = None,
    *,
    sweep_seed: int = 0,
    instances: str = "auto",
    workers: int = 1,
    allow_large: bool = False,
) -> list:
    """Iterations needed to reach an optimal partition, for N = n_from..n_to.

    ``instances`` is "auto" (random integers in [1, 100] verified by the
    oracle up to N = 26, constructed perfect partitions above) or "perfect"
    (constructed perfect partitions everywhere). Runs that hit the iteration
    cap come back with ``iterations_to_solve=None``.
    """
    if n_from < 2:
        raise ValueError("n_from must be >= 2")
    if n_step < 1:
        raise ValueError("n_step must be >= 1")
    if trials_per_n < 1:
        raise ValueError("trials_per_n must be >= 1")
    if instances not in ("auto", "perfect"):
        raise ValueError(f"instances must be 'auto' or 'perfect', got {instances!r}")
    if n_to > DESK_MAX_N and not allow_large:
        raise ValueError(f"n_to={n_to} exceeds the desk-scale cap of {DESK_MAX_N}; pass allow_large to run it")
    template = config_template or GaConfig(max_iterations=SWEEP_CAP)
    tasks = [
        (n, t, sweep_seed, instances == "perfect" or n > problems.MAX_ORACLE_N, template)
        for n in range(n_from, n_to + 1, n_step)
        for t in range(trials_per_n)
    ]
    return _map(_sweep_trial, tasks, workers)


def _noise_trial(task):
    instance, optimum, sigma, bits, offset, config = task
    image = problems.encode(instance)
    backend = NoisyBackend(image, NoiseModel(sigma, bits, offset), seed=config.master_seed)
    result = run(instance, backend, config.replace(target=optimum))
    ok = result.final_objective is not None and problems.reaches(result.final_objective, optimum, instance)
    return ok, (result.converged_at + 1 if ok else None)


def noise_robustness(
    instance,
    sigma_list,
    trials: int,
    config: GaConfig,
    *,
    bits: int = 12,
    offset: float = 0.0,
    workers: int = 1,
) -> list:
    """Success rate against the oracle optimum for each detector noise level.

    Trial t uses master seed ``config.master_seed + t`` at every sigma, so
    rows are comparable run for run.
    """
    if any(s < 0 for s in sigma_list):
        raise ValueError("sigmas must be >= 0")
    optimum, _ = problems.brute_force(instance)
    rows = []
    for sigma in sigma_list:
        tasks = [
            (instance, optimum, float(sigma), bits, offset, config.replace(master_seed=config.master_seed + t))
            for t in range(trials)
        ]
        outcomes = _map(_noise_trial, tasks, workers)
        hits = [its for ok, its in outcomes if ok]
        mean_its = float(np.mean(hits)) if hits else math.nan
        rows.append(NoiseRow(float(sigma), len(hits) / trials, mean_its))
    return rows


# -- output -----------------------------------------------------------------------

def _fmt(x):
    if x is None:
        return "unsolved"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _rows(kind, rows):
    if kind == "sweep":
        return SWEEP_HEADER, [[r.n, r.seed, r.iterations_to_solve, f"{r.wall_time:.6f}"] for r in rows]
    if kind == "curve":
        return CURVE_HEADER, [[p.iteration, p.best_objective, p.best_intensity] for p in rows]
    if kind == "noise":
        return NOISE_HEADER, [[r.sigma, r.success_rate, r.mean_iterations] for r in rows]
    raise ValueError(f"unknown table kind {kind!r}")


def write_csv(kind: str, rows, path) -> Path:
    header, body = _rows(kind, rows)
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in body:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_json(kind: str, rows, path) -> Path:
    header, body = _rows(kind, rows)
    records = []
    for row in body:
        rec = {}
        for key, v in zip(header, row):
            if isinstance(v, float) and math.isnan(v):
                v = None
            elif key == "wall_time_s":
                v = float(v)
            rec[key] = v
        records.append(rec)
    path = Path(path)
    path.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    return path


_GNUPLOT = {
    "sweep": (
        "set xlabel 'N'\nset ylabel 'iterations to solve'\nset logscale y\n"
        "plot '{csv}' every ::1 using 1:(strcol(3) eq 'unsolved' ? NaN : $3) with points pt 7 title 'trials'\n"
    ),
    "curve": (
        "set xlabel 'iteration'\nset ylabel 'best objective'\nset y2label 'best intensity'\nset y2tics\n"
        "plot '{csv}' every ::1 using 1:2 with linespoints title 'objective', \\\n"
        "     '{csv}' every ::1 using 1:3 axes x1y2 with lines title 'intensity'\n"
    ),
    "noise": (
        "set xlabel 'sigma'\nset ylabel 'success rate'\nset logscale x\nset yrange [0:1.05]\n"
        "plot '{csv}' every ::1 using 1:2 with linespoints title 'success'\n"
    ),
}


def write_gnuplot(kind: str, csv_path) -> Path:
    """Companion plot script next to ``csv_path`` (same stem, ``.gp`` suffix)."""
    csv_path = Path(csv_path)
    script = "set datafile separator ','\nset key top left\n" + _GNUPLOT[kind].format(csv=csv_path.name)
    out = csv_path.with_suffix(".gp")
    out.write_text(script, encoding="utf-8")
    return out
