"""Evolutionary search over illumination patterns.

Each iteration projects the K current patterns, keeps the J brightest
individuals untouched, and refills the other K - J slots with mutated
uniform-crossover children of the elites. All randomness comes from
streams keyed by ``(master_seed, iteration, slot, purpose)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import problems
from .core import WeightImage, as_spins, stream
from .spi import IdealBackend, measure_batch, pattern_bits

_INIT_RETRIES = 16
_BREED_RETRIES = 16


@dataclass(frozen=True)
class GaConfig:
    population_k: int = 6
    elites_j: int | None = None
    mutation_rate: float = 0.1
    max_iterations: int = 20
    target: float | None = None
    master_seed: int = 0

    def __post_init__(self):
        if int(self.population_k) != self.population_k or self.population_k < 2:
            raise ValueError(f"population_k must be an integer >= 2, got {self.population_k}")
        if self.elites_j is None:
            object.__setattr__(self, "elites_j", max(1, self.population_k // 3))
        if not 1 <= self.elites_j < self.population_k:
            raise ValueError(f"elites_j must satisfy 1 <= J < K={self.population_k}, got {self.elites_j}")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError(f"mutation_rate must be in [0, 1], got {self.mutation_rate}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be an integer >= 1, got {self.max_iterations}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "GaConfig":
        fields = asdict(self)
        fields.update(changes)
        return GaConfig(**fields)


@dataclass(frozen=True)
class IterationStats:
    iteration: int
    best_intensity: float
    best_spins: np.ndarray
    decoded_quality: float | None
    population_mean_intensity: float


@dataclass
class RunResult:
    history: list
    final: np.ndarray
    final_intensity: float
    final_objective: float | None
    converged_at: int | None
    evaluations: int = 0

    @property
    def best_intensities(self) -> list:
        return [h.best_intensity for h in self.history]


class RunAborted(RuntimeError):
    """A backend failed mid-run; ``history`` holds every completed iteration."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def _canonical(s) -> bytes:
    # s and -s give the same pattern
    return (s * s[0]).tobytes()


def init_population(n: int, config: GaConfig) -> np.ndarray:
    """K random spin vectors as a (K, n) int8 array.

    Individual i is drawn from stream (seed, 0, i, "init"). A draw whose
    pattern repeats an earlier individual is redrawn from the same stream up
    to a fixed number of times, after which the duplicate is kept.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    pop = np.empty((config.population_k, n), dtype=np.int8)
    seen = set()
    for i in range(config.population_k):
        rng = stream(config.master_seed, 0, i, "init")
        for _ in range(_INIT_RETRIES + 1):
            s = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
            if _canonical(s) not in seen:
                break
        seen.add(_canonical(s))
        pop[i] = s
    return pop


def select_elites(population, intensities, j: int) -> np.ndarray:
    """Rows of the J largest intensities, best first; ties go to the lower index."""
    intensities = np.asarray(intensities, dtype=np.float64)
    population = np.asarray(population)
    if len(population) != intensities.size:
        raise ValueError(f"{len(population)} individuals but {intensities.size} intensities")
    if not 1 <= j < intensities.size:
        raise ValueError(f"need 1 <= J < K, got J={j}, K={intensities.size}")
    order = np.argsort(-intensities, kind="stable")
    return population[order[:j]]


def crossover(parent_a, parent_b, rng: np.random.Generator) -> np.ndarray:
    """Uniform crossover: each position comes from ``parent_a`` with probability 1/2."""
    a = np.asarray(parent_a)
    b = np.asarray(parent_b)
    if a.shape != b.shape:
        raise ValueError(f"parent lengths differ: {a.shape} vs {b.shape}")
    take_a = rng.random(a.shape[0]) < 0.5
    return np.where(take_a, a, b).astype(np.int8)


def mutate(s, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each element independently with probability ``rate``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"mutation rate must be in [0, 1], got {rate}")
    s = np.asarray(s)
    flip = rng.random(s.shape[0]) < rate
    return np.where(flip, -s, s).astype(np.int8)


def breed(elites, config: GaConfig, iteration: int, archive=None) -> np.ndarray:
    """Next population: elites first, then K - J mutated children.

    A child whose pattern already appears in the new population is redrawn
    from the continuing streams of its slot, up to a fixed number of times.
    """
    k, j = config.population_k, len(elites)
    seed = config.master_seed
    nxt = np.empty((k, elites.shape[1]), dtype=np.int8)
    nxt[:j] = elites
    seen = {_canonical(e) for e in elites}
    if archive is not None:
        seen |= archive
    for slot in range(j, k):
        pick = stream(seed, iteration, slot, "parents")
        mix = stream(seed, iteration, slot, "crossover")
        flip = stream(seed, iteration, slot, "mutation")
        for _ in range(_BREED_RETRIES + 1):
            if j >= 2:
                pa, pb = pick.choice(j, size=2, replace=False)
            else:
                pa = pb = 0
            child = mutate(crossover(elites[pa], elites[pb], mix), config.mutation_rate, flip)
            if _canonical(child) not in seen:
                break
        seen.add(_canonical(child))
        nxt[slot] = child
    return nxt


def _measure(population, backend, iteration):
    bits = pattern_bits(population)
    values = np.asarray(measure_batch(backend, bits, iteration=iteration, individuals=range(len(population))))
    if values.shape != (len(population),):
        raise ValueError(f"backend returned {values.shape} values for {len(population)} patterns")
    return values


def _stats(population, intensities, iteration, instance):
    top = int(np.argmax(intensities))
    best = population[top].copy()
    best.flags.writeable = False
    quality = problems.objective(best, instance) if instance is not None else None
    return IterationStats(
        iteration=iteration,
        best_intensity=float(intensities[top]),
        best_spins=best,
        decoded_quality=quality,
        population_mean_intensity=float(intensities.mean()),
    )


def step(population, backend, config: GaConfig, iteration: int, instance=None, archive=None):
    """Measure ``population``, record stats, and breed the next population.

    ``archive`` is an optional set of canonical pattern keys that children
    must avoid; it is updated in place with the measured population.
    """
    population = np.asarray(population, dtype=np.int8)
    if len(population) != config.population_k:
        raise ValueError(f"population has {len(population)} individuals, config says K={config.population_k}")
    intensities = _measure(population, backend, iteration)
    stats = _stats(population, intensities, iteration, instance)
    elites = select_elites(population, intensities, config.elites_j)
    if archive is not None:
        archive.update(_canonical(x) for x in population)
    return breed(elites, config, iteration, archive), stats


def _resolve(problem):
    if isinstance(problem, WeightImage):
        return problem, None
    return problems.encode(problem), problem


def run(problem, backend=None, config: GaConfig | None = None, population=None) -> RunResult:
    """Evolve until ``config.target`` is reached or ``max_iterations`` runs out.

    ``problem`` is a WeightImage or a problem instance. The brightest
    measured individual of each iteration is the machine's reported answer.
    With an instance, reported answers are scored exactly: the run stops at
    the first one that reaches the target, and ``final`` is the best-scoring
    report. Without an instance, ``final`` is the brightest report.
    ``population`` overrides the seeded initial population.

    Patterns measured earlier in the run are not proposed again as children
    (bounded retries), so small problems are not re-measured needlessly.
    """
    config = config or GaConfig()
    image, instance = _resolve(problem)
    if backend is None:
        backend = IdealBackend(image)
    if population is None:
        population = init_population(image.n, config)
    else:
        population = np.stack([as_spins(s, image.n) for s in population])
        if len(population) != config.population_k:
            raise ValueError(f"initial population has {len(population)} rows, K={config.population_k}")

    history = []
    best = None
    converged_at = None
    evaluations = 0
    archive = set()
    for it in range(config.max_iterations):
        try:
            intensities = _measure(population, backend, it)
        except Exception as exc:
            raise RunAborted(f"measurement failed at iteration {it}: {exc}", history) from exc
        evaluations += len(population)
        stats = _stats(population, intensities, it, instance)
        history.append(stats)

        if instance is not None:
            if best is None or problems.better(stats.decoded_quality, best.decoded_quality, instance):
                best = stats
            if problems.reaches(stats.decoded_quality, config.target, instance):
                converged_at = it
                break
        elif best is None or stats.best_intensity > best.best_intensity:
            best = stats

        if it + 1 < config.max_iterations:
            elites = select_elites(population, intensities, config.elites_j)
            archive.update(_canonical(x) for x in population)
            population = breed(elites, config, it, archive)

    return RunResult(history, best.best_spins, best.best_intensity, best.decoded_quality, converged_at, evaluations)
