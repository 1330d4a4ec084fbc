"""Number partition and max cut: encoding, decoding, scoring, and the exact oracle."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .core import WeightImage, as_spins

MAX_ORACLE_N = 26


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class NumberPartitionInstance:
    numbers: tuple

    def __post_init__(self):
        nums = tuple(self.numbers)
        if len(nums) < 2:
            raise ValueError("number partition needs at least 2 numbers")
        for x in nums:
            if isinstance(x, bool) or int(x) != x:
                raise ValueError(f"numbers must be integers, got {x!r}")
            if x < 1:
                raise ValueError(f"numbers must be >= 1, got {x}")
        object.__setattr__(self, "numbers", tuple(int(x) for x in nums))

    @property
    def n(self) -> int:
        return len(self.numbers)

    @property
    def total(self) -> int:
        return sum(self.numbers)

    kind = "partition"
    maximize = False


@dataclass(frozen=True, eq=False)
class MaxCutInstance:
    weights: np.ndarray

    def __post_init__(self):
        # WeightImage already enforces symmetry, zero diagonal and sign
        image = WeightImage(self.weights)
        object.__setattr__(self, "weights", image.w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def __eq__(self, other):
        return isinstance(other, MaxCutInstance) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())

    kind = "maxcut"
    maximize = True


@dataclass(frozen=True)
class PartitionSolution:
    group_a: tuple
    group_b: tuple
    sum_a: int
    sum_b: int
    error: int


@dataclass(frozen=True)
class CutSolution:
    group_a: tuple
    group_b: tuple
    cut_value: float


def encode_number_partition(inst: NumberPartitionInstance) -> WeightImage:
    a = np.asarray(inst.numbers, dtype=np.float64)
    w = np.outer(a, a)
    np.fill_diagonal(w, 0.0)
    return WeightImage(w)


def encode_max_cut(inst: MaxCutInstance) -> WeightImage:
    return WeightImage(np.array(inst.weights))


def encode(inst) -> WeightImage:
    if isinstance(inst, NumberPartitionInstance):
        return encode_number_partition(inst)
    if isinstance(inst, MaxCutInstance):
        return encode_max_cut(inst)
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def decode_partition(s, inst: NumberPartitionInstance) -> PartitionSolution:
    spins = as_spins(s, inst.n)
    a = [x for x, v in zip(inst.numbers, spins) if v == 1]
    b = [x for x, v in zip(inst.numbers, spins) if v == -1]
    sum_a, sum_b = sum(a), sum(b)
    return PartitionSolution(tuple(a), tuple(b), sum_a, sum_b, abs(sum_a - sum_b))


def decode_cut(s, inst: MaxCutInstance) -> CutSolution:
    spins = as_spins(s, inst.n)
    a = np.flatnonzero(spins == 1)
    b = np.flatnonzero(spins == -1)
    cut = float(inst.weights[np.ix_(a, b)].sum()) if a.size and b.size else 0.0
    return CutSolution(tuple(int(i) for i in a), tuple(int(i) for i in b), cut)


def decode(s, inst):
    if isinstance(inst, NumberPartitionInstance):
        return decode_partition(s, inst)
    return decode_cut(s, inst)


def objective(s, inst):
    """Partition error (int, lower is better) or cut value (float, higher is better)."""
    sol = decode(s, inst)
    return sol.error if isinstance(sol, PartitionSolution) else sol.cut_value


def objective_batch(population: np.ndarray, inst) -> np.ndarray:
    """Vectorised :func:`objective` over rows of a (K, N) spin array."""
    if isinstance(inst, NumberPartitionInstance):
        return np.abs(population.astype(np.int64) @ np.asarray(inst.numbers, dtype=np.int64))
    s = population.astype(np.float64)
    w = inst.weights
    upper = float(np.triu(w, 1).sum())
    return (upper - 0.5 * np.einsum("ki,ij,kj->k", s, w, s)) * 0.5


def objective_tolerance(inst) -> float:
    """Slack used when comparing real-valued objectives for equality."""
    if isinstance(inst, NumberPartitionInstance):
        return 0.0
    return 1e-9 * max(1.0, float(inst.weights.sum()))


def reaches(value, target, inst) -> bool:
    if target is None:
        return False
    if inst.maximize:
        return value >= target - objective_tolerance(inst)
    return value <= target + objective_tolerance(inst)


def better(a, b, inst) -> bool:
    """True when objective ``a`` is strictly better than ``b``."""
    tol = objective_tolerance(inst)
    return a > b + tol if inst.maximize else a < b - tol


def brute_force(inst):
    """Exact optimum by enumerating all 2**(n-1) patterns with sigma_0 = +1.

    Returns ``(value, spins)``. Among optimal patterns the one with the
    lowest enumeration index wins (bit k set means sigma_{k+1} = -1), so the
    witness is deterministic.
    """
    if inst.n > MAX_ORACLE_N:
        raise OracleTooLarge(
            f"brute force is limited to n <= {MAX_ORACLE_N} (2^{MAX_ORACLE_N - 1} patterns); got n = {inst.n}"
        )
    if isinstance(inst, NumberPartitionInstance):
        value, idx = _kernels.brute_partition(np.asarray(inst.numbers, dtype=np.int64))
        witness = as_spins(_kernels.spins_from_index(idx, inst.n))
        return int(value), witness
    if isinstance(inst, MaxCutInstance):
        _, idx = _kernels.brute_maxcut(np.ascontiguousarray(inst.weights), objective_tolerance(inst))
        witness = as_spins(_kernels.spins_from_index(idx, inst.n))
        # report the exactly summed value of the witness, not the running total
        return decode_cut(witness, inst).cut_value, witness
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


# -- generators ------------------------------------------------------------------

def random_partition(n: int, seed: int, low: int = 1, high: int = 100) -> NumberPartitionInstance:
    rng = np.random.default_rng(seed)
    return NumberPartitionInstance(tuple(int(x) for x in rng.integers(low, high + 1, size=n)))


def perfect_partition(n: int, seed: int, low: int = 1, high: int = 100) -> NumberPartitionInstance:
    """Random instance that is guaranteed to admit partition error 0.

    Draws n-1 integers and a random sign split, redrawing the split until
    the imbalance fits in ``[low, high]``; the imbalance becomes the last
    element and the sequence is shuffled.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    while True:
        body = rng.integers(low, high + 1, size=n - 1)
        for _ in range(64):
            signs = rng.choice(np.array([-1, 1]), size=n - 1)
            gap = abs(int(signs @ body))
            if low <= gap <= high:
                nums = np.append(body, gap)
                rng.shuffle(nums)
                return NumberPartitionInstance(tuple(int(x) for x in nums))


def random_maxcut(n: int, seed: int) -> MaxCutInstance:
    """Complete graph with weights uniform in [0, 1) rounded to 3 decimals."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    w = np.zeros((n, n))
    w[iu] = np.round(rng.random(iu[0].size), 3)
    return MaxCutInstance(w + w.T)


# -- instance files ----------------------------------------------------------------

def format_instance(inst) -> str:
    if isinstance(inst, NumberPartitionInstance):
        return "partition\n" + " ".join(str(x) for x in inst.numbers) + "\n"
    rows = [" ".join(repr(float(v)) for v in row) for row in inst.weights]
    return "maxcut\n" + f"{inst.n}\n" + "\n".join(rows) + "\n"


def write_instance(inst, path) -> None:
    Path(path).write_text(format_instance(inst), encoding="utf-8")


def parse_instance(text: str, source: str = "<string>"):
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{source}: empty instance file")
    kind = lines[0].lower()
    try:
        if kind == "partition":
            if len(lines) < 2:
                raise ValueError("missing number line")
            return NumberPartitionInstance(tuple(int(tok) for tok in lines[1].split()))
        if kind == "maxcut":
            n = int(lines[1])
            rows = [[float(tok) for tok in ln.split()] for ln in lines[2:2 + n]]
            if len(rows) != n or any(len(r) != n for r in rows):
                raise ValueError(f"expected {n} rows of {n} weights")
            return MaxCutInstance(np.array(rows))
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{source}: {exc}") from exc
    raise ValueError(f"{source}: first line must be 'partition' or 'maxcut', got {lines[0]!r}")


def read_instance(path):
    p = Path(path)
    return parse_instance(p.read_text(encoding="utf-8"), source=str(p))
