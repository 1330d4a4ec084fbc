"""Shared domain types, the Ising energy, and seeded random streams."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Purpose tags for :class:`RngStream`; values are part of the stream key and
#: must never be renumbered.
PURPOSES = {
    "init": 0,
    "parents": 1,
    "crossover": 2,
    "mutation": 3,
    "noise": 4,
    "instance": 5,
}


def as_spins(s, n: int | None = None) -> np.ndarray:
    """Validate ``s`` as a spin vector and return it as a read-only int8 array.

    Raises ValueError if an element is not exactly +1 or -1, if the vector has
    fewer than two elements, or if ``n`` is given and the length differs.
    """
    arr = np.asarray(s)
    if arr.ndim != 1:
        raise ValueError(f"spin vector must be 1-D, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError("spin vector needs at least 2 elements")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("spin values must be +1 or -1")
    if n is not None and arr.size != n:
        raise ValueError(f"spin vector has length {arr.size}, expected {n}")
    out = arr.astype(np.int8)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class WeightImage:
    """Symmetric, non-negative, zero-diagonal coupling matrix.

    This is the grayscale object the detector looks at: pixel (i, j) holds
    the coupling between elements i and j.
    """

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weight image must be square, got shape {w.shape}")
        if w.shape[0] < 2:
            raise ValueError("weight image needs n >= 2")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if not np.array_equal(w, w.T):
            raise ValueError("weight image must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("weight image must have a zero diagonal")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def total(self) -> float:
        """Sum over all off-diagonal pixels, both orderings."""
        return float(self.w.sum())

    def __eq__(self, other):
        return isinstance(other, WeightImage) and np.array_equal(self.w, other.w)

    def __hash__(self):
        return hash(self.w.tobytes())


def hamiltonian(s, w: WeightImage) -> float:
    """Ising energy ``-sum_i sum_j s_i s_j w_ij`` over ordered pairs."""
    spins = as_spins(s).astype(np.float64)
    if spins.size != w.n:
        raise ValueError(f"spin vector has length {spins.size}, weight image is {w.n}x{w.n}")
    return -float(spins @ w.w @ spins)


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by ``(master_seed, iteration, individual, purpose)``.

    The same key always produces the same numbers, independent of how many
    other streams were drawn before it, so evaluation order and worker count
    cannot change results. Backed by numpy's Philox generator with the key
    hashed through ``SeedSequence``.
    """

    master_seed: int
    iteration: int = 0
    individual: int = 0
    purpose: str = "init"
    _purpose_code: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.purpose not in PURPOSES:
            raise ValueError(f"unknown purpose tag {self.purpose!r}")
        if self.master_seed < 0 or self.iteration < 0 or self.individual < 0:
            raise ValueError("stream key components must be non-negative")
        object.__setattr__(self, "_purpose_code", PURPOSES[self.purpose])

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed,
            spawn_key=(self.iteration, self.individual, self._purpose_code),
        )
        return np.random.Generator(np.random.Philox(seq))


def stream(master_seed: int, iteration: int, individual: int, purpose: str) -> np.random.Generator:
    """Shorthand for ``RngStream(...).generator()``."""
    return RngStream(master_seed, iteration, individual, purpose).generator()
