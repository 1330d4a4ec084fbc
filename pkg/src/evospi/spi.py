"""Software single-pixel imaging: illumination patterns, detector backends, image export.

A pattern is bright at pixel (i, j) exactly when spins i and j disagree, so
the detector reading ``sum(pattern * weights)`` grows with solution quality
for both benchmark problems.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .core import WeightImage, as_spins, stream


class ReplayExhausted(RuntimeError):
    def __init__(self, requested: int, remaining: int):
        super().__init__(
            f"replay trace exhausted: {requested} measurements requested, {remaining} values remained"
        )
        self.requested = requested
        self.remaining = remaining


class ReplayFormatError(ValueError):
    def __init__(self, path, lineno: int, text: str):
        super().__init__(f"{path}: line {lineno}: cannot parse {text!r} as an intensity")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Pattern:
    bits: np.ndarray

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    def __eq__(self, other):
        return isinstance(other, Pattern) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())


def pattern_bits(population) -> np.ndarray:
    """(K, N, N) uint8 stack of patterns for a (K, N) spin array."""
    pop = np.asarray(population)
    return (pop[:, :, None] != pop[:, None, :]).astype(np.uint8)


def pattern_from_spins(s) -> Pattern:
    spins = as_spins(s)
    bits = pattern_bits(spins[None, :])[0]
    bits.flags.writeable = False
    return Pattern(bits)


def _stack(patterns) -> np.ndarray:
    if isinstance(patterns, np.ndarray):
        if patterns.ndim == 2:
            patterns = patterns[None]
        return np.ascontiguousarray(patterns, dtype=np.uint8)
    patterns = list(patterns)
    if not patterns:
        return np.zeros((0, 0, 0), dtype=np.uint8)
    return np.ascontiguousarray(np.stack([p.bits for p in patterns]), dtype=np.uint8)


def ideal_intensity(s, w: WeightImage) -> float:
    """Pixelwise inner product of the spin pattern with the weight image."""
    spins = as_spins(s)
    if spins.size != w.n:
        raise ValueError(f"spin vector has length {spins.size}, weight image is {w.n}x{w.n}")
    return float(_kernels.intensity_batch(pattern_bits(spins[None, :]), w.w)[0])


@dataclass(frozen=True)
class NoiseModel:
    """Detector degradation.

    ``gaussian_sigma`` is the additive noise std as a fraction of the image's
    full-scale intensity; ``quantization_bits`` = 0 disables the ADC step.
    """

    gaussian_sigma: float = 0.01
    quantization_bits: int = 12
    dark_offset: float = 0.0

    def __post_init__(self):
        if not self.gaussian_sigma >= 0:
            raise ValueError("gaussian_sigma must be >= 0")
        if not 0 <= self.quantization_bits <= 16 or int(self.quantization_bits) != self.quantization_bits:
            raise ValueError("quantization_bits must be an integer in [0, 16]")
        if not self.dark_offset >= 0:
            raise ValueError("dark_offset must be >= 0")


class IdealBackend:
    """Noise-free detector: returns the exact inner product."""

    def __init__(self, image: WeightImage):
        self.image = image

    def _check(self, bits):
        if bits.shape[0] and bits.shape[1:] != (self.image.n, self.image.n):
            raise ValueError(
                f"pattern shape {bits.shape[1:]} does not match weight image {self.image.n}x{self.image.n}"
            )

    def measure_batch(self, patterns, iteration: int = 0, individuals=None) -> np.ndarray:
        bits = _stack(patterns)
        self._check(bits)
        if bits.shape[0] == 0:
            return np.zeros(0)
        return _kernels.intensity_batch(bits, self.image.w)


class NoisyBackend(IdealBackend):
    """Ideal reading plus dark offset and Gaussian noise, clamped and quantized.

    The noise for a measurement is drawn from the stream keyed by
    ``(seed, iteration, individual, "noise")``; ``individuals`` defaults to
    the batch positions. Results therefore do not depend on call order.
    """

    def __init__(self, image: WeightImage, noise: NoiseModel, seed: int):
        super().__init__(image)
        self.noise = noise
        self.seed = int(seed)

    @property
    def full_scale(self) -> float:
        return self.image.total

    def measure_batch(self, patterns, iteration: int = 0, individuals=None) -> np.ndarray:
        ideal = super().measure_batch(patterns)
        if individuals is None:
            individuals = range(ideal.size)
        individuals = list(individuals)
        if len(individuals) != ideal.size:
            raise ValueError("need one individual index per pattern")
        fs = self.full_scale
        nm = self.noise
        gauss = np.array([stream(self.seed, iteration, int(i), "noise").standard_normal() for i in individuals])
        values = np.maximum(ideal + nm.dark_offset + gauss * (nm.gaussian_sigma * fs), 0.0)
        if nm.quantization_bits > 0:
            top = fs + nm.dark_offset + 4.0 * nm.gaussian_sigma * fs
            if top > 0:
                lsb = top / ((1 << nm.quantization_bits) - 1)
                values = np.minimum(np.round(values / lsb), (1 << nm.quantization_bits) - 1) * lsb
        return values


class ReplayBackend:
    """Feeds a recorded intensity sequence back, in order."""

    def __init__(self, values):
        self.values = [float(v) for v in values]
        self.position = 0

    @property
    def remaining(self) -> int:
        return len(self.values) - self.position

    def measure_batch(self, patterns, iteration: int = 0, individuals=None) -> np.ndarray:
        count = _stack(patterns).shape[0]
        if count > self.remaining:
            raise ReplayExhausted(count, self.remaining)
        out = np.array(self.values[self.position:self.position + count], dtype=np.float64)
        self.position += count
        return out


def measure_batch(backend, patterns, iteration: int = 0, individuals=None) -> np.ndarray:
    """One intensity per pattern, in submission order."""
    return backend.measure_batch(patterns, iteration=iteration, individuals=individuals)


def replay_load(path) -> ReplayBackend:
    """Read a trace file: one decimal per line, ``#`` comments and blank lines skipped."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ReplayFormatError(path, lineno, text) from None
    return ReplayBackend(values)


# -- export -----------------------------------------------------------------------

def format_pbm(pattern: Pattern) -> str:
    n = pattern.n
    rows = "\n".join(" ".join(str(int(b)) for b in row) for row in pattern.bits)
    return f"P1\n{n} {n}\n{rows}\n"


def write_pbm(pattern: Pattern, path) -> None:
    Path(path).write_text(format_pbm(pattern), encoding="ascii")


def format_pgm(image: WeightImage) -> str:
    """Plain 16-bit PGM with pixels ``floor(65535 * w / max(w))``."""
    peak = float(image.w.max())
    if peak > 0:
        px = np.floor(65535.0 * image.w / peak).astype(np.int64)
    else:
        px = np.zeros(image.w.shape, dtype=np.int64)
    rows = "\n".join(" ".join(str(v) for v in row) for row in px)
    return f"P2\n{image.n} {image.n}\n65535\n{rows}\n"


def write_pgm(image: WeightImage, path) -> None:
    Path(path).write_text(format_pgm(image), encoding="ascii")
