"""Finite probability primitives and deterministic seeded randomness.

Distributions are dense float64 arrays over fixed finite alphabets.  All
quantities downstream are analytic functions of small tables, so double
precision with a 1e-12 normalization tolerance is enough.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-12


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Distribution:
    """Probability distribution over a finite alphabet {0, ..., n-1}."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _as_readonly(self.probs))
        if self.probs.ndim != 1 or self.probs.size == 0:
            raise ValueError("probs must be a non-empty 1-d sequence")
        if np.any(self.probs < -NORM_TOL):
            raise ValueError("probabilities must be nonnegative")
        if abs(self.probs.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {self.probs.sum()}, not 1")

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    @staticmethod
    def uniform(n: int) -> "Distribution":
        return Distribution(np.full(n, 1.0 / n))

    @staticmethod
    def point_mass(index: int, n: int) -> "Distribution":
        p = np.zeros(n)
        p[index] = 1.0
        return Distribution(p)


@dataclass(frozen=True)
class JointDistribution:
    """Dense joint distribution over a product of 2 or 3 finite alphabets."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _as_readonly(self.probs))
        if self.probs.ndim not in (2, 3):
            raise ValueError("joint distributions have 2 or 3 axes")
        if np.any(self.probs < -NORM_TOL):
            raise ValueError("probabilities must be nonnegative")
        if abs(self.probs.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"total mass is {self.probs.sum()}, not 1")

    @property
    def shape(self) -> tuple:
        return self.probs.shape


def marginalize(joint: JointDistribution, keep_axes: Iterable[int]):
    """Sum out all axes not in ``keep_axes``; preserves total mass.

    Returns a Distribution when one axis is kept, else a JointDistribution.
    """
    keep = tuple(sorted(set(keep_axes)))
    ndim = joint.probs.ndim
    if not keep or any(a < 0 or a >= ndim for a in keep):
        raise ValueError(f"invalid axes {keep} for shape {joint.shape}")
    drop = tuple(a for a in range(ndim) if a not in keep)
    out = joint.probs.sum(axis=drop) if drop else joint.probs
    if out.ndim == 1:
        return Distribution(out)
    return JointDistribution(out)


def condition(joint: JointDistribution, given_axis: int, given_value: int):
    """P(rest | axis = value), normalized.  Zero-probability events are rejected."""
    ndim = joint.probs.ndim
    if given_axis < 0 or given_axis >= ndim:
        raise ValueError(f"invalid axis {given_axis} for shape {joint.shape}")
    sl = np.take(joint.probs, given_value, axis=given_axis)
    mass = sl.sum()
    if mass <= 0.0:
        raise ValueError(
            f"conditioning event axis{given_axis}={given_value} has zero probability"
        )
    out = sl / mass
    if out.ndim == 1:
        return Distribution(out)
    return JointDistribution(out)


def product(d1: Distribution, d2: Distribution) -> JointDistribution:
    """Independent product joint P(x1, x2) = P1(x1) P2(x2)."""
    return JointDistribution(np.outer(d1.probs, d2.probs))


@dataclass(frozen=True)
class BitString:
    """Fixed-length sequence over {0, 1}."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.array(self.bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("a bit string holds at least one bit")
        if np.any((arr != 0) & (arr != 1)):
            raise ValueError("entries must be 0 or 1")
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    @property
    def length(self) -> int:
        return self.bits.size

    def __xor__(self, other: "BitString") -> "BitString":
        if self.length != other.length:
            raise ValueError("length mismatch in xor")
        return BitString(np.bitwise_xor(self.bits, other.bits))

    def __eq__(self, other) -> bool:
        return isinstance(other, BitString) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def take(self, indices: Sequence[int]) -> "BitString":
        return BitString(self.bits[np.asarray(indices, dtype=np.intp)])

    @staticmethod
    def random(length: int, rng: "SeededRng") -> "BitString":
        return BitString(rng.generator.integers(0, 2, size=length, dtype=np.uint8))

    @staticmethod
    def zeros(length: int) -> "BitString":
        return BitString(np.zeros(length, dtype=np.uint8))


@dataclass
class SeededRng:
    """Splittable deterministic randomness.

    Identical (master_seed, stream_id) pairs reproduce identical draw
    sequences; distinct stream_ids give independent streams, so parallel
    trials remain reproducible.  Each instance owns one sequential stream.
    """

    master_seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(default=None, repr=False, compare=False)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(
                entropy=self.master_seed, spawn_key=(self.stream_id,)
            )
            self._gen = np.random.default_rng(seq)
        return self._gen

    def substream(self, index: int) -> "SeededRng":
        """Derive an independent child stream; deterministic in (self, index)."""
        seq = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(self.stream_id, index)
        )
        child = SeededRng(self.master_seed, self.stream_id)
        child._gen = np.random.default_rng(seq)
        return child


def sample(dist: Distribution, rng: SeededRng) -> int:
    """Draw one symbol index from ``dist``; deterministic given the rng state."""
    u = rng.generator.random()
    return int(np.searchsorted(np.cumsum(dist.probs), u, side="right"))


def sample_many(dist: Distribution, n: int, rng: SeededRng) -> np.ndarray:
    """Draw ``n`` i.i.d. symbol indices (vectorized inverse-CDF)."""
    u = rng.generator.random(n)
    return np.searchsorted(np.cumsum(dist.probs), u, side="right").astype(np.intp)
