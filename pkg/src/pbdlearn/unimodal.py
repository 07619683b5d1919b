"""Histogram learner for unimodal distributions on {0..n}, and a sampler that counts its random bits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dist_core import Pmf
from .empirical import SampleSet, ceil_guarded

# mass cap of a coarse interval, as a fraction of epsilon
COARSE_MASS_FRACTION = 0.1
SAMPLE_CONSTANT = 50.0
# extra precision bits for the interval choice and for non-dyadic widths
QUANT_BITS = 8


def unimodal_sample_size(n: int, epsilon: float, constant: float = SAMPLE_CONSTANT) -> int:
    """constant * log2(n + 1) / epsilon^3."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return ceil_guarded(constant * math.log2(n + 1) / epsilon**3)


def interval_count_bound(n: int, epsilon: float, constant: float = SAMPLE_CONSTANT) -> float:
    return constant * math.log2(n + 1) / epsilon


@dataclass(frozen=True, eq=False)
class HistogramHypothesis:
    """Piecewise-uniform PMF.

    Interval j is {boundaries[j], ..., boundaries[j+1] - 1}; boundaries[0] = 0
    and boundaries[-1] = n + 1.  ``counts`` are the sample counts behind the
    masses, so masses[j] * sample_count is an integer.
    """

    boundaries: np.ndarray
    counts: np.ndarray
    sample_count: int

    def __post_init__(self):
        b = np.array(self.boundaries, dtype=np.int64)
        c = np.array(self.counts, dtype=np.int64)
        if b.ndim != 1 or b.size < 2 or b[0] != 0 or np.any(np.diff(b) <= 0):
            raise ValueError("boundaries must start at 0 and increase strictly")
        if c.size != b.size - 1 or np.any(c < 0) or int(c.sum()) != self.sample_count:
            raise ValueError("need one nonnegative count per interval, summing to sample_count")
        b.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return int(self.boundaries[-1] - 1)

    @property
    def masses(self) -> np.ndarray:
        return self.counts / self.sample_count

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.boundaries)

    def __len__(self):
        return int(self.counts.size)

    def pmf(self) -> Pmf:
        return Pmf(np.repeat(self.masses / self.widths, self.widths))

    def to_json(self) -> dict:
        return {
            "form": "histogram",
            "boundaries": [int(x) for x in self.boundaries],
            "masses": [float(x) for x in self.masses],
            "counts": [int(x) for x in self.counts],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "HistogramHypothesis":
        if "counts" in doc:
            counts = doc["counts"]
            return cls(doc["boundaries"], counts, int(sum(counts)))
        # masses only: rebuild counts on a common denominator
        masses = np.asarray(doc["masses"], dtype=np.float64)
        scale = 1 << 30
        counts = np.rint(masses * scale).astype(np.int64)
        return cls(doc["boundaries"], counts, int(counts.sum()))


def _coarse_intervals(counts: np.ndarray, cap: float) -> list:
    """Greedy maximal runs with count <= cap; a single point may exceed it."""
    out = []
    start, acc = 0, 0
    for z, c in enumerate(counts):
        if z > start and acc + c > cap:
            out.append((start, z - 1))
            start, acc = z, 0
        acc += c
    out.append((start, counts.size - 1))
    return out


def _geometric_cuts(lo: int, hi: int, ratio: float, heavy_left: bool) -> list:
    """Bucket starts inside [lo, hi], lengths floor(ratio^i) growing away from the heavy end."""
    width = hi - lo + 1
    lengths = []
    total, i = 0, 0
    while total < width:
        step = min(max(1, math.floor(ratio**i)), width - total)
        lengths.append(step)
        total += step
        i += 1
    if not heavy_left:
        lengths.reverse()
    return list(lo + np.concatenate(([0], np.cumsum(lengths)[:-1])))


def learn_unimodal(samples: SampleSet, n: int, epsilon: float) -> HistogramHypothesis:
    """Coarse intervals of empirical mass at most epsilon/10, each split into geometric buckets.

    Inside a coarse interval the heavier end is the half holding more
    samples; bucket lengths grow by a factor (1 + epsilon) moving away from
    it.  Every bucket carries its empirical mass, spread uniformly.
    """
    if samples.domain_max != n:
        raise ValueError(f"samples declare domain 0..{samples.domain_max}, learner was given n={n}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    counts = samples.counts()
    cum = np.concatenate(([0], np.cumsum(counts)))
    cap = COARSE_MASS_FRACTION * epsilon * samples.k
    starts = []
    for lo, hi in _coarse_intervals(counts, cap):
        mid = (lo + hi + 1) // 2
        left = cum[mid] - cum[lo]
        right = cum[hi + 1] - cum[mid]
        starts.extend(_geometric_cuts(lo, hi, 1.0 + epsilon, left >= right))
    boundaries = np.array(starts + [n + 1], dtype=np.int64)
    return HistogramHypothesis(boundaries, np.diff(cum[boundaries]), samples.k)


class BitSource:
    """Random bits from a seeded PCG64 stream, with a running count of bits taken."""

    def __init__(self, seed: int):
        self._gen = np.random.Generator(np.random.PCG64(seed)).bit_generator
        self._word = 0
        self._left = 0
        self.consumed = 0

    def bits(self, count: int) -> int:
        out = 0
        need = count
        while need:
            if self._left == 0:
                self._word = int(self._gen.random_raw())
                self._left = 64
            take = min(need, self._left)
            out = (out << take) | (self._word & ((1 << take) - 1))
            self._word >>= take
            self._left -= take
            need -= take
        self.consumed += count
        return out


class Draw(NamedTuple):
    value: int
    bits: int


class HistogramSampler:
    """Two-stage sampler: an interval by (quantized) mass, then a point inside it.

    Interval masses are rounded to multiples of 2^-b, with b the fewest bits
    (at most ceil(log2 M) + 8) that represent them exactly, else the cap;
    rounding uses largest remainders so the table sums to 2^b.  A point in
    an interval of width w takes log2 w bits when w is a power of two and
    ceil(log2 w) + 8 bits otherwise.
    """

    def __init__(self, h: HistogramHypothesis):
        self.h = h
        m = len(h)
        top = math.ceil(math.log2(m)) + QUANT_BITS if m > 1 else 0
        counts = [int(c) for c in h.counts]
        k = h.sample_count
        self.select_bits = top
        for b in range(top + 1):
            if all((c << b) % k == 0 for c in counts):
                self.select_bits = b
                break
        b = self.select_bits
        units = [(c << b) // k for c in counts]
        short = (1 << b) - sum(units)
        order = sorted(range(m), key=lambda j: (-((counts[j] << b) % k), j))
        for j in order[:short]:
            units[j] += 1
        self.units = np.array(units, dtype=np.int64)
        self._upper = np.cumsum(self.units)
        self._point_bits = []
        for w in h.widths:
            w = int(w)
            exact = w & (w - 1) == 0
            self._point_bits.append((w - 1).bit_length() + (0 if exact else QUANT_BITS))

    def quantized_masses(self) -> np.ndarray:
        return self.units / float(1 << self.select_bits)

    def bit_bound(self) -> int:
        m = len(self.h)
        wmax = int(self.h.widths.max())
        return math.ceil(math.log2(m)) + math.ceil(math.log2(wmax)) + 16

    def draw(self, source: BitSource) -> int:
        if self.select_bits:
            u = source.bits(self.select_bits)
            j = int(np.searchsorted(self._upper, u, side="right"))
        else:
            j = int(np.flatnonzero(self.units)[0])
        w = int(self.h.widths[j])
        b = self._point_bits[j]
        r = source.bits(b)
        offset = r if w & (w - 1) == 0 else (r * w) >> b
        return int(self.h.boundaries[j]) + offset


def histogram_sample(h: HistogramHypothesis, seed: int) -> Draw:
    """One draw from ``h`` and the number of random bits it used."""
    src = BitSource(seed)
    value = HistogramSampler(h).draw(src)
    return Draw(value, src.consumed)


def histogram_samples(h: HistogramHypothesis, seed: int, count: int) -> tuple:
    """``count`` draws from one bit stream; returns (values, per-draw bit counts)."""
    sampler = HistogramSampler(h)
    src = BitSource(seed)
    values = np.empty(count, dtype=np.int64)
    used = np.empty(count, dtype=np.int64)
    for i in range(count):
        before = src.consumed
        values[i] = sampler.draw(src)
        used[i] = src.consumed - before
    return values, used
