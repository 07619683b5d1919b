"""Sums with few distinct weights: f(x) = sum_j b_j S_j, where S_j is a PBD over group j."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from numbers import Integral
from typing import Optional, Sequence

import numpy as np

from .cover import CoverConfig, CoverTooLargeError, build_cover
from .dist_core import Pmf, ProbVector, SizeLimitError, brute_force_pbd_pmf, pbd_pmf
from .empirical import SampleSet
from .selection import tournament, tournament_sample_size

VALUE_TOL = 1e-9
# cap on |partial range| * |group support| per combination step
DEFAULT_STEP_CAP = 50_000_000
DEFAULT_PRODUCT_CAP = 250_000


def _as_weights(weights) -> tuple:
    """Integer weights stay Python ints; anything else becomes float."""
    out = []
    exact = True
    for b in weights:
        if isinstance(b, Integral):
            out.append(int(b))
        elif float(b).is_integer():
            out.append(int(b))
        else:
            exact = False
            out.append(float(b))
    if not exact:
        out = [float(b) for b in out]
    return tuple(out)


@dataclass(frozen=True)
class WeightedPbd:
    weights: tuple
    counts: tuple
    probs: tuple

    def __post_init__(self):
        weights = _as_weights(self.weights)
        counts = tuple(int(c) for c in self.counts)
        probs = tuple(ProbVector(p) if not isinstance(p, ProbVector) else p for p in self.probs)
        if not weights or len(weights) != len(counts) or len(counts) != len(probs):
            raise ValueError("weights, counts and probs need one entry per group")
        if len(set(weights)) != len(weights):
            raise ValueError("weights must be pairwise distinct")
        for c, p in zip(counts, probs):
            if c < 1 or p.n != c:
                raise ValueError("each group needs counts[j] >= 1 probabilities")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def integer_weights(self) -> bool:
        return all(isinstance(b, int) for b in self.weights)

    def to_json(self) -> dict:
        return {
            "type": "weighted",
            "weights": list(self.weights),
            "counts": list(self.counts),
            "probs": [[float(x) for x in p.probs] for p in self.probs],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "WeightedPbd":
        return cls(tuple(doc["weights"]), tuple(doc["counts"]), tuple(tuple(p) for p in doc["probs"]))


def _merge_sorted(values: np.ndarray, exact: bool):
    """Distinct values of ``values`` and, for each input, the index of its representative."""
    if exact:
        uniq, inverse = np.unique(values, return_inverse=True)
        return uniq, inverse.reshape(-1)
    order = np.argsort(values, kind="stable")
    v = values[order]
    gap = np.diff(v) > VALUE_TOL * np.maximum(1.0, np.abs(v[1:]))
    group = np.concatenate(([0], np.cumsum(gap)))
    inverse = np.empty_like(group)
    inverse[order] = group
    firsts = np.concatenate(([0], np.flatnonzero(gap) + 1))
    return v[firsts], inverse


def _dtype(exact: bool):
    return np.int64 if exact else np.float64


@dataclass(frozen=True, eq=False)
class WeightedRange:
    """Sorted distinct attainable values of sum_j b_j m_j, 0 <= m_j <= n_j."""

    values: np.ndarray
    exact: bool

    def __len__(self):
        return int(self.values.size)

    def index_of(self, value) -> int:
        i = int(np.searchsorted(self.values, value))
        for j in (i - 1, i):
            if 0 <= j < self.values.size:
                if self.exact and self.values[j] == value:
                    return j
                if not self.exact and abs(self.values[j] - value) <= VALUE_TOL * max(1.0, abs(value)):
                    return j
        raise KeyError(value)

    def indices_of(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=self.values.dtype)
        i = np.clip(np.searchsorted(self.values, values), 0, self.values.size - 1)
        best = i.copy()
        lower = np.clip(i - 1, 0, None)
        closer = np.abs(self.values[lower] - values) < np.abs(self.values[i] - values)
        best[closer] = lower[closer]
        err = np.abs(self.values[best] - values)
        tol = 0 if self.exact else VALUE_TOL * np.maximum(1.0, np.abs(values))
        bad = np.flatnonzero(err > tol)
        if bad.size:
            raise KeyError(f"value {values[bad[0]]} is not in the weighted range")
        return best

    def __contains__(self, value) -> bool:
        try:
            self.index_of(value)
        except KeyError:
            return False
        return True


def weighted_range(weights: Sequence, counts: Sequence[int], step_cap: int = DEFAULT_STEP_CAP) -> WeightedRange:
    """Iterated sumset of b_j * {0, ..., n_j}."""
    weights = _as_weights(weights)
    exact = all(isinstance(b, int) for b in weights)
    dt = _dtype(exact)
    values = np.zeros(1, dtype=dt)
    for b, c in zip(weights, counts):
        steps = np.arange(c + 1, dtype=dt) * b
        if values.size * steps.size > step_cap:
            raise SizeLimitError(f"sumset step of {values.size * steps.size} pairs exceeds the cap of {step_cap}")
        values, _ = _merge_sorted((values[:, None] + steps[None, :]).reshape(-1), exact)
    return WeightedRange(values, exact)


@dataclass(frozen=True, eq=False)
class WeightedPmf:
    """Point masses on attainable values; ``values`` sorted and distinct."""

    values: np.ndarray
    mass: np.ndarray

    def __len__(self):
        return int(self.values.size)

    def mass_at(self, value) -> float:
        i = np.searchsorted(self.values, value)
        if i < self.values.size and abs(self.values[i] - value) <= VALUE_TOL * max(1.0, abs(value)):
            return float(self.mass[i])
        return 0.0

    def on_range(self, rng: WeightedRange) -> np.ndarray:
        out = np.zeros(len(rng))
        out[rng.indices_of(self.values)] = self.mass
        return out

    def as_dict(self) -> dict:
        return {v.item(): float(m) for v, m in zip(self.values, self.mass)}


def _combine(values, mass, group_pmf: np.ndarray, b, exact: bool, step_cap: int):
    support = np.flatnonzero(group_pmf > 0)
    if values.size * support.size > step_cap:
        raise SizeLimitError(f"combination step of {values.size * support.size} pairs exceeds the cap of {step_cap}")
    dt = _dtype(exact)
    new_vals = (values[:, None] + (support.astype(dt) * b)[None, :]).reshape(-1)
    new_mass = (mass[:, None] * group_pmf[support][None, :]).reshape(-1)
    uniq, inverse = _merge_sorted(new_vals, exact)
    return uniq, np.bincount(inverse, weights=new_mass, minlength=uniq.size)


def weighted_pmf(w: WeightedPbd, step_cap: int = DEFAULT_STEP_CAP) -> WeightedPmf:
    """Exact distribution of sum_j b_j S_j from the per-group PBD PMFs.

    Groups are folded in one at a time, merging equal partial sums, so the
    work is bounded by |partial support| * |group support| per step rather
    than by the number of (m_1, ..., m_k) tuples.
    """
    exact = w.integer_weights
    values = np.zeros(1, dtype=_dtype(exact))
    mass = np.ones(1)
    for b, p in zip(w.weights, w.probs):
        values, mass = _combine(values, mass, pbd_pmf(p).mass, b, exact, step_cap)
    keep = mass > 0
    return WeightedPmf(values[keep], mass[keep])


def brute_force_weighted_pmf(w: WeightedPbd) -> WeightedPmf:
    """Enumerate every (m_1, ..., m_k) tuple of group sums; groups by brute-force PBD."""
    groups = [brute_force_pbd_pmf(p).mass for p in w.probs]
    acc: dict = {}
    for ms in itertools.product(*(range(c + 1) for c in w.counts)):
        pr = 1.0
        for g, m in zip(groups, ms):
            pr *= g[m]
        if pr == 0.0:
            continue
        v = sum(b * m for b, m in zip(w.weights, ms))
        key = v if w.integer_weights else round(v / VALUE_TOL)
        acc[key] = acc.get(key, 0.0) + pr
    keys = sorted(acc)
    vals = np.array(keys if w.integer_weights else [k * VALUE_TOL for k in keys])
    return WeightedPmf(vals, np.array([acc[k] for k in keys]))


def sample_weighted(w: WeightedPbd, seed: int, count: int) -> np.ndarray:
    """Draw values of f(X) by inverse CDF over the exact weighted PMF."""
    from .dist_core import sample_from_pmf

    wp = weighted_pmf(w)
    idx = sample_from_pmf(Pmf(wp.mass / wp.mass.sum()), seed, count)
    return wp.values[idx]


# -- product-cover learner --------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightedHypothesis:
    model: WeightedPbd
    index: int
    cover_size: int
    delta: float
    samples: int
    required_samples: int

    @property
    def guarantee(self) -> float:
        """Accuracy implied by the tournament: 6 delta."""
        return 6.0 * self.delta


def product_cover_pmfs(
    weights: Sequence,
    counts: Sequence[int],
    epsilon: float,
    k: Optional[int] = None,
    product_cap: int = DEFAULT_PRODUCT_CAP,
):
    """Weighted PMFs of every product of per-group cover elements, as rows over the range.

    Returns (range, matrix, per-group covers).  Row order is lexicographic in
    the per-group cover indices, first group most significant.
    """
    weights = _as_weights(weights)
    covers = [build_cover(CoverConfig(epsilon, c, k=k)) for c in counts]
    size = math.prod(len(c) for c in covers)
    if size > product_cap:
        raise CoverTooLargeError(f"product cover has {size} elements, above the cap of {product_cap}")
    rng = weighted_range(weights, counts)
    exact = rng.exact
    dt = _dtype(exact)
    part_vals = np.zeros(1, dtype=dt)
    part = np.ones((1, 1))
    for b, c, cov in zip(weights, counts, covers):
        steps = np.arange(c + 1, dtype=dt) * b
        new_vals, inverse = _merge_sorted((part_vals[:, None] + steps[None, :]).reshape(-1), exact)
        target = inverse.reshape(part_vals.size, c + 1)
        out = np.zeros((part.shape[0], len(cov), new_vals.size))
        for m in range(c + 1):
            # target[:, m] is injective in the partial value, so += is safe
            out[:, :, target[:, m]] += part[:, None, :] * cov.pmfs[None, :, m, None]
        part = out.reshape(-1, new_vals.size)
        part_vals = new_vals
    return rng, part, covers


def learn_weighted(
    samples,
    weights: Sequence,
    counts: Sequence[int],
    epsilon: float,
    k: Optional[int] = None,
    product_cap: int = DEFAULT_PRODUCT_CAP,
) -> WeightedHypothesis:
    """Tournament with delta = epsilon over the product of per-group PBD covers.

    ``samples`` are observed values of f(X).  Raises TournamentFailure if
    every product element loses a competition.
    """
    rng, P, covers = product_cover_pmfs(weights, counts, epsilon, k, product_cap)
    values = np.asarray(samples)
    if values.size == 0:
        raise ValueError("need at least one sample")
    idx = rng.indices_of(values)
    s = SampleSet(idx, len(rng) - 1)
    i = tournament(P, s, epsilon)
    picks = np.unravel_index(i, tuple(len(c) for c in covers))
    from .cover import element_prob_vector

    probs = tuple(element_prob_vector(cov.elements[j], c) for cov, j, c in zip(covers, picks, counts))
    model = WeightedPbd(tuple(weights), tuple(counts), probs)
    return WeightedHypothesis(model, int(i), P.shape[0], epsilon, s.k, tournament_sample_size(epsilon, P.shape[0]))


# -- lower-bound family -----------------------------------------------------


@dataclass(frozen=True)
class HardInstance:
    k: int
    support_set: tuple
    prob_vector: ProbVector

    @property
    def weights(self) -> np.ndarray:
        """a_i = i for i in {k/2 + 1, ..., k}, else 0 (1-based positions)."""
        i = np.arange(1, self.k + 1)
        return np.where(i > self.k // 2, i, 0)

    def as_weighted(self) -> WeightedPbd:
        """Group the k coordinates by weight: one group of weight 0, one per i > k/2."""
        half = self.k // 2
        p = self.prob_vector.probs
        weights = (0,) + tuple(range(half + 1, self.k + 1))
        counts = (half,) + (1,) * (self.k - half)
        probs = (tuple(p[:half]),) + tuple((float(p[i - 1]),) for i in range(half + 1, self.k + 1))
        return WeightedPbd(weights, counts, probs)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "support_set": list(self.support_set),
            "probs": [float(x) for x in self.prob_vector.probs],
            "weights": [int(x) for x in self.weights],
        }


def hard_support_size(k: int) -> int:
    """k/100 rounded half up, at least 1."""
    return max(1, (k + 50) // 100)


def make_lower_bound_instance(k: int, seed: int) -> HardInstance:
    """Uniformly random S of the upper half {k/2+1, ..., k}; p_i = 100/k on S, 0 elsewhere."""
    if k < 2 or k % 2:
        raise ValueError("k must be an even integer >= 2")
    size = hard_support_size(k)
    half = k // 2
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    chosen = np.sort(gen.choice(np.arange(half + 1, k + 1), size=size, replace=False))
    p = np.zeros(k)
    p[chosen - 1] = min(1.0, 100.0 / k)
    return HardInstance(k, tuple(int(x) for x in chosen), ProbVector(p))
