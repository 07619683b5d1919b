"""The sparse / k-heavy-binomial cover of sums of n independent Bernoullis.

A cover element is either

* a sparse form: at most k^3 variables with means on the grid
  {1/k^2, ..., (k^2 - 1)/k^2}, plus ``ones`` variables fixed at 1, or
* a k-heavy binomial form: ``ell`` variables sharing a mean q on the grid
  {1/(kn), ..., (kn - 1)/(kn)}, plus ``ones`` fixed at 1, where
  ell*q >= k^2 - 1/k and ell*q*(1 - q) >= k^2 - k - 1 - 3/k.

Everything not listed is fixed at 0.  Enumeration is exhaustive over these
shapes (the simple enumeration, not the pruned construction with the
smaller size bound).
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np

from ._backend import kernels
from .dist_core import Pmf, binomial_pmf
from .empirical import ceil_guarded

DEFAULT_MAX_ELEMENTS = 2_000_000


class CoverTooLargeError(RuntimeError):
    pass


@dataclass(frozen=True)
class CoverConfig:
    epsilon: float
    n: int
    k: Optional[int] = None
    sparse_ell_cap: Optional[int] = None
    heavy_q_stride: Optional[int] = None
    max_elements: int = DEFAULT_MAX_ELEMENTS

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.k is None:
            object.__setattr__(self, "k", ceil_guarded(1.0 / self.epsilon))
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.sparse_ell_cap is not None and self.sparse_ell_cap < 0:
            raise ValueError("sparse_ell_cap must be nonnegative")
        if self.heavy_q_stride is not None and self.heavy_q_stride < 1:
            raise ValueError("heavy_q_stride must be a positive integer")

    @property
    def max_sparse_ell(self) -> int:
        top = min(self.k**3, self.n)
        if self.sparse_ell_cap is not None:
            top = min(top, self.sparse_ell_cap)
        return top

    @property
    def certified(self) -> bool:
        """False when a cap removes elements the full enumeration would contain."""
        capped_ell = self.max_sparse_ell < min(self.k**3, self.n)
        coarse_q = (self.heavy_q_stride or 1) > 1
        return not (capped_ell or coarse_q)


@dataclass(frozen=True)
class SparseForm:
    """``numerators`` j_1 <= ... <= j_ell give the means j/k^2."""

    k: int
    numerators: tuple
    ones: int

    def __post_init__(self):
        nums = tuple(int(j) for j in self.numerators)
        object.__setattr__(self, "numerators", nums)
        if len(nums) > self.k**3:
            raise ValueError("sparse form has more than k^3 nontrivial variables")
        if any(not 1 <= j <= self.k**2 - 1 for j in nums):
            raise ValueError("sparse means must lie on the 1/k^2 grid strictly inside (0, 1)")
        if list(nums) != sorted(nums):
            raise ValueError("sparse numerators must be sorted (canonical multiset)")
        if self.ones < 0:
            raise ValueError("ones must be nonnegative")

    @property
    def ell(self) -> int:
        return len(self.numerators)

    @property
    def probs(self) -> tuple:
        return tuple(j / self.k**2 for j in self.numerators)

    def fits(self, n: int) -> bool:
        return self.ell + self.ones <= n


@dataclass(frozen=True)
class HeavyBinomialForm:
    """``ell`` variables with mean q = q_num / (k * grid_n), plus ``ones`` ones."""

    k: int
    grid_n: int
    ell: int
    q_num: int
    ones: int

    def __post_init__(self):
        k, n = self.k, self.grid_n
        if not 0 <= self.ell <= n:
            raise ValueError("ell must lie in 0..n")
        if not 1 <= self.q_num <= k * n - 1:
            raise ValueError("q must lie on the 1/(kn) grid strictly inside (0, 1)")
        if self.ones < 0:
            raise ValueError("ones must be nonnegative")
        if not heavy_constraints_hold(k, n, self.ell, self.q_num):
            raise ValueError(f"(ell={self.ell}, q={self.q_num}/{k * n}) violates the k-heavy moment bounds")

    @property
    def q(self) -> float:
        return self.q_num / (self.k * self.grid_n)

    def fits(self, n: int) -> bool:
        return self.ell + self.ones <= n


CoverElement = Union[SparseForm, HeavyBinomialForm]


def heavy_constraints_hold(k: int, n: int, ell: int, q_num: int) -> bool:
    """ell*q >= k^2 - 1/k and ell*q*(1-q) >= k^2 - k - 1 - 3/k, with q = q_num/(kn).

    Both sides are multiplied through by their denominators, so the test is
    exact integer arithmetic.
    """
    kn = k * n
    first = ell * q_num * k >= (k**3 - 1) * kn
    second = ell * q_num * (kn - q_num) * k >= (k**3 - k**2 - k - 3) * kn * kn
    return first and second


def enumerate_sparse_forms(cfg: CoverConfig) -> Iterator[SparseForm]:
    """Every canonical sparse form, ordered by (ell, numerators, ones)."""
    grid = range(1, cfg.k**2)
    for ell in range(cfg.max_sparse_ell + 1):
        for nums in itertools.combinations_with_replacement(grid, ell):
            for ones in range(cfg.n - ell + 1):
                yield SparseForm(cfg.k, nums, ones)


def _heavy_shapes(cfg: CoverConfig) -> Iterator[tuple]:
    k, n = cfg.k, cfg.n
    stride = cfg.heavy_q_stride or 1
    for ell in range(n + 1):
        for q_num in range(1, k * n, stride):
            if heavy_constraints_hold(k, n, ell, q_num):
                yield ell, q_num


def enumerate_heavy_forms(cfg: CoverConfig) -> Iterator[HeavyBinomialForm]:
    """Every grid (ell, q, ones) passing both moment bounds, ordered by (ell, q, ones)."""
    for ell, q_num in _heavy_shapes(cfg):
        for ones in range(cfg.n - ell + 1):
            yield HeavyBinomialForm(cfg.k, cfg.n, ell, q_num, ones)


def _shape_pmf(e: CoverElement) -> np.ndarray:
    if isinstance(e, SparseForm):
        return kernels.pbd_dp(np.array(e.probs, dtype=np.float64))
    return binomial_pmf(e.ell, e.q).mass


def cover_element_pmf(e: CoverElement, n: int) -> Pmf:
    """PMF of the element's sum on {0, ..., n}."""
    if not e.fits(n):
        raise ValueError(f"element with ell={e.ell}, ones={e.ones} does not fit in n={n}")
    return Pmf(_shape_pmf(e)).shifted(e.ones, n)


def element_prob_vector(e: CoverElement, n: int) -> np.ndarray:
    """The explicit length-n vector of Bernoulli means the element stands for."""
    if not e.fits(n):
        raise ValueError("element does not fit in n variables")
    if isinstance(e, SparseForm):
        head = list(e.probs)
    else:
        head = [e.q] * e.ell
    return np.array(head + [1.0] * e.ones + [0.0] * (n - e.ell - e.ones))


@dataclass(frozen=True, eq=False)
class Cover:
    """A built cover: elements in enumeration order and their dense PMFs/CDFs."""

    config: CoverConfig
    elements: tuple
    pmfs: np.ndarray
    cdfs: np.ndarray
    counts: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def k(self) -> int:
        return self.config.k

    @property
    def certified(self) -> bool:
        return self.config.certified

    def __len__(self):
        return len(self.elements)

    @functools.cached_property
    def is_sparse(self) -> np.ndarray:
        return np.array([isinstance(e, SparseForm) for e in self.elements], dtype=bool)

    @functools.cached_property
    def support_bounds(self) -> tuple:
        """(lo, hi) arrays: element i is supported on ones..ones+ell."""
        lo = np.array([e.ones for e in self.elements], dtype=np.int64)
        hi = lo + np.array([e.ell for e in self.elements], dtype=np.int64)
        return lo, hi

    def pmf(self, i: int) -> Pmf:
        return Pmf(self.pmfs[i])

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "epsilon": self.config.epsilon,
            "certified": self.certified,
            "counts": dict(self.counts),
            "elements": [element_to_json(e) for e in self.elements],
        }


def _fingerprint(row: np.ndarray) -> bytes:
    return (np.round(row, 12) + 0.0).tobytes()


@functools.lru_cache(maxsize=16)
def build_cover(cfg: CoverConfig) -> Cover:
    """Both enumerations, sparse first, deduplicated by 1e-12-rounded PMF.

    On a fingerprint collision the earlier element is kept, so a heavy form
    that coincides with a sparse one is dropped.  Raises CoverTooLargeError
    once more than ``cfg.max_elements`` elements have been enumerated.
    """
    n = cfg.n
    seen = set()
    elements, rows = [], []
    enumerated = {"sparse": 0, "heavy": 0}
    kept = {"sparse": 0, "heavy": 0}

    def add(kind, element, row):
        enumerated[kind] += 1
        if enumerated["sparse"] + enumerated["heavy"] > cfg.max_elements:
            raise CoverTooLargeError(
                f"cover enumeration exceeded max_elements={cfg.max_elements} "
                f"(n={n}, k={cfg.k}); raise the cap or set sparse_ell_cap/heavy_q_stride"
            )
        fp = _fingerprint(row)
        if fp in seen:
            return
        seen.add(fp)
        elements.append(element)
        rows.append(row)
        kept[kind] += 1

    grid = range(1, cfg.k**2)
    for ell in range(cfg.max_sparse_ell + 1):
        for nums in itertools.combinations_with_replacement(grid, ell):
            shape = kernels.pbd_dp(np.array(nums, dtype=np.float64) / cfg.k**2)
            for ones in range(n - ell + 1):
                row = np.zeros(n + 1)
                row[ones : ones + ell + 1] = shape
                add("sparse", SparseForm(cfg.k, nums, ones), row)
    for ell, q_num in _heavy_shapes(cfg):
        shape = binomial_pmf(ell, q_num / (cfg.k * n)).mass
        for ones in range(n - ell + 1):
            row = np.zeros(n + 1)
            row[ones : ones + ell + 1] = shape
            add("heavy", HeavyBinomialForm(cfg.k, n, ell, q_num, ones), row)

    pmfs = np.array(rows, dtype=np.float64).reshape(len(rows), n + 1)
    cdfs = np.cumsum(pmfs, axis=1)
    pmfs.setflags(write=False)
    cdfs.setflags(write=False)
    counts = {
        "sparse_enumerated": enumerated["sparse"],
        "heavy_enumerated": enumerated["heavy"],
        "sparse": kept["sparse"],
        "heavy": kept["heavy"],
        "duplicates": enumerated["sparse"] + enumerated["heavy"] - len(elements),
    }
    return Cover(cfg, tuple(elements), pmfs, cdfs, counts)


def cover_counts(cfg: CoverConfig) -> dict:
    """Pre-dedup element counts per form without materializing any PMF."""
    m = cfg.k**2 - 1
    sparse = sum(math.comb(ell + m - 1, ell) * (cfg.n - ell + 1) for ell in range(cfg.max_sparse_ell + 1))
    heavy = sum(cfg.n - ell + 1 for ell, _ in _heavy_shapes(cfg))
    return {"sparse": sparse, "heavy": heavy, "total": sparse + heavy}


def element_to_json(e: CoverElement) -> dict:
    if isinstance(e, SparseForm):
        return {
            "form": "sparse",
            "k": e.k,
            "ell": e.ell,
            "numerators": list(e.numerators),
            "probs": list(e.probs),
            "ones": e.ones,
        }
    return {
        "form": "heavy_binomial",
        "k": e.k,
        "grid_n": e.grid_n,
        "ell": e.ell,
        "q_num": e.q_num,
        "q": e.q,
        "ones": e.ones,
    }


def element_from_json(doc: dict) -> CoverElement:
    k = int(doc["k"])
    if doc["form"] == "sparse":
        nums = doc.get("numerators")
        if nums is None:
            nums = [round(p * k * k) for p in doc["probs"]]
        return SparseForm(k, tuple(nums), int(doc["ones"]))
    if doc["form"] == "heavy_binomial":
        grid_n = int(doc["grid_n"])
        q_num = doc.get("q_num")
        if q_num is None:
            q_num = round(float(doc["q"]) * k * grid_n)
        return HeavyBinomialForm(k, grid_n, int(doc["ell"]), int(q_num), int(doc["ones"]))
    raise ValueError(f"unknown cover element form {doc.get('form')!r}")
