"""Proper learners for sums of Bernoullis over the sparse/heavy cover.

``learn_kolmogorov`` returns the first cover element whose CDF is within
epsilon/2 of the empirical CDF.  ``learn_tv`` runs the Delta-test over every
sparse element and, only if none passes, the H-test over the heavy ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._backend import kernels
from .cover import (
    Cover,
    CoverConfig,
    CoverElement,
    HeavyBinomialForm,
    SparseForm,
    build_cover,
    cover_element_pmf,
)
from .dist_core import kolmogorov_distance, tv_distance
from .empirical import (
    EmpiricalCdf,
    SampleSet,
    ceil_guarded,
    dkw_sample_size,
    empirical_cdf,
    empirical_pmf,
    kolmogorov_sample_size,
)

# DKW failure budget per stage; two stages keep the whole run at 9/10
STAGE_DELTA = 1.0 / 20.0


class NoAcceptingElement(RuntimeError):
    """No cover element passed the learner's test."""

    def __init__(self, message, best_delta=None, best_h=None, best_gap=None):
        super().__init__(message)
        self.best_delta = best_delta
        self.best_h = best_h
        self.best_gap = best_gap


@dataclass(frozen=True)
class TvLearnerConfig:
    epsilon: float
    tau: float = 1.0
    k_override: Optional[int] = None
    delta_threshold: Optional[float] = None
    h_threshold: Optional[float] = None
    sparse_ell_cap: Optional[int] = None
    heavy_q_stride: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    @property
    def beta(self) -> float:
        return 1.0 + self.tau / 12.0

    @property
    def alpha(self) -> float:
        return 4.0 + self.tau / 2.0

    @property
    def cover_accuracy(self) -> float:
        return self.epsilon**self.beta

    @property
    def required_k(self) -> int:
        return ceil_guarded(1.0 / self.cover_accuracy)

    @property
    def k(self) -> int:
        return self.k_override if self.k_override is not None else self.required_k

    @property
    def dkw_accuracy(self) -> float:
        return self.epsilon**self.alpha

    def sample_size(self) -> int:
        """DKW sizing for pointwise CDF accuracy epsilon^alpha at failure 1/20."""
        return dkw_sample_size(self.dkw_accuracy, STAGE_DELTA)

    def delta_thresholds(self, ell: np.ndarray) -> np.ndarray:
        """eps^beta + 2 |supp(Y)| eps^alpha with |supp(Y)| = ell + 1, unless overridden."""
        ell = np.asarray(ell)
        if self.delta_threshold is not None:
            return np.full(ell.shape, float(self.delta_threshold))
        return self.epsilon**self.beta + 2.0 * (ell + 1) * self.epsilon**self.alpha

    def h_threshold_value(self) -> float:
        if self.h_threshold is not None:
            return float(self.h_threshold)
        return 2.0 * self.epsilon**self.beta + self.epsilon**self.alpha

    def margin_holds(self, max_support: int) -> bool:
        """eps > eps^beta + 4 c^{-3 beta} eps^{alpha - 3 beta}, with (c eps)^{-3 beta} = max_support."""
        eps = self.epsilon
        return eps > eps**self.beta + 4.0 * max_support * eps**self.alpha

    def cover_config(self, n: int) -> CoverConfig:
        return CoverConfig(
            self.cover_accuracy,
            n,
            k=self.k,
            sparse_ell_cap=self.sparse_ell_cap,
            heavy_q_stride=self.heavy_q_stride,
        )


@dataclass(frozen=True)
class CoverHypothesis:
    """A cover element chosen by a learner, with the statistic it was accepted on."""

    element: CoverElement
    statistic: float
    threshold: float
    index: int
    n: int
    certified: bool
    notes: dict = field(default_factory=dict)

    @property
    def form(self) -> str:
        return "sparse" if isinstance(self.element, SparseForm) else "heavy_binomial"

    def pmf(self):
        return cover_element_pmf(self.element, self.n)


TvHypothesis = CoverHypothesis


def _check_samples(samples: SampleSet, n: int) -> None:
    if samples.domain_max != n:
        raise ValueError(f"samples declare domain 0..{samples.domain_max}, learner was given n={n}")


def learn_kolmogorov(
    samples: SampleSet,
    n: int,
    epsilon: float,
    k_override: Optional[int] = None,
    delta: float = 0.1,
    cover: Optional[Cover] = None,
) -> CoverHypothesis:
    """First cover element (cover built at accuracy epsilon/8) with max_l |F_Y(l) - F_hat(l)| <= epsilon/2.

    When the empirical CDF is epsilon/4-accurate the returned Y has
    d_K(X, Y) <= 3 epsilon / 4.
    """
    _check_samples(samples, n)
    if cover is None:
        k = k_override if k_override is not None else ceil_guarded(8.0 / epsilon)
        cover = build_cover(CoverConfig(epsilon / 8.0, n, k=k))
    e = empirical_cdf(samples, accuracy_budget=epsilon / 4.0)
    gaps = kernels.max_cdf_gaps(cover.cdfs, e.cum)
    hits = np.flatnonzero(gaps <= epsilon / 2.0)
    needed_k = ceil_guarded(8.0 / epsilon)
    notes = {
        "k": cover.k,
        "required_k": needed_k,
        "samples": samples.k,
        "required_samples": kolmogorov_sample_size(epsilon, delta),
        "cover_size": len(cover),
    }
    if hits.size == 0:
        raise NoAcceptingElement(
            f"no cover element within {epsilon / 2} of the empirical CDF "
            f"(closest gap {gaps.min():.4f})",
            best_gap=float(gaps.min()),
        )
    i = int(hits[0])
    certified = cover.certified and cover.k >= needed_k and samples.k >= notes["required_samples"]
    return CoverHypothesis(cover.elements[i], float(gaps[i]), epsilon / 2.0, i, n, certified, notes)


def delta_statistic(y: SparseForm, e: EmpiricalCdf, n: int) -> float:
    """(1/2) (sum_{z in supp Y} |f_Y(z) - f_hat(z)| + 1 - sum_{z in supp Y} f_hat(z)).

    supp(Y) is taken as {ones, ..., ones + ell}.
    """
    fy = cover_element_pmf(y, n).mass
    fhat = empirical_pmf(e).mass
    lo, hi = y.ones, y.ones + y.ell
    inside = slice(lo, hi + 1)
    return 0.5 * (float(np.abs(fy[inside] - fhat[inside]).sum()) + 1.0 - float(fhat[inside].sum()))


def delta_test(y: SparseForm, e: EmpiricalCdf, cfg: TvLearnerConfig, n: Optional[int] = None) -> bool:
    n = e.domain_max if n is None else n
    return delta_statistic(y, e, n) <= float(cfg.delta_thresholds(np.array(y.ell)))


def h_statistic(y: HeavyBinomialForm, e: EmpiricalCdf, n: int) -> float:
    """max_l |F_Y(l) - F_hat(l)|."""
    fy = np.cumsum(cover_element_pmf(y, n).mass)
    return float(np.abs(fy - e.cum).max())


def h_test(y: HeavyBinomialForm, e: EmpiricalCdf, cfg: TvLearnerConfig, n: Optional[int] = None) -> bool:
    n = e.domain_max if n is None else n
    return h_statistic(y, e, n) <= cfg.h_threshold_value()


def _max_support(cover: Cover) -> int:
    lo, hi = cover.support_bounds
    if not cover.is_sparse.any():
        return 1
    return int((hi - lo + 1)[cover.is_sparse].max())


def learn_tv(samples: SampleSet, n: int, cfg: TvLearnerConfig, cover: Optional[Cover] = None) -> CoverHypothesis:
    """Delta-test over the sparse elements in cover order, then H-test over the heavy ones.

    The first accepting element is returned.  ``certified`` is False if the
    cover is coarser than accuracy eps^beta requires, a cap thinned it, the
    thresholds were overridden, the threshold margin fails with the cover's
    largest sparse support in place of (c eps)^{-3 beta}, or the sample is
    smaller than the DKW sizing.
    """
    _check_samples(samples, n)
    if cover is None:
        cover = build_cover(cfg.cover_config(n))
    e = empirical_cdf(samples, accuracy_budget=cfg.dkw_accuracy)
    fhat = e.counts / e.sample_count
    lo, hi = cover.support_bounds
    sparse = np.flatnonzero(cover.is_sparse)
    heavy = np.flatnonzero(~cover.is_sparse)

    max_support = _max_support(cover)
    notes = {
        "k": cover.k,
        "required_k": cfg.required_k,
        "cover_size": len(cover),
        "max_support": max_support,
        "margin_holds": cfg.margin_holds(max_support),
        "thresholds_overridden": cfg.delta_threshold is not None or cfg.h_threshold is not None,
        "samples": samples.k,
        "required_samples": cfg.sample_size(),
    }
    certified = (
        cover.certified
        and cover.k >= cfg.required_k
        and notes["margin_holds"]
        and not notes["thresholds_overridden"]
        and samples.k >= notes["required_samples"]
    )

    best_delta = best_h = None
    if sparse.size:
        deltas = kernels.delta_statistics(cover.pmfs[sparse], lo[sparse], hi[sparse], fhat)
        limits = cfg.delta_thresholds(hi[sparse] - lo[sparse])
        ok = np.flatnonzero(deltas <= limits)
        best_delta = float(deltas.min())
        if ok.size:
            j = ok[0]
            i = int(sparse[j])
            notes["step"] = 2
            return CoverHypothesis(cover.elements[i], float(deltas[j]), float(limits[j]), i, n, certified, notes)
    if heavy.size:
        gaps = kernels.max_cdf_gaps(cover.cdfs[heavy], e.cum)
        limit = cfg.h_threshold_value()
        ok = np.flatnonzero(gaps <= limit)
        best_h = float(gaps.min())
        if ok.size:
            j = ok[0]
            i = int(heavy[j])
            notes["step"] = 3
            return CoverHypothesis(cover.elements[i], float(gaps[j]), limit, i, n, certified, notes)
    raise NoAcceptingElement(
        f"no element passed (best Delta {best_delta}, best H gap {best_h})",
        best_delta=best_delta,
        best_h=best_h,
    )


@dataclass(frozen=True)
class GapReport:
    d_tv: float
    d_k: float
    residual: float
    left_holds: bool


def kolmogorov_tv_gap_check(x: HeavyBinomialForm, y: HeavyBinomialForm, n: int) -> GapReport:
    """Exact d_TV and d_K of two shifted binomials and the residual d_TV - 2 d_K."""
    if x.k != y.k:
        raise ValueError("both forms must be heavy for the same k")
    px, py = cover_element_pmf(x, n), cover_element_pmf(y, n)
    d_tv = tv_distance(px, py)
    d_k = kolmogorov_distance(px, py)
    return GapReport(d_tv, d_k, d_tv - 2.0 * d_k, 0.5 * d_k <= d_tv)
