import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pbdlearn.cover import CoverConfig, HeavyBinomialForm, SparseForm, build_cover, cover_element_pmf
from pbdlearn.dist_core import (
    Pmf,
    binomial_pmf,
    kolmogorov_distance,
    pbd_pmf,
    sample_from_pmf,
    shifted_poisson_pmf,
    tv_distance,
)
from pbdlearn.empirical import EmpiricalCdf, SampleSet, empirical_cdf, empirical_pmf
from pbdlearn.learner import (
    NoAcceptingElement,
    TvLearnerConfig,
    delta_statistic,
    delta_test,
    h_statistic,
    h_test,
    kolmogorov_tv_gap_check,
    learn_kolmogorov,
    learn_tv,
)

PINNED = dict(delta_threshold=0.12, h_threshold=0.06)


def ecdf_from_mass(mass, k=1000):
    counts = np.rint(np.asarray(mass) * k).astype(np.int64)
    return EmpiricalCdf(counts, int(counts.sum()))


def test_config_exponents():
    cfg = TvLearnerConfig(0.2)
    assert cfg.beta == 1 + 1 / 12
    assert cfg.alpha == 4.5
    assert cfg.cover_accuracy == pytest.approx(0.2 ** (13 / 12))
    assert cfg.required_k == math.ceil(1 / 0.2 ** (13 / 12))
    cfg = TvLearnerConfig(0.2, tau=2)
    assert (cfg.beta, cfg.alpha) == (1 + 2 / 12, 5.0)
    with pytest.raises(ValueError):
        TvLearnerConfig(1.5)
    with pytest.raises(ValueError):
        TvLearnerConfig(0.2, tau=0)


def test_margin_condition():
    cfg = TvLearnerConfig(0.01)
    assert cfg.margin_holds(10)
    assert not TvLearnerConfig(0.5).margin_holds(9)


def test_delta_statistic_examples():
    y = SparseForm(2, (2,), 0)  # Bernoulli(1/2)
    assert delta_statistic(y, ecdf_from_mass([0.5, 0.5, 0.0]), 2) == pytest.approx(0.0)
    assert delta_statistic(y, ecdf_from_mass([0.4, 0.4, 0.2]), 2) == pytest.approx(0.2)


def test_delta_statistic_equals_empirical_tv():
    # with a nonnegative empirical PMF the statistic is exactly d_TV(Y, f_hat)
    rng = np.random.default_rng(1)
    cover = build_cover(CoverConfig(0.5, 10, k=2))
    for _ in range(200):
        i = int(rng.integers(0, len(cover)))
        y = cover.elements[i]
        if not isinstance(y, SparseForm):
            continue
        e = empirical_cdf(SampleSet(rng.integers(0, 11, 50), 10))
        assert delta_statistic(y, e, 10) == pytest.approx(tv_distance(cover.pmf(i), empirical_pmf(e)), abs=1e-12)


def test_delta_test_thresholds():
    cfg = TvLearnerConfig(0.2)
    y = SparseForm(2, (2,), 0)
    assert delta_test(y, ecdf_from_mass([0.5, 0.5, 0.0]), cfg)
    # Delta = 1: nothing of Y's support was observed
    assert not delta_test(y, ecdf_from_mass([0.0, 0.0, 1.0]), cfg)
    assert float(cfg.delta_thresholds(np.array(8))) < 0.21
    assert float(TvLearnerConfig(0.2, delta_threshold=0.5).delta_thresholds(np.array(3))) == 0.5


def test_h_test_thresholds():
    cfg = TvLearnerConfig(0.2)
    assert cfg.h_threshold_value() == pytest.approx(2 * 0.2 ** (13 / 12) + 0.2**4.5)
    assert cfg.h_threshold_value() < 0.9
    y = HeavyBinomialForm(2, 40, 20, 40, 0)
    exact = ecdf_from_mass(cover_element_pmf(y, 40).mass, k=10**9)
    assert h_statistic(y, exact, 40) < 1e-8
    assert h_test(y, exact, cfg)
    far = ecdf_from_mass(np.eye(41)[40])
    assert not h_test(y, far, cfg)


def test_delta_test_accepts_close_targets():
    cfg = TvLearnerConfig(0.2)
    y = SparseForm(3, (2, 4, 7), 5)
    n = 20
    rng = np.random.default_rng(5)
    accepted = 0
    for seed in range(30):
        p = np.zeros(n)
        p[:3] = np.clip(np.array([2, 4, 7]) / 9 + rng.uniform(-0.03, 0.03, 3), 0, 1)
        p[3:8] = 1
        target = pbd_pmf(p)
        assert tv_distance(target, cover_element_pmf(y, n)) <= cfg.cover_accuracy
        e = empirical_cdf(SampleSet(sample_from_pmf(target, seed, 100_000), n))
        accepted += delta_test(y, e, cfg)
    assert accepted == 30


def test_h_test_accepts_close_targets():
    cfg = TvLearnerConfig(0.2)
    n = 40
    y = HeavyBinomialForm(2, n, 30, 40, 2)
    truth_y = cover_element_pmf(y, n)
    accepted = 0
    for seed in range(30):
        q = 0.5 + (seed % 5 - 2) * 0.005
        target = Pmf(np.concatenate(([0, 0], binomial_pmf(30, q).mass, np.zeros(n - 32))))
        assert tv_distance(target, truth_y) <= cfg.cover_accuracy
        e = empirical_cdf(SampleSet(sample_from_pmf(target, seed, 100_000), n))
        accepted += h_test(y, e, cfg)
    assert accepted == 30


def test_kolmogorov_point_mass():
    n = 10
    s = SampleSet([5] * 30, n)
    h = learn_kolmogorov(s, n, 0.5, k_override=2)
    assert kolmogorov_distance(h.pmf(), pbd_pmf([1] * 5 + [0] * 5)) == 0


def test_kolmogorov_binomial_and_replay():
    n, eps = 20, 0.3
    truth = binomial_pmf(n, 0.5)
    cover = build_cover(CoverConfig(eps / 8, n, k=2))
    good = 0
    for seed in range(100):
        s = SampleSet(sample_from_pmf(truth, seed, 20_000), n)
        h = learn_kolmogorov(s, n, eps, k_override=2, cover=cover)
        y = cover.pmf(h.index)
        assert np.abs(np.cumsum(y.mass) - empirical_cdf(s).cum).max() <= eps / 2
        good += kolmogorov_distance(y, truth) <= eps
    assert good >= 90


def test_kolmogorov_uncertified_with_small_k():
    s = SampleSet(sample_from_pmf(binomial_pmf(12, 0.5), 0, 2000), 12)
    h = learn_kolmogorov(s, 12, 0.3, k_override=2)
    assert not h.certified
    assert h.notes["required_k"] == 27


def test_learn_tv_sparse_target_step_two():
    n = 40
    cover = build_cover(CoverConfig(0.5, n, k=2))
    target = cover_element_pmf(SparseForm(2, (1, 3), 10), n)
    s = SampleSet(sample_from_pmf(target, 1, 200_000), n)
    h = learn_tv(s, n, TvLearnerConfig(0.5, k_override=2, delta_threshold=0.02), cover=cover)
    assert h.notes["step"] == 2 and h.form == "sparse"
    assert tv_distance(h.pmf(), target) <= 0.03
    h = learn_tv(s, n, TvLearnerConfig(0.5, k_override=2), cover=cover)
    assert h.notes["step"] == 2
    assert h.statistic <= h.threshold
    assert not h.certified


def test_learn_tv_heavy_regime_binomial():
    n, slack = 40, 0.15
    cfg = TvLearnerConfig(0.5, k_override=2, **PINNED)
    cover = build_cover(cfg.cover_config(n))
    truth = binomial_pmf(n, 0.5)
    best = min(tv_distance(cover.pmf(i), truth) for i in range(len(cover)))
    good = 0
    for seed in range(100):
        s = SampleSet(sample_from_pmf(truth, seed, 200_000), n)
        h = learn_tv(s, n, cfg, cover=cover)
        good += tv_distance(h.pmf(), truth) <= best + slack
    assert good >= 90


def test_learn_tv_step_order():
    n = 40
    cfg = TvLearnerConfig(0.5, k_override=2, **PINNED)
    cover = build_cover(cfg.cover_config(n))
    s = SampleSet(sample_from_pmf(binomial_pmf(n, 0.5), 3, 200_000), n)
    h = learn_tv(s, n, cfg, cover=cover)
    assert h.form == "heavy_binomial"
    e = empirical_cdf(s)
    sparse = [e_ for e_ in cover.elements if isinstance(e_, SparseForm)]
    assert not any(delta_test(y, e, cfg, n) for y in sparse)
    heavy_before = [y for y in cover.elements[: h.index] if isinstance(y, HeavyBinomialForm)]
    assert not any(h_test(y, e, cfg, n) for y in heavy_before)
    # determinism
    assert learn_tv(s, n, cfg, cover=cover).index == h.index


def test_learn_tv_reports_best_statistics_on_failure():
    n = 12
    s = SampleSet(sample_from_pmf(binomial_pmf(n, 0.5), 0, 1000), n)
    cfg = TvLearnerConfig(0.5, k_override=2, delta_threshold=1e-6, h_threshold=1e-6)
    with pytest.raises(NoAcceptingElement) as info:
        learn_tv(s, n, cfg)
    assert info.value.best_delta is not None and info.value.best_h is not None


def test_gap_check_examples():
    x = HeavyBinomialForm(2, 100, 100, 100, 0)
    r = kolmogorov_tv_gap_check(x, x, 101)
    assert r.d_tv == 0 and r.d_k == 0 and r.residual <= 0
    y = HeavyBinomialForm(2, 100, 100, 100, 1)
    r = kolmogorov_tv_gap_check(x, y, 101)
    # both equal the central Binomial(100, 1/2) mass, 0.0795892373871787615
    assert r.d_tv == pytest.approx(0.07958923738717876, abs=1e-14)
    assert r.d_k == pytest.approx(0.07958923738717876, abs=1e-14)
    assert r.residual == pytest.approx(-0.07958923738717876, abs=1e-14)
    assert r.left_holds
    with pytest.raises(ValueError):
        kolmogorov_tv_gap_check(x, HeavyBinomialForm(1, 100, 100, 50, 0), 101)


@given(
    st.floats(0.5, 80.0),
    st.floats(0.5, 80.0),
    st.integers(0, 30),
    st.integers(0, 30),
    st.sampled_from(["greater", "equal", "less"]),
)
def test_shifted_poisson_tv_at_most_twice_kolmogorov(a, b, m, m_hat, regime):
    lo, hi = sorted((a, b))
    lam, lam_hat = {"greater": (hi, lo), "equal": (a, a), "less": (lo, hi)}[regime]
    top = int(max(m + lam, m_hat + lam_hat) + 40 * math.sqrt(max(lam, lam_hat))) + 60
    y = shifted_poisson_pmf(m, lam, top).pmf
    y_hat = shifted_poisson_pmf(m_hat, lam_hat, top).pmf
    assert tv_distance(y, y_hat) <= 2 * kolmogorov_distance(y, y_hat) + 1e-9
