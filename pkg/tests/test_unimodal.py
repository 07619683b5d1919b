import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pbdlearn.dist_core import binomial_pmf, pbd_pmf, sample_from_pmf, tv_distance
from pbdlearn.empirical import SampleSet
from pbdlearn.unimodal import (
    BitSource,
    HistogramHypothesis,
    HistogramSampler,
    histogram_sample,
    histogram_samples,
    interval_count_bound,
    learn_unimodal,
    unimodal_sample_size,
)


def test_sample_size():
    assert unimodal_sample_size(1000, 0.2) == math.ceil(50 * math.log2(1001) / 0.008)
    assert interval_count_bound(1000, 0.2) == pytest.approx(50 * math.log2(1001) / 0.2)


def test_histogram_validation():
    with pytest.raises(ValueError):
        HistogramHypothesis([0, 3, 3], [1, 1], 2)
    with pytest.raises(ValueError):
        HistogramHypothesis([1, 3], [2], 2)
    with pytest.raises(ValueError):
        HistogramHypothesis([0, 3], [1], 2)


def test_all_samples_equal():
    h = learn_unimodal(SampleSet([7] * 40, 20), 20, 0.2)
    j = int(np.searchsorted(h.boundaries, 7, side="right") - 1)
    assert h.masses[j] == 1.0
    assert h.masses.sum() == 1.0


@given(
    st.integers(1, 60).flatmap(lambda n: st.tuples(st.just(n), st.lists(st.integers(0, n), min_size=1, max_size=300))),
    st.sampled_from([0.1, 0.2, 0.5]),
)
def test_histogram_invariants(case, eps):
    n, values = case
    h = learn_unimodal(SampleSet(values, n), n, eps)
    assert h.boundaries[0] == 0 and h.boundaries[-1] == n + 1
    assert np.all(np.diff(h.boundaries) > 0)
    assert int(h.counts.sum()) == len(values)
    # mass times sample count is an integer by construction
    assert np.array_equal(h.masses * len(values), h.counts)
    pmf = h.pmf()
    assert pmf.domain_max == n
    # each bucket's mass is its empirical fraction
    counts = np.bincount(values, minlength=n + 1)
    for j in range(len(h)):
        assert counts[h.boundaries[j] : h.boundaries[j + 1]].sum() == h.counts[j]


@pytest.mark.parametrize("name", ["binomial", "skewed"])
def test_accuracy(name):
    n, eps = 1000, 0.2
    truth = binomial_pmf(n, 0.5) if name == "binomial" else pbd_pmf(np.random.default_rng(0).beta(0.3, 3, n))
    m = unimodal_sample_size(n, eps)
    good = 0
    for seed in range(30):
        h = learn_unimodal(SampleSet(sample_from_pmf(truth, seed, m), n), n, eps)
        assert len(h) <= interval_count_bound(n, eps)
        good += tv_distance(h.pmf(), truth) <= eps
    assert good >= 27


def test_json_round_trip():
    h = learn_unimodal(SampleSet([1, 2, 2, 5, 9], 10), 10, 0.3)
    assert np.array_equal(HistogramHypothesis.from_json(h.to_json()).counts, h.counts)


def test_bit_source_counts():
    src = BitSource(1)
    values = [src.bits(b) for b in (3, 64, 1, 17)]
    assert src.consumed == 85
    assert all(0 <= v < 2**b for v, b in zip(values, (3, 64, 1, 17)))


def test_sampler_examples():
    single = HistogramHypothesis([0, 3, 4, 6], [0, 5, 0], 5)
    for seed in range(20):
        d = histogram_sample(single, seed)
        assert d.value == 3 and d.bits == 0
    uniform = HistogramHypothesis([0, 8], [4], 4)
    draws = [histogram_sample(uniform, s) for s in range(200)]
    assert all(d.bits == 3 for d in draws)
    assert set(d.value for d in draws) == set(range(8))


def test_sampler_frequencies_and_bits():
    n = 200
    truth = pbd_pmf(np.random.default_rng(3).beta(0.5, 2, n))
    h = learn_unimodal(SampleSet(sample_from_pmf(truth, 0, 20_000), n), n, 0.2)
    sampler = HistogramSampler(h)
    draws = 100_000
    values, bits = histogram_samples(h, 9, draws)
    assert bits.max() <= sampler.bit_bound()
    j = np.searchsorted(h.boundaries, values, side="right") - 1
    freq = np.bincount(j, minlength=len(h)) / draws
    q = sampler.quantized_masses()
    sigma = np.sqrt(q * (1 - q) / draws)
    assert np.all(np.abs(freq - q) <= 3 * sigma + 1e-12)
    # quantization moves no interval by more than 2^-bits
    assert np.abs(q - h.masses).max() <= 2.0**-sampler.select_bits
