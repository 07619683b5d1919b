import math

import numpy as np
import pytest

from pbdlearn.cover import (
    CoverConfig,
    CoverTooLargeError,
    HeavyBinomialForm,
    SparseForm,
    build_cover,
    cover_counts,
    cover_element_pmf,
    element_from_json,
    element_prob_vector,
    element_to_json,
    enumerate_heavy_forms,
    enumerate_sparse_forms,
    heavy_constraints_hold,
)
from pbdlearn.dist_core import brute_force_pbd_pmf, pbd_pmf, tv_distance


def test_config_defaults_and_validation():
    cfg = CoverConfig(0.3, 10)
    assert cfg.k == 4
    assert CoverConfig(0.5, 10).k == 2
    for bad in ((0.0, 10), (1.0, 10), (0.5, 0)):
        with pytest.raises(ValueError):
            CoverConfig(*bad)
    assert not CoverConfig(0.5, 10, sparse_ell_cap=2).certified
    assert not CoverConfig(0.5, 10, heavy_q_stride=3).certified
    assert CoverConfig(0.5, 5).certified


def test_sparse_degenerate_grid():
    forms = list(enumerate_sparse_forms(CoverConfig(0.9, 10, k=1)))
    assert len(forms) == 11
    assert all(f.ell == 0 for f in forms)


def test_sparse_count_k2_n3():
    forms = list(enumerate_sparse_forms(CoverConfig(0.5, 3, k=2)))
    expected = sum(math.comb(ell + 2, 2) * (4 - ell) for ell in range(4))
    assert len(forms) == expected == 35
    keys = {(f.ell, f.probs, f.ones) for f in forms}
    assert len(keys) == len(forms)
    for f in forms:
        assert list(f.probs) == sorted(f.probs)
        assert all(0 < p < 1 and (p * 4).is_integer() for p in f.probs)


def test_heavy_membership_examples():
    cfg = CoverConfig(0.5, 20, k=2)
    shapes = {(f.ell, f.q, f.ones) for f in enumerate_heavy_forms(cfg)}
    assert (16, 0.25, 0) in shapes
    assert not any(ell == 4 and q == 0.25 for ell, q, _ in shapes)
    assert list(enumerate_heavy_forms(CoverConfig(0.1, 5, k=10))) == []


def test_heavy_constraints_match_float_statement():
    rng = np.random.default_rng(8)
    for _ in range(2000):
        k = int(rng.integers(1, 6))
        n = int(rng.integers(1, 60))
        ell = int(rng.integers(0, n + 1))
        qn = int(rng.integers(1, k * n)) if k * n > 1 else 1
        q = qn / (k * n)
        want = ell * q >= k * k - 1 / k - 1e-9 and ell * q * (1 - q) >= k * k - k - 1 - 3 / k - 1e-9
        # float form only differs on exact boundary ties
        if abs(ell * q - (k * k - 1 / k)) > 1e-6 and abs(ell * q * (1 - q) - (k * k - k - 1 - 3 / k)) > 1e-6:
            assert heavy_constraints_hold(k, n, ell, qn) == want


def test_every_yielded_heavy_form_satisfies_bounds():
    cfg = CoverConfig(0.5, 30, k=2)
    for f in enumerate_heavy_forms(cfg):
        assert f.ell * f.q >= 4 - 0.5 - 1e-12
        assert f.ell * f.q * (1 - f.q) >= 4 - 2 - 1 - 1.5 - 1e-12
        assert f.ell + f.ones <= 30


def test_invalid_forms_rejected():
    with pytest.raises(ValueError):
        SparseForm(2, (4,), 0)
    with pytest.raises(ValueError):
        HeavyBinomialForm(2, 20, 4, 10, 0)


def test_element_pmfs():
    assert np.array_equal(cover_element_pmf(SparseForm(2, (), 3), 5).mass, [0, 0, 0, 1, 0, 0])
    h = HeavyBinomialForm(1, 4, 2, 2, 1)
    assert np.allclose(cover_element_pmf(h, 4).mass, [0, 0.25, 0.5, 0.25, 0])
    with pytest.raises(ValueError):
        cover_element_pmf(SparseForm(2, (1, 2), 3), 4)


def test_sparse_elements_match_brute_force():
    cfg = CoverConfig(0.5, 12, k=2)
    for f in enumerate_sparse_forms(cfg):
        if f.ones == 1:
            vec = element_prob_vector(f, 12)
            assert np.max(np.abs(cover_element_pmf(f, 12).mass - brute_force_pbd_pmf(vec).mass)) <= 1e-12


def test_k1_cover_size():
    # heavy bounds are vacuous at k = 1: 11 point masses plus 9 * 55 shifted binomials
    cover = build_cover(CoverConfig(0.9, 10, k=1))
    assert len(cover) == 506
    assert cover.counts["sparse"] == 11
    assert sum(cover.is_sparse) == 11


def test_cover_counts_formula_matches_enumeration():
    for n in (3, 6, 9):
        cfg = CoverConfig(0.5, n, k=2)
        counts = cover_counts(cfg)
        assert counts["sparse"] == sum(1 for _ in enumerate_sparse_forms(cfg))
        assert counts["heavy"] == sum(1 for _ in enumerate_heavy_forms(cfg))


def test_cover_is_deduplicated_and_deterministic():
    a = build_cover(CoverConfig(0.5, 8, k=2))
    b = build_cover.__wrapped__(CoverConfig(0.5, 8, k=2))
    assert a.elements == b.elements
    assert np.array_equal(a.pmfs, b.pmfs)
    rounded = {np.round(r, 12).tobytes() for r in a.pmfs}
    assert len(rounded) == len(a)
    # sparse elements come first
    first_heavy = int(np.argmin(a.is_sparse))
    assert not a.is_sparse[first_heavy:].any()


@pytest.mark.parametrize("n,k", [(10, 2), (12, 1), (12, 2)])
def test_cover_quality(n, k):
    cover = build_cover(CoverConfig(1 / k if k > 1 else 0.9, n, k=k))
    rng = np.random.default_rng(n * 10 + k)
    bound = 1 / k + 0.05
    for _ in range(100):
        target = pbd_pmf(rng.uniform(size=n))
        assert min(tv_distance(cover.pmf(i), target) for i in range(len(cover))) <= bound


def test_size_cap():
    with pytest.raises(CoverTooLargeError):
        build_cover(CoverConfig(0.5, 12, k=2, max_elements=100))


def test_capped_cover_is_not_certified():
    cover = build_cover(CoverConfig(0.5, 12, k=2, sparse_ell_cap=2))
    assert not cover.certified
    assert max(e.ell for e in cover.elements if isinstance(e, SparseForm)) <= 2


def test_element_json_round_trip():
    cover = build_cover(CoverConfig(0.5, 8, k=2))
    for e in cover.elements[::7]:
        assert element_from_json(element_to_json(e)) == e
    doc = cover.to_json()
    assert doc["k"] == 2 and len(doc["elements"]) == len(cover)
