import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from pbdlearn import _kernels_py as py
from pbdlearn.cover import CoverConfig, build_cover

compiled = pytest.importorskip("pbdlearn._kernels")


def random_rows(rng, rows, width):
    w = rng.exponential(size=(rows, width)) * (rng.uniform(size=(rows, width)) < 0.6)
    w[:, 0] += 1e-3
    return w / w.sum(axis=1, keepdims=True)


def test_backend_selection_env():
    code = "import pbdlearn; print(pbdlearn.BACKEND)"
    env = dict(os.environ, PBDLEARN_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env["PBDLEARN_PURE"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "compiled"


def test_pbd_dp_equivalence():
    rng = np.random.default_rng(0)
    for n in (1, 2, 7, 40, 300):
        p = rng.uniform(size=n)
        assert np.allclose(compiled.pbd_dp(p), py.pbd_dp(p), atol=1e-14)


def test_statistics_equivalence():
    rng = np.random.default_rng(1)
    P = random_rows(rng, 60, 25)
    ref = random_rows(rng, 1, 25)[0]
    lo = rng.integers(0, 25, 60)
    hi = np.minimum(lo + rng.integers(0, 10, 60), 24)
    assert np.allclose(compiled.delta_statistics(P, lo, hi, ref), py.delta_statistics(P, lo, hi, ref), atol=1e-14)
    C = np.cumsum(P, axis=1)
    assert np.allclose(compiled.max_cdf_gaps(C, np.cumsum(ref)), py.max_cdf_gaps(C, np.cumsum(ref)), atol=1e-14)
    assert np.allclose(compiled.tv_to_ref(P, ref), py.tv_to_ref(P, ref), atol=1e-14)


def test_competition_equivalence():
    rng = np.random.default_rng(2)
    cover = build_cover(CoverConfig(0.5, 8, k=2))
    P = cover.pmfs
    for trial in range(20):
        counts = np.bincount(rng.integers(0, 9, 300), minlength=9).astype(np.float64)
        opp = P[int(rng.integers(0, len(P)))]
        a = compiled.competitions_vs(P, opp, counts, 300, 0.05)
        b = py.competitions_vs(P, opp, counts, 300, 0.05)
        assert np.array_equal(np.asarray(a), np.asarray(b))
        i, j = rng.integers(0, len(P), 2)
        da = compiled.competition_detail(P[i], P[j], counts, 300)
        db = py.competition_detail(P[i], P[j], counts, 300)
        assert da[0] == db[0]
        assert np.allclose(da[1:], db[1:], atol=1e-14)


def test_pure_backend_runs_learner(monkeypatch):
    import pbdlearn._backend as backend

    monkeypatch.setenv("PBDLEARN_PURE", "1")
    reloaded = importlib.reload(backend)
    try:
        assert reloaded.BACKEND == "python"
    finally:
        monkeypatch.delenv("PBDLEARN_PURE")
        importlib.reload(backend)
