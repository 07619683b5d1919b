"""Seeded Monte Carlo scenarios behind the acceptance numbers, written out as CSV.

Every trial draws its randomness from ``substream(base_seed, purpose, trial)``
so a row depends only on the base seed, the trial index and the scenario
parameters, never on which worker ran it or in what order.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cover import CoverConfig, HeavyBinomialForm, build_cover, heavy_constraints_hold
from .dist_core import (
    binomial_pmf,
    brute_force_pbd_pmf,
    kolmogorov_distance,
    pbd_pmf,
    sample_from_pmf,
    shifted_poisson_pmf,
    tv_distance,
)
from .empirical import SampleSet, dkw_sample_size, empirical_cdf, kolmogorov_sample_size
from .learner import NoAcceptingElement, TvLearnerConfig, kolmogorov_tv_gap_check, learn_kolmogorov, learn_tv
from .selection import TournamentFailure, competition_matrix, tournament, tournament_sample_size
from .unimodal import (
    HistogramSampler,
    histogram_samples,
    interval_count_bound,
    learn_unimodal,
    unimodal_sample_size,
)
from .weighted import make_lower_bound_instance, weighted_pmf

CSV_VERSION = 1
COLUMNS = ("trial", "seed", "error", "bound", "accepted_form", "samples", "violations", "success", "time_s")

# substream purposes
TARGET, SAMPLING, DECOY = 0, 1, 2


def substream(base_seed: int, purpose: int, trial: int) -> int:
    ss = np.random.SeedSequence(base_seed, spawn_key=(purpose, trial))
    return int(ss.generate_state(1, np.uint64)[0])


def _rng(base_seed: int, purpose: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(substream(base_seed, purpose, trial)))


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    trials: int = 100
    base_seed: int = 0
    n: Optional[int] = None
    epsilon: Optional[float] = None
    tau: float = 1.0
    k_override: Optional[int] = None
    output: Optional[str] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; known: {', '.join(sorted(SCENARIOS))}")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be at least 1")

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        known = {"scenario", "trials", "base_seed", "n", "epsilon", "tau", "k_override", "output"}
        params = dict(doc.get("params", {}))
        params.update({k: v for k, v in doc.items() if k not in known and k != "params"})
        return cls(**{k: v for k, v in doc.items() if k in known}, params=params)

    def get(self, name: str, default=None):
        if name in ("n", "epsilon", "k_override") and getattr(self, name) is not None:
            return getattr(self, name)
        return self.params.get(name, default)


@dataclass
class TrialRow:
    trial: int
    seed: int
    error: Optional[float]
    bound: Optional[float]
    accepted_form: str
    samples: int
    violations: int
    success: bool
    time_s: Optional[float] = None


@dataclass
class BenchResult:
    config: ExperimentConfig
    rows: list

    @property
    def successes(self) -> int:
        return sum(r.success for r in self.rows)

    @property
    def success_fraction(self) -> float:
        return self.successes / len(self.rows)

    @property
    def violations(self) -> int:
        return sum(r.violations for r in self.rows)

    @property
    def max_error(self) -> Optional[float]:
        errs = [r.error for r in self.rows if r.error is not None]
        return max(errs) if errs else None


# -- scenarios --------------------------------------------------------------
# each is (setup(cfg) -> context, trial(cfg, context, i) -> TrialRow)


def _dp_setup(cfg):
    return None


def _dp_trial(cfg, ctx, i):
    rng = _rng(cfg.base_seed, TARGET, i)
    n = int(rng.integers(1, int(cfg.get("n_max", 15)) + 1))
    p = rng.uniform(0.0, 1.0, n)
    err = float(np.abs(pbd_pmf(p).mass - brute_force_pbd_pmf(p).mass).max())
    tol = float(cfg.get("tolerance", 1e-9))
    return TrialRow(i, substream(cfg.base_seed, TARGET, i), err, tol, f"n={n}", 0, 0, err <= tol)


def _dkw_setup(cfg):
    eps = cfg.get("epsilon", 0.1)
    delta = cfg.get("delta", 0.1)
    return {"eps": eps, "m": int(cfg.get("samples", dkw_sample_size(eps, delta))), "n": int(cfg.get("n", 50))}


def _dkw_trial(cfg, ctx, i):
    p = _rng(cfg.base_seed, TARGET, i).uniform(0.0, 1.0, ctx["n"])
    truth = pbd_pmf(p)
    seed = substream(cfg.base_seed, SAMPLING, i)
    s = SampleSet(sample_from_pmf(truth, seed, ctx["m"]), ctx["n"])
    err = float(np.abs(empirical_cdf(s).cum - np.cumsum(truth.mass)).max())
    return TrialRow(i, seed, err, ctx["eps"], "-", ctx["m"], 0, err <= ctx["eps"])


def _cover_setup(cfg):
    n = int(cfg.get("n", 8))
    k = int(cfg.get("k_override", 2))
    cover = build_cover(CoverConfig(1.0 / k, n, k=k))
    return {"n": n, "cover": cover, "bound": 1.0 / k + float(cfg.get("slack", 0.05))}


def _cover_trial(cfg, ctx, i):
    from ._backend import kernels

    p = _rng(cfg.base_seed, TARGET, i).uniform(0.0, 1.0, ctx["n"])
    tvs = kernels.tv_to_ref(ctx["cover"].pmfs, pbd_pmf(p).mass)
    j = int(np.argmin(tvs))
    form = "sparse" if ctx["cover"].is_sparse[j] else "heavy_binomial"
    err = float(tvs[j])
    return TrialRow(i, substream(cfg.base_seed, TARGET, i), err, ctx["bound"], form, 0, 0, err <= ctx["bound"])


def _close_vector(rng, p, delta):
    truth = pbd_pmf(p)
    scale = delta
    while True:
        q = np.clip(p + rng.uniform(-scale, scale, p.size), 0.0, 1.0)
        d = tv_distance(pbd_pmf(q), truth)
        if 0.0 < d <= delta:
            return q
        scale /= 2.0


def _far_vector(rng, p, far):
    truth = pbd_pmf(p)
    while True:
        q = rng.uniform(0.0, 1.0, p.size) ** rng.uniform(0.1, 8.0)
        if tv_distance(pbd_pmf(q), truth) > far:
            return q


def _tournament_setup(cfg):
    delta = float(cfg.get("delta", 0.1))
    decoys = int(cfg.get("decoys", 49))
    m = int(cfg.get("samples", tournament_sample_size(delta, decoys + 1)))
    return {"n": int(cfg.get("n", 20)), "delta": delta, "decoys": decoys, "m": m}


def _tournament_trial(cfg, ctx, i):
    n, delta = ctx["n"], ctx["delta"]
    p = _rng(cfg.base_seed, TARGET, i).uniform(0.0, 1.0, n)
    truth = pbd_pmf(p)
    drng = _rng(cfg.base_seed, DECOY, i)
    cands = [_far_vector(drng, p, 6 * delta) for _ in range(ctx["decoys"])]
    cands.insert(int(drng.integers(0, ctx["decoys"] + 1)), _close_vector(drng, p, delta))
    P = np.array([pbd_pmf(q).mass for q in cands])
    seed = substream(cfg.base_seed, SAMPLING, i)
    s = SampleSet(sample_from_pmf(truth, seed, ctx["m"]), n)
    try:
        j = tournament(P, s, delta)
    except TournamentFailure:
        return TrialRow(i, seed, None, 6 * delta, "failure", ctx["m"], 0, False)
    err = tv_distance(pbd_pmf(cands[j]), truth)
    # replay: the winner's row of the full outcome matrix must hold no loss
    lost = int(np.any(competition_matrix(P, s, delta)[j] < 0))
    return TrialRow(i, seed, err, 6 * delta, f"index={j}", ctx["m"], lost, err <= 6 * delta and not lost)


def _tv_target(rng, n, i):
    if i % 2 == 0:
        return rng.uniform(0.15, 0.85, n)
    ell = int(rng.integers(1, 7))
    p = np.zeros(n)
    p[:ell] = rng.uniform(0.05, 0.95, ell)
    ones = int(rng.integers(0, n - ell + 1))
    p[ell : ell + ones] = 1.0
    return p


def _tv_setup(cfg):
    n = int(cfg.get("n", 40))
    k = int(cfg.get("k_override", 2))
    lc = TvLearnerConfig(
        float(cfg.get("epsilon", 0.5)),
        tau=cfg.tau,
        k_override=k,
        delta_threshold=cfg.get("delta_threshold"),
        h_threshold=cfg.get("h_threshold"),
    )
    m = int(cfg.get("samples", lc.sample_size()))
    cover = build_cover(lc.cover_config(n))
    return {"n": n, "cfg": lc, "m": m, "cover": cover, "slack": float(cfg.get("slack", 0.15))}


def _tv_trial(cfg, ctx, i):
    from ._backend import kernels

    n, cover = ctx["n"], ctx["cover"]
    truth = pbd_pmf(_tv_target(_rng(cfg.base_seed, TARGET, i), n, i))
    tvs = kernels.tv_to_ref(cover.pmfs, truth.mass)
    bound = float(tvs.min()) + ctx["slack"]
    seed = substream(cfg.base_seed, SAMPLING, i)
    s = SampleSet(sample_from_pmf(truth, seed, ctx["m"]), n)
    try:
        h = learn_tv(s, n, ctx["cfg"], cover=cover)
    except NoAcceptingElement:
        return TrialRow(i, seed, None, bound, "none", ctx["m"], 0, False)
    err = float(tvs[h.index])
    return TrialRow(i, seed, err, bound, h.form, ctx["m"], 0, err <= bound)


def _kolmogorov_setup(cfg):
    n = int(cfg.get("n", 40))
    k = int(cfg.get("k_override", 2))
    eps = float(cfg.get("epsilon", 0.2))
    m = int(cfg.get("samples", kolmogorov_sample_size(eps, float(cfg.get("delta", 0.1)))))
    cover = build_cover(CoverConfig(eps / 8.0, n, k=k))
    return {"n": n, "eps": eps, "m": m, "cover": cover, "k": k}


def _kolmogorov_trial(cfg, ctx, i):
    n, eps, cover = ctx["n"], ctx["eps"], ctx["cover"]
    truth = pbd_pmf(_tv_target(_rng(cfg.base_seed, TARGET, i), n, i))
    seed = substream(cfg.base_seed, SAMPLING, i)
    s = SampleSet(sample_from_pmf(truth, seed, ctx["m"]), n)
    bound = 0.75 * eps + 0.25 * eps
    try:
        h = learn_kolmogorov(s, n, eps, k_override=ctx["k"], cover=cover)
    except NoAcceptingElement:
        return TrialRow(i, seed, None, bound, "none", ctx["m"], 0, False)
    y = cover.pmf(h.index)
    err = kolmogorov_distance(y, truth)
    replay = float(np.abs(np.cumsum(y.mass) - empirical_cdf(s).cum).max())
    bad = int(replay > eps / 2.0)
    return TrialRow(i, seed, err, bound, h.form, ctx["m"], bad, err <= bound and not bad)


def _unimodal_setup(cfg):
    n = int(cfg.get("n", 1000))
    eps = float(cfg.get("epsilon", 0.2))
    which = cfg.get("target", "binomial")
    if which == "binomial":
        truth = binomial_pmf(n, float(cfg.get("q", 0.5)))
    elif which == "skewed":
        # one fixed skewed target per base seed
        truth = pbd_pmf(_rng(cfg.base_seed, TARGET, 0).beta(0.3, 3.0, n))
    else:
        raise ValueError(f"unknown unimodal target {which!r}")
    m = int(cfg.get("samples", unimodal_sample_size(n, eps)))
    return {"n": n, "eps": eps, "truth": truth, "m": m, "draws": int(cfg.get("draws", 2000))}


def _unimodal_trial(cfg, ctx, i):
    n, eps = ctx["n"], ctx["eps"]
    seed = substream(cfg.base_seed, SAMPLING, i)
    s = SampleSet(sample_from_pmf(ctx["truth"], seed, ctx["m"]), n)
    h = learn_unimodal(s, n, eps)
    err = tv_distance(h.pmf(), ctx["truth"])
    bad = int(len(h) > interval_count_bound(n, eps))
    if ctx["draws"]:
        _, bits = histogram_samples(h, substream(cfg.base_seed, DECOY, i), ctx["draws"])
        bad += int(bits.max() > HistogramSampler(h).bit_bound())
    return TrialRow(i, seed, err, eps, f"histogram:{len(h)}", ctx["m"], bad, err <= eps and not bad)


def _random_heavy(rng, k, n):
    while True:
        ell = int(rng.integers(0, n + 1))
        q = int(rng.integers(1, k * n))
        if heavy_constraints_hold(k, n, ell, q):
            return HeavyBinomialForm(k, n, ell, q, int(rng.integers(0, n - ell + 1)))


def _neighbour_heavy(rng, x, k, n):
    while True:
        ell = x.ell + int(rng.integers(-3, 4))
        q = x.q_num + int(rng.integers(-k, k + 1))
        ones = x.ones + int(rng.integers(-2, 3))
        if 0 <= ell <= n and 1 <= q < k * n and 0 <= ones and ell + ones <= n and heavy_constraints_hold(k, n, ell, q):
            return HeavyBinomialForm(k, n, ell, q, ones)


def _heavy_gap_setup(cfg):
    k = int(cfg.get("k_override", 2))
    return {"k": k, "n": int(cfg.get("n", 8 * k * k)), "constant": float(cfg.get("constant", 1.0))}


def _heavy_gap_trial(cfg, ctx, i):
    k, n = ctx["k"], ctx["n"]
    rng = _rng(cfg.base_seed, TARGET, i)
    x = _random_heavy(rng, k, n)
    y = _random_heavy(rng, k, n) if i % 2 == 0 else _neighbour_heavy(rng, x, k, n)
    r = kolmogorov_tv_gap_check(x, y, n)
    err = r.residual * k
    form = "random" if i % 2 == 0 else "neighbour"
    bad = int(not r.left_holds)
    return TrialRow(i, substream(cfg.base_seed, TARGET, i), err, ctx["constant"], form, 0, bad, r.left_holds and err <= ctx["constant"])


POISSON_REGIMES = ("lambda_greater", "lambda_equal", "lambda_less")


def _poisson_gap_setup(cfg):
    return {"tol": float(cfg.get("tolerance", 1e-9)), "max_rate": float(cfg.get("max_rate", 200.0))}


def _poisson_gap_trial(cfg, ctx, i):
    rng = _rng(cfg.base_seed, TARGET, i)
    regime = POISSON_REGIMES[i % 3]
    a = float(rng.uniform(0.5, ctx["max_rate"]))
    b = float(rng.uniform(0.5, ctx["max_rate"]))
    lo, hi = min(a, b), max(a, b)
    lam, lam_hat = {"lambda_greater": (hi, lo), "lambda_equal": (a, a), "lambda_less": (lo, hi)}[regime]
    m, m_hat = int(rng.integers(0, 51)), int(rng.integers(0, 51))
    top = int(max(m + lam + 40 * math.sqrt(lam), m_hat + lam_hat + 40 * math.sqrt(lam_hat))) + 60
    y = shifted_poisson_pmf(m, lam, top).pmf
    y_hat = shifted_poisson_pmf(m_hat, lam_hat, top).pmf
    err = tv_distance(y, y_hat) - 2.0 * kolmogorov_distance(y, y_hat)
    return TrialRow(i, substream(cfg.base_seed, TARGET, i), err, ctx["tol"], regime, 0, 0, err <= ctx["tol"])


def _hard_setup(cfg):
    return {"k": int(cfg.get("k_override", 200)), "tol": float(cfg.get("tolerance", 1e-12))}


def _hard_trial(cfg, ctx, i):
    k = ctx["k"]
    seed = substream(cfg.base_seed, TARGET, i)
    inst = make_lower_bound_instance(k, seed)
    wp = weighted_pmf(inst.as_weighted())
    r = 100.0 / k
    size = len(inst.support_set)
    at_s = r * (1.0 - r) ** (k / 100.0 - 1.0)
    at_zero = (1.0 - r) ** size
    err = max(abs(wp.mass_at(j) - at_s) for j in inst.support_set)
    err = max(err, abs(wp.mass_at(0) - at_zero))
    # outputs in the upper half carry mass exactly on S
    upper = [j for j in range(k // 2 + 1, k + 1) if wp.mass_at(j) > 0]
    bad = int(upper != list(inst.support_set))
    return TrialRow(i, seed, err, ctx["tol"], f"S={list(inst.support_set)}", 0, bad, err <= ctx["tol"] and not bad)


SCENARIOS: dict = {
    "dp": (_dp_setup, _dp_trial),
    "dkw": (_dkw_setup, _dkw_trial),
    "cover": (_cover_setup, _cover_trial),
    "tournament": (_tournament_setup, _tournament_trial),
    "tv": (_tv_setup, _tv_trial),
    "kolmogorov": (_kolmogorov_setup, _kolmogorov_trial),
    "unimodal": (_unimodal_setup, _unimodal_trial),
    "heavy_gap": (_heavy_gap_setup, _heavy_gap_trial),
    "poisson_gap": (_poisson_gap_setup, _poisson_gap_trial),
    "hard_instance": (_hard_setup, _hard_trial),
}


def run_bench(cfg: ExperimentConfig, threads: int = 1, timing: bool = False) -> BenchResult:
    setup, trial = SCENARIOS[cfg.scenario]
    ctx = setup(cfg)

    def one(i: int) -> TrialRow:
        t0 = time.perf_counter()
        row = trial(cfg, ctx, i)
        if timing:
            row.time_s = time.perf_counter() - t0
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(cfg.trials)))
    else:
        rows = [one(i) for i in range(cfg.trials)]
    return BenchResult(cfg, rows)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def to_csv(result: BenchResult) -> str:
    cfg = result.config
    buf = io.StringIO()
    buf.write(f"# pbdlearn-bench v{CSV_VERSION} scenario={cfg.scenario} trials={cfg.trials} base_seed={cfg.base_seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in result.rows:
        w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    total = sum(r.time_s for r in result.rows) if all(r.time_s is not None for r in result.rows) else None
    w.writerow(
        [
            "summary",
            cfg.base_seed,
            _fmt(result.max_error),
            "",
            f"successes={result.successes}/{len(result.rows)}",
            sum(r.samples for r in result.rows),
            result.violations,
            _fmt(result.success_fraction),
            _fmt(total),
        ]
    )
    return buf.getvalue()
