"""Exact discrete distributions on {0, ..., n}, distances, and reference sampling.

All distributions are dense float64 arrays.  Nothing in this module
renormalizes silently: constructors validate total mass and operations that
truncate a distribution report the mass they dropped.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special, stats

from ._backend import kernels

MASS_TOL = 1e-9
UNIMODAL_TOL = 1e-12
BRUTE_FORCE_MAX_N = 25
SAMPLE_BLOCK = 4096


class SizeLimitError(ValueError):
    """An exhaustive computation was asked to run beyond its size guard."""


class TailMassError(ValueError):
    """Truncating a distribution to the requested domain loses too much mass."""


def _frozen(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProbVector:
    """Bernoulli means p_1..p_n of the variables being summed."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.ndim != 1 or probs.size < 1:
            raise ValueError("ProbVector needs at least one entry")
        if not np.all((probs >= 0.0) & (probs <= 1.0)):
            raise ValueError("every Bernoulli mean must lie in [0, 1]")
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return int(self.probs.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return isinstance(other, ProbVector) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True, eq=False)
class Pmf:
    """Dense probability mass function on {0, ..., domain_max}."""

    mass: np.ndarray

    def __post_init__(self):
        mass = _frozen(self.mass)
        if mass.ndim != 1 or mass.size < 1:
            raise ValueError("Pmf mass must be a nonempty 1-d sequence")
        if np.any(mass < 0.0):
            raise ValueError("Pmf entries must be nonnegative")
        total = float(mass.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"Pmf mass sums to {total!r}, not 1 within {MASS_TOL}")
        object.__setattr__(self, "mass", mass)

    @property
    def domain_max(self) -> int:
        return int(self.mass.size - 1)

    def padded(self, domain_max: int) -> np.ndarray:
        if domain_max < self.domain_max:
            raise ValueError("cannot pad to a smaller domain")
        out = np.zeros(domain_max + 1)
        out[: self.mass.size] = self.mass
        return out

    def shifted(self, offset: int, domain_max: int) -> "Pmf":
        """This PMF translated right by ``offset`` on {0, ..., domain_max}."""
        if offset < 0 or offset + self.domain_max > domain_max:
            raise ValueError(
                f"shift by {offset} of a PMF on 0..{self.domain_max} overflows 0..{domain_max}"
            )
        out = np.zeros(domain_max + 1)
        out[offset : offset + self.mass.size] = self.mass
        return Pmf(out)

    def cdf(self) -> "Cdf":
        return pmf_to_cdf(self)

    def to_json(self) -> dict:
        return {"domain_max": self.domain_max, "mass": self.mass.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "Pmf":
        mass = doc["mass"]
        if len(mass) != int(doc["domain_max"]) + 1:
            raise ValueError("PMF dump: len(mass) != domain_max + 1")
        return cls(mass)

    def __eq__(self, other):
        return isinstance(other, Pmf) and np.array_equal(self.mass, other.mass)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Cdf:
    """Dense cumulative distribution on {0, ..., domain_max}."""

    cum: np.ndarray

    def __post_init__(self):
        cum = _frozen(self.cum)
        if cum.ndim != 1 or cum.size < 1:
            raise ValueError("Cdf must be a nonempty 1-d sequence")
        if cum[0] < 0.0 or np.any(np.diff(cum) < 0.0):
            raise ValueError("Cdf must be nonnegative and nondecreasing")
        if abs(cum[-1] - 1.0) > MASS_TOL:
            raise ValueError(f"Cdf ends at {cum[-1]!r}, not 1 within {MASS_TOL}")
        object.__setattr__(self, "cum", cum)

    @property
    def domain_max(self) -> int:
        return int(self.cum.size - 1)

    def padded(self, domain_max: int) -> np.ndarray:
        if domain_max < self.domain_max:
            raise ValueError("cannot pad to a smaller domain")
        out = np.ones(domain_max + 1)
        out[: self.cum.size] = self.cum
        return out


def pmf_to_cdf(pmf: Pmf) -> Cdf:
    return Cdf(np.cumsum(pmf.mass))


def cdf_to_pmf(cdf: Cdf) -> Pmf:
    return Pmf(np.diff(cdf.cum, prepend=0.0))


@dataclass(frozen=True)
class TranslatedPoissonParams:
    """TP(mu, sigma2): floor(mu - sigma2) + Poisson(sigma2 + frac(mu - sigma2))."""

    mu: float
    sigma2: float

    def __post_init__(self):
        if self.mu < 0 or self.sigma2 <= 0:
            raise ValueError("need mu >= 0 and sigma2 > 0")
        if self.rate <= 0:
            raise ValueError("sigma2 + frac(mu - sigma2) must be positive")

    def _split(self):
        d = self.mu - self.sigma2
        nearest = round(d)
        # mu - sigma2 formed in floating point can land an ulp off an integer
        if abs(d - nearest) <= 1e-12 * max(1.0, abs(d)):
            return int(nearest), 0.0
        shift = math.floor(d)
        return shift, d - shift

    @property
    def shift(self) -> int:
        return self._split()[0]

    @property
    def rate(self) -> float:
        return self.sigma2 + self._split()[1]


@dataclass(frozen=True)
class TruncatedPmf:
    """A PMF restricted to a finite domain together with the mass it dropped."""

    pmf: Pmf
    lost_mass: float
    lost_below_zero: float

    @property
    def clipped_below(self) -> bool:
        return self.lost_below_zero > 0.0


def pbd_pmf(p: ProbVector | Sequence[float]) -> Pmf:
    """Exact PMF of sum_i Bernoulli(p_i) by the standard O(n^2) recurrence."""
    if not isinstance(p, ProbVector):
        p = ProbVector(p)
    return Pmf(kernels.pbd_dp(p.probs))


def brute_force_pbd_pmf(p: ProbVector | Sequence[float]) -> Pmf:
    """Sum prod p_i^x_i (1 - p_i)^(1 - x_i) over all of {0,1}^n, grouped by sum.

    Exponential; this is the independent oracle for :func:`pbd_pmf`.
    """
    if not isinstance(p, ProbVector):
        p = ProbVector(p)
    n = p.n
    if n > BRUTE_FORCE_MAX_N:
        raise SizeLimitError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got n={n}")
    mass = np.zeros(n + 1)
    probs = p.probs
    # enumerate in chunks of the low bits to keep memory bounded
    low = min(n, 16)
    low_bits = (np.arange(1 << low)[:, None] >> np.arange(low)[None, :]) & 1
    low_w = np.prod(np.where(low_bits == 1, probs[:low], 1.0 - probs[:low]), axis=1)
    low_s = low_bits.sum(axis=1)
    for high in itertools.product((0, 1), repeat=n - low):
        w = 1.0
        for bit, q in zip(high, probs[low:]):
            w *= q if bit else 1.0 - q
        np.add.at(mass, low_s + sum(high), low_w * w)
    return Pmf(mass)


def tv_distance(a: Pmf, b: Pmf) -> float:
    """Half the L1 distance, the shorter PMF padded with zeros."""
    d = max(a.domain_max, b.domain_max)
    return float(min(1.0, 0.5 * np.abs(a.padded(d) - b.padded(d)).sum()))


def _as_cdf(x: Cdf | Pmf) -> Cdf:
    return x if isinstance(x, Cdf) else pmf_to_cdf(x)


def kolmogorov_distance(a: Cdf | Pmf, b: Cdf | Pmf) -> float:
    """Largest absolute gap between two CDFs (PMFs are accepted and converted)."""
    a, b = _as_cdf(a), _as_cdf(b)
    d = max(a.domain_max, b.domain_max)
    return float(np.abs(a.padded(d) - b.padded(d)).max())


def binomial_pmf(m: int, q: float) -> Pmf:
    """Binomial(m, q) on {0, ..., m}, terms accumulated in log space."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    if m < 0:
        raise ValueError("m must be nonnegative")
    if q == 0.0 or q == 1.0 or m == 0:
        mass = np.zeros(m + 1)
        mass[m if q == 1.0 else 0] = 1.0
        return Pmf(mass)
    j = np.arange(m + 1)
    logc = special.gammaln(m + 1) - special.gammaln(j + 1) - special.gammaln(m - j + 1)
    return Pmf(np.exp(logc + j * math.log(q) + (m - j) * math.log1p(-q)))


def _poisson_terms(lam: float, kmax: int) -> np.ndarray:
    k = np.arange(kmax + 1)
    return np.exp(k * math.log(lam) - lam - special.gammaln(k + 1))


def shifted_poisson_pmf(shift: int, lam: float, domain_max: int, tol: float = MASS_TOL) -> TruncatedPmf:
    """PMF of shift + Poisson(lam) restricted to {0, ..., domain_max}.

    Mass falling outside the domain (above ``domain_max`` or, for a negative
    shift, below 0) is reported; more than ``tol`` of it is an error.
    """
    if lam <= 0:
        raise ValueError("Poisson rate must be positive")
    top = domain_max - shift
    mass = np.zeros(domain_max + 1)
    below = 0.0
    if top >= 0:
        terms = _poisson_terms(lam, top)
        start = max(0, -shift)
        mass[shift + start : shift + top + 1] = terms[start:]
        if start > 0:
            below = float(stats.poisson.cdf(start - 1, lam))
        upper = float(stats.poisson.sf(top, lam))
    else:
        upper = 1.0
    lost = upper + below
    if lost > tol:
        raise TailMassError(
            f"shift={shift}, rate={lam}: {lost:.3e} of the mass lies outside 0..{domain_max}"
        )
    # Pmf allows a 1e-9 deficit; it is reported here, never renormalized away
    return TruncatedPmf(Pmf(mass), lost, below)


def translated_poisson_pmf(tp: TranslatedPoissonParams, domain_max: int) -> TruncatedPmf:
    return shifted_poisson_pmf(tp.shift, tp.rate, domain_max)


def is_unimodal(pmf: Pmf, tol: float = UNIMODAL_TOL) -> bool:
    """True when the mass rises (weakly) to some mode and then falls (weakly)."""
    steps = np.diff(pmf.mass)
    falling = np.flatnonzero(steps < -tol)
    if falling.size == 0:
        return True
    return not np.any(steps[falling[0]:] > tol)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def sample_from_pmf(pmf: Pmf, seed: int, count: int) -> np.ndarray:
    """``count`` i.i.d. draws from ``pmf`` by inverse-CDF lookup.

    Draws are produced in fixed blocks of SAMPLE_BLOCK, block b using its own
    child seed (seed, b), so the output depends only on (seed, count).
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    cum = np.cumsum(pmf.mass)
    out = np.empty(count, dtype=np.int64)
    for block, start in enumerate(range(0, count, SAMPLE_BLOCK)):
        size = min(SAMPLE_BLOCK, count - start)
        u = _block_rng(seed, block).random(size) * cum[-1]
        out[start : start + size] = np.searchsorted(cum, u, side="right")
    np.minimum(out, pmf.domain_max, out=out)
    return out


def sample_pbd(p: ProbVector | Sequence[float], seed: int, count: int) -> np.ndarray:
    """I.i.d. draws of sum_i Bernoulli(p_i), deterministic given ``seed``."""
    return sample_from_pmf(pbd_pmf(p), seed, count)


def load_distribution_spec(doc: dict):
    """Parse a distribution spec document.

    ``{"type": "pbd", "probs": [...]}`` gives a :class:`ProbVector`;
    ``{"type": "weighted", ...}`` is delegated to :mod:`pbdlearn.weighted`.
    """
    kind = doc.get("type")
    if kind == "pbd":
        return ProbVector(doc["probs"])
    if kind == "weighted":
        from .weighted import WeightedPbd

        return WeightedPbd.from_json(doc)
    raise ValueError(f"unknown distribution type {kind!r}")


def dump_pmf(pmf: Pmf, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pmf.to_json(), fh)
