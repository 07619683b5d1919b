"""Pairwise competitions and the never-loser tournament over a finite candidate list.

A competition between PMFs A and B on a shared sample splits the domain into
W1 = {w : A(w) >= B(w)} and its complement and compares the fraction of
samples landing in W1 against A(W1) and B(W1).  The tournament returns the
lowest-index candidate that loses no competition.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import kernels
from .dist_core import Pmf, ProbVector
from .empirical import SampleSet, ceil_guarded

DEFAULT_GRID_CAP = 1_000_000
# opponents tried against every live candidate before full verification
SCREEN_ROUNDS = 16


class Outcome(enum.Enum):
    WIN_FIRST = "first"
    WIN_SECOND = "second"
    DRAW = "draw"

    def mirrored(self) -> "Outcome":
        if self is Outcome.WIN_FIRST:
            return Outcome.WIN_SECOND
        if self is Outcome.WIN_SECOND:
            return Outcome.WIN_FIRST
        return self


class TournamentFailure(RuntimeError):
    """No candidate avoided losing every competition."""


@dataclass(frozen=True)
class CompetitionResult:
    """Outcome in the caller's labels plus the statistics it was decided on.

    ``p1``, ``q1`` and ``t_stat`` refer to the W1 of the canonical
    orientation; ``first_owns_w1`` says whether that W1 is {a >= b}
    (True) or {b >= a} (False).
    """

    outcome: Outcome
    p1: float
    q1: float
    t_stat: float
    first_owns_w1: bool


def decide(p1: float, q1: float, t: float, delta: float) -> Outcome:
    """The decision table, for the orientation that owns W1."""
    if p1 - q1 <= 5 * delta:
        return Outcome.DRAW
    if t > p1 - 1.5 * delta:
        return Outcome.WIN_FIRST
    if t < q1 + 1.5 * delta:
        return Outcome.WIN_SECOND
    return Outcome.DRAW


def _common_domain(pmfs: Sequence[Pmf], samples: SampleSet) -> int:
    d = max(p.domain_max for p in pmfs)
    if samples.domain_max > d:
        top = int(samples.values.max())
        if top > d:
            raise ValueError(f"sample value {top} lies outside the candidates' domain 0..{d}")
    return d


def _sample_counts(samples: SampleSet, d: int) -> np.ndarray:
    return np.bincount(samples.values, minlength=d + 1)[: d + 1].astype(np.float64)


def competition(a: Pmf, b: Pmf, samples: SampleSet, delta: float) -> CompetitionResult:
    """Run one competition on a fixed sample.

    Ties go to W1.  Which of the two owns W1 is decided by the first point
    where their masses differ (the one with more mass there), so swapping the
    arguments mirrors the outcome exactly, even when samples land on points
    where the masses tie.
    """
    d = _common_domain([a, b], samples)
    counts = _sample_counts(samples, d)
    a_first, p1, q1, t = kernels.competition_detail(a.padded(d), b.padded(d), counts, samples.k)
    outcome = decide(p1, q1, t, delta)
    if not a_first:
        outcome = outcome.mirrored()
    return CompetitionResult(outcome, p1, q1, t, a_first)


def tournament_sample_size(delta: float, n_candidates: int) -> int:
    """ceil((8 / delta^2) ln(40 N)): per-competition failure e^{-m delta^2/8} <= 1/(40N)."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if n_candidates < 1:
        raise ValueError("need at least one candidate")
    return ceil_guarded(8.0 / delta**2 * math.log(40.0 * n_candidates))


def _as_matrix(candidates) -> np.ndarray:
    if isinstance(candidates, np.ndarray):
        return np.ascontiguousarray(candidates, dtype=np.float64)
    d = max(p.domain_max for p in candidates)
    return np.array([p.padded(d) for p in candidates])


def tournament(candidates, samples: SampleSet, delta: float) -> int:
    """Index of the lowest-index candidate that never loses a competition.

    ``candidates`` is a sequence of Pmf or an (N, D) matrix of PMF rows.
    All competitions share ``samples``.  Raises TournamentFailure when every
    candidate loses somewhere.

    The result is exactly the never-loser scan over the full N x N outcome
    matrix, but candidates are first screened against the opponents closest
    to the empirical distribution, which knocks most of them out cheaply;
    only survivors are checked against the whole list.
    """
    P = _as_matrix(candidates)
    N, D = P.shape
    if N == 0:
        raise ValueError("need at least one candidate")
    if int(samples.values.max()) >= D:
        raise ValueError(f"sample values lie outside the candidates' domain 0..{D - 1}")
    counts = _sample_counts(samples, D - 1)
    m = samples.k
    alive = np.ones(N, dtype=bool)

    order = np.argsort(kernels.tv_to_ref(P, counts / m), kind="stable")
    for opp in order[: min(N, SCREEN_ROUNDS)]:
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        res = kernels.competitions_vs(P[idx], P[opp], counts, m, delta)
        alive[idx[res < 0]] = False
        if np.any(res > 0):
            alive[opp] = False

    for i in np.flatnonzero(alive):
        res = kernels.competitions_vs(P, P[i], counts, m, delta)
        # res is from each opponent's side: a positive entry beat candidate i
        if not np.any(res > 0):
            return int(i)
    raise TournamentFailure(f"all {N} candidates lost at least one competition")


def competition_matrix(candidates, samples: SampleSet, delta: float) -> np.ndarray:
    """Full N x N outcome matrix: entry (i, j) is 1 if i beats j, -1 if j beats i, 0 draw."""
    P = _as_matrix(candidates)
    counts = _sample_counts(samples, P.shape[1] - 1)
    out = np.zeros((P.shape[0], P.shape[0]), dtype=np.int8)
    for j in range(P.shape[0]):
        out[:, j] = kernels.competitions_vs(P, P[j], counts, samples.k, delta)
    return out


def never_losers(matrix: np.ndarray) -> np.ndarray:
    return np.flatnonzero(~np.any(matrix < 0, axis=1))


def generic_grid_cover(n: int, delta: float, cap: int = DEFAULT_GRID_CAP) -> list:
    """Every ProbVector whose entries are integer multiples of delta/n in [0, 1].

    The product-grid cover: nearest grid points give total variation at most
    n * (delta/n) / 2 for the sum.  Size (floor(n/delta) + 1)^n, so only for
    toy n.
    """
    if n < 1 or not 0.0 < delta <= 1.0:
        raise ValueError("need n >= 1 and delta in (0, 1]")
    step = delta / n
    top = round(1.0 / step)
    if abs(1.0 / step - top) > 1e-9 * max(1.0, top):
        top = math.floor(1.0 / step)
    levels = [min(1.0, j * step) for j in range(top + 1)]
    size = len(levels) ** n
    if size > cap:
        raise ValueError(f"grid cover would have {size} elements, above the cap of {cap}")
    return [ProbVector(v) for v in itertools.product(levels, repeat=n)]
