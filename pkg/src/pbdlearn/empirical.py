"""Sample sets and DKW-sized empirical CDF/PMF estimates."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .dist_core import Cdf, Pmf


class SampleFormatError(ValueError):
    """A sample file line could not be parsed or is out of range."""


def ceil_guarded(x: float, rel: float = 1e-9) -> int:
    """ceil(x), treating values within ``rel`` of an integer as that integer.

    Sizing formulas like 576 / eps**2 land an ulp above an exact integer in
    floating point; plain ceil would then overshoot by one.
    """
    nearest = round(x)
    if abs(x - nearest) <= rel * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


def _check_unit(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly between 0 and 1, got {value!r}")


def dkw_sample_size(epsilon: float, delta: float) -> int:
    """ceil(max{576, (9/8) ln(1/delta)} / epsilon^2)."""
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    return ceil_guarded(max(576.0, 9.0 / 8.0 * math.log(1.0 / delta)) / epsilon**2)


def classical_dkw_sample_size(epsilon: float, delta: float) -> int:
    """ceil(ln(2/delta) / (2 epsilon^2)), the two-sided DKW bound with Massart's constant."""
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    return ceil_guarded(math.log(2.0 / delta) / (2.0 * epsilon**2))


def kolmogorov_sample_size(epsilon: float, delta: float) -> int:
    """ceil(max{9216, 18 ln(1/delta)} / epsilon^2): DKW at accuracy epsilon/4."""
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    return ceil_guarded(max(9216.0, 18.0 * math.log(1.0 / delta)) / epsilon**2)


@dataclass(frozen=True, eq=False)
class SampleSet:
    values: np.ndarray
    domain_max: int
    source_seed: Optional[int] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.int64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("a SampleSet needs at least one value")
        if values.min() < 0 or values.max() > self.domain_max:
            raise ValueError(f"sample values must lie in 0..{self.domain_max}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> int:
        return int(self.values.size)

    def counts(self) -> np.ndarray:
        return np.bincount(self.values, minlength=self.domain_max + 1)


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """F_hat(l) = #{i : Z_i <= l} / k, kept alongside the integer counts."""

    counts: np.ndarray
    sample_count: int
    accuracy_budget: Optional[float] = None

    @property
    def cum(self) -> np.ndarray:
        return np.cumsum(self.counts) / self.sample_count

    @property
    def domain_max(self) -> int:
        return int(self.counts.size - 1)

    def as_cdf(self) -> Cdf:
        return Cdf(self.cum)


def empirical_cdf(s: SampleSet, accuracy_budget: Optional[float] = None) -> EmpiricalCdf:
    counts = s.counts()
    counts.setflags(write=False)
    return EmpiricalCdf(counts, s.k, accuracy_budget)


def empirical_pmf(e: EmpiricalCdf) -> Pmf:
    """f_hat(0) = F_hat(0), f_hat(z) = F_hat(z) - F_hat(z - 1), from the exact counts."""
    return Pmf(e.counts / e.sample_count)


_UINT = re.compile(r"[0-9]+")


def parse_samples(lines: Iterable[str], domain_max: int, source_seed: Optional[int] = None) -> SampleSet:
    """Parse newline-delimited unsigned decimal integers.

    Lines starting with ``#`` are comments.  Anything else that is not a
    plain unsigned integer, or a value above ``domain_max``, is rejected
    with its 1-based line number.
    """
    values = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if line.startswith("#"):
            continue
        if not _UINT.fullmatch(line):
            raise SampleFormatError(f"line {lineno}: not an unsigned decimal integer: {line!r}")
        v = int(line)
        if v > domain_max:
            raise SampleFormatError(f"line {lineno}: value {v} exceeds domain_max {domain_max}")
        values.append(v)
    if not values:
        raise SampleFormatError("no samples found")
    return SampleSet(np.array(values, dtype=np.int64), domain_max, source_seed)


def read_samples(path, domain_max: int) -> SampleSet:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return parse_samples(lines, domain_max)


def write_samples(path, values: Iterable[int]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(f"{int(v)}\n" for v in values))
