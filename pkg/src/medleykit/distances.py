"""Discrete distributions and the distances used to compare them."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from numbers import Real

from .core import MedleyError

NORMALIZATION_TOLERANCE = 1e-9


class UnnormalizedInput(MedleyError, ValueError):
    pass


class EmptyCorpus(MedleyError, ValueError):
    pass


@dataclass(frozen=True)
class Histogram:
    """Ordered ``(value, mass)`` bins; values must be mutually comparable."""

    bins: tuple = ()

    def __post_init__(self):
        merged = {}
        for value, mass in self.bins:
            if mass < 0:
                raise ValueError(f"negative mass {mass} for bin {value!r}")
            merged[value] = merged.get(value, 0) + mass
        object.__setattr__(self, "bins", tuple(sorted(merged.items())))

    @classmethod
    def from_counts(cls, counts) -> "Histogram":
        return cls(tuple(dict(counts).items()))

    @classmethod
    def from_values(cls, values) -> "Histogram":
        return cls.from_counts(Counter(values))

    @property
    def total_mass(self) -> float:
        return math.fsum(m for _, m in self.bins)

    @property
    def is_normalized(self) -> bool:
        return abs(self.total_mass - 1.0) <= NORMALIZATION_TOLERANCE

    def normalized(self) -> "Histogram":
        total = self.total_mass
        if total <= 0:
            raise EmptyCorpus("cannot normalize a histogram without mass")
        return Histogram(tuple((v, m / total) for v, m in self.bins))

    def as_dict(self) -> dict:
        return dict(self.bins)

    def values(self) -> list:
        return [v for v, _ in self.bins]


def _require_normalized(*hists):
    for h in hists:
        if not h.is_normalized:
            raise UnnormalizedInput(f"histogram mass {h.total_mass} is not 1")


def wasserstein_1d(a: Histogram, b: Histogram) -> float:
    """Earth mover's distance between two normalized scalar histograms.

    Computed as the area between the two CDFs over the merged support.
    """
    _require_normalized(a, b)
    ma, mb = a.as_dict(), b.as_dict()
    support = sorted(set(ma) | set(mb))
    if any(not isinstance(x, Real) for x in support):
        raise TypeError("wasserstein_1d needs real-valued bins")
    terms = []
    cdf_a = cdf_b = 0.0
    for x, nxt in zip(support, support[1:]):
        cdf_a += ma.get(x, 0.0)
        cdf_b += mb.get(x, 0.0)
        terms.append(abs(cdf_a - cdf_b) * (nxt - x))
    return math.fsum(terms)


def total_variation(a: Histogram, b: Histogram) -> float:
    """Half the L1 distance between two normalized histograms."""
    _require_normalized(a, b)
    ma, mb = a.as_dict(), b.as_dict()
    return 0.5 * math.fsum(abs(ma.get(x, 0.0) - mb.get(x, 0.0)) for x in set(ma) | set(mb))
