"""Exact combinatorics of random within-group identifier allocation.

When several records share the same key (e.g. an identical name), the only
unbiased resolution strategy is to assign identifiers by a uniform random
permutation within each group.  The number of correctly assigned records in a
group of size n is then the number of fixed points of a uniform random
permutation, whose distribution is governed by derangement counts.  This
module computes that distribution exactly (rational arithmetic), together
with expectation bounds, the all-correct probability, the entropy of the
group-size distribution, Hoeffding tail bounds on the proportion correct,
and a Monte Carlo sampler that serves as an independent check on all of the
closed forms.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .seeding import substream

__all__ = [
    "NameHistogram",
    "MatchDistribution",
    "subfactorial",
    "match_pmf",
    "expected_matches_exact",
    "expected_matches_bounds",
    "log_prob_all_correct",
    "prob_all_correct_exact",
    "name_entropy",
    "hoeffding_tail",
    "simulate_random_allocation",
]


@dataclass(frozen=True)
class NameHistogram:
    """Group sizes of records sharing a key, stored as {size: number of groups}.

    The compact representation matters: joining two realistic name-frequency
    tables produces millions of singleton groups, and every quantity computed
    here depends on the sizes only through their multiplicities.
    """

    size_counts: Mapping[int, int]

    def __post_init__(self) -> None:
        if not self.size_counts:
            raise ValueError("histogram must contain at least one group")
        for size, count in self.size_counts.items():
            if size < 1:
                raise ValueError(f"group size must be >= 1, got {size}")
            if count < 1:
                raise ValueError(f"group multiplicity must be >= 1, got {count}")
        object.__setattr__(self, "size_counts", dict(sorted(self.size_counts.items())))

    @classmethod
    def from_sizes(cls, sizes: Iterable[int]) -> "NameHistogram":
        return cls(Counter(int(s) for s in sizes))

    @property
    def n_records(self) -> int:
        """Total number of records N."""
        return sum(size * count for size, count in self.size_counts.items())

    @property
    def n_groups(self) -> int:
        """Number of distinct keys M."""
        return sum(self.size_counts.values())

    @property
    def sum_sq_sizes(self) -> int:
        return sum(size * size * count for size, count in self.size_counts.items())

    def group_sizes(self) -> list[int]:
        """Expanded size list; only sensible for small histograms."""
        out: list[int] = []
        for size, count in self.size_counts.items():
            out.extend([size] * count)
        return out


@dataclass(frozen=True)
class MatchDistribution:
    """Exact pmf of the number of correctly assigned records in one group."""

    group_size: int
    pmf: Mapping[int, Fraction]

    def __post_init__(self) -> None:
        total = sum(self.pmf.values())
        if total != 1:
            raise ValueError(f"pmf sums to {total}, expected exactly 1")

    def probability(self, n_correct: int) -> Fraction:
        return self.pmf.get(n_correct, Fraction(0))

    def as_floats(self) -> dict[int, float]:
        return {z: float(p) for z, p in self.pmf.items()}

    def mean(self) -> Fraction:
        return sum((z * p for z, p in self.pmf.items()), Fraction(0))


def subfactorial(n: int) -> int:
    """Number of permutations of n elements with no fixed point (!n).

    Computed by the exact recurrence !n = (n-1)(!(n-1) + !(n-2)) in arbitrary
    precision; !0 = 1 and !1 = 0.  For n >= 1 the result equals round(n!/e).
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 1
    prev2, prev1 = 1, 0  # !0, !1
    if n == 1:
        return prev1
    for m in range(2, n + 1):
        prev2, prev1 = prev1, (m - 1) * (prev1 + prev2)
    return prev1


def match_pmf(group_size: int) -> MatchDistribution:
    """Exact distribution of the fixed-point count of a uniform permutation.

    pr(z) = C(n, z) * !(n - z) / n!  for z in 0..n.  Note pr(n - 1) = 0: a
    permutation cannot fix exactly n - 1 points.
    """
    n = int(group_size)
    if n < 1:
        raise ValueError("group_size must be >= 1")
    n_fact = math.factorial(n)
    pmf = {
        z: Fraction(math.comb(n, z) * subfactorial(n - z), n_fact)
        for z in range(n + 1)
    }
    return MatchDistribution(group_size=n, pmf=pmf)


def expected_matches_exact(group_size: int) -> Fraction:
    """Exact expected number of fixed points, computed from the pmf.

    The value is computed rather than assumed; callers that rely on it being
    1 should assert so.
    """
    return match_pmf(group_size).mean()


def expected_matches_bounds(group_size: int) -> tuple[float, float]:
    """Closed-form lower and upper bounds on the expected fixed-point count.

    lower = Q(n, 1), the regularized upper incomplete gamma function at
    integer n, evaluated exactly as exp(-1) * sum_{k<n} 1/k!;
    upper = lower + 2^(n-1) / (n-1)!.
    """
    n = int(group_size)
    if n < 1:
        raise ValueError("group_size must be >= 1")
    partial = sum((Fraction(1, math.factorial(k)) for k in range(n)), Fraction(0))
    lower = float(partial) * math.exp(-1.0)
    upper = lower + float(Fraction(2 ** (n - 1), math.factorial(n - 1)))
    return lower, upper


def log_prob_all_correct(hist: NameHistogram) -> float:
    """Natural log of the probability that every record is assigned correctly.

    Within each group exactly one of n! permutations is right, so the log
    probability is -sum over groups of log(n!), evaluated via log-gamma.
    """
    return -sum(
        count * math.lgamma(size + 1) for size, count in hist.size_counts.items()
    )


def prob_all_correct_exact(hist: NameHistogram) -> Fraction:
    """Exact rational all-correct probability; intended for small histograms."""
    prob = Fraction(1)
    for size, count in hist.size_counts.items():
        prob /= Fraction(math.factorial(size)) ** count
    return prob


def name_entropy(hist: NameHistogram) -> float:
    """Entropy (nats) of the key distribution induced by the group sizes."""
    n = hist.n_records
    return -sum(
        count * (size / n) * math.log(size / n)
        for size, count in hist.size_counts.items()
    )


def hoeffding_tail(hist: NameHistogram, t: float) -> float:
    """Hoeffding bound on pr(|S - M/N| > t) for the proportion correct S.

    The group contributions are independent and bounded in [0, size/N], which
    gives the standard two-sided form 2*exp(-2 N^2 t^2 / sum(size^2)).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    n = hist.n_records
    exponent = -2.0 * n * n * t * t / hist.sum_sq_sizes
    return 2.0 * math.exp(exponent)


def simulate_random_allocation(
    hist: NameHistogram, replicates: int, seed: int
) -> np.ndarray:
    """Monte Carlo draws of the proportion of correct assignments S.

    Each replicate draws an independent uniform permutation within every
    group and counts fixed points.  Returns an array of length `replicates`
    with values z/N.  This is the independent oracle for match_pmf and for
    hoeffding_tail.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    rng = substream(seed)
    n = hist.n_records
    correct = np.zeros(replicates, dtype=np.int64)
    for size, count in hist.size_counts.items():
        if size == 1:
            correct += count
            continue
        # One permutation per (replicate, group) pair of this size.
        base = np.tile(np.arange(size), (replicates * count, 1))
        perms = rng.permuted(base, axis=1)
        fixed = (perms == np.arange(size)).sum(axis=1)
        correct += fixed.reshape(replicates, count).sum(axis=1)
    return correct / n
