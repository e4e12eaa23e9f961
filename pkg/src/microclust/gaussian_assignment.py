"""Maximum-likelihood assignment for known spherical Gaussian mixtures.

Covers the one-dimensional equally spaced case (exact per-component success
probability, concentration bound and zero-correct probability), the
p-dimensional lattice case with chi-square bounds, and seeded simulation
drivers that verify the closed forms empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .seeding import substream

__all__ = [
    "EquallySpacedMixture1D",
    "SphericalMixture",
    "AssignmentSimConfig",
    "AssignmentSimResult",
    "DimensionSimConfig",
    "DimensionSimResult",
    "Remark2Bounds",
    "ChiSquareSandwich",
    "sigma_from_scale",
    "ml_assign",
    "ml_assign_grid",
    "correct_prob_1d",
    "concentration_and_zero_correct",
    "build_lattice_means",
    "correct_prob_bounds_p",
    "run_assignment_sim",
    "run_dimension_sim",
]

SCALE_CONVENTIONS = ("sigma", "sigma-squared")


def sigma_from_scale(c: float, n: int, convention: str = "sigma") -> float:
    """Noise level at strength c for an n-component grid.

    "sigma" reads c as sigma = c/n (the convention consistent with the
    narrated breakpoints: at c = 0.25, half the spacing equals two standard
    deviations); "sigma-squared" reads it as sigma^2 = c/n.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if convention == "sigma":
        return c / n
    if convention == "sigma-squared":
        return math.sqrt(c / n)
    raise ValueError(f"unknown scale convention: {convention!r}")


@dataclass(frozen=True)
class EquallySpacedMixture1D:
    """Equal-weight 1D mixture with means origin + spacing*(k+1), k = 0..N-1.

    spacing = range_width / n_components, so with the defaults the means are
    1/N, 2/N, ..., 1: the unit-interval grid.
    """

    n_components: int
    sigma: float
    range_width: float = 1.0
    origin: float = 0.0

    def __post_init__(self) -> None:
        if self.n_components < 1:
            raise ValueError("need at least one component")
        if self.sigma <= 0 or self.range_width <= 0:
            raise ValueError("sigma and range_width must be positive")

    @property
    def spacing(self) -> float:
        return self.range_width / self.n_components

    def means(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(1, self.n_components + 1)


@dataclass(frozen=True)
class SphericalMixture:
    """Equal-weight mixture in R^p with common spherical covariance."""

    means: np.ndarray  # shape (N, p)
    sigma: float
    separation: float  # minimum pairwise distance between means

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.means.ndim != 2 or len(self.means) < 1:
            raise ValueError("means must be a non-empty (N, p) array")
        if len(self.means) > 1 and self.separation <= 0:
            raise ValueError("distinct means require positive separation")


def ml_assign(y: np.ndarray | float, means: np.ndarray, sigma: float = 1.0) -> int:
    """Index of the mixture component maximizing the likelihood of y.

    With a common spherical covariance this is the nearest mean in Euclidean
    distance; ties resolve to the lowest index.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    means = np.asarray(means, dtype=float)
    if means.size == 0:
        raise ValueError("means must be non-empty")
    y_arr = np.asarray(y, dtype=float)
    if means.ndim == 1:
        d2 = (means - y_arr) ** 2
    else:
        d2 = ((means - y_arr[None, :]) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def ml_assign_grid(y: np.ndarray | float, mix: EquallySpacedMixture1D) -> np.ndarray:
    """Vectorized nearest-mean assignment on an equally spaced 1D grid.

    Rounds (y - mu_0)/spacing and clamps to the valid index range.  Exact
    half-spacing offsets resolve to the lower index, matching the first-hit
    behaviour of an argmin scan.
    """
    means = mix.means()
    x = (np.asarray(y, dtype=float) - means[0]) / mix.spacing
    idx = np.ceil(x - 0.5)
    return np.clip(idx, 0, mix.n_components - 1).astype(np.int64)


def correct_prob_1d(mix: EquallySpacedMixture1D, edge_exact: bool = False) -> float:
    """Probability that a draw from a component is assigned back to it.

    The interior expression 2*Phi(spacing/(2 sigma)) - 1 is exact for every
    component except the two extremes, whose one-sided acceptance region
    gives Phi(spacing/(2 sigma)).  With edge_exact the equal-weight average
    over components is returned; otherwise the interior expression is used
    for all components (negligible for large N).
    """
    x = mix.spacing / (2.0 * mix.sigma)
    interior = 2.0 * stats.norm.cdf(x) - 1.0
    if not edge_exact:
        return float(interior)
    n = mix.n_components
    if n == 1:
        return 1.0
    edge = stats.norm.cdf(x)
    return float(((n - 2) * interior + 2 * edge) / n)


@dataclass(frozen=True)
class Remark2Bounds:
    concentration_bound: float  # on pr(|X/N - interior expression| > t)
    zero_correct_limit: float  # large-N limit of the zero-correct probability
    zero_correct_finite: float  # [2 - 2*Phi(spacing/(2 sigma))]^N at this N


def concentration_and_zero_correct(
    mix: EquallySpacedMixture1D, t: float
) -> Remark2Bounds:
    """Concentration bound and zero-correct probabilities for the 1D grid.

    concentration_bound = 2*exp(-2 t^2 N); the zero-correct values use the
    interior success probability for all components, i.e. the approximation
    X ~ Binomial(N, 2*Phi(spacing/(2 sigma)) - 1), whose N -> infinity limit
    at fixed range_width and sigma is exp(-range_width/(sqrt(2 pi) sigma)).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    n = mix.n_components
    bound = 2.0 * math.exp(-2.0 * t * t * n)
    x = mix.spacing / (2.0 * mix.sigma)
    finite = float((2.0 - 2.0 * stats.norm.cdf(x)) ** n)
    limit = math.exp(-mix.range_width / (math.sqrt(2.0 * math.pi) * mix.sigma))
    return Remark2Bounds(
        concentration_bound=bound,
        zero_correct_limit=limit,
        zero_correct_finite=finite,
    )


def _lattice_side(n: int, dim: int) -> int:
    """Smallest integer s with s**dim >= n, computed without float error."""
    side = max(1, int(round(n ** (1.0 / dim))) - 2)
    while side**dim < n:
        side += 1
    return side


def build_lattice_means(n_components: int, dim: int) -> tuple[np.ndarray, float]:
    """N points of a separation-maximizing axis-aligned lattice in [0, 1]^p.

    Uses ceil(N^(1/p)) points per axis including both faces, so the achieved
    minimum separation is 1/(side - 1).  Returns (means, separation);
    separation is inf for a single point.
    """
    if n_components < 1 or dim < 1:
        raise ValueError("n_components and dim must be >= 1")
    side = _lattice_side(n_components, dim)
    if side == 1:
        return np.zeros((1, dim)), math.inf
    coords = np.arange(side) / (side - 1)
    grids = np.meshgrid(*([coords] * dim), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)[:n_components]
    separation = 1.0 / (side - 1) if n_components > 1 else math.inf
    return points, separation


@dataclass(frozen=True)
class ChiSquareSandwich:
    lower: float  # pr(chi2_p < delta^2 / (2 sigma^2))
    upper: float  # pr(chi2_p < delta^2 / sigma^2)
    normal_lower: float  # CLT approximation to the lower expression
    normal_upper: float  # CLT approximation to the upper expression


def correct_prob_bounds_p(delta: float, sigma: float, dim: int) -> ChiSquareSandwich:
    """Chi-square sandwich on the correct-assignment probability in R^p.

    Also returns the central-limit approximations
    Phi{(delta^2/(c sigma^2) - p) / sqrt(p/c)} for c = 2 (lower) and c = 1
    (upper), useful as a cross-check at large p.
    """
    if delta <= 0 or sigma <= 0:
        raise ValueError("delta and sigma must be positive")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    ratio = delta * delta / (sigma * sigma)
    lower = float(stats.chi2.cdf(ratio / 2.0, dim))
    upper = float(stats.chi2.cdf(ratio, dim))

    def _clt(c: float) -> float:
        return float(stats.norm.cdf((ratio / c - dim) / math.sqrt(dim / c)))

    return ChiSquareSandwich(
        lower=lower, upper=upper, normal_lower=_clt(2.0), normal_upper=_clt(1.0)
    )


@dataclass(frozen=True)
class AssignmentSimConfig:
    n_components: int
    c: float
    replicates: int
    seed: int
    scale_convention: str = "sigma"
    range_width: float = 1.0

    def __post_init__(self) -> None:
        if self.n_components < 2:
            raise ValueError("need at least two components")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.scale_convention not in SCALE_CONVENTIONS:
            raise ValueError(f"unknown scale convention: {self.scale_convention!r}")

    def mixture(self) -> EquallySpacedMixture1D:
        sigma = sigma_from_scale(self.c, self.n_components, self.scale_convention)
        return EquallySpacedMixture1D(
            n_components=self.n_components, sigma=sigma, range_width=self.range_width
        )


@dataclass(frozen=True)
class AssignmentSimResult:
    c: float
    n_components: int
    replicates: int
    proportion_correct_mean: float
    proportion_correct_se: float
    zero_correct_frequency: float
    theory_proportion: float

    def __post_init__(self) -> None:
        for name in (
            "proportion_correct_mean",
            "zero_correct_frequency",
            "theory_proportion",
        ):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} outside [0, 1]: {value}")


def run_assignment_sim(config: AssignmentSimConfig) -> AssignmentSimResult:
    """Draw one observation per component, assign by ML, summarize replicates.

    Every replicate r uses the derived stream (seed, r), so results do not
    depend on execution order or worker count.
    """
    mix = config.mixture()
    means = mix.means()
    n = config.n_components
    truth = np.arange(n)
    props = np.empty(config.replicates)
    zeros = np.empty(config.replicates, dtype=bool)
    for r in range(config.replicates):
        rng = substream(config.seed, r)
        y = means + rng.normal(0.0, mix.sigma, size=n)
        assigned = ml_assign_grid(y, mix)
        n_correct = int((assigned == truth).sum())
        props[r] = n_correct / n
        zeros[r] = n_correct == 0
    se = float(props.std(ddof=1) / math.sqrt(config.replicates)) if config.replicates > 1 else 0.0
    return AssignmentSimResult(
        c=config.c,
        n_components=n,
        replicates=config.replicates,
        proportion_correct_mean=float(props.mean()),
        proportion_correct_se=se,
        zero_correct_frequency=float(zeros.mean()),
        theory_proportion=correct_prob_1d(mix, edge_exact=True),
    )


@dataclass(frozen=True)
class DimensionSimConfig:
    n_components: int
    dim: int
    sigma: float
    replicates: int
    seed: int

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class DimensionSimResult:
    n_components: int
    dim: int
    sigma: float
    replicates: int
    separation: float
    proportion_correct_mean: float
    proportion_correct_se: float
    lower: float
    upper: float
    within_bounds: bool


def _nearest_mean(y: np.ndarray, means: np.ndarray, block: int = 256) -> np.ndarray:
    """Row-wise nearest mean, blocked to bound memory for large N."""
    out = np.empty(len(y), dtype=np.int64)
    for start in range(0, len(y), block):
        chunk = y[start : start + block]
        d2 = ((chunk[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        out[start : start + block] = d2.argmin(axis=1)
    return out


def run_dimension_sim(config: DimensionSimConfig) -> DimensionSimResult:
    """Empirical correct proportion on the lattice mixture vs chi-square bounds.

    within_bounds reports whether the empirical mean lies inside
    [lower - 3 SE, upper + 3 SE] for the achieved lattice separation.
    """
    means, separation = build_lattice_means(config.n_components, config.dim)
    n = config.n_components
    truth = np.arange(n)
    props = np.empty(config.replicates)
    for r in range(config.replicates):
        rng = substream(config.seed, r)
        y = means + rng.normal(0.0, config.sigma, size=means.shape)
        props[r] = float((_nearest_mean(y, means) == truth).mean())
    mean = float(props.mean())
    se = float(props.std(ddof=1) / math.sqrt(config.replicates)) if config.replicates > 1 else 0.0
    if math.isinf(separation):
        lower = upper = 1.0
    else:
        sandwich = correct_prob_bounds_p(separation, config.sigma, config.dim)
        lower, upper = sandwich.lower, sandwich.upper
    return DimensionSimResult(
        n_components=n,
        dim=config.dim,
        sigma=config.sigma,
        replicates=config.replicates,
        separation=separation,
        proportion_correct_mean=mean,
        proportion_correct_se=se,
        lower=lower,
        upper=upper,
        within_bounds=(lower - 3 * se) <= mean <= (upper + 3 * se),
    )
