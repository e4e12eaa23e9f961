"""Bayesian Gaussian mixture with known weights/variance, unknown means.

Component means carry independent Normal(0, tau^2) priors and integrate out
in closed form, giving an exact marginal likelihood for every labeling of
the observations.  On top of that sit pairwise merge Bayes factors, their
data-averaged expectation, a collapsed Gibbs sampler over labelings, and the
pairwise co-clustering loss used to score sampled partitions against the
truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seeding import substream

__all__ = [
    "BayesMixtureModel",
    "MixtureState",
    "AdjacencyLoss",
    "BayesSimConfig",
    "BayesSimResult",
    "log_config_likelihood",
    "bayes_factor_merge",
    "expected_bayes_factor",
    "gibbs_step",
    "adjacency_l0",
    "run_bayes_sim",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BayesMixtureModel:
    """Known mixture weights and observation variance; Normal(0, tau2) means."""

    weights: tuple[float, ...]
    sigma2: float
    tau2: float

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) < 1:
            raise ValueError("weights must be a non-empty vector")
        if (w <= 0).any():
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()}, expected 1")
        if self.sigma2 <= 0 or self.tau2 <= 0:
            raise ValueError("sigma2 and tau2 must be positive")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @classmethod
    def uniform(cls, k: int, sigma2: float, tau2: float) -> "BayesMixtureModel":
        return cls(weights=(1.0 / k,) * k, sigma2=sigma2, tau2=tau2)

    @property
    def n_components(self) -> int:
        return len(self.weights)

    def log_weights(self) -> np.ndarray:
        return np.log(np.asarray(self.weights))


def _cluster_stats(
    labels: np.ndarray, y: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    counts = np.bincount(labels, minlength=k).astype(float)
    sums = np.bincount(labels, weights=y, minlength=k)
    sumsq = np.bincount(labels, weights=y * y, minlength=k)
    return counts, sums, sumsq


def log_config_likelihood(
    model: BayesMixtureModel,
    y: np.ndarray,
    labels: np.ndarray,
    include_multinomial_coeff: bool = False,
) -> float:
    """Log marginal likelihood of a labeling, means integrated out.

    Per cluster k with count n_k, sum s_k and sum of squares q_k:

        n_k log pi_k + log sigma - n_k log(sqrt(2 pi) sigma)
        - 0.5 log(n_k tau^2 + sigma^2)
        - q_k / (2 sigma^2) + tau^2 s_k^2 / (2 sigma^2 (n_k tau^2 + sigma^2))

    Empty clusters contribute zero.  The multinomial coefficient
    N!/prod(n_k!) multiplies the labeled-configuration likelihood only when
    requested; the collapsed Gibbs conditionals correspond to leaving it out.
    """
    y = np.asarray(y, dtype=float)
    labels = np.asarray(labels)
    if len(y) != len(labels):
        raise ValueError("y and labels must have equal length")
    k = model.n_components
    if len(labels) and (labels.min() < 0 or labels.max() >= k):
        raise ValueError("label out of range")
    if len(y) == 0:
        return 0.0
    counts, sums, sumsq = _cluster_stats(labels, y, k)
    sigma2, tau2 = model.sigma2, model.tau2
    sigma = math.sqrt(sigma2)
    denom = counts * tau2 + sigma2
    total = float(
        np.sum(
            counts * model.log_weights()
            + math.log(sigma)
            - counts * (0.5 * _LOG_2PI + math.log(sigma))
            - 0.5 * np.log(denom)
            - sumsq / (2.0 * sigma2)
            + tau2 * sums**2 / (2.0 * sigma2 * denom)
        )
    )
    if include_multinomial_coeff:
        total += math.lgamma(len(y) + 1) - sum(
            math.lgamma(c + 1) for c in counts
        )
    return total


def bayes_factor_merge(
    model: BayesMixtureModel, y_i: float, y_i2: float, j: int, k: int
) -> float:
    """Closed-form Bayes factor for co-clustering two singleton observations.

    Compares the labeling in which y_i sits alone in cluster j and y_i2
    alone in cluster k against the one merging both into cluster k, with the
    multinomial-coefficient convention (the leading factor 2 is the
    coefficient ratio).  Equals the ratio of log_config_likelihood values
    with include_multinomial_coeff on.
    """
    if j == k:
        raise ValueError("j and k must differ")
    kk = model.n_components
    if not (0 <= j < kk and 0 <= k < kk):
        raise ValueError("component index out of range")
    sigma2, tau2 = model.sigma2, model.tau2
    log_pref = (
        math.log(2.0)
        + math.log(model.weights[j])
        - math.log(model.weights[k])
        + 0.5 * math.log(sigma2)
        + 0.5 * math.log(2.0 * tau2 + sigma2)
        - math.log(tau2 + sigma2)
    )
    exponent = (tau2 / (2.0 * sigma2)) * (
        (y_i**2 + y_i2**2) / (tau2 + sigma2)
        - (y_i + y_i2) ** 2 / (2.0 * tau2 + sigma2)
    )
    return math.exp(log_pref + exponent)


def expected_bayes_factor(
    model: BayesMixtureModel, mu_i: float, mu_i2: float, j: int, k: int
) -> float:
    """Expectation of bayes_factor_merge over y ~ N(mu, sigma^2) draws.

    Closed form; diverges as the component means separate, since the
    exponent grows with (mu_i - mu_i2)^2.  At mu_i = mu_i2 the value is the
    positive constant (2 pi_j / pi_k)(2 tau^2 + sigma^2)/sqrt(2(sigma^2 +
    tau^2)^2 - sigma^4).
    """
    if j == k:
        raise ValueError("j and k must differ")
    sigma2, tau2 = model.sigma2, model.tau2
    disc = 2.0 * (sigma2 + tau2) ** 2 - sigma2**2
    pref = (
        2.0
        * model.weights[j]
        / model.weights[k]
        * (2.0 * tau2 + sigma2)
        / math.sqrt(disc)
    )
    exponent = -0.25 * tau2 * (
        -((mu_i - mu_i2) ** 2) / sigma2**2 + (mu_i + mu_i2) ** 2 / disc
    )
    return pref * math.exp(exponent)


@dataclass
class MixtureState:
    """Labeling plus per-cluster sufficient statistics, kept incrementally."""

    labels: np.ndarray
    counts: np.ndarray
    sums: np.ndarray
    sumsq: np.ndarray

    @classmethod
    def from_labels(
        cls, labels: np.ndarray, y: np.ndarray, n_components: int
    ) -> "MixtureState":
        labels = np.asarray(labels, dtype=np.int64).copy()
        y = np.asarray(y, dtype=float)
        if labels.min() < 0 or labels.max() >= n_components:
            raise ValueError("label out of range")
        counts, sums, sumsq = _cluster_stats(labels, y, n_components)
        return cls(labels=labels, counts=counts, sums=sums, sumsq=sumsq)

    def check_consistent(self, y: np.ndarray, atol: float = 1e-9) -> None:
        counts, sums, sumsq = _cluster_stats(self.labels, np.asarray(y, float), len(self.counts))
        if not (
            np.array_equal(counts, self.counts)
            and np.allclose(sums, self.sums, atol=atol)
            and np.allclose(sumsq, self.sumsq, atol=atol)
        ):
            raise AssertionError("sufficient statistics drifted from labels")


def gibbs_step(
    model: BayesMixtureModel,
    y: np.ndarray,
    state: MixtureState,
    rng: np.random.Generator,
    scan_order: str = "sequential",
) -> MixtureState:
    """One collapsed Gibbs sweep over all observations, in place.

    For each i in turn the label is resampled from
    p(z_i = k | rest) proportional to pi_k * N(y_i; m_k, s_k^2 + sigma^2),
    where m_k and s_k^2 are the posterior mean and variance of the cluster
    mean given the other members (tau^2 prior when the cluster is empty).
    Normalization happens in log space.
    """
    y = np.asarray(y, dtype=float)
    sigma2, tau2 = model.sigma2, model.tau2
    log_w = model.log_weights()
    n = len(y)
    if scan_order == "sequential":
        order = range(n)
    elif scan_order == "random":
        order = rng.permutation(n)
    else:
        raise ValueError(f"unknown scan_order: {scan_order!r}")
    uniforms = rng.random(n)
    counts, sums, sumsq, labels = state.counts, state.sums, state.sumsq, state.labels
    for pos, i in enumerate(order):
        yi = y[i]
        old = labels[i]
        counts[old] -= 1.0
        sums[old] -= yi
        sumsq[old] -= yi * yi
        denom = counts * tau2 + sigma2
        post_mean = tau2 * sums / denom
        pred_var = tau2 * sigma2 / denom + sigma2
        logp = log_w - 0.5 * (np.log(2.0 * math.pi * pred_var)) - (yi - post_mean) ** 2 / (2.0 * pred_var)
        logp -= logp.max()
        probs = np.exp(logp)
        cum = np.cumsum(probs)
        new = int(np.searchsorted(cum, uniforms[pos] * cum[-1], side="right"))
        new = min(new, len(cum) - 1)
        labels[i] = new
        counts[new] += 1.0
        sums[new] += yi
        sumsq[new] += yi * yi
    return state


@dataclass(frozen=True)
class AdjacencyLoss:
    """Pairwise co-clustering disagreement count between two labelings."""

    l0: int
    n_records: int

    def __post_init__(self) -> None:
        if not (0 <= self.l0 <= self.n_records**2 - self.n_records):
            raise ValueError("l0 outside [0, N^2 - N]")
        if self.l0 % 2 != 0:
            raise ValueError("pairwise disagreements must pair up (even l0)")


def adjacency_l0(labels_a: np.ndarray, labels_b: np.ndarray) -> AdjacencyLoss:
    """Count ordered pairs (i, j), i != j, whose co-clustering status differs.

    Depends only on the partitions, not on the label values; zero exactly
    when the partitions coincide.
    """
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be equal-length vectors")
    co_a = a[:, None] == a[None, :]
    co_b = b[:, None] == b[None, :]
    # Diagonals agree by construction, so no correction is needed.
    return AdjacencyLoss(l0=int((co_a != co_b).sum()), n_records=len(a))


@dataclass(frozen=True)
class BayesSimConfig:
    c: float
    seed: int
    n_records: int = 100
    sweeps: int = 2000
    burn_in: int = 500
    tau2: float = 9.0
    scale_convention: str = "sigma"
    scan_order: str = "sequential"

    def __post_init__(self) -> None:
        if self.n_records < 1:
            raise ValueError("n_records must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.tau2 <= 0:
            raise ValueError("tau2 must be positive")


@dataclass(frozen=True)
class BayesSimResult:
    config: BayesSimConfig
    l0_samples: np.ndarray  # one value per retained sweep
    true_labels: np.ndarray


def run_bayes_sim(config: BayesSimConfig) -> BayesSimResult:
    """Posterior co-clustering loss under unknown means, by collapsed Gibbs.

    Truth: z_i uniform over N components, y_i ~ N((z_i + 1)/N, sigma^2) with
    sigma set by the scale convention.  The sampler starts from the
    all-singleton labeling; after burn-in, every sweep contributes one
    adjacency loss against the true partition.
    """
    from .gaussian_assignment import sigma_from_scale

    n = config.n_records
    sigma = sigma_from_scale(config.c, n, config.scale_convention)
    model = BayesMixtureModel.uniform(n, sigma2=sigma * sigma, tau2=config.tau2)
    rng = substream(config.seed)
    true_labels = rng.integers(0, n, size=n)
    y = (true_labels + 1) / n + rng.normal(0.0, sigma, size=n)
    state = MixtureState.from_labels(np.arange(n), y, n)
    losses = np.empty(config.sweeps, dtype=np.int64)
    for sweep in range(config.burn_in + config.sweeps):
        gibbs_step(model, y, state, rng, scan_order=config.scan_order)
        if sweep >= config.burn_in:
            losses[sweep - config.burn_in] = adjacency_l0(state.labels, true_labels).l0
    state.check_consistent(y)
    return BayesSimResult(config=config, l0_samples=losses, true_labels=true_labels)
