"""Closed-population estimation after noisy entity resolution.

Pipeline: draw an independence-model capture table (per-list inclusion
probabilities from a Beta prior), materialize synthetic record databases
with Gaussian feature noise, re-cluster records by nearest grid mean,
rebuild the observed capture table from the estimated clusters, and fit the
independent-lists maximum-likelihood population estimate with a log-normal
confidence interval on the unobserved count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .gaussian_assignment import EquallySpacedMixture1D, ml_assign_grid, sigma_from_scale
from .seeding import substream

__all__ = [
    "CaptureTable",
    "Records",
    "PopEstimate",
    "PopestSimConfig",
    "PopestReplicate",
    "NonConvergenceError",
    "generate_capture_table",
    "generate_databases",
    "reconstruct_counts",
    "estimate_population",
    "solve_beta_b_for_unobserved",
    "run_popest_sim",
]

Z_95 = 1.959963984540054


class NonConvergenceError(RuntimeError):
    """Fixed-point iteration failed to settle; carries the last iterate."""

    def __init__(self, message: str, last_estimate: float):
        super().__init__(message)
        self.last_estimate = last_estimate


@dataclass(frozen=True)
class CaptureTable:
    """Counts of entities per inclusion pattern over T lists.

    counts[m] is the number of entities whose pattern has bit j of m set
    exactly when the entity appears on list j; counts[0] is the unobserved
    cell.
    """

    n_lists: int
    counts: np.ndarray  # shape (2**n_lists,), non-negative integers

    def __post_init__(self) -> None:
        if self.n_lists < 1:
            raise ValueError("need at least one list")
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (2**self.n_lists,):
            raise ValueError(f"counts must have shape ({2 ** self.n_lists},)")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def n_entities(self) -> int:
        """All entities, including the unobserved cell."""
        return int(self.counts.sum())

    @property
    def n_observed(self) -> int:
        return int(self.counts[1:].sum())

    def list_totals(self) -> np.ndarray:
        """Entities per list: M_j = sum of counts over patterns with bit j."""
        idx = np.arange(2**self.n_lists)
        return np.array(
            [int(self.counts[(idx >> j) & 1 == 1].sum()) for j in range(self.n_lists)]
        )


def pattern_probabilities(p: np.ndarray) -> np.ndarray:
    """Cell probabilities of the independence model for inclusion probs p."""
    probs = np.ones(1)
    for pj in p:
        probs = np.concatenate([probs * (1.0 - pj), probs * pj])
    # Bit order: the j-th list toggles bit j, matching CaptureTable indexing.
    return probs


def generate_capture_table(
    n_entities: int,
    n_lists: int,
    a: float,
    b: float,
    seed: int,
    p: np.ndarray | None = None,
) -> tuple[CaptureTable, np.ndarray]:
    """Sample (table, p): p_j ~ Beta(a, b), counts ~ Multinomial(K, pi(p)).

    Passing p explicitly skips the Beta draw (useful for degenerate cases in
    tests).  The counts include the unobserved cell, so they always sum to
    n_entities.
    """
    if n_entities < 1:
        raise ValueError("n_entities must be >= 1")
    if n_lists < 2:
        raise ValueError("need at least two lists")
    if a <= 0 or b <= 0:
        raise ValueError("Beta hyperparameters must be positive")
    rng = substream(seed)
    if p is None:
        p = rng.beta(a, b, size=n_lists)
    else:
        p = np.asarray(p, dtype=float)
        if p.shape != (n_lists,) or (p < 0).any() or (p > 1).any():
            raise ValueError("p must be n_lists probabilities")
    probs = pattern_probabilities(p)
    counts = rng.multinomial(n_entities, probs)
    return CaptureTable(n_lists=n_lists, counts=counts), p


@dataclass(frozen=True)
class Records:
    """Flat arrays of synthetic records: feature, source list, true entity."""

    y: np.ndarray  # float features
    list_tag: np.ndarray  # 0-based list index
    entity: np.ndarray  # 1-based true entity id

    def __len__(self) -> int:
        return len(self.y)


def generate_databases(table: CaptureTable, sigma: float, seed: int) -> Records:
    """Materialize records for every observed entity of a capture table.

    Entities are drawn without replacement from the shrinking pool, pattern
    by pattern; an entity with pattern x emits one record per included list,
    each with feature ~ N(entity/K, sigma^2) and a distinct list tag.  The
    unobserved cell consumes entities but emits nothing.  Total record count
    is sum over patterns of counts[x] * popcount(x).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n_entities = table.n_entities
    rng = substream(seed)
    pool = np.arange(1, n_entities + 1)
    entity_ids: list[np.ndarray] = []
    tags: list[np.ndarray] = []
    for pattern in range(2**table.n_lists):
        n_x = int(table.counts[pattern])
        if n_x == 0:
            continue
        chosen_idx = rng.choice(len(pool), size=n_x, replace=False)
        chosen = pool[chosen_idx]
        pool = np.delete(pool, chosen_idx)
        lists = np.flatnonzero([(pattern >> j) & 1 for j in range(table.n_lists)])
        if len(lists) == 0:
            continue
        for k in chosen:
            entity_ids.append(np.full(len(lists), k))
            tags.append(rng.permutation(lists))
    if not entity_ids:
        empty = np.array([], dtype=np.int64)
        return Records(y=np.array([]), list_tag=empty, entity=empty)
    entity = np.concatenate(entity_ids)
    list_tag = np.concatenate(tags)
    y = rng.normal(entity / n_entities, sigma)
    return Records(y=y, list_tag=list_tag, entity=entity)


def reconstruct_counts(
    records: Records, assignments: np.ndarray, n_lists: int
) -> CaptureTable:
    """Capture table implied by an estimated clustering of the records.

    Each non-empty cluster contributes one entity whose pattern has bit j
    set when any of its records carries list tag j; the count for pattern x
    is the number of clusters with that pattern.  The unobserved cell is
    zero by construction.
    """
    assignments = np.asarray(assignments)
    if assignments.shape != records.entity.shape:
        raise ValueError("assignments must cover all records")
    counts = np.zeros(2**n_lists, dtype=np.int64)
    if len(assignments) == 0:
        return CaptureTable(n_lists=n_lists, counts=counts)
    order = np.argsort(assignments, kind="stable")
    sorted_labels = assignments[order]
    masks = (1 << records.list_tag[order].astype(np.int64))
    boundaries = np.flatnonzero(np.r_[True, sorted_labels[1:] != sorted_labels[:-1]])
    patterns = np.bitwise_or.reduceat(masks, boundaries)
    counts += np.bincount(patterns, minlength=2**n_lists)
    return CaptureTable(n_lists=n_lists, counts=counts)


@dataclass(frozen=True)
class PopEstimate:
    n0_hat: float
    ci_lower: float
    ci_upper: float
    n_observed: int
    p_hat: tuple[float, ...]
    iterations: int
    dropped_lists: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not (self.ci_lower <= self.n0_hat <= self.ci_upper):
            raise ValueError("confidence interval must bracket the estimate")

    @property
    def n_total_hat(self) -> float:
        return self.n_observed + self.n0_hat


def _drop_empty_lists(table: CaptureTable) -> tuple[CaptureTable, tuple[int, ...]]:
    totals = table.list_totals()
    dropped = tuple(int(j) for j in np.flatnonzero(totals == 0))
    if not dropped:
        return table, ()
    keep = [j for j in range(table.n_lists) if j not in dropped]
    if len(keep) < 2:
        raise ValueError("fewer than two non-empty lists")
    new_counts = np.zeros(2 ** len(keep), dtype=np.int64)
    for pattern in range(2**table.n_lists):
        new_pattern = 0
        for new_j, j in enumerate(keep):
            if (pattern >> j) & 1:
                new_pattern |= 1 << new_j
        new_counts[new_pattern] += table.counts[pattern]
    return CaptureTable(n_lists=len(keep), counts=new_counts), dropped


def _variance_n_hat(n_hat: float, p_hat: np.ndarray, m: np.ndarray, d: int) -> float:
    """Asymptotic variance of the population MLE from the observed information.

    The log likelihood in (N, p) is lgamma(N + 1) - lgamma(N - D + 1)
    + sum_j [M_j log p_j + (N - M_j) log(1 - p_j)] up to constants, so the
    Hessian is analytic: trigamma terms in N, -1/(1 - p_j) cross terms, and
    the usual binomial curvature in each p_j.
    """
    t = len(p_hat)
    h = np.zeros((t + 1, t + 1))
    h[0, 0] = special.polygamma(1, n_hat + 1.0) - special.polygamma(1, n_hat - d + 1.0)
    for j in range(t):
        h[0, j + 1] = h[j + 1, 0] = -1.0 / (1.0 - p_hat[j])
        h[j + 1, j + 1] = -m[j] / p_hat[j] ** 2 - (n_hat - m[j]) / (1.0 - p_hat[j]) ** 2
    try:
        cov = np.linalg.inv(-h)
    except np.linalg.LinAlgError:
        return math.inf
    var = float(cov[0, 0])
    return var if var > 0 else math.inf


def estimate_population(
    table: CaptureTable,
    ci_method: str = "lognormal",
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> PopEstimate:
    """Independence-model MLE of the unobserved count, with a 95% interval.

    Solves the fixed point p_j = M_j/N, N = D/(1 - prod(1 - p_j)) where D is
    the number of observed entities; the unobserved cell of `table` is
    ignored.  Lists on which nothing was observed are dropped with a
    warning.  ci_method "lognormal" puts the interval on the unobserved
    count via the standard log-transform; "wald" is symmetric on N.
    """
    if ci_method not in ("lognormal", "wald"):
        raise ValueError(f"unknown ci_method: {ci_method!r}")
    observed = CaptureTable(
        n_lists=table.n_lists,
        counts=np.concatenate([[0], np.asarray(table.counts)[1:]]),
    )
    if observed.n_observed == 0:
        raise ValueError("no observed entities")
    observed, dropped = _drop_empty_lists(observed)
    if dropped:
        warnings.warn(f"dropping lists with no observations: {dropped}", stacklevel=2)
    d = observed.n_observed
    m = observed.list_totals().astype(float)

    def next_estimate(n: float) -> float:
        miss = float(np.prod(1.0 - m / n))
        if miss >= 1.0:
            return math.inf
        return d / (1.0 - miss)

    n_hat = next_estimate(float(d))
    iterations = 0
    if not math.isfinite(n_hat):
        raise NonConvergenceError("population estimate unbounded", float("inf"))
    while True:
        iterations += 1
        new = next_estimate(n_hat)
        if not math.isfinite(new):
            raise NonConvergenceError("population estimate unbounded", n_hat)
        if abs(new - n_hat) < tol:
            n_hat = new
            break
        n_hat = new
        if iterations >= max_iter:
            raise NonConvergenceError(
                f"fixed point not reached after {max_iter} iterations", n_hat
            )

    p_hat = m / n_hat
    n0_hat = n_hat - d
    if n0_hat <= 0 or (p_hat >= 1.0).any():
        # Boundary case: some list saw everything, so nothing is unobserved.
        var = 0.0
    else:
        var = _variance_n_hat(n_hat, p_hat, m, d)

    if n0_hat <= 0 or var == 0:
        ci = (0.0, max(0.0, n0_hat))
    elif not math.isfinite(var):
        ci = (0.0, math.inf)
    elif ci_method == "lognormal":
        spread = math.exp(Z_95 * math.sqrt(math.log(1.0 + var / n0_hat**2)))
        ci = (n0_hat / spread, n0_hat * spread)
    else:
        half = Z_95 * math.sqrt(var)
        ci = (max(0.0, n0_hat - half), n0_hat + half)

    return PopEstimate(
        n0_hat=n0_hat,
        ci_lower=ci[0],
        ci_upper=ci[1],
        n_observed=d,
        p_hat=tuple(float(x) for x in p_hat),
        iterations=iterations,
        dropped_lists=dropped,
    )


def solve_beta_b_for_unobserved(target_frac: float, n_lists: int, a: float = 1.0) -> float:
    """Beta b with E[prod(1 - p_j)] = target_frac, i.e. (b/(a+b))^T matched."""
    if not (0.0 < target_frac < 1.0):
        raise ValueError("target_frac must be in (0, 1)")
    r = target_frac ** (1.0 / n_lists)
    return a * r / (1.0 - r)


@dataclass(frozen=True)
class PopestSimConfig:
    c: float
    seed: int
    n_entities: int = 5000
    n_lists: int = 3
    beta_a: float = 1.0
    beta_b: float = 1.7
    replicates: int = 200
    scale_convention: str = "sigma"

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")


@dataclass(frozen=True)
class PopestReplicate:
    replicate: int
    prop_correct: float
    covered: bool
    n0_true: int
    n0_hat: float
    ci_lower: float
    ci_upper: float
    sq_error_n0: float
    mse_nx: float
    failed: bool = False
    failure: str = ""


def run_popest_replicate(config: PopestSimConfig, replicate: int) -> PopestReplicate:
    """One generate/resolve/reconstruct/estimate pass; failures are recorded.

    Entity resolution uses nearest-grid-mean assignment with the known mean
    grid k/K, k = 1..K.
    """
    sigma = sigma_from_scale(config.c, config.n_entities, config.scale_convention)
    try:
        table = _replicate_table(config, replicate)
        records = generate_databases(table, sigma, seed=_mix_seed(config.seed, replicate, 1))
        grid = EquallySpacedMixture1D(n_components=config.n_entities, sigma=sigma)
        assigned = ml_assign_grid(records.y, grid) + 1  # back to 1-based entities
        prop_correct = float((assigned == records.entity).mean()) if len(records) else 0.0
        observed = reconstruct_counts(records, assigned, config.n_lists)
        estimate = estimate_population(observed)
        n0_true = int(table.counts[0])
        true_nonzero = table.counts[1:].astype(float)
        est_nonzero = observed.counts[1:].astype(float)
        return PopestReplicate(
            replicate=replicate,
            prop_correct=prop_correct,
            covered=bool(estimate.ci_lower <= n0_true <= estimate.ci_upper),
            n0_true=n0_true,
            n0_hat=estimate.n0_hat,
            ci_lower=estimate.ci_lower,
            ci_upper=estimate.ci_upper,
            sq_error_n0=(estimate.n0_hat - n0_true) ** 2,
            mse_nx=float(((est_nonzero - true_nonzero) ** 2).mean()),
        )
    except (NonConvergenceError, ValueError) as exc:
        return PopestReplicate(
            replicate=replicate,
            prop_correct=math.nan,
            covered=False,
            n0_true=-1,
            n0_hat=math.nan,
            ci_lower=math.nan,
            ci_upper=math.nan,
            sq_error_n0=math.nan,
            mse_nx=math.nan,
            failed=True,
            failure=str(exc),
        )


def _mix_seed(seed: int, replicate: int, stage: int) -> int:
    """Stable per-stage integer seed inside one replicate."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replicate, stage))
    return int(ss.generate_state(1, np.uint64)[0])


def _replicate_table(config: PopestSimConfig, replicate: int) -> CaptureTable:
    table, _ = generate_capture_table(
        config.n_entities,
        config.n_lists,
        config.beta_a,
        config.beta_b,
        seed=_mix_seed(config.seed, replicate, 0),
    )
    return table


def run_popest_sim(config: PopestSimConfig) -> list[PopestReplicate]:
    """All replicates for one noise level; failed ones are marked, not fatal."""
    return [run_popest_replicate(config, r) for r in range(config.replicates)]
