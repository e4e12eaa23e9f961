"""Name-frequency table ingestion and the joint first-by-last histogram.

Census-style tables give marginal frequencies of given names and surnames.
Under independent selection of the two, the joint cell probabilities are the
products, and scaling by a population count yields expected group sizes for
the random-allocation analysis in :mod:`microclust.combinatorics`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .combinatorics import (
    NameHistogram,
    hoeffding_tail,
    log_prob_all_correct,
    name_entropy,
)

__all__ = [
    "DataError",
    "TableFormat",
    "FrequencyTable",
    "load_frequency_table",
    "independence_join",
    "names_report",
]

REMAINDER_NAME = "OTHER"
_SUM_TOLERANCE = 1e-6


class DataError(ValueError):
    """Raised for malformed or inconsistent input tables."""


@dataclass(frozen=True)
class TableFormat:
    """Column mapping for a delimited name-frequency file.

    value_kind is "count" (non-negative counts, normalized to proportions) or
    "proportion" (values in (0, 1]; a remainder bucket is synthesized when
    they sum below 1, as truncated tables omit rare names).
    """

    name_column: str
    value_column: str
    value_kind: str = "count"
    delimiter: str = ","

    def __post_init__(self) -> None:
        if self.value_kind not in ("count", "proportion"):
            raise ValueError(f"unknown value_kind: {self.value_kind!r}")


@dataclass(frozen=True)
class FrequencyTable:
    entries: tuple[tuple[str, float], ...]
    source_population: int | None = None

    def __post_init__(self) -> None:
        names = [name for name, _ in self.entries]
        if len(set(names)) != len(names):
            raise DataError("duplicate names in frequency table")
        for name, prop in self.entries:
            if not (0.0 < prop <= 1.0):
                raise DataError(f"proportion for {name!r} outside (0, 1]: {prop}")
        total = sum(p for _, p in self.entries)
        if total > 1.0 + _SUM_TOLERANCE:
            raise DataError(f"proportions sum to {total}, more than 1")

    def proportions(self) -> dict[str, float]:
        return dict(self.entries)


def load_frequency_table(path: str | Path, fmt: TableFormat) -> FrequencyTable:
    """Parse a delimited file into a normalized FrequencyTable.

    Errors mention the 1-based data row at fault.  Count tables record the
    total as source_population; proportion tables that sum below 1 gain a
    synthetic remainder entry so downstream joins see a full distribution.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    rows: list[tuple[str, float]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=fmt.delimiter)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        for col in (fmt.name_column, fmt.value_column):
            if col not in reader.fieldnames:
                raise DataError(f"{path}: missing column {col!r}")
        for i, row in enumerate(reader, start=1):
            raw = row[fmt.value_column]
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise DataError(f"{path}: row {i}: bad numeric value {raw!r}") from None
            if not math.isfinite(value) or value < 0:
                raise DataError(f"{path}: row {i}: negative or non-finite value {value}")
            name = (row[fmt.name_column] or "").strip()
            if not name:
                raise DataError(f"{path}: row {i}: empty name")
            rows.append((name, value))
    if not rows:
        raise DataError(f"{path}: table has no data rows")

    if fmt.value_kind == "count":
        total = sum(v for _, v in rows)
        if total <= 0:
            raise DataError(f"{path}: counts sum to zero")
        entries = tuple((name, v / total) for name, v in rows if v > 0)
        return FrequencyTable(entries=entries, source_population=round(total))

    entries = tuple((name, v) for name, v in rows if v > 0)
    total = sum(p for _, p in entries)
    if total < 1.0 - _SUM_TOLERANCE:
        remainder = 1.0 - total
        name = REMAINDER_NAME
        existing = {n for n, _ in entries}
        while name in existing:
            name = "_" + name
        entries = entries + ((name, remainder),)
    return FrequencyTable(entries=entries)


def independence_join(
    first: FrequencyTable,
    last: FrequencyTable,
    population: int,
    pool_threshold: float = 0.5,
) -> NameHistogram:
    """Joint histogram of full-name group sizes under independence.

    Cells with expected size >= pool_threshold become one group each, with
    integer sizes fixed by largest-remainder rounding; all remaining product
    mass is treated as uniquely named individuals (singleton groups).  The
    group sizes always sum to exactly `population`.
    """
    if population < 1:
        raise ValueError("population must be >= 1")
    if pool_threshold <= 0:
        raise ValueError("pool_threshold must be positive")

    f_items = sorted(first.proportions().items(), key=lambda kv: (-kv[1], kv[0]))
    l_items = sorted(last.proportions().items(), key=lambda kv: (-kv[1], kv[0]))

    # Enumerate only cells that can reach the pooling threshold; proportions
    # are sorted descending so each inner scan stops at the first small cell.
    big: list[tuple[float, str, str]] = []
    for f_name, f_prop in f_items:
        if population * f_prop * l_items[0][1] < pool_threshold:
            break
        for l_name, l_prop in l_items:
            expected = population * f_prop * l_prop
            if expected < pool_threshold:
                break
            big.append((expected, f_name, l_name))

    # Everything below the threshold contributes only through its total mass.
    big_mass = sum(e for e, _, _ in big)
    n_singletons = round(population - big_mass)

    sizes: list[int] = []
    if big:
        big.sort(key=lambda cell: (-cell[0], cell[1], cell[2]))
        target = population - n_singletons
        floors = [math.floor(e) for e, _, _ in big]
        shortfall = target - sum(floors)
        # Largest-remainder rounding; ties resolved by the deterministic sort.
        order = sorted(
            range(len(big)), key=lambda i: (-(big[i][0] - floors[i]), i)
        )
        for rank, i in enumerate(order):
            floors[i] += 1 if rank < shortfall else 0
        sizes = [s for s in floors if s > 0]
        leftover = target - sum(sizes)
        n_singletons += leftover  # cells rounded to zero fall back to singletons

    counts: dict[int, int] = {}
    for s in sizes:
        counts[s] = counts.get(s, 0) + 1
    if n_singletons > 0:
        counts[1] = counts.get(1, 0) + n_singletons
    return NameHistogram(counts)


def names_report(
    hist: NameHistogram, t_grid: Sequence[float]
) -> dict[str, object]:
    """All random-allocation summary quantities for one histogram.

    Field names are fixed; the report is JSON-serializable as is.
    """
    n = hist.n_records
    return {
        "n_records": n,
        "n_groups": hist.n_groups,
        "expected_proportion_correct": hist.n_groups / n,
        "entropy_nats": name_entropy(hist),
        "log_prob_all_correct": log_prob_all_correct(hist),
        "n_over_sum_sq": n * n / hist.sum_sq_sizes,
        "hoeffding_bounds": [
            {"t": float(t), "bound": hoeffding_tail(hist, float(t))} for t in t_grid
        ],
    }


def group_size_table(hist: NameHistogram) -> list[dict[str, object]]:
    """Per-size summary rows (size, multiplicity, exact pmf landmarks)."""
    from .combinatorics import expected_matches_bounds, match_pmf

    rows: list[dict[str, object]] = []
    for size, count in hist.size_counts.items():
        dist = match_pmf(size)
        lower, upper = expected_matches_bounds(size)
        rows.append(
            {
                "group_size": size,
                "n_groups": count,
                "prob_none_correct": float(dist.probability(0)),
                "prob_all_correct": float(dist.probability(size)),
                "expected_correct_exact": float(dist.mean()),
                "expected_lower": lower,
                "expected_upper": upper,
            }
        )
    return rows
