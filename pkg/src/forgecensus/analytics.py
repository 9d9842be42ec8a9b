"""Distributional analytics over a census: aggregates, Zipf fit, Lorenz, Gini.

Everything here is a pure function over immutable inputs. Integer inputs
take an exact integer path so the textbook anchors (constant vector has
Gini 0, a lone contributor among n has (n-1)/n) hold to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import accumulate

from .census import CensusSnapshot
from .errors import AllZero, EmptyCensus, NonPositiveValue, TooFewPoints


@dataclass(frozen=True)
class AggregateStats:
    """Raw measures for one province: exact sums plus derived rates."""

    canonical_name: str
    population: int | None
    user_count: int
    total_contributions: int
    total_stars: int
    total_followers: int
    mean_contributions: float
    users_per_million: float | None


@dataclass(frozen=True)
class ZipfFit:
    """Least-squares power-law fit in log-log space.

    exponent is the negated slope of log(value) against log(rank);
    objective is the residual sum of squares, 0 for an exact power law.
    A constant series fits exactly with exponent 0.
    """

    exponent: float
    objective: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError("a fit needs at least 3 points")
        if self.objective < 0:
            raise ValueError("objective is a sum of squares, cannot be negative")


@dataclass(frozen=True)
class LorenzGini:
    """Lorenz curve points plus the Gini index that summarizes them."""

    points: tuple[tuple[float, float], ...]
    gini: float


def aggregate(snapshot: CensusSnapshot, population: int | None = None) -> AggregateStats:
    """Exact integer sums over the snapshot plus the derived real measures."""
    n = snapshot.user_count
    if n == 0:
        raise EmptyCensus(f"census for {snapshot.canonical_name} has no users; mean undefined")
    totals = snapshot.totals()
    per_million = None
    if population is not None:
        if population <= 0:
            raise ValueError("population must be > 0")
        per_million = n / population * 1_000_000
    return AggregateStats(
        canonical_name=snapshot.canonical_name,
        population=population,
        user_count=n,
        total_contributions=totals["contributions"],
        total_stars=totals["stars"],
        total_followers=totals["followers"],
        mean_contributions=totals["contributions"] / n,
        users_per_million=per_million,
    )


def zipf_fit(values) -> ZipfFit:
    """Fit value = C * rank^(-exponent) by ordinary least squares in log-log.

    Zeros are dropped before fitting (their log is undefined); ranks are
    assigned after sorting the survivors descending. Negative values are
    a caller bug and raise.
    """
    if any(v < 0 for v in values):
        raise NonPositiveValue("negative values cannot be rank-fitted")
    survivors = sorted((float(v) for v in values if v > 0), reverse=True)
    m = len(survivors)
    if m < 3:
        raise TooFewPoints(f"need at least 3 positive values to fit, got {m}")
    if survivors[0] == survivors[-1]:  # constant series: exactly flat
        return ZipfFit(exponent=0.0, objective=0.0, n_points=m)
    ts = [math.log(r) for r in range(1, m + 1)]
    ys = [math.log(v) for v in survivors]
    t_mean = math.fsum(ts) / m
    y_mean = math.fsum(ys) / m
    sxy = math.fsum((t - t_mean) * (y - y_mean) for t, y in zip(ts, ys))
    sxx = math.fsum((t - t_mean) ** 2 for t in ts)
    slope = sxy / sxx
    intercept = y_mean - slope * t_mean
    rss = math.fsum((y - (slope * t + intercept)) ** 2 for t, y in zip(ts, ys))
    # descending data makes the slope non-positive, so the exponent is >= 0
    return ZipfFit(exponent=-slope, objective=rss, n_points=m)


def _ascending(values) -> list:
    xs = sorted(values)
    if xs and xs[0] < 0:
        raise NonPositiveValue("shares are undefined for negative values")
    return xs


def lorenz_curve(values) -> tuple[tuple[float, float], ...]:
    """Cumulative share pairs (population share, contribution share).

    Values are sorted ascending; point k is (k/n, prefix_k / total),
    prefixed with the (0, 0) origin. Ends exactly at (1, 1).
    """
    xs = _ascending(values)
    n = len(xs)
    if n == 0:
        raise TooFewPoints("lorenz curve needs at least one value")
    prefixes = list(accumulate(xs))
    total = prefixes[-1]
    if total == 0:
        raise AllZero("all values are zero; shares are undefined")
    points = [(0.0, 0.0)]
    points.extend((k / n, prefix / total) for k, prefix in enumerate(prefixes, start=1))
    return tuple(points)


def gini(values) -> float:
    """Gini index in [0, 1]: 0 when everyone contributes the same,
    (n-1)/n when a single person did all of it.

    Uses the ascending-sorted closed form
        G = (2 * sum(i * x_i) - (n + 1) * sum(x_i)) / (n * sum(x_i)),
    algebraically equal to 2*sum(i*x_i)/(n*sum(x_i)) - (n+1)/n but exact
    for integer inputs (sums stay in exact integer arithmetic).
    """
    xs = _ascending(values)
    n = len(xs)
    if n < 2:
        raise TooFewPoints(f"gini needs at least 2 values, got {n}")
    if all(isinstance(x, int) for x in xs):
        total = sum(xs)
        if total == 0:
            raise AllZero("all values are zero; inequality is undefined")
        weighted = sum(i * x for i, x in enumerate(xs, start=1))
        return (2 * weighted - (n + 1) * total) / (n * total)
    total = math.fsum(xs)
    if total == 0:
        raise AllZero("all values are zero; inequality is undefined")
    numerator = math.fsum(
        [2 * i * x for i, x in enumerate(xs, start=1)] + [-(n + 1) * x for x in xs]
    )
    return numerator / (n * total)


def lorenz_gini(values) -> LorenzGini:
    """Both halves of the inequality picture in one result."""
    return LorenzGini(points=lorenz_curve(values), gini=gini(values))


def mean_contributions_ranking(stats: list[AggregateStats]) -> list[AggregateStats]:
    """Provinces sorted by average contributions, top first, ties alphabetical."""
    return sorted(stats, key=lambda s: (-s.mean_contributions, s.canonical_name))


@dataclass(frozen=True)
class AnalyticsBundle:
    """All the per-province analyses a report can embed."""

    aggregate: AggregateStats | None = None
    zipf: ZipfFit | None = None
    lorenz: LorenzGini | None = None


def analyze_snapshot(snapshot: CensusSnapshot, population: int | None = None) -> AnalyticsBundle:
    """Run every analysis that the snapshot has enough data for."""
    contribs = [u.contributions_last_year for u in snapshot.users]
    agg = aggregate(snapshot, population)
    positive = sum(1 for c in contribs if c > 0)
    zipf = zipf_fit(contribs) if positive >= 3 else None
    lorenz = lorenz_gini(contribs) if len(contribs) >= 2 else None
    return AnalyticsBundle(aggregate=agg, zipf=zipf, lorenz=lorenz)
