import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _stubs import make_snapshot, make_user
from forgecensus.analytics import (
    aggregate,
    analyze_snapshot,
    gini,
    lorenz_curve,
    lorenz_gini,
    mean_contributions_ranking,
    zipf_fit,
)
from forgecensus.errors import AllZero, EmptyCensus, NonPositiveValue, TooFewPoints

count_lists = st.lists(st.integers(min_value=0, max_value=10_000), min_size=2, max_size=200)


def pairwise_gini(values):
    """O(n^2) mean-absolute-difference definition; the independent oracle."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    return float(np.abs(np.subtract.outer(x, x)).sum() / (2 * n * n * x.mean()))


def polyfit_exponent(values):
    """Independent least-squares fit of the same log-log regression."""
    ordered = sorted((v for v in values if v > 0), reverse=True)
    ts = np.log(np.arange(1, len(ordered) + 1))
    ys = np.log(np.asarray(ordered))
    slope, intercept = np.polyfit(ts, ys, 1)
    rss = float(((ys - (slope * ts + intercept)) ** 2).sum())
    return -float(slope), rss


# -- aggregate -----------------------------------------------------------


def granada_like_snapshot():
    users = [make_user(f"u{i:03d}", contributions=10 + i, followers=i % 7, stars=i % 5)
             for i in range(10)]
    return make_snapshot(users=users)


def test_aggregate_exact_sums():
    snapshot = granada_like_snapshot()
    stats = aggregate(snapshot)
    assert stats.user_count == 10
    assert stats.total_contributions == sum(10 + i for i in range(10))
    assert stats.total_stars == sum(i % 5 for i in range(10))
    assert stats.total_followers == sum(i % 7 for i in range(10))
    assert stats.mean_contributions == stats.total_contributions / 10
    assert stats.users_per_million is None


def test_aggregate_users_per_million():
    stats = aggregate(granada_like_snapshot(), population=919_663)
    assert stats.users_per_million == pytest.approx(10 / 919_663 * 1e6)


def test_aggregate_empty_census():
    with pytest.raises(EmptyCensus):
        aggregate(make_snapshot(users=[]))


@given(st.lists(st.tuples(st.integers(0, 500), st.integers(0, 50), st.integers(0, 50)),
                min_size=1, max_size=60))
def test_aggregate_matches_independent_sums(rows):
    users = [
        make_user(f"u{i}", contributions=c + 1, followers=f, stars=s)
        for i, (c, f, s) in enumerate(rows)
    ]
    stats = aggregate(make_snapshot(users=users))
    assert stats.total_contributions == sum(u.contributions_last_year for u in users)
    assert stats.total_stars == sum(u.stars_received for u in users)
    assert stats.total_followers == sum(u.followers for u in users)


# -- zipf ----------------------------------------------------------------


def test_exact_power_law_recovered():
    values = [1000 * r**-1.5 for r in range(1, 51)]
    fit = zipf_fit(values)
    assert fit.exponent == pytest.approx(1.5, abs=1e-9)
    assert fit.objective <= 1e-18
    assert fit.n_points == 50


def test_constant_series_is_flat():
    fit = zipf_fit([7, 7, 7, 7, 7])
    assert fit.exponent == 0.0
    assert fit.objective == 0.0


def test_zeros_dropped_before_fitting():
    fit = zipf_fit([0, 8, 0, 4, 2, 1, 0])
    assert fit.n_points == 4


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        zipf_fit([5, 3])
    with pytest.raises(TooFewPoints):
        zipf_fit([5, 3, 0])


def test_negative_values_rejected():
    with pytest.raises(NonPositiveValue):
        zipf_fit([5, 3, -1])


def test_noisy_power_law_close_to_truth():
    rng = random.Random(42)
    true = 1.3
    values = [100 * r**-true * math.exp(rng.uniform(-0.01, 0.01)) for r in range(1, 101)]
    fit = zipf_fit(values)
    assert fit.exponent == pytest.approx(true, abs=0.05)
    oracle_exp, oracle_rss = polyfit_exponent(values)
    assert fit.exponent == pytest.approx(oracle_exp, abs=1e-9)
    assert fit.objective == pytest.approx(oracle_rss, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(min_value=0.5, max_value=3.0),
    c=st.floats(min_value=1e-3, max_value=1e4),
    n=st.integers(min_value=3, max_value=2000),
)
def test_recovery_property(alpha, c, n):
    values = [c * r**-alpha for r in range(1, n + 1)]
    fit = zipf_fit(values)
    assert abs(fit.exponent - alpha) <= 1e-9
    assert fit.objective <= 1e-15


# -- lorenz --------------------------------------------------------------


def test_equality_is_the_diagonal():
    assert lorenz_curve([1, 1, 1, 1]) == (
        (0.0, 0.0), (0.25, 0.25), (0.5, 0.5), (0.75, 0.75), (1.0, 1.0),
    )


def test_single_contributor_hugs_the_floor():
    assert lorenz_curve([0, 0, 0, 1]) == (
        (0.0, 0.0), (0.25, 0.0), (0.5, 0.0), (0.75, 0.0), (1.0, 1.0),
    )


def test_hand_prefix_sums():
    points = lorenz_curve([1, 2, 3, 4])
    assert points == ((0.0, 0.0), (0.25, 0.1), (0.5, 0.3), (0.75, 0.6), (1.0, 1.0))


def test_lorenz_rejects_degenerate_input():
    with pytest.raises(AllZero):
        lorenz_curve([0, 0, 0])
    with pytest.raises(TooFewPoints):
        lorenz_curve([])
    with pytest.raises(NonPositiveValue):
        lorenz_curve([3, -1])


@given(count_lists.filter(lambda xs: sum(xs) > 0))
def test_lorenz_contract(values):
    points = lorenz_curve(values)
    assert points[0] == (0.0, 0.0)
    assert points[-1] == (1.0, 1.0)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    assert all(b >= a for a, b in zip(xs, xs[1:]))
    assert all(b >= a for a, b in zip(ys, ys[1:]))
    # convex: second differences of the ascending-sorted curve
    diffs = [b - a for a, b in zip(ys, ys[1:])]
    assert all(d2 - d1 >= -1e-12 for d1, d2 in zip(diffs, diffs[1:]))
    # curve sits on or below the diagonal
    assert all(y <= x + 1e-12 for x, y in points)


@given(count_lists.filter(lambda xs: sum(xs) > 0))
def test_lorenz_permutation_invariant(values):
    shuffled = list(values)
    random.Random(7).shuffle(shuffled)
    assert lorenz_curve(values) == lorenz_curve(shuffled)


# -- gini ----------------------------------------------------------------


def test_constant_vector_is_exactly_zero():
    assert gini([7, 7, 7, 7, 7]) == 0.0
    assert gini([123456] * 31) == 0.0


def test_single_contributor_anchor():
    assert gini([1, 0, 0, 0]) == 0.75
    for n in (2, 3, 10, 137):
        assert gini([0] * (n - 1) + [1]) == (n - 1) / n


def test_gini_degenerate_inputs():
    with pytest.raises(TooFewPoints):
        gini([5])
    with pytest.raises(AllZero):
        gini([0, 0])
    with pytest.raises(NonPositiveValue):
        gini([1, -2])


@given(count_lists.filter(lambda xs: sum(xs) > 0))
def test_gini_matches_pairwise_oracle(values):
    assert gini(values) == pytest.approx(pairwise_gini(values), abs=1e-9)


@given(
    count_lists.filter(lambda xs: sum(xs) > 0),
    st.floats(min_value=1e-6, max_value=1e6),
)
def test_gini_scale_invariant(values, k):
    scaled = [k * v for v in values]
    assert abs(gini(values) - gini(scaled)) < 1e-12


@given(count_lists.filter(lambda xs: sum(xs) > 0))
def test_gini_bounds_and_permutation(values):
    g = gini(values)
    n = len(values)
    assert 0.0 <= g <= (n - 1) / n
    shuffled = list(values)
    random.Random(3).shuffle(shuffled)
    assert gini(shuffled) == g


def test_lorenz_gini_bundle():
    result = lorenz_gini([1, 2, 3, 4])
    assert result.gini == gini([1, 2, 3, 4])
    assert result.points == lorenz_curve([1, 2, 3, 4])


# -- ranking & bundle ----------------------------------------------------


def test_mean_ranking_from_aggregate_rows():
    granada = aggregate(
        make_snapshot(name="Granada", users=[make_user(f"g{i}", contributions=c)
                                             for i, c in enumerate([29610 - 161 * 181] + [161] * 181)]),
        population=919_663,
    )
    alicante_users = [make_user(f"a{i}", contributions=c)
                      for i, c in enumerate([4941 - 95 * 51] + [95] * 51)]
    alicante = aggregate(make_snapshot(name="Alicante", users=alicante_users), population=1_852_789)
    assert granada.mean_contributions == pytest.approx(29610 / 182)
    assert alicante.mean_contributions == pytest.approx(4941 / 52)
    ranking = mean_contributions_ranking([alicante, granada])
    assert [s.canonical_name for s in ranking] == ["Granada", "Alicante"]


def test_mean_ranking_tie_breaks_alphabetically():
    a = aggregate(make_snapshot(name="Bcity", users=[make_user("x", contributions=10)]))
    b = aggregate(make_snapshot(name="Acity", users=[make_user("y", contributions=10)]))
    assert [s.canonical_name for s in mean_contributions_ranking([a, b])] == ["Acity", "Bcity"]
    assert [s.canonical_name for s in mean_contributions_ranking([a])] == ["Bcity"]


def test_analyze_snapshot_bundle():
    users = [make_user(f"u{i}", contributions=2**i) for i in range(6)]
    bundle = analyze_snapshot(make_snapshot(users=users), population=1000)
    assert bundle.aggregate.users_per_million == pytest.approx(6000.0)
    assert bundle.zipf is not None and bundle.lorenz is not None
    tiny = analyze_snapshot(make_snapshot(users=[make_user("a"), make_user("b")]))
    assert tiny.zipf is None and tiny.lorenz is not None
