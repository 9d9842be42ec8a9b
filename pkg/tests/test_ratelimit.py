import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forgecensus.errors import BudgetExhausted
from forgecensus.ratelimit import Budget, BudgetAccountant, VirtualClock


def make_accountant(limit, window, clock=None):
    clock = clock or VirtualClock()
    return BudgetAccountant(Budget(limit, window), Budget(10_000, 3600.0), clock=clock), clock


def test_budget_validation():
    with pytest.raises(ValueError):
        Budget(-1, 60.0)
    with pytest.raises(ValueError):
        Budget(5, 0.0)
    Budget(0, 60.0)  # zero limit is allowed: always exhausted


def test_zero_budget_raises_immediately():
    acc, _ = make_accountant(0, 60.0)
    with pytest.raises(BudgetExhausted):
        acc.acquire("search")


def test_try_acquire_reports_retry_after():
    acc, clock = make_accountant(2, 60.0)
    acc.try_acquire("search")
    acc.try_acquire("search")
    with pytest.raises(BudgetExhausted) as excinfo:
        acc.try_acquire("search")
    assert excinfo.value.retry_after == pytest.approx(60.0)
    clock.advance(60.0)
    acc.try_acquire("search")  # slot freed


def test_blocking_acquire_waits_for_window():
    acc, clock = make_accountant(3, 60.0)
    times = [acc.acquire("search") for _ in range(7)]
    # 3 at t=0, then one per freed slot
    assert times[:3] == [0.0, 0.0, 0.0]
    assert times[3:6] == [60.0, 60.0, 60.0]
    assert times[6] == 120.0
    assert clock.now() == 120.0


def test_kinds_account_separately():
    acc, _ = make_accountant(1, 60.0)
    acc.try_acquire("search")
    acc.try_acquire("core")  # big core budget unaffected by search admission
    with pytest.raises(BudgetExhausted):
        acc.try_acquire("search")


def test_unknown_kind_rejected():
    acc, _ = make_accountant(1, 60.0)
    with pytest.raises(ValueError):
        acc.acquire("graphql")


def assert_rolling_window(times, limit, window):
    for i in range(len(times) - limit):
        span = times[i + limit] - times[i]
        assert span >= window - 1e-9, f"{limit + 1} admissions within {span}s window"


def test_rolling_window_never_exceeded_sequential():
    acc, _ = make_accountant(5, 10.0)
    times = [acc.acquire("search") for _ in range(200)]
    assert times == sorted(times)
    assert_rolling_window(times, 5, 10.0)


def test_concurrent_acquire_is_safe():
    # real clock, tiny window: hammer from 8 threads, then audit admissions
    acc = BudgetAccountant(Budget(4, 0.05), Budget(10_000, 3600.0))
    times = []
    lock = threading.Lock()

    def worker():
        for _ in range(10):
            t = acc.acquire("search")
            with lock:
                times.append(t)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(times) == 80
    assert_rolling_window(sorted(times), 4, 0.05)


@settings(max_examples=30, deadline=None)
@given(
    limit=st.integers(min_value=1, max_value=7),
    window=st.floats(min_value=0.5, max_value=120.0, allow_nan=False),
    gaps=st.lists(st.floats(min_value=0.0, max_value=30.0), min_size=1, max_size=60),
)
def test_rolling_window_property(limit, window, gaps):
    """Any interleaving of waits and acquires respects the budget."""
    acc, clock = make_accountant(limit, window)
    times = []
    for gap in gaps:
        clock.advance(gap)
        times.append(acc.acquire("search"))
    assert_rolling_window(times, limit, window)
