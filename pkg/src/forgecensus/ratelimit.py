"""Rolling-window request budgets with a pluggable clock.

The accountant is the single gate every upstream request passes through.
It guarantees that no more than ``limit`` requests are admitted inside any
rolling window of ``window`` seconds, under any interleaving of callers.
Tests drive it with a virtual clock so budget behaviour is provable
without waiting.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass

from .errors import BudgetExhausted


@dataclass(frozen=True)
class Budget:
    """Requests allowed per rolling window. limit 0 means never admit."""

    limit: int
    window: float  # seconds

    def __post_init__(self):
        if self.limit < 0:
            raise ValueError("budget limit must be >= 0")
        if self.window <= 0:
            raise ValueError("budget window must be positive")


class MonotonicClock:
    """Real time. sleep() actually sleeps."""

    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class VirtualClock:
    """Simulated time: sleep() advances instantly. Used in replay and tests."""

    def __init__(self, start: float = 0.0):
        self._now = start
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            return self._now

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            with self._lock:
                self._now += seconds

    def advance(self, seconds: float) -> None:
        self.sleep(seconds)


class _Window:
    """Admission timestamps for one budget, pruned to the rolling window."""

    def __init__(self, budget: Budget):
        self.budget = budget
        self.admitted: deque[float] = deque()

    def wait_time(self, now: float) -> float:
        """Seconds until a slot frees up; 0.0 if one is free right now.

        A slot admitted at t occupies [t, t + window); it frees at exactly
        t + window. Pruning and waiting share the same float expression so
        the boundary cannot round two different ways.
        """
        while self.admitted and self.admitted[0] + self.budget.window <= now:
            self.admitted.popleft()
        if len(self.admitted) < self.budget.limit:
            return 0.0
        return self.admitted[0] + self.budget.window - now

    def admit(self, now: float) -> None:
        self.admitted.append(now)


class BudgetAccountant:
    """Shared, thread-safe gate for the 'search' and 'core' request kinds."""

    def __init__(self, search: Budget, core: Budget, clock=None):
        self.clock = clock if clock is not None else MonotonicClock()
        self._windows = {"search": _Window(search), "core": _Window(core)}
        self._lock = threading.Lock()

    def _window(self, kind: str) -> _Window:
        try:
            return self._windows[kind]
        except KeyError:
            raise ValueError(f"unknown budget kind {kind!r}") from None

    def try_acquire(self, kind: str) -> float:
        """Admit one request now or raise BudgetExhausted with retry_after."""
        win = self._window(kind)
        with self._lock:
            now = self.clock.now()
            wait = win.wait_time(now)
            if wait > 0 or win.budget.limit == 0:
                raise BudgetExhausted(
                    f"{kind} budget of {win.budget.limit}/{win.budget.window:g}s exhausted",
                    retry_after=wait,
                )
            win.admit(now)
            return now

    def acquire(self, kind: str) -> float:
        """Block (via the clock) until one request is admitted.

        Returns the admission time. A zero-limit budget can never admit,
        so it raises BudgetExhausted immediately instead of waiting forever.
        """
        win = self._window(kind)
        if win.budget.limit == 0:
            raise BudgetExhausted(
                f"{kind} budget is zero; no request can ever be admitted"
            )
        while True:
            with self._lock:
                now = self.clock.now()
                wait = win.wait_time(now)
                if wait <= 0:
                    win.admit(now)
                    return now
            # sleep outside the lock so other callers can race for the slot
            self.clock.sleep(wait)
