"""Authenticated, rate-limited, paginated access to the forge REST API.

All requests funnel through one BudgetAccountant and can be recorded to or
replayed from a fixture directory, so everything above this layer is
testable offline. Fixture files live in one directory, one file per
request, keyed by a stable hash of (method, path, query); the file holds
the status line followed by the raw body bytes.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple
from urllib.parse import quote, urlencode

from .errors import (
    AuthRejected,
    FixtureMiss,
    NotFound,
    UpstreamError,
)
from .ratelimit import Budget, BudgetAccountant, MonotonicClock, VirtualClock

log = logging.getLogger(__name__)

PAGE_SIZE = 30  # search page size; fixed to keep fixtures small
REPO_PAGE_SIZE = 100

# Modern defaults; the original constraint was a far harsher hourly cap.
AUTH_SEARCH_BUDGET = Budget(30, 60.0)
AUTH_CORE_BUDGET = Budget(5000, 3600.0)
ANON_SEARCH_BUDGET = Budget(10, 60.0)
ANON_CORE_BUDGET = Budget(60, 3600.0)

TRANSIENT_STATUSES = frozenset({429, 500, 502, 503, 504})

UTC = dt.timezone.utc


@dataclass(frozen=True)
class FixtureMode:
    kind: str  # "off" | "record" | "replay"
    path: Path | None = None

    def __post_init__(self):
        if self.kind not in ("off", "record", "replay"):
            raise ValueError(f"unknown fixture mode {self.kind!r}")
        if self.kind != "off" and self.path is None:
            raise ValueError(f"fixture mode {self.kind!r} needs a directory")

    @classmethod
    def off(cls) -> "FixtureMode":
        return cls("off")

    @classmethod
    def record(cls, path) -> "FixtureMode":
        return cls("record", Path(path))

    @classmethod
    def replay(cls, path) -> "FixtureMode":
        return cls("replay", Path(path))


@dataclass
class TransportConfig:
    """Everything the client needs: credentials, budgets, retries, fixtures.

    Budgets default by authentication status. A limit of 0 is permitted
    and means "always exhausted", which is how tests force the error path.
    """

    auth_token: str | None = None
    search_budget: Budget | None = None
    core_budget: Budget | None = None
    max_retries: int = 3
    backoff_base: float = 0.5
    fixture_mode: FixtureMode = field(default_factory=FixtureMode.off)
    max_in_flight: int = 4
    base_url: str = "https://api.github.com"

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.backoff_base < 0:
            raise ValueError("backoff_base must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.search_budget is None:
            self.search_budget = AUTH_SEARCH_BUDGET if self.auth_token else ANON_SEARCH_BUDGET
        if self.core_budget is None:
            self.core_budget = AUTH_CORE_BUDGET if self.auth_token else ANON_CORE_BUDGET

    @classmethod
    def for_replay(cls, path, **overrides) -> "TransportConfig":
        """Replay config with roomy budgets; no real network ever."""
        overrides.setdefault("search_budget", Budget(10_000, 60.0))
        overrides.setdefault("core_budget", Budget(1_000_000, 3600.0))
        return cls(fixture_mode=FixtureMode.replay(path), **overrides)

    @classmethod
    def for_record(cls, path, auth_token=None, **overrides) -> "TransportConfig":
        return cls(auth_token=auth_token, fixture_mode=FixtureMode.record(path), **overrides)


class UserStub(NamedTuple):
    login: str
    location: str
    profile_url: str


@dataclass(frozen=True)
class RawUserPage:
    items: tuple[UserStub, ...]
    total_count: int
    page_index: int  # 1-based

    def __post_init__(self):
        if self.page_index < 1:
            raise ValueError("page_index must be >= 1")
        if len(self.items) > PAGE_SIZE:
            raise ValueError(f"page holds {len(self.items)} items, max {PAGE_SIZE}")


@dataclass(frozen=True)
class RawUserDetail:
    login: str
    location: str
    followers: int
    avatar_url: str | None
    repos_url: str


@dataclass(frozen=True)
class RawRepo:
    name: str
    stars: int
    language: str | None
    fork: bool = False


def request_signature(method: str, path: str, params: dict) -> str:
    query = urlencode(sorted(params.items()), quote_via=quote)
    return f"{method} {path}?{query}"


def fixture_key(method: str, path: str, params: dict) -> str:
    sig = request_signature(method, path, params)
    return hashlib.sha256(sig.encode("utf-8")).hexdigest()[:32]


class FixtureStore:
    """One directory of recorded responses plus a meta.json capture stamp."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def _file(self, key: str) -> Path:
        return self.root / f"{key}.http"

    def load(self, key: str) -> tuple[int, bytes] | None:
        f = self._file(key)
        if not f.exists():
            return None
        raw = f.read_bytes()
        head, _, body = raw.partition(b"\n")
        return int(head.decode("ascii")), body

    def save(self, key: str, status: int, body: bytes, signature: str = "") -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        self._file(key).write_bytes(f"{status}\n".encode("ascii") + body)
        if signature:
            with (self.root / "index.txt").open("a", encoding="utf-8") as fh:
                fh.write(f"{key}  {signature}\n")

    def recorded_at(self) -> dt.datetime | None:
        meta = self.root / "meta.json"
        if not meta.exists():
            return None
        stamp = json.loads(meta.read_text(encoding="utf-8"))["recorded_at"]
        return dt.datetime.strptime(stamp, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=UTC)

    def write_recorded_at(self, when: dt.datetime) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        stamp = when.astimezone(UTC).strftime("%Y-%m-%dT%H:%M:%SZ")
        (self.root / "meta.json").write_text(
            json.dumps({"recorded_at": stamp}) + "\n", encoding="utf-8"
        )


class ForgeClient:
    """The one way in and out of the forge API.

    Up to max_in_flight live requests run concurrently; replay is fully
    deterministic and may be driven single-threaded.
    """

    def __init__(self, cfg: TransportConfig, clock=None, session=None):
        self.cfg = cfg
        mode = cfg.fixture_mode
        self.fixtures = FixtureStore(mode.path) if mode.kind != "off" else None
        if clock is None:
            # replay has no upstream to wait for, so waits are virtual
            clock = VirtualClock() if mode.kind == "replay" else MonotonicClock()
        self.clock = clock
        self.budget = BudgetAccountant(cfg.search_budget, cfg.core_budget, clock=clock)
        self._inflight = threading.Semaphore(cfg.max_in_flight)
        self._session = session
        self._session_lock = threading.Lock()

    # -- plumbing --------------------------------------------------------

    @property
    def replaying(self) -> bool:
        return self.cfg.fixture_mode.kind == "replay"

    def capture_time(self) -> dt.datetime:
        """When the data was (or is being) captured; drives snapshot stamps."""
        if self.fixtures is not None:
            recorded = self.fixtures.recorded_at()
            if recorded is not None:
                return recorded
            if self.replaying:
                raise FixtureMiss(f"fixture set {self.fixtures.root} has no meta.json")
        now = dt.datetime.now(UTC).replace(microsecond=0)
        if self.fixtures is not None:  # record mode stamps the session once
            self.fixtures.write_recorded_at(now)
        return now

    def _http_session(self):
        with self._session_lock:
            if self._session is None:
                import requests

                self._session = requests.Session()
            return self._session

    def _send_live(self, url: str) -> tuple[int, bytes]:
        """One real GET. Seam for tests that script upstream behaviour."""
        import requests

        headers = {"Accept": "application/json", "User-Agent": "forge-census"}
        if self.cfg.auth_token:
            headers["Authorization"] = f"token {self.cfg.auth_token}"
        try:
            resp = self._http_session().get(url, headers=headers, timeout=(10, 30))
        except requests.RequestException as exc:
            raise ConnectionError(str(exc)) from exc
        return resp.status_code, resp.content

    def _request(self, kind: str, path: str, params: dict) -> tuple[int, bytes]:
        """Budgeted GET with retry/backoff; returns terminal (status, body)."""
        key = fixture_key("GET", path, params)
        sig = request_signature("GET", path, params)
        self.budget.acquire(kind)

        if self.replaying:
            hit = self.fixtures.load(key)
            if hit is None:
                raise FixtureMiss(f"no recorded response for {sig}")
            return hit

        url = f"{self.cfg.base_url}{path}?{urlencode(sorted(params.items()), quote_via=quote)}"
        status, body = None, b""
        for attempt in range(self.cfg.max_retries + 1):
            try:
                status, body = self._send_live(url)
            except ConnectionError as exc:
                status, body = None, str(exc).encode()
            else:
                if status in (401, 403):
                    raise AuthRejected(f"forge rejected credentials ({status}) for {sig}")
                if status not in TRANSIENT_STATUSES:
                    break
            if attempt < self.cfg.max_retries:
                log.warning("transient failure (%s) for %s, retry %d", status, sig, attempt + 1)
                self.clock.sleep(self.cfg.backoff_base * 2**attempt)
        else:
            raise UpstreamError(
                f"gave up on {sig} after {self.cfg.max_retries} retries", status=status
            )
        if status not in (200, 404):
            raise UpstreamError(f"unexpected status {status} for {sig}", status=status)
        if self.fixtures is not None:
            self.fixtures.save(key, status, body, signature=sig)
        return status, body

    def _request_json(self, kind: str, path: str, params: dict):
        with self._inflight:
            status, body = self._request(kind, path, params)
        if status == 404:
            raise NotFound(f"{path} does not exist upstream")
        try:
            return json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise UpstreamError(f"malformed response body for {path}: {exc}") from exc

    # -- operations ------------------------------------------------------

    def search_users_by_location(self, term: str, page: int) -> RawUserPage:
        """One page of the forge's user search for a location-qualified query."""
        if not term:
            raise ValueError("search term must be nonempty")
        if page < 1:
            raise ValueError("page must be >= 1")
        payload = self._request_json(
            "search",
            "/search/users",
            {"q": f'location:"{term}"', "page": page, "per_page": PAGE_SIZE},
        )
        try:
            items = tuple(
                UserStub(it["login"], it.get("location") or "", it.get("html_url") or "")
                for it in payload["items"]
            )
            return RawUserPage(items=items, total_count=int(payload["total_count"]), page_index=page)
        except (KeyError, TypeError, ValueError) as exc:
            raise UpstreamError(f"malformed search payload: {exc}") from exc

    def fetch_user_detail(self, login: str) -> RawUserDetail:
        if not login:
            raise ValueError("login must be nonempty")
        try:
            payload = self._request_json("core", f"/users/{login}", {})
        except NotFound:
            raise NotFound(f"user {login!r} does not exist upstream") from None
        try:
            return RawUserDetail(
                login=payload["login"],
                location=payload.get("location") or "",
                followers=int(payload.get("followers") or 0),
                avatar_url=payload.get("avatar_url"),
                repos_url=payload.get("repos_url") or f"/users/{login}/repos",
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise UpstreamError(f"malformed user payload for {login}: {exc}") from exc

    def fetch_user_repos(self, login: str) -> tuple[RawRepo, ...]:
        if not login:
            raise ValueError("login must be nonempty")
        payload = self._request_json(
            "core", f"/users/{login}/repos", {"per_page": REPO_PAGE_SIZE}
        )
        try:
            return tuple(
                RawRepo(
                    name=r["name"],
                    stars=int(r.get("stargazers_count") or 0),
                    language=r.get("language"),
                    fork=bool(r.get("fork", False)),
                )
                for r in payload
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise UpstreamError(f"malformed repos payload for {login}: {exc}") from exc

    def fetch_contribution_calendar(self, login: str) -> list[tuple[dt.date, int]]:
        """Daily contribution counts covering the trailing 365/366 days."""
        if not login:
            raise ValueError("login must be nonempty")
        payload = self._request_json("core", f"/users/{login}/contributions", {})
        try:
            start = dt.date.fromisoformat(payload["start"])
            counts = [int(c) for c in payload["counts"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise UpstreamError(f"malformed calendar payload for {login}: {exc}") from exc
        if len(counts) not in (365, 366):
            raise UpstreamError(
                f"calendar for {login} has {len(counts)} days, expected 365 or 366"
            )
        if any(c < 0 for c in counts):
            raise UpstreamError(f"calendar for {login} has negative daily counts")
        one_day = dt.timedelta(days=1)
        return [(start + i * one_day, c) for i, c in enumerate(counts)]
