"""From a location spec to a validated census snapshot.

The pipeline: expand every alias search, deduplicate by login, keep only
profiles whose declared location really belongs to the province (substring
match after diacritic folding, then include/exclude patterns), collect
per-user activity metrics, and drop users with no contribution in the
trailing year.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import math
import re
import unicodedata
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import (
    CensusAborted,
    ForgeCensusError,
    InvalidPattern,
    NotFound,
    ParseError,
    SkippedUser,
)
from .transport import PAGE_SIZE, ForgeClient

log = logging.getLogger(__name__)

SPEC_KEYS = {"location", "include", "exclude", "population", "canonical_name"}

RANKING_KEYS = ("contributions", "followers", "stars")


def fold_text(text: str) -> str:
    """Lowercase and strip diacritics, so 'Granáda' and 'GRANADA' agree.

    People write their province in any official language and sometimes
    with typos (with or without tildes); matching happens on folded text.
    """
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch)).casefold()


@dataclass(frozen=True)
class LocationSpec:
    """A province: canonical label, alias search terms, disambiguation patterns."""

    canonical_name: str
    search_terms: tuple[str, ...]
    include_pattern: str | None = None
    exclude_pattern: str | None = None
    population: int | None = None

    def __post_init__(self):
        if not self.canonical_name:
            raise ParseError("canonical_name must be nonempty")
        if not self.search_terms or any(not t for t in self.search_terms):
            raise ParseError("at least one nonempty search term is required")
        if self.population is not None and self.population <= 0:
            raise ParseError("population must be > 0 when present")
        object.__setattr__(self, "_include_re", self._compile("include", self.include_pattern))
        object.__setattr__(self, "_exclude_re", self._compile("exclude", self.exclude_pattern))

    @staticmethod
    def _compile(name: str, pattern: str | None):
        if pattern is None:
            return None
        try:
            return re.compile(pattern, re.IGNORECASE)
        except re.error as exc:
            raise InvalidPattern(name, pattern, str(exc)) from None

    def fingerprint(self) -> str:
        """Stable hash of the spec; snapshots carry it for provenance."""
        blob = json.dumps(
            {
                "canonical_name": self.canonical_name,
                "search_terms": list(self.search_terms),
                "include": self.include_pattern,
                "exclude": self.exclude_pattern,
                "population": self.population,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass
class UserRecord:
    """One forge user with the activity metrics the rankings are built on."""

    login: str
    profile_location: str
    followers: int
    contributions_last_year: int
    stars_received: int
    longest_streak: int
    current_streak: int
    predominant_language: str | None = None
    avatar_url: str | None = None

    def __post_init__(self):
        counts = (
            self.followers,
            self.contributions_last_year,
            self.stars_received,
            self.longest_streak,
            self.current_streak,
        )
        if any(c < 0 for c in counts):
            raise ValueError(f"negative metric for {self.login!r}")
        if self.current_streak > self.longest_streak:
            raise ValueError(f"current streak exceeds longest for {self.login!r}")


@dataclass
class CensusSnapshot:
    """Deduplicated, filtered, active-only users for one province at one time."""

    canonical_name: str
    captured_at: dt.datetime
    users: list[UserRecord]
    spec_fingerprint: str

    def __post_init__(self):
        logins = [u.login for u in self.users]
        if len(set(logins)) != len(logins):
            dupes = sorted({l for l in logins if logins.count(l) > 1})
            raise ValueError(f"duplicate logins in snapshot: {dupes}")
        if any(u.contributions_last_year < 1 for u in self.users):
            raise ValueError("snapshot contains inactive users")

    @property
    def user_count(self) -> int:
        return len(self.users)

    def totals(self) -> dict[str, int]:
        return {
            "contributions": sum(u.contributions_last_year for u in self.users),
            "stars": sum(u.stars_received for u in self.users),
            "followers": sum(u.followers for u in self.users),
        }


def parse_location_spec(value) -> LocationSpec:
    """Accept the config object, or a bare city-name string shorthand."""
    if isinstance(value, str):
        if not value:
            raise ParseError("city name shorthand must be nonempty")
        return LocationSpec(canonical_name=value, search_terms=(value,))
    if not isinstance(value, dict):
        raise ParseError(f"location config must be an object or a string, got {type(value).__name__}")
    unknown = set(value) - SPEC_KEYS
    if unknown:
        raise ParseError(f"unknown keys in location config: {sorted(unknown)}")
    terms = value.get("location")
    if not isinstance(terms, list) or not terms or any(not isinstance(t, str) or not t for t in terms):
        raise ParseError('"location" must be a nonempty array of nonempty strings')
    population = value.get("population")
    if population is not None and (not isinstance(population, int) or isinstance(population, bool)):
        raise ParseError('"population" must be an integer')
    return LocationSpec(
        canonical_name=value.get("canonical_name") or terms[0],
        search_terms=tuple(terms),
        include_pattern=value.get("include"),
        exclude_pattern=value.get("exclude"),
        population=population,
    )


def load_location_spec(text: str) -> LocationSpec:
    """Parse a JSON config document into a LocationSpec."""
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from None
    return parse_location_spec(value)


def bundled_provinces() -> dict[str, LocationSpec]:
    """Default specs for the 20 most populated provinces, keyed by folded name."""
    from importlib import resources

    text = (resources.files("forgecensus") / "data" / "provinces.json").read_text("utf-8")
    specs = [parse_location_spec(v) for v in json.loads(text)]
    return {fold_text(s.canonical_name): s for s in specs}


def matches_location(spec: LocationSpec, raw_location: str | None) -> bool:
    """Does a raw profile location belong to the province?

    True iff the folded location contains any folded search term, passes
    the include pattern when present, and escapes the exclude pattern.
    Total function: empty and None locations are simply False.
    """
    if not raw_location:
        return False
    folded = fold_text(raw_location)
    if not any(fold_text(term) in folded for term in spec.search_terms):
        return False
    if spec._include_re is not None and spec._include_re.search(folded) is None:
        return False
    if spec._exclude_re is not None and spec._exclude_re.search(folded) is not None:
        return False
    return True


def compute_streaks(daily_counts) -> tuple[int, int]:
    """(longest, current) runs of consecutive active days in the calendar."""
    longest = run = 0
    for count in daily_counts:
        run = run + 1 if count > 0 else 0
        longest = max(longest, run)
    return longest, run  # the final run ends at capture date


def predominant_language(repos) -> str | None:
    """Most frequent repo language; ties break alphabetically."""
    counts = Counter(r.language for r in repos if r.language)
    if not counts:
        return None
    return min(counts, key=lambda lang: (-counts[lang], lang))


def collect_user(login: str, client: ForgeClient, raw_location: str | None = None) -> UserRecord:
    """Assemble one UserRecord from detail + repositories + calendar."""
    try:
        detail = client.fetch_user_detail(login)
    except NotFound:
        raise SkippedUser(login) from None
    repos = client.fetch_user_repos(login)
    calendar = client.fetch_contribution_calendar(login)
    counts = [c for _, c in calendar]
    longest, current = compute_streaks(counts)
    return UserRecord(
        login=detail.login,
        profile_location=detail.location or raw_location or "",
        followers=detail.followers,
        contributions_last_year=sum(counts),
        stars_received=sum(r.stars for r in repos),
        longest_streak=longest,
        current_streak=current,
        predominant_language=predominant_language(repos),
        avatar_url=detail.avatar_url,
    )


def _search_all(spec: LocationSpec, client: ForgeClient):
    """Union of every search term's result pages, deduplicated by login."""
    stubs: dict[str, object] = {}
    for term in spec.search_terms:
        first = client.search_users_by_location(term, 1)
        pages = [first]
        n_pages = max(1, math.ceil(first.total_count / PAGE_SIZE))
        for page in range(2, n_pages + 1):
            pages.append(client.search_users_by_location(term, page))
        for page in pages:
            for stub in page.items:
                stubs.setdefault(stub.login, stub)
    return stubs


def build_census(
    spec: LocationSpec,
    client: ForgeClient,
    ranking_key: str = "contributions",
    captured_at: dt.datetime | None = None,
) -> CensusSnapshot:
    """Run the whole pipeline for one province.

    A failure mid-collection aborts the census with a progress report;
    partial snapshots are never returned silently.
    """
    key_attr = {
        "contributions": "contributions_last_year",
        "followers": "followers",
        "stars": "stars_received",
    }.get(ranking_key)
    if key_attr is None:
        raise ValueError(f"ranking key must be one of {RANKING_KEYS}, got {ranking_key!r}")

    stubs = _search_all(spec, client)
    candidates = sorted(
        (s for s in stubs.values() if matches_location(spec, s.location)),
        key=lambda s: s.login,
    )
    log.info(
        "%s: %d unique search results, %d pass the location filter",
        spec.canonical_name, len(stubs), len(candidates),
    )

    records: list[UserRecord] = []
    skipped: list[str] = []

    def _collect(stub) -> UserRecord | None:
        try:
            return collect_user(stub.login, client, raw_location=stub.location)
        except SkippedUser:
            return None

    def _consume(results) -> None:
        for stub, record in zip(candidates, results):
            if record is None:
                skipped.append(stub.login)
            else:
                records.append(record)

    try:
        if client.replaying or client.cfg.max_in_flight == 1:
            _consume(map(_collect, candidates))
        else:
            with ThreadPoolExecutor(max_workers=client.cfg.max_in_flight) as pool:
                _consume(pool.map(_collect, candidates))
    except ForgeCensusError as exc:
        raise CensusAborted(
            f"census for {spec.canonical_name} failed: {exc}",
            collected=len(records) + len(skipped),
            expected=len(candidates),
        ) from exc

    if skipped:
        log.info("%s: skipped %d vanished users: %s", spec.canonical_name, len(skipped), skipped)

    # re-check against the stored location: the detail profile wins over the stub
    located = [r for r in records if matches_location(spec, r.profile_location)]
    active = [r for r in located if r.contributions_last_year > 0]
    log.info(
        "%s: %d collected, %d after location re-check, %d active",
        spec.canonical_name, len(records), len(located), len(active),
    )

    active.sort(key=lambda u: (-getattr(u, key_attr), u.login))
    return CensusSnapshot(
        canonical_name=spec.canonical_name,
        captured_at=captured_at or client.capture_time(),
        users=active,
        spec_fingerprint=spec.fingerprint(),
    )
