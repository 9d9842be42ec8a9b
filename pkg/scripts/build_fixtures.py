#!/usr/bin/env python3
"""Regenerate the frozen offline test corpus and golden report files.

Writes, deterministically (fixed seed, fixed capture stamp):

  tests/data/specs/granada.json      the province config the suite replays
  tests/data/fixtures/granada/       one recorded response per request
  tests/data/golden/                 frozen report + chart bytes

The synthetic Granada census is engineered so the aggregate row comes out
at exactly 182 users, 29610 contributions, 1416 stars, 1243 followers.
Run from anywhere; paths resolve relative to the repository root.
"""

from __future__ import annotations

import datetime as dt
import json
import random
import shutil
import sys
from pathlib import Path

from forgecensus import cli
from forgecensus.charts import chart
from forgecensus.transport import (
    PAGE_SIZE,
    REPO_PAGE_SIZE,
    FixtureStore,
    fixture_key,
    request_signature,
)

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "tests" / "data"

SEED = 20150110
CAPTURE = dt.datetime(2015, 1, 10, 12, 0, 0, tzinfo=dt.timezone.utc)
CALENDAR_DAYS = 365

TARGET_USERS = 182
TARGET_CONTRIBUTIONS = 29610
TARGET_STARS = 1416
TARGET_FOLLOWERS = 1243
POPULATION = 919663

LOCATION_VARIANTS = [
    "Granada",
    "Granada, Spain",
    "Granada, España",
    "granada",
    "GRANADA",
    "Granáda",
    "granada, españa",
    "Granada (Spain)",
    "Granada, Andalucía",
]

LANGUAGES = ["JavaScript", "Python", "Ruby", "Java", "PHP", "C++", "Shell", None]

FIRST = [
    "alba", "bruno", "carmen", "dario", "elena", "felix", "gema", "hugo", "irene",
    "javi", "katia", "luis", "maria", "nacho", "olga", "pablo", "quique", "rosa",
    "sergio", "teresa", "uxia", "victor", "wendy", "xavi", "yolanda", "zoe",
]
SECOND = [
    "codes", "dev", "hack", "lab", "bits", "soft", "web", "data", "apps", "ops",
    "net", "sys", "io", "ml", "gfx",
]
REPO_WORDS = [
    "tools", "engine", "parser", "notes", "scripts", "kata", "playground", "demo",
    "api", "bot", "viz", "dotfiles", "solver", "tracker",
]


def allocate(total: int, weights: list[float], floor_min: int = 0) -> list[int]:
    """Integer allocation of `total` proportional to weights, exact sum."""
    s = sum(weights)
    raw = [total * w / s for w in weights]
    vals = [max(int(r), floor_min) for r in raw]
    drift = total - sum(vals)
    order = sorted(range(len(vals)), key=lambda i: (raw[i] - int(raw[i]), -i), reverse=True)
    i = 0
    while drift > 0:
        vals[order[i % len(vals)]] += 1
        drift -= 1
        i += 1
    while drift < 0:
        j = max(range(len(vals)), key=lambda k: vals[k])
        vals[j] -= 1
        drift += 1
    return vals


def make_logins(rng: random.Random, count: int) -> list[str]:
    logins: list[str] = []
    seen = set()
    while len(logins) < count:
        name = f"{rng.choice(FIRST)}-{rng.choice(SECOND)}"
        if rng.random() < 0.4:
            name += str(rng.randint(2, 99))
        if name not in seen:
            seen.add(name)
            logins.append(name)
    return logins


def make_calendar(rng: random.Random, total: int) -> list[int]:
    counts = [0] * CALENDAR_DAYS
    for _ in range(total):
        counts[rng.randrange(CALENDAR_DAYS)] += 1
    return counts


def make_repos(rng: random.Random, login: str, stars: int) -> list[dict]:
    n = rng.randint(1, 5)
    star_split = allocate(stars, [rng.random() + 0.05 for _ in range(n)]) if stars else [0] * n
    repos = []
    for i in range(n):
        repos.append(
            {
                "name": f"{rng.choice(REPO_WORDS)}-{i}",
                "stargazers_count": star_split[i],
                "language": rng.choice(LANGUAGES),
                "fork": rng.random() < 0.2,
            }
        )
    return repos


class Recorder:
    """Writes responses through the same keying the client uses."""

    def __init__(self, root: Path):
        self.store = FixtureStore(root)

    def put(self, status: int, path: str, params: dict, payload) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.store.save(
            fixture_key("GET", path, params),
            status,
            body,
            signature=request_signature("GET", path, params),
        )

    def search_pages(self, term: str, stubs: list[dict]) -> None:
        total = len(stubs)
        pages = max(1, -(-total // PAGE_SIZE))
        for page in range(1, pages + 1):
            chunk = stubs[(page - 1) * PAGE_SIZE : page * PAGE_SIZE]
            self.put(
                200,
                "/search/users",
                {"q": f'location:"{term}"', "page": page, "per_page": PAGE_SIZE},
                {"total_count": total, "items": chunk},
            )

    def user(self, login: str, location: str | None, followers: int,
             repos: list[dict], calendar: list[int]) -> None:
        self.put(
            200,
            f"/users/{login}",
            {},
            {
                "login": login,
                "location": location,
                "followers": followers,
                "avatar_url": f"https://forge.example/avatars/{login}.png",
                "repos_url": f"/users/{login}/repos",
            },
        )
        self.put(200, f"/users/{login}/repos", {"per_page": REPO_PAGE_SIZE}, repos)
        start = (CAPTURE.date() - dt.timedelta(days=CALENDAR_DAYS - 1)).isoformat()
        self.put(
            200, f"/users/{login}/contributions", {}, {"start": start, "counts": calendar}
        )


def stub(login: str, location: str) -> dict:
    return {
        "login": login,
        "location": location,
        "html_url": f"https://forge.example/{login}",
    }


def build_granada(rec: Recorder, rng: random.Random) -> None:
    logins = make_logins(rng, TARGET_USERS)
    locations = [LOCATION_VARIANTS[i % len(LOCATION_VARIANTS)] for i in range(TARGET_USERS)]

    weights = [r ** -1.1 for r in range(1, TARGET_USERS + 1)]
    contributions = allocate(TARGET_CONTRIBUTIONS, weights, floor_min=1)
    star_weights = [rng.random() ** 3 if rng.random() < 0.45 else 0.0 for _ in range(TARGET_USERS)]
    if sum(star_weights) == 0:
        star_weights[0] = 1.0
    stars = allocate(TARGET_STARS, star_weights)
    follower_weights = [rng.random() ** 2 if rng.random() < 0.6 else 0.0 for _ in range(TARGET_USERS)]
    followers = allocate(TARGET_FOLLOWERS, follower_weights)

    assert sum(contributions) == TARGET_CONTRIBUTIONS
    assert sum(stars) == TARGET_STARS
    assert sum(followers) == TARGET_FOLLOWERS
    assert min(contributions) >= 1

    kept = []
    for i, login in enumerate(logins):
        kept.append(
            {
                "login": login,
                "location": locations[i],
                "contributions": contributions[i],
                "stars": stars[i],
                "followers": followers[i],
            }
        )

    # one kept user leaves the detail location empty; the search stub fills the gap
    empty_detail = kept[77]["login"]

    extras = [
        # filtered out before any collection happens
        stub("nica-traveller", "Granada, Nicaragua"),
        # collected, then dropped by the zero-contributions rule
        stub("sleepy-coder", "Granada, España"),
        # vanished between search and fetch: recorded 404
        stub("ghost-account", "Granada"),
        # moved away: stub says Granada, the profile now says Sevilla
        stub("moved-away", "Granada, Spain"),
    ]

    term1 = [stub(u["login"], u["location"]) for u in kept] + extras
    rng.shuffle(term1)
    rec.search_pages("Granada", term1)

    espana = [
        stub(u["login"], u["location"]) for u in kept if "espa" in u["location"].casefold()
    ]
    rec.search_pages("Granada, España", espana)

    for u in kept:
        detail_location = u["location"]
        if u["login"] == empty_detail:
            detail_location = None
        rec.user(
            u["login"],
            detail_location,
            u["followers"],
            make_repos(rng, u["login"], u["stars"]),
            make_calendar(rng, u["contributions"]),
        )

    rec.user("sleepy-coder", "Granada, España", 7, make_repos(rng, "sleepy-coder", 3),
             [0] * CALENDAR_DAYS)
    rec.user("moved-away", "Sevilla, España", 11, make_repos(rng, "moved-away", 5),
             make_calendar(rng, 120))
    rec.put(404, "/users/ghost-account", {}, {"message": "Not Found"})


def build_baleares(rec: Recorder) -> None:
    people = [
        stub("tramuntana-dev", "Palma de Mallorca, Illes Balears"),
        stub("ensaimada-ops", "palma de mallorca"),
        stub("soller-webs", "Palma de Mallorca, España"),
        stub("bellver-data", "Palma de Mallorca, Baleares"),
    ]
    rec.search_pages("Palma de Mallorca", people)


def build_pakozm(rec: Recorder, rng: random.Random) -> None:
    rec.user(
        "pakozm",
        "Valencia, España",
        142,
        make_repos(rng, "pakozm", 260),
        make_calendar(rng, 1462),
    )


def write_spec() -> Path:
    spec_dir = DATA / "specs"
    spec_dir.mkdir(parents=True, exist_ok=True)
    spec_path = spec_dir / "granada.json"
    spec_path.write_text(
        json.dumps(
            {
                "canonical_name": "Granada",
                "location": ["Granada", "Granada, España"],
                "exclude": "Nicaragua|Hills",
                "population": POPULATION,
            },
            ensure_ascii=False,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return spec_path


def write_goldens(spec_path: Path, fixtures: Path) -> None:
    golden = DATA / "golden"
    if golden.exists():
        shutil.rmtree(golden)
    golden.mkdir(parents=True)
    for fmt in ("md", "csv", "json"):
        rc = cli.main(
            [
                "census",
                str(spec_path),
                "--replay",
                str(fixtures),
                "--format",
                fmt,
                "--out",
                str(golden / f"granada.{fmt}"),
            ]
        )
        if rc != 0:
            raise SystemExit(f"census golden run failed with exit code {rc}")

    # frozen chart bytes from fixed synthetic series
    rng = random.Random(6)
    series = []
    for i, name in enumerate(
        ["Madrid", "Barcelona", "Valencia", "Granada", "Sevilla", "Zaragoza"]
    ):
        n = 120 - i * 12
        series.append((name, sorted((rng.randint(1, 4000) for _ in range(n)), reverse=True)))
    (golden / "chart_rank_contributions.svg").write_bytes(chart("rank_contributions", series))

    from forgecensus.analytics import lorenz_curve

    lorenz_series = [(name, lorenz_curve(values)) for name, values in series]
    (golden / "chart_lorenz.svg").write_bytes(chart("lorenz", lorenz_series))


def main() -> int:
    fixtures = DATA / "fixtures" / "granada"
    if fixtures.exists():
        shutil.rmtree(fixtures)
    fixtures.mkdir(parents=True)

    rng = random.Random(SEED)
    rec = Recorder(fixtures)
    build_granada(rec, rng)
    build_baleares(rec)
    build_pakozm(rec, rng)
    rec.store.write_recorded_at(CAPTURE)

    spec_path = write_spec()
    write_goldens(spec_path, fixtures)

    n_files = sum(1 for _ in fixtures.iterdir())
    print(f"fixtures: {n_files} files in {fixtures}")
    print(f"goldens:  {sorted(p.name for p in (DATA / 'golden').iterdir())}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
