"""Render a census snapshot into Markdown, CSV or JSON, byte-deterministically.

Same inputs, same bytes: timestamps come from the snapshot, never the
wall clock, column order comes from the template, and JSON keys are
sorted. The JSON form is also the on-disk snapshot schema, so it parses
back into an equivalent snapshot (see parse_json_report).
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
from dataclasses import dataclass

from .analytics import AggregateStats, AnalyticsBundle, LorenzGini, ZipfFit
from .census import CensusSnapshot, UserRecord
from .errors import CorruptSnapshot, UnknownColumn

SCHEMA = "forge-census/1"

COLUMNS = (
    "rank",
    "login",
    "avatar",
    "followers",
    "contributions",
    "stars",
    "longest_streak",
    "current_streak",
    "language",
    "location",
)

# the fixed Markdown table layout
MARKDOWN_HEADERS = {
    "login": "user",
    "longest_streak": "streak",
    "current_streak": "current streak",
}

DEFAULT_MARKDOWN_COLUMNS = (
    "rank", "login", "contributions", "followers", "stars", "longest_streak", "language",
)
DEFAULT_CSV_COLUMNS = COLUMNS

DEFAULT_TITLE = "{province}: {count} active users ({date})"

_NUMERIC = {"rank", "followers", "contributions", "stars", "longest_streak", "current_streak"}


@dataclass(frozen=True)
class ReportTemplate:
    format: str  # "markdown" | "csv" | "json"
    columns: tuple[str, ...]
    title_pattern: str = DEFAULT_TITLE

    def __post_init__(self):
        if self.format not in ("markdown", "csv", "json"):
            raise ValueError(f"unknown report format {self.format!r}")
        if not self.columns:
            raise UnknownColumn("column set must be nonempty")
        seen = set()
        for col in self.columns:
            if col not in COLUMNS:
                raise UnknownColumn(f"unknown column {col!r}, expected one of {COLUMNS}")
            if col in seen:
                raise UnknownColumn(f"duplicate column {col!r}")
            seen.add(col)

    @classmethod
    def default(cls, format: str, columns=None) -> "ReportTemplate":
        if columns is None:
            columns = DEFAULT_MARKDOWN_COLUMNS if format == "markdown" else DEFAULT_CSV_COLUMNS
        return cls(format=format, columns=tuple(columns))


def _stamp(when: dt.datetime) -> str:
    return when.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _cell(user: UserRecord, column: str, rank: int) -> str:
    if column == "rank":
        return str(rank)
    if column == "login":
        return user.login
    if column == "avatar":
        return user.avatar_url or ""
    if column == "followers":
        return str(user.followers)
    if column == "contributions":
        return str(user.contributions_last_year)
    if column == "stars":
        return str(user.stars_received)
    if column == "longest_streak":
        return str(user.longest_streak)
    if column == "current_streak":
        return str(user.current_streak)
    if column == "language":
        return user.predominant_language or ""
    if column == "location":
        return user.profile_location
    raise UnknownColumn(f"unknown column {column!r}")


def _md_escape(text: str) -> str:
    return text.replace("|", "\\|")


def _render_markdown(snapshot, bundle, template, limit) -> str:
    totals = snapshot.totals()
    title = template.title_pattern.format(
        province=snapshot.canonical_name,
        date=_stamp(snapshot.captured_at)[:10],
        count=snapshot.user_count,
    )
    lines = [f"# {title}", ""]
    lines.append(
        f"Captured {_stamp(snapshot.captured_at)}. "
        f"Totals: {totals['contributions']} contributions, "
        f"{totals['stars']} stars, {totals['followers']} followers."
    )
    if bundle is not None and bundle.zipf is not None:
        lines.append(
            f"Rank-size fit: exponent {bundle.zipf.exponent:.4f} "
            f"(objective {bundle.zipf.objective:.4f}, {bundle.zipf.n_points} points)."
        )
    if bundle is not None and bundle.lorenz is not None:
        lines.append(f"Gini index: {bundle.lorenz.gini:.4f}.")
    users = snapshot.users if limit is None else snapshot.users[:limit]
    if limit is not None and limit < snapshot.user_count:
        lines.append(f"Showing the top {len(users)} of {snapshot.user_count} users.")
    lines.append("")
    headers = [MARKDOWN_HEADERS.get(c, c) for c in template.columns]
    lines.append("| " + " | ".join(headers) + " |")
    lines.append("|" + "|".join("---:" if c in _NUMERIC else "---" for c in template.columns) + "|")
    for rank, user in enumerate(users, start=1):
        cells = []
        for col in template.columns:
            value = _cell(user, col, rank)
            if col == "avatar" and value:
                value = f"![{user.login}]({value})"
            cells.append(_md_escape(value))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _render_csv(snapshot, template, limit) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(template.columns)
    users = snapshot.users if limit is None else snapshot.users[:limit]
    for rank, user in enumerate(users, start=1):
        writer.writerow([_cell(user, col, rank) for col in template.columns])
    return buf.getvalue()


def _user_to_json(user: UserRecord, rank: int) -> dict:
    return {
        "rank": rank,
        "login": user.login,
        "location": user.profile_location,
        "followers": user.followers,
        "contributions": user.contributions_last_year,
        "stars": user.stars_received,
        "longest_streak": user.longest_streak,
        "current_streak": user.current_streak,
        "language": user.predominant_language,
        "avatar": user.avatar_url,
    }


def _aggregates_to_json(agg: AggregateStats) -> dict:
    return {
        "province": agg.canonical_name,
        "population": agg.population,
        "user_count": agg.user_count,
        "total_contributions": agg.total_contributions,
        "total_stars": agg.total_stars,
        "total_followers": agg.total_followers,
        "mean_contributions": agg.mean_contributions,
        "users_per_million": agg.users_per_million,
    }


def _render_json(snapshot, bundle) -> str:
    totals = snapshot.totals()
    doc = {
        "meta": {
            "schema": SCHEMA,
            "province": snapshot.canonical_name,
            "captured_at": _stamp(snapshot.captured_at),
            "spec_fingerprint": snapshot.spec_fingerprint,
            "user_count": snapshot.user_count,
            "total_contributions": totals["contributions"],
            "total_stars": totals["stars"],
            "total_followers": totals["followers"],
        },
        "users": [_user_to_json(u, rank) for rank, u in enumerate(snapshot.users, start=1)],
        "aggregates": None,
        "zipf": None,
        "gini": None,
        "lorenz": None,
    }
    if bundle is not None:
        if bundle.aggregate is not None:
            doc["aggregates"] = _aggregates_to_json(bundle.aggregate)
        if bundle.zipf is not None:
            doc["zipf"] = {
                "exponent": bundle.zipf.exponent,
                "objective": bundle.zipf.objective,
                "n_points": bundle.zipf.n_points,
            }
        if bundle.lorenz is not None:
            doc["gini"] = bundle.lorenz.gini
            doc["lorenz"] = [[x, y] for x, y in bundle.lorenz.points]
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def render(
    snapshot: CensusSnapshot,
    bundle: AnalyticsBundle | None,
    template: ReportTemplate,
    limit: int | None = None,
) -> bytes:
    """Document bytes for the snapshot in the template's format.

    limit truncates the user table in markdown/csv; the JSON document is
    always the whole snapshot because it doubles as the storage schema.
    """
    if limit is not None and limit < 0:
        raise ValueError("limit must be >= 0")
    if template.format == "markdown":
        text = _render_markdown(snapshot, bundle, template, limit)
    elif template.format == "csv":
        text = _render_csv(snapshot, template, limit)
    else:
        text = _render_json(snapshot, bundle)
    return text.encode("utf-8")


def parse_json_report(data: bytes) -> tuple[CensusSnapshot, AnalyticsBundle | None]:
    """Inverse of the JSON renderer; used by the snapshot store."""
    try:
        doc = json.loads(data.decode("utf-8"))
        meta = doc["meta"]
        if meta.get("schema") != SCHEMA:
            raise CorruptSnapshot(f"unknown snapshot schema {meta.get('schema')!r}")
        captured = dt.datetime.strptime(meta["captured_at"], "%Y-%m-%dT%H:%M:%SZ").replace(
            tzinfo=dt.timezone.utc
        )
        users = [
            UserRecord(
                login=u["login"],
                profile_location=u["location"],
                followers=u["followers"],
                contributions_last_year=u["contributions"],
                stars_received=u["stars"],
                longest_streak=u["longest_streak"],
                current_streak=u["current_streak"],
                predominant_language=u["language"],
                avatar_url=u["avatar"],
            )
            for u in doc["users"]
        ]
        snapshot = CensusSnapshot(
            canonical_name=meta["province"],
            captured_at=captured,
            users=users,
            spec_fingerprint=meta["spec_fingerprint"],
        )
        bundle = None
        agg = zipf = lorenz = None
        if doc.get("aggregates") is not None:
            a = doc["aggregates"]
            agg = AggregateStats(
                canonical_name=a["province"],
                population=a["population"],
                user_count=a["user_count"],
                total_contributions=a["total_contributions"],
                total_stars=a["total_stars"],
                total_followers=a["total_followers"],
                mean_contributions=a["mean_contributions"],
                users_per_million=a["users_per_million"],
            )
        if doc.get("zipf") is not None:
            z = doc["zipf"]
            zipf = ZipfFit(exponent=z["exponent"], objective=z["objective"], n_points=z["n_points"])
        if doc.get("gini") is not None and doc.get("lorenz") is not None:
            lorenz = LorenzGini(
                points=tuple((x, y) for x, y in doc["lorenz"]), gini=doc["gini"]
            )
        if agg is not None or zipf is not None or lorenz is not None:
            bundle = AnalyticsBundle(aggregate=agg, zipf=zipf, lorenz=lorenz)
        return snapshot, bundle
    except CorruptSnapshot:
        raise
    except (KeyError, TypeError, ValueError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptSnapshot(f"snapshot document does not parse: {exc}") from exc
