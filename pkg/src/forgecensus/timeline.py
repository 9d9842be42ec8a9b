"""Persist census snapshots and measure how rankings change between runs.

One JSON document per snapshot (the report module's schema) with a
trailing sha256 checksum line, named {province}-{UTC stamp}.json. The
store is append-only: a (province, captured_at) pair is written once.
Writers take an advisory lock; readers need nothing.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import os
import re
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock

from .census import CensusSnapshot
from .errors import (
    CorruptSnapshot,
    DuplicateTimestamp,
    MismatchedProvince,
    NonMonotonicTime,
    NotFound,
)
from .report import ReportTemplate, parse_json_report, render

STAMP_FORMAT = "%Y%m%dT%H%M%SZ"
UTC = dt.timezone.utc


def format_stamp(when: dt.datetime) -> str:
    return when.astimezone(UTC).strftime(STAMP_FORMAT)


def parse_stamp(stamp: str) -> dt.datetime:
    return dt.datetime.strptime(stamp, STAMP_FORMAT).replace(tzinfo=UTC)


@dataclass(frozen=True)
class RankingDelta:
    """What changed between two snapshots of the same province."""

    canonical_name: str
    from_time: dt.datetime
    to_time: dt.datetime
    users_added: tuple[str, ...]
    users_removed: tuple[str, ...]
    user_count_before: int
    user_count_after: int
    user_count_change_pct: float | None  # None when the province is brand new
    per_user_contribution_delta: dict[str, int]

    def __post_init__(self):
        if self.user_count_after - self.user_count_before != len(self.users_added) - len(
            self.users_removed
        ):
            raise ValueError("added/removed sets do not explain the count change")


def diff(before: CensusSnapshot, after: CensusSnapshot) -> RankingDelta:
    """Set differences by login, and the percentage change in active users."""
    if before.canonical_name != after.canonical_name:
        raise MismatchedProvince(
            f"cannot diff {before.canonical_name!r} against {after.canonical_name!r}"
        )
    if not before.captured_at < after.captured_at:
        raise NonMonotonicTime("the 'before' snapshot must precede the 'after' one")
    old = {u.login: u for u in before.users}
    new = {u.login: u for u in after.users}
    added = tuple(sorted(set(new) - set(old)))
    removed = tuple(sorted(set(old) - set(new)))
    change_pct = None
    if before.user_count > 0:
        change_pct = (after.user_count - before.user_count) / before.user_count * 100.0
    per_user = {
        login: new[login].contributions_last_year if login in new else 0
        for login in sorted(set(old) | set(new))
    }
    for login, u in old.items():
        per_user[login] -= u.contributions_last_year
    return RankingDelta(
        canonical_name=before.canonical_name,
        from_time=before.captured_at,
        to_time=after.captured_at,
        users_added=added,
        users_removed=removed,
        user_count_before=before.user_count,
        user_count_after=after.user_count,
        user_count_change_pct=change_pct,
        per_user_contribution_delta=per_user,
    )


_SAFE_NAME = re.compile(r"[^\w\- ]", re.UNICODE)


def _file_name(name: str, when: dt.datetime) -> str:
    return f"{_SAFE_NAME.sub('_', name)}-{format_stamp(when)}.json"


class SnapshotStore:
    """Append-only directory of snapshots for any number of provinces."""

    def __init__(self, root):
        self.root = Path(root)

    def _lock(self) -> FileLock:
        self.root.mkdir(parents=True, exist_ok=True)
        return FileLock(str(self.root / ".lock"))

    def save(self, snapshot: CensusSnapshot) -> str:
        """Write one snapshot atomically; returns the snapshot id (file name)."""
        body = render(snapshot, None, ReportTemplate.default("json"))
        checksum = hashlib.sha256(body).hexdigest()
        name = _file_name(snapshot.canonical_name, snapshot.captured_at)
        with self._lock():
            target = self.root / name
            if target.exists():
                raise DuplicateTimestamp(
                    f"snapshot {name} already exists; the store is append-only"
                )
            tmp = target.with_suffix(".tmp")
            tmp.write_bytes(body + checksum.encode("ascii") + b"\n")
            os.replace(tmp, target)
        return name

    def _read(self, path: Path) -> CensusSnapshot:
        raw = path.read_bytes()
        if raw.endswith(b"\n"):
            raw = raw[:-1]
        # the document ends with its own newline; the last line is the checksum
        body, _, checksum_line = raw.rpartition(b"\n")
        body += b"\n"
        expected = checksum_line.decode("ascii", errors="replace").strip()
        if hashlib.sha256(body).hexdigest() != expected:
            raise CorruptSnapshot(f"{path.name}: checksum mismatch, file was tampered or truncated")
        snapshot, _ = parse_json_report(body)
        return snapshot

    def _path_for(self, name: str, when) -> Path:
        stamp = when if isinstance(when, str) else format_stamp(when)
        return self.root / f"{_SAFE_NAME.sub('_', name)}-{stamp}.json"

    def load(self, name: str, when) -> CensusSnapshot:
        """Load one snapshot by province and capture time (datetime or stamp)."""
        path = self._path_for(name, when)
        if not path.exists():
            raise NotFound(f"no snapshot {path.name} in {self.root}")
        return self._read(path)

    def stamps(self, name: str) -> list[str]:
        """All stored capture stamps for a province, time-ascending."""
        prefix = f"{_SAFE_NAME.sub('_', name)}-"
        found = []
        if not self.root.exists():
            return found
        for path in self.root.glob(f"{prefix}*.json"):
            stamp = path.name[len(prefix) : -len(".json")]
            try:
                parse_stamp(stamp)
            except ValueError:
                continue
            found.append(stamp)
        return sorted(found)

    def provinces(self) -> list[str]:
        """Distinct province names present in the store."""
        names = set()
        if not self.root.exists():
            return []
        for path in self.root.glob("*-*.json"):
            name, _, stamp = path.stem.rpartition("-")
            try:
                parse_stamp(stamp)
            except ValueError:
                continue
            names.add(name)
        return sorted(names)

    def series(self, name: str) -> list[tuple[dt.datetime, int]]:
        """(capture time, active user count) pairs, time-ascending."""
        out = []
        for stamp in self.stamps(name):
            snapshot = self.load(name, stamp)
            out.append((snapshot.captured_at, snapshot.user_count))
        return out
