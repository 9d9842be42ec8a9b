#!/usr/bin/env python3
"""Run the whole offline workflow against the recorded fixture set.

census -> store -> (synthetic next month) -> diff -> series -> analyze,
writing every artifact under ./out. No network involved; this is the
fastest way to see each moving part produce real output.

Usage: python scripts/demo_workflow.py [OUT_DIR]
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import random
import shutil
import sys
from pathlib import Path

from forgecensus import cli
from forgecensus.census import UserRecord
from forgecensus.timeline import SnapshotStore

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "data" / "fixtures" / "granada"
SPEC = ROOT / "tests" / "data" / "specs" / "granada.json"


def run_cli(argv: list[str]) -> None:
    code = cli.main(argv)
    if code != 0:
        raise SystemExit(f"forge-census {argv[0]} failed with exit code {code}")


def synthesize_next_month(store: SnapshotStore) -> None:
    """A plausible follow-up capture: some newcomers, a couple of dropouts."""
    stamp = store.stamps("Granada")[0]
    snapshot = store.load("Granada", stamp)
    rng = random.Random(29)
    survivors = [u for u in snapshot.users if rng.random() > 0.02]
    newcomers = [
        UserRecord(
            login=f"newcomer-{i:02d}",
            profile_location="Granada, España",
            followers=rng.randint(0, 5),
            contributions_last_year=rng.randint(1, 40),
            stars_received=rng.randint(0, 3),
            longest_streak=3,
            current_streak=1,
        )
        for i in range(25)
    ]
    users = sorted(
        survivors + newcomers, key=lambda u: (-u.contributions_last_year, u.login)
    )
    later = dataclasses.replace(
        snapshot,
        captured_at=snapshot.captured_at + dt.timedelta(days=29),
        users=users,
    )
    store.save(later)


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "out"
    if out.exists():
        shutil.rmtree(out)
    out.mkdir(parents=True)
    store_dir = out / "store"

    run_cli(
        ["census", str(SPEC), "--replay", str(FIXTURES), "--store", str(store_dir),
         "--format", "md", "--out", str(out / "granada.md")]
    )
    run_cli(
        ["census", str(SPEC), "--replay", str(FIXTURES),
         "--format", "csv", "--out", str(out / "granada.csv")]
    )

    synthesize_next_month(SnapshotStore(store_dir))

    run_cli(["diff", "--store", str(store_dir), "--province", "Granada",
             "--out", str(out / "delta.md")])
    run_cli(["series", "--store", str(store_dir), "--province", "Granada",
             "--out", str(out / "series.csv")])
    run_cli(["analyze", "--store", str(store_dir), "--charts", str(out / "charts"),
             "--out", str(out / "analysis.md")])

    print("artifacts:")
    for path in sorted(out.rglob("*")):
        if path.is_file():
            print(f"  {path.relative_to(out)}  ({path.stat().st_size} bytes)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
