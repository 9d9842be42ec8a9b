"""Subcommand front end: fetch, rank, analyze, diff, report.

Exit codes: 0 success, 1 domain errors, 2 usage errors. Diagnostics go
to stderr; data goes to stdout or to files named with --out.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import analytics, census, charts, timeline
from .errors import ForgeCensusError, NotFound, ParseError
from .ratelimit import Budget
from .report import ReportTemplate, render
from .transport import ForgeClient, TransportConfig

log = logging.getLogger(__name__)

FORMAT_NAMES = {"md": "markdown", "csv": "csv", "json": "json"}


def _parse_budget(text: str, default_window: float) -> Budget:
    limit, _, window = text.partition("/")
    try:
        return Budget(int(limit), float(window) if window else default_window)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"budget must look like N or N/SECONDS: {exc}")


def _add_transport_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--token", help="API token (default: env FORGE_TOKEN)")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--replay", metavar="DIR", help="serve all requests from recorded fixtures")
    mode.add_argument("--record", metavar="DIR", help="hit the live API and record fixtures")
    parser.add_argument(
        "--search-budget",
        type=lambda t: _parse_budget(t, 60.0),
        metavar="N[/SECONDS]",
        help="search requests per rolling window (default depends on auth)",
    )
    parser.add_argument(
        "--core-budget",
        type=lambda t: _parse_budget(t, 3600.0),
        metavar="N[/SECONDS]",
        help="core requests per rolling window (default depends on auth)",
    )


def _add_store_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--store", metavar="DIR", help="snapshot store directory (default: env FORGE_CENSUS_STORE)"
    )


def _add_output_args(parser: argparse.ArgumentParser, formats=("md", "csv", "json")) -> None:
    parser.add_argument("--format", choices=formats, default=formats[0])
    parser.add_argument("--top", type=int, metavar="N", help="limit table rows to the top N users")
    parser.add_argument("--out", metavar="FILE", help="write the document here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forge-census",
        description="Census and rankings of forge users declaring residence in a province",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("census", help="search, collect and rank the users of one province")
    p.add_argument("spec", help="config file path, bundled province, or bare city name")
    _add_transport_args(p)
    _add_store_arg(p)
    _add_output_args(p)
    p.add_argument(
        "--sort",
        choices=census.RANKING_KEYS,
        default="contributions",
        help="ranking key for the user table",
    )
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("report", help="render a stored snapshot")
    p.add_argument("--province", required=True)
    p.add_argument("--at", metavar="STAMP", help="capture stamp (default: latest)")
    p.add_argument("--population", type=int, help="override the bundled population figure")
    _add_store_arg(p)
    _add_output_args(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("analyze", help="aggregate, rank-fit and inequality table across provinces")
    p.add_argument(
        "--province", action="append", default=None, help="repeatable; default: all stored"
    )
    p.add_argument("--charts", metavar="DIR", help="also write the four SVG charts here")
    _add_store_arg(p)
    _add_output_args(p, formats=("md", "csv"))
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("diff", help="what changed for a province between two snapshots")
    p.add_argument("--province", required=True)
    p.add_argument("--from", dest="from_stamp", metavar="STAMP", help="default: earliest")
    p.add_argument("--to", dest="to_stamp", metavar="STAMP", help="default: latest")
    _add_store_arg(p)
    _add_output_args(p, formats=("md",))
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("series", help="active user counts over time for one province")
    p.add_argument("--province", required=True)
    _add_store_arg(p)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_series)

    return parser


# -- shared plumbing -----------------------------------------------------


def _make_client(args) -> ForgeClient:
    token = args.token or os.environ.get("FORGE_TOKEN")
    budgets = {}
    if args.search_budget is not None:
        budgets["search_budget"] = args.search_budget
    if args.core_budget is not None:
        budgets["core_budget"] = args.core_budget
    if args.replay:
        cfg = TransportConfig.for_replay(args.replay, **budgets)
    elif args.record:
        cfg = TransportConfig.for_record(args.record, auth_token=token, **budgets)
    else:
        cfg = TransportConfig(auth_token=token, **budgets)
    return ForgeClient(cfg)


def _store(args) -> timeline.SnapshotStore | None:
    root = args.store or os.environ.get("FORGE_CENSUS_STORE")
    return timeline.SnapshotStore(root) if root else None


def _require_store(args) -> timeline.SnapshotStore:
    store = _store(args)
    if store is None:
        raise NotFound("no snapshot store given; use --store or FORGE_CENSUS_STORE")
    return store


def _resolve_spec(arg: str) -> census.LocationSpec:
    if os.path.exists(arg):
        with open(arg, encoding="utf-8") as fh:
            return census.load_location_spec(fh.read())
    if arg.endswith(".json"):
        raise ParseError(f"config file {arg!r} does not exist")
    bundled = census.bundled_provinces().get(census.fold_text(arg))
    if bundled is not None:
        return bundled
    return census.parse_location_spec(arg)  # bare city-name shorthand


def _bundled_population(name: str) -> int | None:
    spec = census.bundled_provinces().get(census.fold_text(name))
    return spec.population if spec else None


def _emit(data: bytes, out: str | None) -> None:
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
        log.info("wrote %s (%d bytes)", out, len(data))
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


def _load_at(store, province: str, stamp: str | None, pick) -> census.CensusSnapshot:
    stamps = store.stamps(province)
    if not stamps:
        raise NotFound(f"no snapshots for {province!r} in {store.root}")
    if stamp is None:
        stamp = pick(stamps)
    return store.load(province, stamp)


# -- subcommands ---------------------------------------------------------


def cmd_census(args) -> int:
    spec = _resolve_spec(args.spec)
    client = _make_client(args)
    snapshot = census.build_census(spec, client, ranking_key=args.sort)
    store = _store(args)
    if store is not None:
        name = store.save(snapshot)
        log.info("saved snapshot %s", name)
    bundle = analytics.analyze_snapshot(snapshot, spec.population) if snapshot.user_count else None
    template = ReportTemplate.default(FORMAT_NAMES[args.format])
    _emit(render(snapshot, bundle, template, limit=args.top), args.out)
    return 0


def cmd_report(args) -> int:
    store = _require_store(args)
    snapshot = _load_at(store, args.province, args.at, pick=lambda stamps: stamps[-1])
    population = args.population or _bundled_population(snapshot.canonical_name)
    bundle = analytics.analyze_snapshot(snapshot, population) if snapshot.user_count else None
    template = ReportTemplate.default(FORMAT_NAMES[args.format])
    _emit(render(snapshot, bundle, template, limit=args.top), args.out)
    return 0


def _analysis_rows(store, provinces):
    rows = []
    for name in provinces:
        snapshot = _load_at(store, name, None, pick=lambda stamps: stamps[-1])
        bundle = analytics.analyze_snapshot(snapshot, _bundled_population(name))
        rows.append((snapshot, bundle))
    return rows


def _format_analysis_table(rows, fmt: str) -> bytes:
    headers = (
        "province", "population", "users", "contributions", "stars", "followers",
        "mean contributions", "users per million", "zipf exponent", "zipf objective", "gini",
    )
    cells_per_row = []
    by_mean = analytics.mean_contributions_ranking([b.aggregate for _, b in rows])
    bundles = {b.aggregate.canonical_name: b for _, b in rows}
    for agg in by_mean:
        b = bundles[agg.canonical_name]
        cells_per_row.append(
            (
                agg.canonical_name,
                "" if agg.population is None else str(agg.population),
                str(agg.user_count),
                str(agg.total_contributions),
                str(agg.total_stars),
                str(agg.total_followers),
                f"{agg.mean_contributions:.2f}",
                "" if agg.users_per_million is None else f"{agg.users_per_million:.2f}",
                "" if b.zipf is None else f"{b.zipf.exponent:.6f}",
                "" if b.zipf is None else f"{b.zipf.objective:.5f}",
                "" if b.lorenz is None else f"{b.lorenz.gini:.7f}",
            )
        )
    if fmt == "csv":
        import csv as _csv
        import io

        buf = io.StringIO()
        writer = _csv.writer(buf, lineterminator="\n")
        writer.writerow(headers)
        writer.writerows(cells_per_row)
        return buf.getvalue().encode("utf-8")
    lines = ["| " + " | ".join(headers) + " |"]
    lines.append("|" + "|".join("---" if i == 0 else "---:" for i in range(len(headers))) + "|")
    for cells in cells_per_row:
        lines.append("| " + " | ".join(cells) + " |")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _write_charts(rows, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    # line charts follow the six biggest provinces, bars take everyone
    top = sorted(rows, key=lambda rb: (-rb[0].user_count, rb[0].canonical_name))
    line_rows = top[: charts.MAX_LINE_SERIES]
    kinds = {
        "rank_contributions": [
            (
                s.canonical_name,
                sorted((u.contributions_last_year for u in s.users), reverse=True),
            )
            for s, _ in line_rows
        ],
        "lorenz": [
            (s.canonical_name, b.lorenz.points) for s, b in line_rows if b.lorenz is not None
        ],
        "rank_users": [(s.canonical_name, s.user_count) for s, _ in rows],
        "averages": [(s.canonical_name, b.aggregate.mean_contributions) for s, b in rows],
    }
    for kind, data in kinds.items():
        path = os.path.join(out_dir, f"{kind}.svg")
        with open(path, "wb") as fh:
            fh.write(charts.chart(kind, data))
        log.info("wrote %s", path)


def cmd_analyze(args) -> int:
    store = _require_store(args)
    provinces = args.province or store.provinces()
    if not provinces:
        raise NotFound(f"store {store.root} holds no snapshots")
    rows = _analysis_rows(store, provinces)
    _emit(_format_analysis_table(rows, args.format), args.out)
    if args.charts:
        _write_charts(rows, args.charts)
    return 0


def cmd_diff(args) -> int:
    store = _require_store(args)
    before = _load_at(store, args.province, args.from_stamp, pick=lambda stamps: stamps[0])
    after = _load_at(store, args.province, args.to_stamp, pick=lambda stamps: stamps[-1])
    delta = timeline.diff(before, after)
    pct = (
        "n/a (new province)"
        if delta.user_count_change_pct is None
        else f"{delta.user_count_change_pct:+.2f}%"
    )
    lines = [
        f"# {delta.canonical_name}: "
        f"{before.captured_at:%Y-%m-%dT%H:%M:%SZ} to {after.captured_at:%Y-%m-%dT%H:%M:%SZ}",
        "",
        f"Active users: {delta.user_count_before} to {delta.user_count_after} ({pct})",
        f"Added ({len(delta.users_added)}): {', '.join(delta.users_added) or 'none'}",
        f"Removed ({len(delta.users_removed)}): {', '.join(delta.users_removed) or 'none'}",
        "",
        "| user | contribution change |",
        "|---|---:|",
    ]
    movers = sorted(
        delta.per_user_contribution_delta.items(), key=lambda kv: (-abs(kv[1]), kv[0])
    )
    limit = args.top if args.top is not None else 20
    for login, change in movers[:limit]:
        lines.append(f"| {login} | {change:+d} |")
    _emit(("\n".join(lines) + "\n").encode("utf-8"), args.out)
    return 0


def cmd_series(args) -> int:
    store = _require_store(args)
    points = store.series(args.province)
    if not points:
        raise NotFound(f"no snapshots for {args.province!r} in {store.root}")
    lines = ["captured_at,user_count"]
    lines.extend(f"{when:%Y-%m-%dT%H:%M:%SZ},{count}" for when, count in points)
    _emit(("\n".join(lines) + "\n").encode("utf-8"), args.out)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s", force=True)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ForgeCensusError as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
