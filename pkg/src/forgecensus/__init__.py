"""Census, rankings and inequality analytics for forge users by province."""

from .analytics import (
    AggregateStats,
    AnalyticsBundle,
    LorenzGini,
    ZipfFit,
    aggregate,
    analyze_snapshot,
    gini,
    lorenz_curve,
    lorenz_gini,
    mean_contributions_ranking,
    zipf_fit,
)
from .census import (
    CensusSnapshot,
    LocationSpec,
    UserRecord,
    build_census,
    bundled_provinces,
    collect_user,
    load_location_spec,
    matches_location,
)
from .charts import chart
from .ratelimit import Budget, BudgetAccountant, MonotonicClock, VirtualClock
from .report import ReportTemplate, parse_json_report, render
from .timeline import RankingDelta, SnapshotStore, diff
from .transport import FixtureMode, ForgeClient, RawUserPage, TransportConfig

__version__ = "0.1.0"

__all__ = [
    "AggregateStats",
    "AnalyticsBundle",
    "Budget",
    "BudgetAccountant",
    "CensusSnapshot",
    "FixtureMode",
    "ForgeClient",
    "LocationSpec",
    "LorenzGini",
    "MonotonicClock",
    "RankingDelta",
    "RawUserPage",
    "ReportTemplate",
    "SnapshotStore",
    "TransportConfig",
    "UserRecord",
    "VirtualClock",
    "ZipfFit",
    "aggregate",
    "analyze_snapshot",
    "build_census",
    "bundled_provinces",
    "chart",
    "collect_user",
    "diff",
    "gini",
    "load_location_spec",
    "lorenz_curve",
    "lorenz_gini",
    "matches_location",
    "mean_contributions_ranking",
    "parse_json_report",
    "render",
    "zipf_fit",
]
