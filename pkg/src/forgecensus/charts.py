"""Self-contained, deterministic SVG charts with no plotting dependency.

Four kinds mirror the analysis figures: per-user rank plots (log-log),
province rank bars, Lorenz curves, and the average-contributions bars.
All coordinates are formatted to fixed precision so identical inputs
yield identical bytes on every platform.
"""

from __future__ import annotations

import math

from .errors import EmptySeries

WIDTH = 720
HEIGHT = 480
MARGIN_LEFT = 70
MARGIN_RIGHT = 160
MARGIN_TOP = 50
MARGIN_BOTTOM = 60

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")

MAX_LINE_SERIES = 6  # one line per province, top provinces only

CHART_KINDS = ("rank_contributions", "rank_users", "lorenz", "averages")


def _esc(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def _fmt(value: float) -> str:
    return f"{value:.2f}"


class _Canvas:
    def __init__(self, title: str, x_label: str, y_label: str):
        self.lines = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
            f'<text x="{WIDTH // 2}" y="28" text-anchor="middle" font-size="18" '
            f'font-family="sans-serif">{_esc(title)}</text>',
        ]
        self.left = MARGIN_LEFT
        self.right = WIDTH - MARGIN_RIGHT
        self.top = MARGIN_TOP
        self.bottom = HEIGHT - MARGIN_BOTTOM
        self._axis_labels(x_label, y_label)

    def _axis_labels(self, x_label: str, y_label: str) -> None:
        cx = (self.left + self.right) / 2
        cy = (self.top + self.bottom) / 2
        self.lines.append(
            f'<text x="{_fmt(cx)}" y="{HEIGHT - 16}" text-anchor="middle" font-size="13" '
            f'font-family="sans-serif">{_esc(x_label)}</text>'
        )
        self.lines.append(
            f'<text x="20" y="{_fmt(cy)}" text-anchor="middle" font-size="13" '
            f'font-family="sans-serif" transform="rotate(-90 20 {_fmt(cy)})">{_esc(y_label)}</text>'
        )

    def axes(self) -> None:
        self.lines.append(
            f'<line x1="{self.left}" y1="{self.bottom}" x2="{self.right}" y2="{self.bottom}" '
            'stroke="#000000" stroke-width="1.5"/>'
        )
        self.lines.append(
            f'<line x1="{self.left}" y1="{self.top}" x2="{self.left}" y2="{self.bottom}" '
            'stroke="#000000" stroke-width="1.5"/>'
        )

    def polyline(self, points, color: str, width: float = 2.0, dash: str | None = None) -> None:
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.lines.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{width:g}"{dash_attr} '
            f'points="{coords}"/>'
        )

    def legend(self, labels) -> None:
        x = self.right + 16
        for idx, label in enumerate(labels):
            y = self.top + 14 + idx * 20
            color = PALETTE[idx % len(PALETTE)]
            self.lines.append(
                f'<line x1="{x}" y1="{y}" x2="{x + 18}" y2="{y}" stroke="{color}" stroke-width="3"/>'
            )
            self.lines.append(
                f'<text x="{x + 24}" y="{y + 4}" font-size="12" font-family="sans-serif">'
                f"{_esc(label)}</text>"
            )

    def text(self, x: float, y: float, content: str, anchor: str = "middle", size: int = 11) -> None:
        self.lines.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" font-size="{size}" '
            f'font-family="sans-serif">{_esc(content)}</text>'
        )

    def rect(self, x: float, y: float, w: float, h: float, color: str) -> None:
        self.lines.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" fill="{color}"/>'
        )

    def render(self) -> bytes:
        return ("\n".join(self.lines + ["</svg>"]) + "\n").encode("utf-8")


def _check_series(data, max_series=None):
    if not data:
        raise EmptySeries("chart has no data")
    for label, values in data:
        if not values:
            raise EmptySeries(f"series {label!r} is empty")
    if max_series is not None and len(data) > max_series:
        raise ValueError(f"at most {max_series} series per chart, got {len(data)}")


def _log_rank_chart(title: str, y_label: str, data) -> bytes:
    """Log-log rank plot, one polyline per province."""
    _check_series(data, MAX_LINE_SERIES)
    canvas = _Canvas(title, "rank (log scale)", y_label)
    xs_max = max(len(values) for _, values in data)
    positives = [v for _, values in data for v in values if v > 0]
    if not positives:
        raise EmptySeries("rank chart needs positive values")
    y_lo = math.log10(min(positives))
    y_hi = math.log10(max(positives))
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    x_hi = math.log10(max(xs_max, 2))

    def px(rank: int) -> float:
        return canvas.left + math.log10(rank) / x_hi * (canvas.right - canvas.left)

    def py(value: float) -> float:
        frac = (math.log10(value) - y_lo) / (y_hi - y_lo)
        return canvas.bottom - frac * (canvas.bottom - canvas.top)

    # decade gridlines
    for decade in range(int(math.floor(y_lo)), int(math.ceil(y_hi)) + 1):
        value = 10.0**decade
        if value < 10**y_lo or value > 10**y_hi:
            continue
        y = py(value)
        canvas.polyline([(canvas.left, y), (canvas.right, y)], "#dddddd", width=1.0)
        canvas.text(canvas.left - 8, y + 4, f"1e{decade}", anchor="end")
    for decade in range(0, int(math.ceil(x_hi)) + 1):
        rank = 10**decade
        if rank > xs_max:
            continue
        x = px(rank)
        canvas.polyline([(x, canvas.top), (x, canvas.bottom)], "#dddddd", width=1.0)
        canvas.text(x, canvas.bottom + 16, str(rank))
    canvas.axes()
    for idx, (label, values) in enumerate(data):
        pts = [(px(rank), py(v)) for rank, v in enumerate(values, start=1) if v > 0]
        canvas.polyline(pts, PALETTE[idx % len(PALETTE)])
    canvas.legend([label for label, _ in data])
    return canvas.render()


def _bar_chart(title: str, x_label: str, data) -> bytes:
    """Horizontal bars sorted descending, one per province."""
    _check_series([(label, [value]) for label, value in data])
    ordered = sorted(data, key=lambda lv: (-lv[1], lv[0]))
    canvas = _Canvas(title, x_label, "")
    v_max = max(value for _, value in ordered)
    if v_max <= 0:
        v_max = 1.0
    n = len(ordered)
    slot = (canvas.bottom - canvas.top) / n
    bar = slot * 0.7
    for idx, (label, value) in enumerate(ordered):
        y = canvas.top + idx * slot + (slot - bar) / 2
        w = value / v_max * (canvas.right - canvas.left)
        canvas.rect(canvas.left, y, w, bar, PALETTE[idx % len(PALETTE)] if n <= 6 else "#1f77b4")
        canvas.text(canvas.left - 6, y + bar / 2 + 4, label, anchor="end", size=10)
        canvas.text(canvas.left + w + 6, y + bar / 2 + 4, f"{value:g}", anchor="start", size=10)
    canvas.axes()
    return canvas.render()


def _lorenz_chart(data) -> bytes:
    """Lorenz curves in the unit square with the equality diagonal."""
    _check_series(data, MAX_LINE_SERIES)
    canvas = _Canvas(
        "Cumulative contribution share", "share of users", "share of contributions"
    )

    def px(x: float) -> float:
        return canvas.left + x * (canvas.right - canvas.left)

    def py(y: float) -> float:
        return canvas.bottom - y * (canvas.bottom - canvas.top)

    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        canvas.text(px(tick), canvas.bottom + 16, f"{tick:g}")
        canvas.text(canvas.left - 8, py(tick) + 4, f"{tick:g}", anchor="end")
    canvas.polyline([(px(0), py(0)), (px(1), py(1))], "#888888", width=1.0, dash="6,4")
    canvas.axes()
    for idx, (label, points) in enumerate(data):
        canvas.polyline([(px(x), py(y)) for x, y in points], PALETTE[idx % len(PALETTE)])
    canvas.legend([label for label, _ in data])
    return canvas.render()


def chart(kind: str, data) -> bytes:
    """SVG bytes for one chart kind.

    Data shapes: rank_contributions wants (province, per-user values)
    pairs; lorenz wants (province, curve points); rank_users and
    averages want (province, number) pairs.
    """
    if kind == "rank_contributions":
        return _log_rank_chart("Contributions by rank", "contributions", data)
    if kind == "rank_users":
        return _bar_chart("Users per province", "users", data)
    if kind == "lorenz":
        return _lorenz_chart(data)
    if kind == "averages":
        return _bar_chart("Average contributions per user", "mean contributions", data)
    raise ValueError(f"unknown chart kind {kind!r}, expected one of {CHART_KINDS}")
