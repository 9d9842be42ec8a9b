import pytest

from conftest import GOLDEN
from forgecensus.analytics import lorenz_curve
from forgecensus.charts import chart
from forgecensus.errors import EmptySeries


def test_lorenz_of_equality_draws_the_diagonal():
    points = lorenz_curve([1, 1, 1, 1])
    svg = chart("lorenz", [("Equalville", points)]).decode()
    assert svg.startswith("<svg")
    assert "stroke-dasharray" in svg  # the equality diagonal is drawn dashed
    # the series itself is colinear with the diagonal: constant step per point
    series = 'points="70.00,420.00 192.50,327.50 315.00,235.00 437.50,142.50 560.00,50.00"'
    assert series in svg


def test_six_provinces_six_polylines():
    data = [(f"P{i}", [100 - 10 * i, 50, 20, 5]) for i in range(6)]
    svg = chart("rank_contributions", data).decode()
    series_lines = [l for l in svg.splitlines() if "stroke-width=\"2\"" in l]
    assert len(series_lines) == 6
    colors = {l.split('stroke="')[1].split('"')[0] for l in series_lines}
    assert len(colors) == 6  # distinguishable
    for i in range(6):
        assert f">P{i}</text>" in svg


def test_too_many_line_series_rejected():
    data = [(f"P{i}", [3, 2, 1]) for i in range(7)]
    with pytest.raises(ValueError):
        chart("rank_contributions", data)


def test_averages_bars_sorted_descending():
    means = [("Alicante", 4941 / 52), ("Granada", 29610 / 182), ("Madrid", 143739 / 798)]
    svg = chart("averages", means).decode()
    # label order in the SVG is the ranked order
    granada = svg.index(">Granada</text>")
    madrid = svg.index(">Madrid</text>")
    alicante = svg.index(">Alicante</text>")
    assert madrid < granada < alicante
    widths = [float(l.split('width="')[1].split('"')[0]) for l in svg.splitlines() if "<rect" in l and "100%" not in l]
    assert widths == sorted(widths, reverse=True)


def test_rank_users_takes_all_provinces():
    data = [(f"Prov{i:02d}", 100 - i) for i in range(20)]
    svg = chart("rank_users", data).decode()
    assert svg.count("<rect") == 21  # 20 bars + background


def test_empty_series_rejected():
    with pytest.raises(EmptySeries):
        chart("lorenz", [])
    with pytest.raises(EmptySeries):
        chart("rank_contributions", [("P", [])])


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        chart("scatter", [("P", [1, 2])])


def test_chart_bytes_are_deterministic():
    data = [("A", [5, 3, 2]), ("B", [9, 1, 1])]
    assert chart("rank_contributions", data) == chart("rank_contributions", data)


def test_golden_rank_contributions():
    import random

    rng = random.Random(6)
    series = []
    for i, name in enumerate(["Madrid", "Barcelona", "Valencia", "Granada", "Sevilla", "Zaragoza"]):
        n = 120 - i * 12
        series.append((name, sorted((rng.randint(1, 4000) for _ in range(n)), reverse=True)))
    assert chart("rank_contributions", series) == (GOLDEN / "chart_rank_contributions.svg").read_bytes()
    lorenz_series = [(name, lorenz_curve(values)) for name, values in series]
    assert chart("lorenz", lorenz_series) == (GOLDEN / "chart_lorenz.svg").read_bytes()
