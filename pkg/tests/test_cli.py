import datetime as dt
import json
import socket

import pytest

from _stubs import CAPTURE, make_snapshot, make_user
from conftest import FIXTURES, SPEC_PATH
from forgecensus import cli
from forgecensus.timeline import SnapshotStore


def run(argv, capsysbinary):
    code = cli.main(argv)
    captured = capsysbinary.readouterr()
    return code, captured.out, captured.err


def forbid_network(monkeypatch):
    def explode(*args, **kwargs):
        raise AssertionError("network touched during replay")

    monkeypatch.setattr(socket, "socket", explode)
    monkeypatch.setattr(socket, "create_connection", explode)


def seed_store(tmp_path) -> SnapshotStore:
    store = SnapshotStore(tmp_path / "store")
    before = make_snapshot(
        users=[make_user(f"u{i:03d}", contributions=10 + i) for i in range(140)]
    )
    after = make_snapshot(
        when=CAPTURE + dt.timedelta(days=29),
        users=[make_user(f"u{i:03d}", contributions=12 + i) for i in range(180)],
    )
    store.save(before)
    store.save(after)
    return store


def test_census_replay_writes_snapshot_and_report(tmp_path, capsysbinary, monkeypatch):
    forbid_network(monkeypatch)
    store_dir = tmp_path / "d"
    code, out, err = run(
        ["census", str(SPEC_PATH), "--store", str(store_dir), "--replay", str(FIXTURES)],
        capsysbinary,
    )
    assert code == 0
    snapshots = list(store_dir.glob("Granada-*.json"))
    assert len(snapshots) == 1
    assert out.decode().startswith("# Granada: 182 active users")


def test_census_by_bundled_name_and_shorthand(tmp_path, capsysbinary):
    # bundled province name resolves to the shipped spec; exhausted budget
    # surfaces as a domain error before any network is attempted
    code, out, err = run(["census", "Madrid", "--search-budget", "0/60"], capsysbinary)
    assert code == 1
    assert b"BudgetExhausted" in err
    code, _, err = run(["census", "Sometown Nowhere", "--search-budget", "0"], capsysbinary)
    assert code == 1
    assert b"BudgetExhausted" in err


def test_missing_config_file_is_a_domain_error(capsysbinary):
    code, out, err = run(["census", "no-such-file.json"], capsysbinary)
    assert code == 1
    assert b"does not exist" in err


def test_usage_errors_exit_2_and_write_nothing(tmp_path, capsysbinary):
    out_file = tmp_path / "never.md"
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["census"])  # missing the spec argument
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        cli.main(
            ["census", "Madrid", "--replay", "a", "--record", "b", "--out", str(out_file)]
        )
    assert excinfo.value.code == 2
    assert not out_file.exists()


def test_census_formats_are_deterministic(tmp_path, capsysbinary, monkeypatch):
    forbid_network(monkeypatch)
    outputs = {}
    for fmt in ("md", "csv", "json"):
        a = tmp_path / f"one.{fmt}"
        b = tmp_path / f"two.{fmt}"
        for target in (a, b):
            code, _, _ = run(
                ["census", str(SPEC_PATH), "--replay", str(FIXTURES),
                 "--format", fmt, "--out", str(target)],
                capsysbinary,
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()
        outputs[fmt] = a.read_bytes()
    doc = json.loads(outputs["json"])
    assert doc["meta"]["user_count"] == 182


def test_census_sort_and_top(tmp_path, capsysbinary, monkeypatch):
    forbid_network(monkeypatch)
    code, out, _ = run(
        ["census", str(SPEC_PATH), "--replay", str(FIXTURES),
         "--sort", "followers", "--top", "5"],
        capsysbinary,
    )
    assert code == 0
    text = out.decode()
    assert "Showing the top 5 of 182 users." in text
    rows = [l for l in text.splitlines() if l.startswith("| ") and "rank" not in l]
    followers = [int(r.split("|")[4].strip()) for r in rows]
    assert followers == sorted(followers, reverse=True)


def test_report_renders_latest_stored_snapshot(tmp_path, capsysbinary):
    store = seed_store(tmp_path)
    code, out, _ = run(
        ["report", "--store", str(store.root), "--province", "Granada", "--format", "csv"],
        capsysbinary,
    )
    assert code == 0
    assert len(out.decode().splitlines()) == 1 + 180  # header plus latest snapshot rows


def test_diff_reports_published_growth(tmp_path, capsysbinary):
    store = seed_store(tmp_path)
    code, out, _ = run(
        ["diff", "--store", str(store.root), "--province", "Granada",
         "--from", "20150110T120000Z", "--to", "20150208T120000Z"],
        capsysbinary,
    )
    assert code == 0
    text = out.decode()
    assert "Active users: 140 to 180 (+28.57%)" in text
    assert "Added (40):" in text


def test_diff_defaults_to_first_and_last(tmp_path, capsysbinary):
    store = seed_store(tmp_path)
    code, out, _ = run(
        ["diff", "--store", str(store.root), "--province", "Granada"], capsysbinary
    )
    assert code == 0
    assert b"+28.57%" in out


def test_series_lists_counts_over_time(tmp_path, capsysbinary):
    store = seed_store(tmp_path)
    code, out, _ = run(
        ["series", "--store", str(store.root), "--province", "Granada"], capsysbinary
    )
    assert code == 0
    assert out.decode() == (
        "captured_at,user_count\n"
        "2015-01-10T12:00:00Z,140\n"
        "2015-02-08T12:00:00Z,180\n"
    )


def test_series_unknown_province_exits_1(tmp_path, capsysbinary):
    store = seed_store(tmp_path)
    code, _, err = run(
        ["series", "--store", str(store.root), "--province", "Atlantis"], capsysbinary
    )
    assert code == 1
    assert b"NotFound" in err


def test_analyze_table_and_charts(tmp_path, capsysbinary):
    store = seed_store(tmp_path)
    charts_dir = tmp_path / "charts"
    code, out, _ = run(
        ["analyze", "--store", str(store.root), "--charts", str(charts_dir)],
        capsysbinary,
    )
    assert code == 0
    text = out.decode()
    assert text.splitlines()[0].startswith("| province | population | users |")
    assert "| Granada | 919663 | 180 |" in text
    for kind in ("rank_contributions", "rank_users", "lorenz", "averages"):
        data = (charts_dir / f"{kind}.svg").read_bytes()
        assert data.startswith(b"<svg")


def test_analyze_csv_format(tmp_path, capsysbinary):
    store = seed_store(tmp_path)
    code, out, _ = run(
        ["analyze", "--store", str(store.root), "--format", "csv"], capsysbinary
    )
    assert code == 0
    lines = out.decode().splitlines()
    assert lines[0].startswith("province,population,users,")
    assert len(lines) == 2


def test_store_from_environment(tmp_path, capsysbinary, monkeypatch):
    store = seed_store(tmp_path)
    monkeypatch.setenv("FORGE_CENSUS_STORE", str(store.root))
    code, out, _ = run(["series", "--province", "Granada"], capsysbinary)
    assert code == 0
    assert b"180" in out
