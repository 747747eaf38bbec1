"""
グラフ出力のテスト
"""

from datetime import date, timedelta

from app.analytics.snapshots import Snapshot, SnapshotSeries, diff_snapshots
from app.utils.charts import plot_cdf, plot_evolution, plot_rule_types
from app.utils.filter_parser import parse_list

PNG_MAGIC = b"\x89PNG"


def test_rule_types(tmp_path):
    _, stats = parse_list("||a.com^\n@@||a.com/ok^\n##.ad\n")
    path = tmp_path / "types.png"
    plot_rule_types(stats, path)
    assert path.read_bytes().startswith(PNG_MAGIC)


def test_cdf_with_log_axis(tmp_path):
    path = tmp_path / "out" / "cdf.png"
    plot_cdf([(0.0, 0.9), (3.0, 0.95), (120.0, 1.0)], path, title="使用回数", log_x=True)
    assert path.read_bytes().startswith(PNG_MAGIC)


def test_empty_cdf(tmp_path):
    path = tmp_path / "empty.png"
    plot_cdf([], path)
    assert path.exists()


def test_evolution(tmp_path):
    start = date(2019, 1, 1)
    series = SnapshotSeries([
        Snapshot.from_text(start + timedelta(days=i), text)
        for i, text in enumerate(["||a.com^", "||a.com^\n||b.com^", "||b.com^"])
    ])
    path = tmp_path / "evolution.png"
    plot_evolution(diff_snapshots(series), path)
    assert path.read_bytes().startswith(PNG_MAGIC)
