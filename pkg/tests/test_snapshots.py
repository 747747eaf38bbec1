"""
スナップショット解析のテスト
"""

from datetime import date, timedelta

import pytest

from app.analytics.snapshots import (
    RuleLifetime,
    Snapshot,
    SnapshotSeries,
    diff_snapshots,
    lifetime_cdf,
)
from app.errors import EmptyInput

D1 = date(2019, 1, 1)


def _series(*texts):
    return SnapshotSeries([
        Snapshot.from_text(D1 + timedelta(days=i), text) for i, text in enumerate(texts)
    ])


class TestDiffSnapshots:
    def test_hand_enumerated(self):
        series = _series("||a.com^\n||b.com^", "||a.com^\n||b.com^\n||c.com^", "||a.com^\n||c.com^")
        diff = diff_snapshots(series)
        d2, d3 = D1 + timedelta(days=1), D1 + timedelta(days=2)
        assert diff.insertions == {d2: 1, d3: 0}
        assert diff.removals == {d2: 0, d3: 1}
        removed = diff.removed_lifetimes()
        assert [(lt.rule_id, lt.lifetime_days) for lt in removed] == [("||b.com^", 2)]
        assert diff.sizes == [(D1, 2), (d2, 3), (d3, 2)]

    def test_identical_snapshots(self):
        diff = diff_snapshots(_series("||a.com^", "||a.com^", "||a.com^"))
        assert diff.total_insertions == 0
        assert diff.total_removals == 0

    def test_comments_are_not_rules(self):
        diff = diff_snapshots(_series("! v1\n||a.com^", "! v2\n||a.com^"))
        assert diff.total_insertions == 0

    def test_reinsertion_starts_new_lifetime(self):
        series = _series("||a.com^", "", "||a.com^", "")
        diff = diff_snapshots(series)
        spans = [(lt.first_seen, lt.removed) for lt in diff.lifetimes if lt.rule_id == "||a.com^"]
        assert spans == [
            (D1, D1 + timedelta(days=1)),
            (D1 + timedelta(days=2), D1 + timedelta(days=3)),
        ]
        assert diff.first_seen()["||a.com^"] == D1 + timedelta(days=2)

    def test_size_conservation(self):
        texts = [
            "||a.com^\n||b.com^",
            "||a.com^\n||b.com^\n||c.com^\n||d.com^",
            "||a.com^\n||d.com^",
            "||a.com^\n||d.com^\n||e.com^\n||b.com^",
            "||e.com^",
            "||e.com^\n||f.com^\n||g.com^",
        ]
        diff = diff_snapshots(_series(*texts))
        first_size = diff.sizes[0][1]
        last_size = diff.sizes[-1][1]
        assert last_size == first_size + diff.total_insertions - diff.total_removals
        assert all(lt.lifetime_days > 0 for lt in diff.removed_lifetimes())

    def test_needs_two_snapshots(self):
        with pytest.raises(EmptyInput):
            diff_snapshots(_series("||a.com^"))


class TestSeries:
    def test_days_must_ascend(self):
        snapshot = Snapshot.from_text(D1, "||a.com^")
        with pytest.raises(ValueError):
            SnapshotSeries([snapshot, snapshot])

    def test_at_returns_latest_before(self):
        series = SnapshotSeries([
            Snapshot.from_text(D1, "||a.com^"),
            Snapshot.from_text(D1 + timedelta(days=5), "||b.com^"),
        ])
        assert series.at(D1 - timedelta(days=1)) is None
        assert series.at(D1 + timedelta(days=3)).day == D1
        assert series.at(D1 + timedelta(days=9)).day == D1 + timedelta(days=5)


class TestLifetimeCdf:
    def test_four_lifetimes(self):
        lifetimes = [
            RuleLifetime(f"r{i}", D1, D1 + timedelta(days=days))
            for i, days in enumerate([10, 10, 20, 40])
        ]
        lifetimes.append(RuleLifetime("still-listed", D1))
        assert lifetime_cdf(lifetimes) == [(10.0, 0.5), (20.0, 0.75), (40.0, 1.0)]

    def test_single_lifetime(self):
        assert lifetime_cdf([RuleLifetime("r", D1, D1 + timedelta(days=7))]) == [(7.0, 1.0)]

    def test_no_removals(self):
        with pytest.raises(EmptyInput):
            lifetime_cdf([RuleLifetime("r", D1)])
