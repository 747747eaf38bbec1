"""
判定結果データベースのテスト
"""

import pytest

from app.models.database import MeasurementDatabase
from app.models.request import Decision, DecisionStatus, LogRecord, Request


def _row(url, page, day, network=None, exception=None, **kwargs):
    record = LogRecord(request=Request(url, page, "script", **kwargs), page_url=page, day=day)
    return record, Decision.from_matches(network, exception)


@pytest.fixture
def db(tmp_path, suffixes):
    database = MeasurementDatabase(str(tmp_path / "measure.db"))
    rows = [
        _row("https://c.betrad.com/a.js", "https://www.news.com/", 0, network="||betrad.com^"),
        _row("https://c.betrad.com/b.js", "https://www.news.com/", 0, network="||betrad.com^"),
        _row("https://adnet.com/allowed/x.js", "https://www.news.com/", 1,
             network="||adnet.com^", exception="@@||adnet.com/allowed/$script"),
        _row("https://cdn.shop.com/app.js", "https://www.news.com/", 1),
        _row("https://img.news.com/logo.png", "https://www.news.com/", 1),
        _row("https://c.betrad.com/c.js", "https://www.news.com/", 2, network="||betrad.com^",
             content_hash="h1", content_size=60_000),
    ]
    database.save_decisions("full", rows, suffixes=suffixes)
    yield database
    database.close()


class TestMeasurementDatabase:
    def test_status_counts(self, db):
        df = db.get_status_counts().set_index("status")
        assert df.loc["blocked", "requests"] == 3
        assert df.loc["excepted", "requests"] == 1
        assert df.loc["allowed", "requests"] == 2
        assert db.get_modes() == ["full"]

    def test_rule_usage(self, db):
        df = db.get_rule_usage()
        assert df.iloc[0]["rule_id"] == "||betrad.com^"
        assert df.iloc[0]["count"] == 3
        assert set(df["rule_id"]) == {"||betrad.com^", "||adnet.com^", "@@||adnet.com/allowed/$script"}

    def test_rule_usage_window(self, db):
        df = db.get_rule_usage(start_day=1, end_day=1)
        assert dict(zip(df["rule_id"], df["count"])) == {
            "||adnet.com^": 1, "@@||adnet.com/allowed/$script": 1
        }

    def test_usage_profile(self, db):
        profile = db.usage_profile()
        assert profile.count("||betrad.com^") == 3
        assert (profile.start_day, profile.end_day) == (0, 2)

    def test_daily_used_rules(self, db):
        df = db.get_daily_used_rules()
        assert dict(zip(df["day"], df["used_rules"])) == {0: 1, 1: 2, 2: 1}

    def test_third_party_contacts(self, db):
        # 1日目: news.com → adnet.com（例外で許可）と shop.com
        df = db.get_third_party_contacts()
        assert dict(zip(df["day"], df["contacts"])) == {1: 2}

    def test_blocked_resources(self, db):
        df = db.get_blocked_resources(min_size=50_000)
        assert df["content_hash"].tolist() == ["h1"]

    def test_replace_mode(self, db, suffixes):
        db.save_decisions("full", [_row("https://a.org/", "https://a.org/", 0)], suffixes=suffixes)
        assert db.get_status_counts()["requests"].sum() == 1

    def test_empty_database(self, tmp_path):
        with MeasurementDatabase(str(tmp_path / "empty.db")) as database:
            profile = database.usage_profile()
            assert profile.counts == {}
            assert profile.start_day is None
