"""
データアクセス層 - リクエストごとの判定結果をSQLiteに保存・集計する
"""

import logging
import sqlite3
from pathlib import Path
from typing import Iterable, List, Optional, Tuple
from urllib.parse import urlsplit

import pandas as pd

from app.config import DEFAULT_DB_PATH
from app.engine.suffix import SuffixTable, etld_plus_one
from app.models.request import Decision, LogRecord
from app.models.usage import UsageProfile

logger = logging.getLogger(__name__)

SCHEMA = """
    CREATE TABLE IF NOT EXISTS request_decisions (
        mode TEXT NOT NULL,
        day INTEGER NOT NULL,
        timestamp REAL NOT NULL,
        page_url TEXT NOT NULL,
        url TEXT NOT NULL,
        page_etld1 TEXT,
        request_etld1 TEXT,
        resource_type TEXT NOT NULL,
        content_hash TEXT,
        content_size INTEGER,
        status TEXT NOT NULL,
        network_rule TEXT,
        exception_rule TEXT
    )
"""

INDEXES = [
    "CREATE INDEX IF NOT EXISTS idx_decisions_mode_day ON request_decisions(mode, day)",
    "CREATE INDEX IF NOT EXISTS idx_decisions_network ON request_decisions(network_rule)",
    "CREATE INDEX IF NOT EXISTS idx_decisions_hash ON request_decisions(content_hash)",
]


def _site(url: str, suffixes: SuffixTable) -> Optional[str]:
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return None
    return etld_plus_one(host, suffixes) if host else None


class MeasurementDatabase:
    """判定結果データベースアクセスクラス"""

    def __init__(self, db_path: Optional[str] = None):
        """
        データベース接続を初期化

        Args:
            db_path: データベースファイルのパス。指定しない場合はデフォルトパスを使用
        """
        if db_path is None:
            DEFAULT_DB_PATH.parent.mkdir(parents=True, exist_ok=True)
            db_path = str(DEFAULT_DB_PATH)

        self.db_path = db_path
        self._conn: Optional[sqlite3.Connection] = None

    @property
    def connection(self) -> sqlite3.Connection:
        """データベース接続を取得（遅延接続、初回にテーブルを作成）"""
        if self._conn is None:
            self._conn = sqlite3.connect(self.db_path)
            self._conn.execute(SCHEMA)
            for statement in INDEXES:
                self._conn.execute(statement)
            self._conn.commit()
        return self._conn

    def save_decisions(
        self,
        mode: str,
        decisions: Iterable[Tuple[LogRecord, Decision]],
        suffixes: SuffixTable,
        replace: bool = True
    ) -> int:
        """
        リプレイの判定結果を保存

        Args:
            mode: 戦略名（full / reduced / hybrid）
            decisions: (レコード, 判定) の列
            suffixes: eTLD+1 の算出に使うテーブル
            replace: 同じ戦略の既存データを削除してから保存するか

        Returns:
            保存件数
        """
        conn = self.connection
        if replace:
            conn.execute("DELETE FROM request_decisions WHERE mode = ?", (mode,))

        rows = []
        for record, decision in decisions:
            request = record.request
            rows.append((
                mode,
                record.day,
                request.timestamp,
                record.page_url,
                request.url,
                _site(record.page_url, suffixes),
                _site(request.url, suffixes),
                request.resource_type,
                request.content_hash,
                request.content_size,
                decision.status.value,
                decision.network_rule,
                decision.exception_rule,
            ))
        conn.executemany(
            """
            INSERT INTO request_decisions
            (mode, day, timestamp, page_url, url, page_etld1, request_etld1,
             resource_type, content_hash, content_size, status, network_rule, exception_rule)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            """,
            rows
        )
        conn.commit()
        logger.info("判定結果を保存: %d件 (%s)", len(rows), mode)
        return len(rows)

    def get_modes(self) -> List[str]:
        query = "SELECT DISTINCT mode FROM request_decisions ORDER BY mode"
        return pd.read_sql_query(query, self.connection)["mode"].tolist()

    def get_status_counts(self) -> pd.DataFrame:
        """
        戦略・判定ごとの件数

        Returns:
            mode, status, requests
        """
        query = """
            SELECT mode, status, COUNT(*) as requests
            FROM request_decisions
            GROUP BY mode, status
            ORDER BY mode, status
        """
        return pd.read_sql_query(query, self.connection)

    def get_rule_usage(
        self,
        mode: str = "full",
        start_day: Optional[int] = None,
        end_day: Optional[int] = None
    ) -> pd.DataFrame:
        """
        ルールごとの一致回数

        Args:
            mode: 戦略名
            start_day: 集計開始日（含む）
            end_day: 集計終了日（含む）

        Returns:
            rule_id, count（回数の多い順）
        """
        conditions = ["mode = ?"]
        params: list = [mode]
        if start_day is not None:
            conditions.append("day >= ?")
            params.append(start_day)
        if end_day is not None:
            conditions.append("day <= ?")
            params.append(end_day)
        where = " AND ".join(conditions)

        query = f"""
            SELECT rule_id, COUNT(*) as count FROM (
                SELECT network_rule as rule_id FROM request_decisions
                WHERE {where} AND network_rule IS NOT NULL
                UNION ALL
                SELECT exception_rule as rule_id FROM request_decisions
                WHERE {where} AND exception_rule IS NOT NULL
            )
            GROUP BY rule_id
            ORDER BY count DESC, rule_id
        """
        return pd.read_sql_query(query, self.connection, params=params + params)

    def usage_profile(
        self,
        mode: str = "full",
        start_day: Optional[int] = None,
        end_day: Optional[int] = None
    ) -> UsageProfile:
        """get_rule_usage を UsageProfile にしたもの"""
        df = self.get_rule_usage(mode, start_day, end_day)
        profile = UsageProfile()
        for rule_id, count in zip(df["rule_id"], df["count"]):
            profile.counts[rule_id] = int(count)

        days = pd.read_sql_query(
            "SELECT MIN(day) as first, MAX(day) as last FROM request_decisions WHERE mode = ?",
            self.connection, params=[mode]
        )
        first, last = days["first"].iloc[0], days["last"].iloc[0]
        if pd.notna(first):
            profile.start_day = int(first) if start_day is None else start_day
            profile.end_day = int(last) if end_day is None else end_day
        return profile

    def get_daily_used_rules(self, mode: str = "full") -> pd.DataFrame:
        """
        日ごとの使用ルール数

        Returns:
            day, used_rules
        """
        query = """
            SELECT day, COUNT(DISTINCT rule_id) as used_rules FROM (
                SELECT day, network_rule as rule_id FROM request_decisions
                WHERE mode = ? AND network_rule IS NOT NULL
                UNION ALL
                SELECT day, exception_rule as rule_id FROM request_decisions
                WHERE mode = ? AND exception_rule IS NOT NULL
            )
            GROUP BY day
            ORDER BY day
        """
        return pd.read_sql_query(query, self.connection, params=[mode, mode])

    def get_blocked_resources(self, mode: str = "full", min_size: int = 0) -> pd.DataFrame:
        """
        ブロックされたリソース（ハッシュ付き）

        Returns:
            day, url, page_url, content_hash, content_size, network_rule
        """
        query = """
            SELECT day, url, page_url, content_hash, content_size, network_rule
            FROM request_decisions
            WHERE mode = ? AND status = 'blocked'
              AND content_hash IS NOT NULL AND COALESCE(content_size, 0) >= ?
            ORDER BY day, timestamp
        """
        return pd.read_sql_query(query, self.connection, params=[mode, min_size])

    def get_third_party_contacts(self, mode: str = "full") -> pd.DataFrame:
        """
        日ごとの (ページ, リクエスト先) の eTLD+1 の組の数（ブロックされなかったもの）

        Returns:
            day, contacts
        """
        query = """
            SELECT day, COUNT(*) as contacts FROM (
                SELECT DISTINCT day, page_etld1, request_etld1
                FROM request_decisions
                WHERE mode = ? AND status != 'blocked'
                  AND page_etld1 IS NOT NULL AND request_etld1 IS NOT NULL
                  AND page_etld1 != request_etld1
            )
            GROUP BY day
            ORDER BY day
        """
        return pd.read_sql_query(query, self.connection, params=[mode])

    def close(self):
        """データベース接続を閉じる"""
        if self._conn is not None:
            self._conn.close()
            self._conn = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
