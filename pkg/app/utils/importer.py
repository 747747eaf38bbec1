"""
インポーター - フィルタリスト・リクエストログ・スナップショット・プロファイルの読み込み
"""

import logging
import re
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple, Union

import pandas as pd

from app.analytics.snapshots import Snapshot, SnapshotSeries
from app.config import LOG_HEADER, MALFORMED_LOG_LIMIT
from app.errors import ConfigError, LogRejected
from app.models.filter_rule import FilterRule, ParseStats
from app.models.request import LogRecord, Request, RequestLog
from app.models.usage import UsageProfile
from app.utils.filter_parser import parse_list, split_lines

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SNAPSHOT_NAME_RE = re.compile(r"^(\d{4}-\d{2}-\d{2})\.txt$")
LOG_NAME_RE = re.compile(r"^(\d{4}-\d{2}-\d{2})\.log$")
PROFILE_HEADER_RE = re.compile(r"^#\s*usage-profile(?:\s+start_day=(-?\d+))?(?:\s+end_day=(-?\d+))?\s*$")


def read_text(path: PathLike) -> str:
    """UTF-8（BOM付きも可）で読み込み"""
    with open(path, "r", encoding="utf-8-sig", newline="") as f:
        return f.read()


def load_list(path: PathLike) -> Tuple[List[FilterRule], ParseStats]:
    """
    フィルタリストを読み込み

    Args:
        path: リストファイル

    Returns:
        (ルールのリスト, 種別ごとの件数)
    """
    rules, stats = parse_list(read_text(path))
    logger.info("リスト読込: %s (%d行)", path, stats.total)
    return rules, stats


def load_hot_ids(path: PathLike) -> Set[str]:
    """ホットセットのIDファイル（1行1ルール、空行は無視）を読み込み"""
    return {line.strip() for line in split_lines(read_text(path)) if line.strip()}


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 の日時（タイムゾーンなしはUTCとみなす）"""
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    value = datetime.fromisoformat(text)
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value


class LogImporter:
    """リクエストログを読み込むクラス"""

    # 必須フィールド数と最大フィールド数
    MIN_FIELDS = 5
    MAX_FIELDS = 7

    def __init__(self, malformed_limit: float = MALFORMED_LOG_LIMIT):
        """
        インポーターを初期化

        Args:
            malformed_limit: 不正な行の割合の上限（超えたら LogRejected）
        """
        self.malformed_limit = malformed_limit
        self.errors: List[str] = []
        self.warnings: List[str] = []
        self.malformed = 0

    def parse_line(self, line: str) -> Tuple[datetime, LogRecord]:
        """
        1行をパース

        Raises:
            ValueError: 行の形式が不正
        """
        fields = line.split("|")
        if not self.MIN_FIELDS <= len(fields) <= self.MAX_FIELDS:
            raise ValueError(f"フィールド数が不正です ({len(fields)})")

        timestamp = parse_timestamp(fields[0])
        page_url, initiator_url, url, resource_type = (f.strip() for f in fields[1:5])
        if not url or not page_url:
            raise ValueError("URLが空です")

        content_hash = fields[5].strip() if len(fields) > 5 and fields[5].strip() else None
        content_size = None
        if len(fields) > 6 and fields[6].strip():
            content_size = int(fields[6])
            if content_size < 0:
                raise ValueError(f"サイズが負です ({content_size})")

        request = Request(
            url=url,
            initiator_url=initiator_url or page_url,
            resource_type=resource_type.lower(),
            timestamp=timestamp.timestamp(),
            content_hash=content_hash,
            content_size=content_size,
        )
        return timestamp, LogRecord(request=request, page_url=page_url, day=0)

    def load(self, path: PathLike, base_date: Optional[date] = None) -> RequestLog:
        """
        ログファイルを読み込み

        Args:
            path: ログファイル
            base_date: 日インデックスの基準日（未指定なら最初のレコードの日付）

        Returns:
            RequestLog（不正な行は除く）

        Raises:
            LogRejected: ヘッダーがない、または不正な行が多すぎる
        """
        self.errors = []
        self.warnings = []
        self.malformed = 0

        lines = split_lines(read_text(path))
        if not any(line.strip() for line in lines):
            logger.warning("ログが空です: %s", path)
            self.warnings.append(f"ログが空です: {path}")
            return RequestLog()

        if lines[0].strip() != LOG_HEADER:
            raise LogRejected(f"{path}: 1行目がヘッダー \"{LOG_HEADER}\" ではありません")

        parsed: List[Tuple[datetime, LogRecord]] = []
        line_count = 0
        for line_no, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            line_count += 1
            try:
                parsed.append(self.parse_line(line))
            except ValueError as e:
                self.malformed += 1
                self.errors.append(f"{path}:{line_no}: {e}")

        if line_count and self.malformed / line_count > self.malformed_limit:
            raise LogRejected(
                f"{path}: 不正な行が多すぎます ({self.malformed}/{line_count}行)"
            )

        if parsed and base_date is None:
            base_date = parsed[0][0].date()
        records = []
        last_seen: Dict[int, float] = {}
        for timestamp, record in parsed:
            day = (timestamp.date() - base_date).days
            if record.request.timestamp < last_seen.get(day, float("-inf")):
                self.warnings.append(f"{path}: 日 {day} のタイムスタンプが逆順です")
            last_seen[day] = record.request.timestamp
            records.append(LogRecord(request=record.request, page_url=record.page_url, day=day))

        if self.malformed:
            logger.warning("不正な行を %d 件スキップしました: %s", self.malformed, path)
            for message in self.summary():
                logger.warning(message)
        logger.info("ログ読込: %s (%d件)", path, len(records))
        return RequestLog(records)

    def summary(self) -> List[str]:
        """エラー・警告の先頭5件（残りは件数のみ）"""
        messages = self.errors + self.warnings
        shown = messages[:5]
        if len(messages) > 5:
            shown.append(f"...他 {len(messages) - 5} 件")
        return shown


def load_log(path: PathLike, base_date: Optional[date] = None) -> RequestLog:
    """リクエストログを読み込み（LogImporter の簡易版）"""
    return LogImporter().load(path, base_date)


def _dated_files(directory: PathLike, pattern: "re.Pattern") -> List[Tuple[date, Path]]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"ディレクトリが見つかりません: {directory}")
    found = []
    for path in sorted(directory.iterdir()):
        match = pattern.match(path.name)
        if match:
            found.append((date.fromisoformat(match.group(1)), path))
    return found


def load_log_directory(directory: PathLike) -> Dict[date, RequestLog]:
    """
    日付ごとのログ（YYYY-MM-DD.log）を読み込み

    日インデックスは最も古いファイルの日付からの日数。
    """
    files = _dated_files(directory, LOG_NAME_RE)
    if not files:
        logger.warning("ログファイルがありません: %s", directory)
        return {}
    base_date = files[0][0]
    importer = LogImporter()
    return {day: importer.load(path, base_date) for day, path in files}


def merge_logs(logs: Dict[date, RequestLog]) -> RequestLog:
    """日付順に1つのログへまとめる"""
    records = []
    for day in sorted(logs):
        records.extend(logs[day].records)
    return RequestLog(records)


def load_snapshots(directory: PathLike) -> SnapshotSeries:
    """
    スナップショット（YYYY-MM-DD.txt）を読み込み

    Returns:
        SnapshotSeries（日付順）
    """
    files = _dated_files(directory, SNAPSHOT_NAME_RE)
    snapshots = [Snapshot.from_text(day, read_text(path)) for day, path in files]
    logger.info("スナップショット読込: %s (%d件)", directory, len(snapshots))
    return SnapshotSeries(snapshots)


def load_profile(path: PathLike) -> UsageProfile:
    """
    使用回数プロファイルを読み込み

    1行目 "# usage-profile start_day=N end_day=M"、以降 "rule_id,count" のCSV。
    """
    with open(path, "r", encoding="utf-8-sig") as f:
        header = f.readline().strip()
    match = PROFILE_HEADER_RE.match(header)
    if match is None:
        raise ConfigError(f"{path}: プロファイルのヘッダーがありません")

    df = pd.read_csv(path, skiprows=1, dtype={"rule_id": str}, keep_default_na=False)
    if list(df.columns) != ["rule_id", "count"]:
        raise ConfigError(f"{path}: 列名は rule_id,count である必要があります")

    profile = UsageProfile()
    for rule_id, count in zip(df["rule_id"], df["count"]):
        if int(count) > 0:
            profile.counts[rule_id] += int(count)
    start, end = match.group(1), match.group(2)
    profile.start_day = int(start) if start is not None else None
    profile.end_day = int(end) if end is not None else None
    logger.info("プロファイル読込: %s (%d件)", path, len(profile.counts))
    return profile
