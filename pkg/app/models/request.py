"""
リクエスト・判定結果・リクエストログのデータ型
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

from app.models.filter_rule import REQUEST_TYPES


class DecisionStatus(str, Enum):
    BLOCKED = "blocked"
    EXCEPTED = "excepted"
    ALLOWED = "allowed"


@dataclass(frozen=True)
class Request:
    """ネットワークリクエスト1件"""

    url: str
    initiator_url: str
    resource_type: str = "other"
    timestamp: float = 0.0
    content_hash: Optional[str] = None
    content_size: Optional[int] = None

    def __post_init__(self):
        # ログ由来の未知の種別は other として扱う
        if self.resource_type not in REQUEST_TYPES:
            object.__setattr__(self, "resource_type", "other")


@dataclass(frozen=True)
class Decision:
    """
    判定結果

    network_rule / exception_rule は一致したルールID（リスト順で最初のもの）。
    例外ルールだけが一致した場合は ALLOWED のまま exception_rule を記録する。
    """

    status: DecisionStatus
    network_rule: Optional[str] = None
    exception_rule: Optional[str] = None
    heuristic_allowed: bool = False

    @classmethod
    def from_matches(
        cls,
        network_rule: Optional[str],
        exception_rule: Optional[str]
    ) -> "Decision":
        if network_rule is None:
            status = DecisionStatus.ALLOWED
        elif exception_rule is None:
            status = DecisionStatus.BLOCKED
        else:
            status = DecisionStatus.EXCEPTED
        return cls(status=status, network_rule=network_rule, exception_rule=exception_rule)

    @classmethod
    def heuristic(cls) -> "Decision":
        return cls(status=DecisionStatus.ALLOWED, heuristic_allowed=True)

    @property
    def matched_rules(self) -> List[str]:
        return [rule for rule in (self.network_rule, self.exception_rule) if rule is not None]


@dataclass(frozen=True)
class LogRecord:
    """リクエストログの1レコード（訪問ページと日付インデックス付き）"""

    request: Request
    page_url: str
    day: int


@dataclass
class RequestLog:
    """リクエストログ（レコード順を保持）"""

    records: List[LogRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def days(self) -> List[int]:
        return sorted({record.day for record in self.records})
