"""
スナップショット解析 - 日次スナップショット間のルール追加・削除と寿命
"""

import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Dict, FrozenSet, List, Optional, Tuple

from app.analytics.stats import ecdf
from app.errors import EmptyInput
from app.models.filter_rule import FilterRule, RuleKind
from app.utils.filter_parser import parse_list

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Snapshot:
    """ある日のリスト"""

    day: date
    rules: Tuple[FilterRule, ...]

    @classmethod
    def from_text(cls, day: date, text: str) -> "Snapshot":
        rules, _ = parse_list(text)
        return cls(day=day, rules=tuple(rules))

    @property
    def rule_ids(self) -> FrozenSet[str]:
        """コメント以外のルールID"""
        return frozenset(rule.id for rule in self.rules if rule.kind != RuleKind.COMMENT)

    def kinds(self) -> Dict[str, RuleKind]:
        return {rule.id: rule.kind for rule in self.rules if rule.kind != RuleKind.COMMENT}


class SnapshotSeries:
    """日付順のスナップショット列（1日1件まで）"""

    def __init__(self, snapshots: List[Snapshot]):
        days = [snapshot.day for snapshot in snapshots]
        if any(b <= a for a, b in zip(days, days[1:])):
            raise ValueError("スナップショットの日付は重複なしの昇順である必要があります")
        self.snapshots = list(snapshots)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    @property
    def first(self) -> Snapshot:
        return self.snapshots[0]

    @property
    def last(self) -> Snapshot:
        return self.snapshots[-1]

    def at(self, day: date) -> Optional[Snapshot]:
        """その日時点で有効なスナップショット（day 以前で最新のもの）"""
        current = None
        for snapshot in self.snapshots:
            if snapshot.day > day:
                break
            current = snapshot
        return current


@dataclass
class RuleLifetime:
    """ルールの追加日と削除日"""

    rule_id: str
    first_seen: date
    removed: Optional[date] = None

    @property
    def lifetime_days(self) -> Optional[int]:
        if self.removed is None:
            return None
        return (self.removed - self.first_seen).days


@dataclass
class SnapshotDiff:
    """スナップショット列の差分集計"""

    days: List[date]
    insertions: Dict[date, int]
    removals: Dict[date, int]
    sizes: List[Tuple[date, int]]
    lifetimes: List[RuleLifetime] = field(default_factory=list)

    @property
    def total_insertions(self) -> int:
        return sum(self.insertions.values())

    @property
    def total_removals(self) -> int:
        return sum(self.removals.values())

    def removed_lifetimes(self) -> List[RuleLifetime]:
        return [lifetime for lifetime in self.lifetimes if lifetime.removed is not None]

    def first_seen(self) -> Dict[str, date]:
        """ルールIDごとの最新の追加日（再追加されたルールは再追加日）"""
        result: Dict[str, date] = {}
        for lifetime in self.lifetimes:
            result[lifetime.rule_id] = lifetime.first_seen
        return result


def diff_snapshots(series: SnapshotSeries) -> SnapshotDiff:
    """
    前日との差分からルールの追加・削除・寿命を求める

    再追加されたルールは新しい寿命として数える。

    Args:
        series: 2件以上のスナップショット

    Returns:
        SnapshotDiff

    Raises:
        EmptyInput: スナップショットが2件未満
    """
    if len(series) < 2:
        raise EmptyInput("スナップショットが2件以上必要です")

    first = series.first
    previous = first.rule_ids
    open_lifetimes: Dict[str, RuleLifetime] = {
        rule_id: RuleLifetime(rule_id, first.day) for rule_id in sorted(previous)
    }
    lifetimes: List[RuleLifetime] = list(open_lifetimes.values())

    insertions: Dict[date, int] = {}
    removals: Dict[date, int] = {}
    sizes = [(first.day, len(previous))]

    for snapshot in series.snapshots[1:]:
        current = snapshot.rule_ids
        added = current - previous
        removed = previous - current
        insertions[snapshot.day] = len(added)
        removals[snapshot.day] = len(removed)
        sizes.append((snapshot.day, len(current)))

        for rule_id in sorted(removed):
            open_lifetimes.pop(rule_id).removed = snapshot.day
        for rule_id in sorted(added):
            lifetime = RuleLifetime(rule_id, snapshot.day)
            open_lifetimes[rule_id] = lifetime
            lifetimes.append(lifetime)
        previous = current

    diff = SnapshotDiff(
        days=[snapshot.day for snapshot in series],
        insertions=insertions,
        removals=removals,
        sizes=sizes,
        lifetimes=lifetimes,
    )
    logger.info(
        "スナップショット %d 件: 追加 %d / 削除 %d",
        len(series), diff.total_insertions, diff.total_removals
    )
    return diff


def lifetime_cdf(lifetimes: List[RuleLifetime]) -> List[Tuple[float, float]]:
    """
    削除されたルールの寿命（日数）の経験分布

    Raises:
        EmptyInput: 削除されたルールがない
    """
    days = [lifetime.lifetime_days for lifetime in lifetimes if lifetime.removed is not None]
    if not days:
        raise EmptyInput("削除されたルールがありません")
    return ecdf(days)
