"""
使用状況の分析 - ルールの古さと使用回数、新旧ルールの比較、日別使用率
"""

import logging
from dataclasses import dataclass, field
from datetime import date
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Tuple, Union

import pandas as pd

from app.analytics.snapshots import SnapshotSeries, diff_snapshots
from app.analytics.stats import KSResult, ks_two_sample
from app.config import USAGE_BUCKETS
from app.models.filter_rule import MATCHABLE_KINDS
from app.models.usage import UsageProfile

if TYPE_CHECKING:
    from app.models.database import MeasurementDatabase

logger = logging.getLogger(__name__)

# 年齢の比較対象（1年目から8年目まで）
MAX_AGE_YEARS = 8


def bucket_label(low: int, high: Optional[int]) -> str:
    if high is None:
        return f">{low - 1:,}"
    if low == high:
        return f"{low}"
    return f"{low:,}-{high:,}"


def usage_buckets(
    counts: Union[UsageProfile, Iterable[int]],
    rule_ids: Optional[Iterable[str]] = None
) -> Dict[str, float]:
    """
    使用回数の区分ごとの割合（0 / 1-100 / 101-1,000 / 1,000超）

    Args:
        counts: プロファイル、またはルールごとの使用回数
        rule_ids: プロファイルを渡すときの母集団（未指定ならプロファイル内のルール）

    Returns:
        {区分ラベル: 割合}
    """
    if isinstance(counts, UsageProfile):
        ids = list(rule_ids) if rule_ids is not None else list(counts.counts)
        values = [counts.count(rule_id) for rule_id in ids]
    else:
        values = list(counts)

    shares = {}
    for low, high in USAGE_BUCKETS:
        members = sum(
            1 for value in values
            if value >= low and (high is None or value <= high)
        )
        shares[bucket_label(low, high)] = members / len(values) if values else 0.0
    return shares


@dataclass
class AgeUsageReport:
    """ルールの古さ（年）ごとの使用状況とKS検定"""

    table: pd.DataFrame
    tests: List[Tuple[int, str, KSResult]] = field(default_factory=list)
    skipped: List[Tuple[int, str]] = field(default_factory=list)


def _matchable_ids(series: SnapshotSeries) -> List[str]:
    return [
        rule_id for rule_id, kind in sorted(series.last.kinds().items())
        if kind in MATCHABLE_KINDS
    ]


def age_usage_analysis(
    series: SnapshotSeries,
    profile: UsageProfile,
    reference_date: date
) -> AgeUsageReport:
    """
    ルールの古さと使用回数の関係

    最新スナップショットのネットワーク / 例外ルールを、追加日からの経過年数
    （切り捨て）で分ける。y年目（1..8）の使用回数分布を、1年未満のルールと
    y-1年目のルールそれぞれとKS検定で比べる。

    Args:
        series: スナップショット列
        profile: 使用回数プロファイル
        reference_date: 経過年数の基準日

    Returns:
        AgeUsageReport
    """
    first_seen = diff_snapshots(series).first_seen()
    ages: Dict[int, List[int]] = {}
    for rule_id in _matchable_ids(series):
        age = max(0, (reference_date - first_seen[rule_id]).days // 365)
        ages.setdefault(age, []).append(profile.count(rule_id))

    rows = []
    for age in sorted(ages):
        counts = ages[age]
        used = sum(1 for count in counts if count >= 1)
        rows.append({
            "age_years": age,
            "rules": len(counts),
            "used": used,
            "used_fraction": used / len(counts),
            "mean_uses": sum(counts) / len(counts),
        })
    table = pd.DataFrame(rows, columns=["age_years", "rules", "used", "used_fraction", "mean_uses"])

    report = AgeUsageReport(table=table)
    for year in range(1, MAX_AGE_YEARS + 1):
        for label, other in (("vs_new", 0), ("vs_previous", year - 1)):
            if year == 1 and label == "vs_previous":
                # 1年目の前年は1年未満と同じ
                continue
            if year not in ages or other not in ages:
                report.skipped.append((year, label))
                continue
            report.tests.append((year, label, ks_two_sample(ages[year], ages[other])))
    return report


def new_vs_old_usage(
    series: SnapshotSeries,
    profile: UsageProfile,
    window_start: date
) -> pd.DataFrame:
    """
    計測期間中に追加されたルールと、それ以前からあるルールの使用状況

    Args:
        series: スナップショット列
        profile: 使用回数プロファイル
        window_start: 計測期間の開始日

    Returns:
        group, rules, used, used_fraction, mean_daily_uses の2行
    """
    first_seen = diff_snapshots(series).first_seen()
    window_days = 1
    if profile.start_day is not None and profile.end_day is not None:
        window_days = profile.end_day - profile.start_day + 1

    groups: Dict[str, List[int]] = {"new": [], "old": []}
    for rule_id in _matchable_ids(series):
        group = "new" if first_seen[rule_id] >= window_start else "old"
        groups[group].append(profile.count(rule_id))

    rows = []
    for group, counts in groups.items():
        used_counts = [count for count in counts if count >= 1]
        rows.append({
            "group": group,
            "rules": len(counts),
            "used": len(used_counts),
            "used_fraction": len(used_counts) / len(counts) if counts else 0.0,
            "mean_daily_uses": (
                sum(used_counts) / len(used_counts) / window_days if used_counts else 0.0
            ),
        })
    return pd.DataFrame(rows)


def daily_usage(db: "MeasurementDatabase", rule_count: int) -> Tuple[pd.DataFrame, float]:
    """
    日ごとの使用ルール割合

    Args:
        db: 判定結果を保存したデータベース
        rule_count: リストのネットワーク + 例外ルール数

    Returns:
        (day, used_rules, used_fraction の DataFrame, 日平均の割合)
    """
    df = db.get_daily_used_rules()
    if df.empty or rule_count == 0:
        return pd.DataFrame(columns=["day", "used_rules", "used_fraction"]), 0.0
    df["used_fraction"] = df["used_rules"] / rule_count
    return df, float(df["used_fraction"].mean())
