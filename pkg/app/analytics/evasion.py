"""
広告配信側の回避検出

計測期間中に追加されたルールにブロックされたリソースを、コンテンツの
ハッシュで追跡し、ルール追加後にURLが変わる頻度が増えたものを候補とする。
"""

import logging
import re
from dataclasses import dataclass
from datetime import date
from typing import Dict, FrozenSet, List, Mapping, Optional, Set, Tuple
from urllib.parse import urlsplit

import pandas as pd

from app.analytics.snapshots import RuleLifetime, SnapshotSeries, diff_snapshots
from app.config import MIN_EVASION_SIZE, MIN_RULE_PERSISTENCE_DAYS
from app.engine.index import RuleIndex, build_index
from app.engine.matcher import MatchContext, rule_matches
from app.engine.suffix import SuffixTable, etld_plus_one
from app.errors import MalformedRequest
from app.models.filter_rule import FilterRule, RuleKind
from app.models.request import RequestLog

logger = logging.getLogger(__name__)

AD_SEGMENT_RE = re.compile(r"/ads?/", re.IGNORECASE)
DIMENSION_RE = re.compile(r"_\d+x\d+_")


class EvasionHint:
    DOMAIN_CHANGE = "domain-change"
    FIRST_PARTY_MOVE = "first-party-move"
    KEYWORD_REMOVAL = "keyword-removal"
    DIMENSION_REMOVAL = "dimension-removal"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class EvasionCandidate:
    """回避の候補"""

    content_hash: str
    rule_id: str
    rule_added: date
    urls_before: FrozenSet[str]
    urls_after: FrozenSet[str]
    sizes: Tuple[int, ...]
    hint: str
    rate_before: float
    rate_after: float


@dataclass(frozen=True)
class _Observation:
    day: date
    url: str
    page_url: str
    size: Optional[int]


def _host(url: str) -> str:
    try:
        return urlsplit(url).hostname or ""
    except ValueError:
        return ""


def _tracked_lifetimes(series: SnapshotSeries) -> List[Tuple[RuleLifetime, FilterRule]]:
    """期間中に追加され、14日以上残ったネットワークルール"""
    diff = diff_snapshots(series)
    # 初日のリストにあったルールは、削除後に再追加されても対象外
    initial = {rule.id for rule in series.first.rules}
    end_of_series = series.last.day

    tracked = []
    for lifetime in diff.lifetimes:
        if lifetime.rule_id in initial:
            continue
        end = lifetime.removed or end_of_series
        if (end - lifetime.first_seen).days < MIN_RULE_PERSISTENCE_DAYS:
            continue
        snapshot = series.at(lifetime.first_seen)
        rule = next(r for r in snapshot.rules if r.id == lifetime.rule_id)
        if rule.kind == RuleKind.NETWORK:
            tracked.append((lifetime, rule))
    return tracked


def _active(lifetime: RuleLifetime, day: date) -> bool:
    return lifetime.first_seen <= day and (lifetime.removed is None or day < lifetime.removed)


class _ExceptionLookup:
    """その日のリストの例外ルール（スナップショットごとにキャッシュ）"""

    def __init__(self, series: SnapshotSeries):
        self.series = series
        self._cache: Dict[date, RuleIndex] = {}

    def excepted(self, day: date, ctx: MatchContext) -> bool:
        snapshot = self.series.at(day)
        if snapshot is None:
            return False
        index = self._cache.get(snapshot.day)
        if index is None:
            exceptions = [rule for rule in snapshot.rules if rule.kind == RuleKind.EXCEPTION]
            index = build_index(exceptions)
            self._cache[snapshot.day] = index
        return any(rule_matches(index.rules[i], ctx) for i in index.candidates(ctx))


def _rate_of_new_urls(
    days: List[date],
    urls_by_day: Dict[date, Set[str]],
    previous_of: Dict[date, Optional[date]]
) -> float:
    """各観測日に、直前の観測日になかったURLの数の平均"""
    if not days:
        return 0.0
    total = 0
    for day in days:
        previous = previous_of[day]
        if previous is not None:
            total += len(urls_by_day[day] - urls_by_day[previous])
    return total / len(days)


def _classify(
    before: List[_Observation],
    after: List[_Observation],
    suffixes: SuffixTable
) -> str:
    before_urls = {obs.url for obs in before}
    new_after = [obs for obs in after if obs.url not in before_urls] or after

    def site(url):
        host = _host(url)
        return etld_plus_one(host, suffixes) if host else ""

    before_sites = {site(obs.url) for obs in before}
    after_sites = {site(obs.url) for obs in new_after}

    before_third = all(site(obs.url) != site(obs.page_url) for obs in before)
    after_first = any(site(obs.url) == site(obs.page_url) for obs in new_after)
    if before_third and after_first:
        return EvasionHint.FIRST_PARTY_MOVE
    if not after_sites <= before_sites:
        return EvasionHint.DOMAIN_CHANGE

    def path_of(url):
        try:
            return urlsplit(url).path
        except ValueError:
            return url

    if any(AD_SEGMENT_RE.search(path_of(o.url)) for o in before) and \
            not any(AD_SEGMENT_RE.search(path_of(o.url)) for o in new_after):
        return EvasionHint.KEYWORD_REMOVAL
    if any(DIMENSION_RE.search(o.url) for o in before) and \
            not any(DIMENSION_RE.search(o.url) for o in new_after):
        return EvasionHint.DIMENSION_REMOVAL
    return EvasionHint.UNCLASSIFIED


def detect_evasions(
    series: SnapshotSeries,
    logs: Mapping[date, RequestLog],
    suffixes: SuffixTable
) -> List[EvasionCandidate]:
    """
    回避の候補を検出

    1. 期間中に追加され14日以上残ったルールに絞る
    2. そのルールにブロックされたリソースを対応付ける
    3. ハッシュごとにまとめ、2つ以上のURLから配信された50KB以上のものに絞る
    4. 追加日を除いて前後の「新しいURLの出現数/日」を比べ、後が大きいものを候補とする

    Args:
        series: スナップショット列
        logs: 日付ごとのリクエストログ（content_hash / content_size 付き）
        suffixes: サフィックステーブル

    Returns:
        EvasionCandidate のリスト（ルールID, ハッシュ順）
    """
    tracked = _tracked_lifetimes(series)
    if not tracked:
        logger.info("追跡対象のルールがありません")
        return []

    rules = {rule.id: rule for _, rule in tracked}
    index = build_index(rules.values())
    lifetimes_of: Dict[str, List[RuleLifetime]] = {}
    for lifetime, rule in tracked:
        lifetimes_of.setdefault(rule.id, []).append(lifetime)

    exceptions = _ExceptionLookup(series)
    observations: Dict[str, List[_Observation]] = {}
    blocked: Dict[Tuple[str, date], Set[str]] = {}

    for day in sorted(logs):
        for record in logs[day]:
            request = record.request
            if not request.content_hash:
                continue
            observations.setdefault(request.content_hash, []).append(
                _Observation(day, request.url, record.page_url, request.content_size)
            )
            if (request.content_size or 0) < MIN_EVASION_SIZE:
                continue
            try:
                ctx = MatchContext(request, suffixes)
                matched = [i for i in index.candidates(ctx) if rule_matches(index.rules[i], ctx)]
                if not matched or exceptions.excepted(day, ctx):
                    continue
            except MalformedRequest:
                continue
            for rule_id in matched:
                for lifetime in lifetimes_of[rule_id]:
                    if _active(lifetime, day):
                        blocked.setdefault((rule_id, lifetime.first_seen), set()).add(
                            request.content_hash
                        )

    candidates = []
    for (rule_id, added), hashes in sorted(blocked.items()):
        for content_hash in sorted(hashes):
            candidate = _compare(rule_id, added, content_hash, observations[content_hash], suffixes)
            if candidate is not None:
                candidates.append(candidate)

    logger.info("回避の候補: %d件", len(candidates))
    return candidates


def _compare(
    rule_id: str,
    added: date,
    content_hash: str,
    observed: List[_Observation],
    suffixes: SuffixTable
) -> Optional[EvasionCandidate]:
    sizes = tuple(sorted({obs.size for obs in observed if obs.size is not None}))
    if not sizes or min(sizes) < MIN_EVASION_SIZE:
        return None
    if len({obs.url for obs in observed}) < 2:
        return None

    urls_by_day: Dict[date, Set[str]] = {}
    for obs in observed:
        urls_by_day.setdefault(obs.day, set()).add(obs.url)
    days = sorted(urls_by_day)
    previous_of = {day: (days[i - 1] if i > 0 else None) for i, day in enumerate(days)}

    before_days = [day for day in days if day < added]
    after_days = [day for day in days if day > added]
    if not before_days or not after_days:
        return None

    rate_before = _rate_of_new_urls(before_days, urls_by_day, previous_of)
    rate_after = _rate_of_new_urls(after_days, urls_by_day, previous_of)
    if rate_after <= rate_before:
        return None

    before = [obs for obs in observed if obs.day < added]
    after = [obs for obs in observed if obs.day > added]
    return EvasionCandidate(
        content_hash=content_hash,
        rule_id=rule_id,
        rule_added=added,
        urls_before=frozenset(obs.url for obs in before),
        urls_after=frozenset(obs.url for obs in after),
        sizes=sizes,
        hint=_classify(before, after, suffixes),
        rate_before=rate_before,
        rate_after=rate_after,
    )


def block_timeline(
    series: SnapshotSeries,
    logs: Mapping[date, RequestLog],
    rule_id: str,
    suffixes: SuffixTable
) -> pd.DataFrame:
    """
    ルールに一致したリクエストの日別件数（ルール追加日からの相対日）

    ルールがその日のリストにあれば blocked、なければ allowed に数える。

    Returns:
        relative_day, day, matched, blocked, allowed の DataFrame
    """
    rule = None
    added = None
    for snapshot in series:
        for candidate in snapshot.rules:
            if candidate.id == rule_id and candidate.is_matchable:
                rule, added = candidate, snapshot.day
                break
        if rule is not None:
            break
    columns = ["relative_day", "day", "matched", "blocked", "allowed"]
    if rule is None:
        logger.warning("ルールがスナップショットにありません: %s", rule_id)
        return pd.DataFrame(columns=columns)

    rows = []
    for day in sorted(logs):
        snapshot = series.at(day)
        in_list = snapshot is not None and rule_id in snapshot.rule_ids
        matched = 0
        for record in logs[day]:
            try:
                if rule_matches(rule, MatchContext(record.request, suffixes)):
                    matched += 1
            except MalformedRequest:
                continue
        rows.append({
            "relative_day": (day - added).days,
            "day": day,
            "matched": matched,
            "blocked": matched if in_list else 0,
            "allowed": 0 if in_list else matched,
        })
    return pd.DataFrame(rows, columns=columns)
