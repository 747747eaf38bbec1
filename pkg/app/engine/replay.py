"""
リプレイハーネス - リクエストログを戦略に流して集計する
"""

import logging
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple
from urllib.parse import urlsplit

import numpy as np

from app.analytics.stats import ecdf
from app.analytics.usage import usage_buckets
from app.config import REPLAY_WARMUP
from app.engine.index import matchable_rules
from app.engine.strategies import AsyncOutcome, Strategy, StrategyConfig, StrategyMode
from app.engine.suffix import SuffixTable, etld_plus_one
from app.errors import MalformedRequest
from app.models.filter_rule import FilterRule
from app.models.request import Decision, DecisionStatus, LogRecord, RequestLog
from app.models.usage import UsageProfile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimingStats:
    """判定時間の分布（ミリ秒、0.01ms単位）"""

    median_ms: float
    p90_ms: float
    samples: int

    @classmethod
    def from_seconds(cls, durations: List[float]) -> "TimingStats":
        if not durations:
            return cls(0.0, 0.0, 0)
        ms = np.asarray(durations) * 1000.0
        return cls(
            median_ms=round(float(np.median(ms)), 2),
            p90_ms=round(float(np.percentile(ms, 90)), 2),
            samples=len(durations),
        )


@dataclass
class ReplayReport:
    """
    リプレイ結果

    counts は blocked / excepted / allowed / total_requests。
    hybrid はこのリプレイ中のカウンタ（ハイブリッド時のみ）。
    """

    mode: StrategyMode
    sync_rules: int
    counts: Dict[str, int]
    skipped: int
    third_parties_contacted: int
    eval_time: TimingStats
    rule_usage: UsageProfile
    hybrid: Optional[Dict[str, int]] = None
    async_time: Optional[TimingStats] = None
    exception_only: int = 0
    decisions: List[Tuple[LogRecord, Decision]] = field(default_factory=list)

    @property
    def total_requests(self) -> int:
        return self.counts["total_requests"]

    def statuses(self) -> List[DecisionStatus]:
        return [decision.status for _, decision in self.decisions]


def _host(url: str) -> str:
    try:
        return urlsplit(url).hostname or ""
    except ValueError:
        return ""


def replay(
    log: RequestLog,
    config: StrategyConfig,
    suffixes: SuffixTable,
    warmup: int = REPLAY_WARMUP,
    background: bool = False
) -> ReplayReport:
    """
    ログを1回リプレイ

    Args:
        log: リクエストログ
        config: 戦略の設定
        suffixes: サフィックステーブル
        warmup: 計測前に判定だけ行うレコード数
        background: ハイブリッドの非同期照合を別スレッドで行うか

    Returns:
        ReplayReport
    """
    strategy = Strategy(config, suffixes)
    return replay_with(strategy, log, warmup=warmup, background=background)


def replay_with(
    strategy: Strategy,
    log: RequestLog,
    warmup: int = REPLAY_WARMUP,
    background: bool = False
) -> ReplayReport:
    """
    既存の戦略状態でログをリプレイ（2回目のリプレイは昇格後の状態から始まる）

    Args:
        strategy: 戦略（ハイブリッドの状態を含む）
        log: リクエストログ
        warmup: 計測前に判定だけ行うレコード数
        background: ハイブリッドの非同期照合を別スレッドで行うか

    Returns:
        ReplayReport
    """
    _warm_up(strategy, log, warmup)

    is_hybrid = strategy.mode == StrategyMode.HYBRID
    before = strategy.snapshot_counters() if is_hybrid else None

    counts = {"blocked": 0, "excepted": 0, "allowed": 0, "total_requests": 0}
    usage = UsageProfile()
    contacted: Set[Tuple[int, str, str]] = set()
    durations: List[float] = []
    async_durations: List[float] = []
    decisions: List[Tuple[LogRecord, Decision]] = []
    skipped = 0
    exception_only = 0

    executor = ThreadPoolExecutor(max_workers=1) if (is_hybrid and background) else None
    pending: List[Future] = []

    for line_no, record in enumerate(log, start=1):
        request = record.request
        try:
            start = time.perf_counter()
            decision = strategy.decide_sync(request)
            durations.append(time.perf_counter() - start)
        except MalformedRequest as e:
            skipped += 1
            logger.debug("レコード %d をスキップ: %s", line_no, e)
            continue

        counts[decision.status.value] += 1
        counts["total_requests"] += 1
        usage.record(decision.matched_rules, record.day)
        decisions.append((record, decision))
        if decision.status == DecisionStatus.ALLOWED and decision.exception_rule:
            exception_only += 1

        if decision.status != DecisionStatus.BLOCKED:
            _count_contact(contacted, record, strategy.suffixes)

        if is_hybrid and decision.status != DecisionStatus.EXCEPTED:
            if executor is not None:
                pending.append(executor.submit(_timed_async, strategy, request, decision))
            else:
                _, elapsed = _timed_async(strategy, request, decision)
                async_durations.append(elapsed)

    if executor is not None:
        for future in pending:
            async_durations.append(future.result()[1])
        executor.shutdown()

    if skipped:
        logger.warning("URLが不正なレコードを %d 件スキップしました", skipped)

    report = ReplayReport(
        mode=strategy.mode,
        sync_rules=len(strategy.sync_index) if before is None else before["hot_size_end"],
        counts=counts,
        skipped=skipped,
        third_parties_contacted=len(contacted),
        eval_time=TimingStats.from_seconds(durations),
        rule_usage=usage,
        exception_only=exception_only,
        decisions=decisions,
    )
    if is_hybrid:
        report.hybrid = _counter_delta(before, strategy.snapshot_counters())
        report.async_time = TimingStats.from_seconds(async_durations)

    logger.info(
        "リプレイ完了 (%s): %d件 / ブロック %d / 例外 %d / 許可 %d",
        strategy.mode.value, counts["total_requests"],
        counts["blocked"], counts["excepted"], counts["allowed"]
    )
    return report


def _warm_up(strategy: Strategy, log: RequestLog, warmup: int):
    """同期判定だけを空回しする（状態は変えない）"""
    for i, record in enumerate(log):
        if i >= warmup:
            break
        try:
            strategy.decide_sync(record.request)
        except MalformedRequest:
            continue


def _timed_async(strategy: Strategy, request, decision) -> Tuple[AsyncOutcome, float]:
    start = time.perf_counter()
    outcome = strategy.evaluate_async(request, decision)
    return outcome, time.perf_counter() - start


def _count_contact(contacted: Set[Tuple[int, str, str]], record: LogRecord, suffixes: SuffixTable):
    """(日, ページの eTLD+1, リクエストの eTLD+1) が異なる組を数える"""
    page_host = _host(record.page_url)
    request_host = _host(record.request.url)
    if not page_host or not request_host:
        return
    page_site = etld_plus_one(page_host, suffixes)
    request_site = etld_plus_one(request_host, suffixes)
    if page_site != request_site:
        contacted.add((record.day, page_site, request_site))


def _counter_delta(before: Dict[str, int], after: Dict[str, int]) -> Dict[str, int]:
    """リプレイ開始時点からの差分（ホットセットの大きさは開始時と終了時）"""
    return {
        "hot_size_start": before["hot_size_end"],
        "hot_size_end": after["hot_size_end"],
        "cold_size": after["cold_size"],
        "late_blocks": after["late_blocks"] - before["late_blocks"],
        "late_exceptions": after["late_exceptions"] - before["late_exceptions"],
        "late_excepted": after["late_excepted"] - before["late_excepted"],
        "over_blocks": after["over_blocks"] - before["over_blocks"],
        "promotions": after["promotions"] - before["promotions"],
    }


@dataclass
class UsageSummary:
    """ルール使用率のまとめ"""

    rule_count: int
    used_count: int
    used_fraction: float
    unused_fraction: float
    cdf: List[Tuple[float, float]]
    buckets: Dict[str, float]


def usage_summary(profile: UsageProfile, full_rules: Iterable[FilterRule]) -> UsageSummary:
    """
    使用率とルールごとの使用回数の分布

    Args:
        profile: リプレイで得たプロファイル
        full_rules: 対象リスト（NETWORK / EXCEPTION のみ数える）

    Returns:
        UsageSummary（リストにないルールIDのカウントは無視する）
    """
    ids = [rule.id for _, rule in matchable_rules(full_rules)]
    counts = [profile.count(rule_id) for rule_id in ids]
    if not ids:
        return UsageSummary(0, 0, 0.0, 0.0, [], usage_buckets([]))

    used = sum(1 for count in counts if count >= 1)
    used_fraction = used / len(ids)
    return UsageSummary(
        rule_count=len(ids),
        used_count=used,
        used_fraction=used_fraction,
        unused_fraction=1.0 - used_fraction,
        cdf=ecdf(counts),
        buckets=usage_buckets(counts),
    )


def replay_twice(
    log: RequestLog,
    config: StrategyConfig,
    suffixes: SuffixTable,
    warmup: int = REPLAY_WARMUP
) -> Tuple[ReplayReport, ReplayReport]:
    """同じ戦略状態で2回リプレイ（ハイブリッドの収束確認用）"""
    strategy = Strategy(config, suffixes)
    first = replay_with(strategy, log, warmup=warmup)
    second = replay_with(strategy, log, warmup=warmup)
    return first, second
