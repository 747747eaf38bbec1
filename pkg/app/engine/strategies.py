"""
リスト適用戦略 - 全件同期 / 縮小リスト同期 / ハイブリッド（同期 + 非同期）

ハイブリッドでは、よく使われるルール（ホットセット）だけを同期で照合し、
許可されたリクエストは残り（コールドセット）で後から照合する。コールド側で
ネットワークルールが一致したら、そのルールをホットセットへ昇格させる。
ブロックや例外になったリクエストも照合し、全件で判定したときと同じルールが
ホットセットで一致するようにする。
"""

import json
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple, Union

from app.engine.index import (
    RuleIndex,
    build_index,
    decide_context,
    first_matches,
    matchable_rules,
    passes_heuristics,
)
from app.engine.matcher import MatchContext, rule_matches
from app.engine.suffix import SuffixTable
from app.errors import AlreadyHot, ConfigError
from app.models.filter_rule import FilterRule
from app.models.request import Decision, DecisionStatus, Request
from app.models.usage import UsageProfile

logger = logging.getLogger(__name__)


class StrategyMode(str, Enum):
    FULL = "full"
    REDUCED = "reduced"
    HYBRID = "hybrid"


@dataclass
class StrategyConfig:
    """
    戦略の設定

    hot_rule_ids は REDUCED / HYBRID で同期照合するルールID。
    空集合なら「空のルールから始める」ハイブリッドになる。
    """

    mode: StrategyMode
    full_rules: List[FilterRule]
    hot_rule_ids: Set[str] = field(default_factory=set)

    def __post_init__(self):
        self.mode = StrategyMode(self.mode)
        if self.mode == StrategyMode.FULL:
            return
        known = {rule.id for _, rule in matchable_rules(self.full_rules)}
        unknown = set(self.hot_rule_ids) - known
        if unknown:
            sample = ", ".join(sorted(unknown)[:3])
            raise ConfigError(f"ホットセットにリストにないルールがあります（{len(unknown)}件）: {sample}")

    @staticmethod
    def hot_from_profile(profile: UsageProfile, min_count: int = 1) -> Set[str]:
        """プロファイルで min_count 回以上使われたルールをホットセットにする"""
        return profile.used_ids(min_count)

    @classmethod
    def from_manifest(cls, path: Union[str, Path]) -> "StrategyConfig":
        """
        マニフェスト（JSON）から設定を読み込み

        Args:
            path: {"mode", "list", "hot", "profile", "hot_min_count"} を持つJSON

        Returns:
            StrategyConfig

        Raises:
            ConfigError: マニフェストの不備
        """
        from app.utils.importer import load_hot_ids, load_list, load_profile

        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                manifest = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"マニフェストを読み込めません: {path} ({e})") from e

        base = path.parent
        try:
            mode = StrategyMode(manifest.get("mode", "full"))
            list_path = base / manifest["list"]
        except (KeyError, ValueError) as e:
            raise ConfigError(f"マニフェストの mode / list が不正です: {path}") from e

        rules, _ = load_list(list_path)
        hot: Set[str] = set()
        if manifest.get("hot"):
            hot = load_hot_ids(base / manifest["hot"])
        elif manifest.get("profile"):
            profile = load_profile(base / manifest["profile"])
            hot = cls.hot_from_profile(profile, int(manifest.get("hot_min_count", 1)))
        elif mode != StrategyMode.FULL:
            logger.warning("ホットセットの指定がありません。空のホットセットで開始します")
        return cls(mode=mode, full_rules=rules, hot_rule_ids=hot)


class AsyncOutcomeKind(str, Enum):
    NONE = "none"
    LATE_BLOCK = "late_block"
    LATE_EXCEPTION = "late_exception"
    # 例外ルールで許可されるはずだったリクエスト（利用者への影響なし、昇格のみ）
    LATE_EXCEPTED = "late_excepted"
    # 同期側でブロックしたが、コールド側の例外ルールが一致する
    OVER_BLOCK = "over_block"


@dataclass(frozen=True)
class AsyncOutcome:
    kind: AsyncOutcomeKind
    rule: Optional[str] = None
    promoted: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Promotion:
    """昇格ログの1件"""

    rule_id: str
    request: Request
    timestamp: float


class Strategy:
    """
    戦略の実行状態（ハイブリッドの状態を含む）

    decide_sync はロックを取らず、いつでも並行に呼べる。昇格は
    ロックの中で行い、同期側のインデックスはリストの差し替えで更新する。
    """

    def __init__(self, config: StrategyConfig, suffixes: SuffixTable):
        self.config = config
        self.mode = config.mode
        self.suffixes = suffixes
        self._lock = threading.Lock()
        self.promotions: List[Promotion] = []
        self.late_blocks = 0
        self.late_exceptions = 0
        self.late_excepted = 0
        self.over_blocks = 0

        entries = matchable_rules(config.full_rules)
        self.full_size = len(entries)
        self._positions: Dict[str, int] = {rule.id: pos for pos, rule in entries}
        self._rules: Dict[str, FilterRule] = {rule.id: rule for _, rule in entries}

        if self.mode == StrategyMode.FULL:
            hot = set(self._rules)
        else:
            hot = set(config.hot_rule_ids)
        cold = set(self._rules) - hot

        self.sync_index: RuleIndex = build_index(config.full_rules, include=hot)
        self.async_index: Optional[RuleIndex] = None
        if self.mode == StrategyMode.HYBRID:
            self.async_index = build_index(config.full_rules, include=cold)
        self.hot_size_start = len(self.sync_index)

        logger.info(
            "戦略 %s: 同期 %d件 / 非同期 %d件",
            self.mode.value, len(self.sync_index), len(cold) if self.async_index else 0
        )

    @property
    def hot_ids(self) -> Set[str]:
        return set(self.sync_index.rules)

    @property
    def cold_ids(self) -> Set[str]:
        if self.async_index is None:
            return set(self._rules) - set(self.sync_index.rules)
        return set(self.async_index.rules)

    def decide_sync(self, request: Request) -> Decision:
        """
        同期判定（リクエストを発行するかどうかの判定）

        Args:
            request: リクエスト

        Returns:
            Decision

        Raises:
            MalformedRequest: URLが不正
        """
        return decide_context(self.sync_index, MatchContext(request, self.suffixes))

    def evaluate_async(self, request: Request, sync_decision: Decision) -> AsyncOutcome:
        """
        同期判定後のリクエストをコールドセットで照合

        全件で判定したときの結果（最初のネットワークルールと、一致する例外
        ルール）がホットセットだけで再現できるよう、足りないルールを昇格する。
        ネットワークルールがどこにも一致しない場合、コールド側の例外ルールは
        数えるだけで昇格しない。

        Args:
            request: 同期判定済みのリクエスト
            sync_decision: 同期判定の結果

        Returns:
            AsyncOutcome
        """
        if self.mode != StrategyMode.HYBRID or sync_decision.heuristic_allowed:
            return AsyncOutcome(AsyncOutcomeKind.NONE)

        ctx = MatchContext(request, self.suffixes)
        if not passes_heuristics(ctx):
            return AsyncOutcome(AsyncOutcomeKind.NONE)

        with self._lock:
            cold_network, cold_exceptions = self._cold_matches(ctx)
            if cold_network is None and not cold_exceptions:
                return AsyncOutcome(AsyncOutcomeKind.NONE)

            # 同期判定のあとに昇格が進んでいることがあるので、現在のホットセットで見直す
            hot_network, hot_exception = first_matches(
                self.sync_index.candidates(ctx), self.sync_index.rules, ctx
            )

            if hot_network is None and cold_network is None:
                # ブロックするルールがないので例外ルールだけの昇格はしない
                self.late_exceptions += 1
                return AsyncOutcome(AsyncOutcomeKind.LATE_EXCEPTION, cold_exceptions[0])

            to_promote = []
            if cold_network is not None and (
                hot_network is None or self._positions[cold_network] < self._positions[hot_network]
            ):
                to_promote.append(cold_network)
            to_promote.extend(cold_exceptions)
            promoted = tuple(self._promote_locked(to_promote, request))

            if hot_network is None:
                if not cold_exceptions and hot_exception is None:
                    self.late_blocks += 1
                    return AsyncOutcome(AsyncOutcomeKind.LATE_BLOCK, cold_network, promoted)
                self.late_excepted += 1
                return AsyncOutcome(AsyncOutcomeKind.LATE_EXCEPTED, cold_network, promoted)

            if cold_exceptions and hot_exception is None:
                if sync_decision.status == DecisionStatus.BLOCKED:
                    self.over_blocks += 1
                    return AsyncOutcome(AsyncOutcomeKind.OVER_BLOCK, cold_exceptions[0], promoted)
                self.late_excepted += 1
                return AsyncOutcome(AsyncOutcomeKind.LATE_EXCEPTED, cold_exceptions[0], promoted)

            # 状態は変わらず、記録されるルールIDだけが全件の判定に揃う
            return AsyncOutcome(AsyncOutcomeKind.NONE, promoted[0] if promoted else None, promoted)

    def _cold_matches(self, ctx: MatchContext) -> Tuple[Optional[str], List[str]]:
        """コールドセットで最初に一致するネットワークルールと、一致する例外ルールすべて"""
        network_rule = None
        exception_rules = []
        for rule_id in self.async_index.candidates(ctx):
            rule = self.async_index.rules[rule_id]
            if rule.is_exception:
                if rule_matches(rule, ctx):
                    exception_rules.append(rule_id)
            elif network_rule is None and rule_matches(rule, ctx):
                network_rule = rule_id
        return network_rule, exception_rules

    def promote(self, rule_id: str, request: Request, exception_ids: Tuple[str, ...] = ()):
        """
        コールドセットのルールをホットセットへ移す

        Args:
            rule_id: 昇格するルールID
            request: 昇格のきっかけになったリクエスト
            exception_ids: 同じリクエストに一致したコールド側の例外ルール

        Raises:
            AlreadyHot: すでにホットセットにある
        """
        with self._lock:
            if rule_id in self.sync_index:
                raise AlreadyHot(rule_id)
            if rule_id not in self._rules:
                raise KeyError(rule_id)
            self._promote_locked([rule_id, *exception_ids], request)

    def _promote_locked(self, rule_ids: List[str], request: Request) -> List[str]:
        promoted = []
        for rule_id in rule_ids:
            if rule_id in self.sync_index:
                continue
            # 先にホット側へ入れてからコールド側を外す
            self.sync_index.insert(self._rules[rule_id], self._positions[rule_id])
            if self.async_index is not None:
                self.async_index.remove(rule_id)
            self.promotions.append(Promotion(rule_id, request, request.timestamp))
            promoted.append(rule_id)
            logger.debug("昇格: %s", rule_id)
        return promoted

    def snapshot_counters(self) -> Dict[str, int]:
        """
        現時点のカウンタ

        Returns:
            hot_size_start, hot_size_end, cold_size, late_blocks,
            late_exceptions, late_excepted, over_blocks, promotions
        """
        with self._lock:
            hot_end = len(self.sync_index)
            return {
                "hot_size_start": self.hot_size_start,
                "hot_size_end": hot_end,
                "cold_size": self.full_size - hot_end,
                "late_blocks": self.late_blocks,
                "late_exceptions": self.late_exceptions,
                "late_excepted": self.late_excepted,
                "over_blocks": self.over_blocks,
                "promotions": len(self.promotions),
            }
