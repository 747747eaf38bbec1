"""
トークンインデックス - 候補ルールを絞り込んで判定する
"""

import logging
from collections import Counter
from typing import Dict, Iterable, List, Optional, Set, Tuple

from app.engine.matcher import MatchContext, rule_matches, rule_tokens
from app.engine.suffix import SuffixTable
from app.models.filter_rule import FilterRule
from app.models.request import Decision, Request

logger = logging.getLogger(__name__)


class RuleIndex:
    """
    ネットワーク / 例外ルールのトークンインデックス

    各ルールは最も出現頻度の低いトークン1つのバケットに入る。使える
    トークンがないルールは fallback に入り、すべてのリクエストで照合する。
    ルールの順位（position）は元リストでの順番で、一致が複数あるときは
    順位の小さいものを記録する。
    """

    def __init__(self):
        self.rules: Dict[str, FilterRule] = {}
        self.positions: Dict[str, int] = {}
        self.buckets: Dict[str, List[str]] = {}
        self.fallback: List[str] = []
        self._token_of: Dict[str, Optional[str]] = {}

    def __len__(self) -> int:
        return len(self.rules)

    def __contains__(self, rule_id: str) -> bool:
        return rule_id in self.rules

    @property
    def rule_ids(self) -> List[str]:
        return sorted(self.rules, key=self.positions.__getitem__)

    def bucket_of(self, rule_id: str) -> Optional[str]:
        """ルールが入っているバケットのトークン（fallback は None）"""
        return self._token_of[rule_id]

    def _place(self, rule: FilterRule, position: int, token: Optional[str]):
        self.rules[rule.id] = rule
        self.positions[rule.id] = position
        self._token_of[rule.id] = token
        target = self.fallback if token is None else self.buckets.setdefault(token, [])
        _insert_sorted(target, rule.id, position, self.positions)

    def insert(self, rule: FilterRule, position: int):
        """
        ルールを1件追加（インクリメンタル）

        バケットは現在最も小さいものを選ぶ。リストは差し替えで更新するので、
        並行して candidates を読む側は追加前か追加後のどちらかを見る。

        Args:
            rule: NETWORK / EXCEPTION のルール
            position: 元リストでの順位
        """
        if rule.id in self.rules or not rule.is_matchable:
            return
        token = _pick_token(rule_tokens(rule.pattern), lambda t: len(self.buckets.get(t, ())))

        self.rules[rule.id] = rule
        self.positions[rule.id] = position
        self._token_of[rule.id] = token
        if token is None:
            updated = list(self.fallback)
            _insert_sorted(updated, rule.id, position, self.positions)
            self.fallback = updated
        else:
            updated = list(self.buckets.get(token, ()))
            _insert_sorted(updated, rule.id, position, self.positions)
            self.buckets[token] = updated

    def remove(self, rule_id: str):
        """ルールを1件削除（差し替えで更新）"""
        if rule_id not in self.rules:
            return
        token = self._token_of.pop(rule_id)
        if token is None:
            self.fallback = [i for i in self.fallback if i != rule_id]
        else:
            remaining = [i for i in self.buckets[token] if i != rule_id]
            if remaining:
                self.buckets[token] = remaining
            else:
                del self.buckets[token]
        del self.rules[rule_id]
        del self.positions[rule_id]

    def candidates(self, ctx: MatchContext) -> List[str]:
        """
        URLのトークンから候補ルールIDを集める

        Returns:
            順位順の候補ルールID
        """
        ids = list(self.fallback)
        for token in ctx.tokens:
            bucket = self.buckets.get(token)
            if bucket:
                ids.extend(bucket)
        ids.sort(key=self.positions.__getitem__)
        return ids


def _pick_token(tokens: List[str], frequency) -> Optional[str]:
    """最も頻度の低いトークン（同数なら長いもの、さらに辞書順）"""
    if not tokens:
        return None
    return min(tokens, key=lambda t: (frequency(t), -len(t), t))


def _insert_sorted(ids: List[str], rule_id: str, position: int, positions: Dict[str, int]):
    """順位順を保って挿入"""
    if not ids or positions[ids[-1]] < position:
        ids.append(rule_id)
        return
    lo, hi = 0, len(ids)
    while lo < hi:
        mid = (lo + hi) // 2
        if positions[ids[mid]] < position:
            lo = mid + 1
        else:
            hi = mid
    ids.insert(lo, rule_id)


def matchable_rules(rules: Iterable[FilterRule]) -> List[Tuple[int, FilterRule]]:
    """
    NETWORK / EXCEPTION ルールを重複なしで順位付きにする

    Returns:
        [(順位, ルール)]。同じIDの2回目以降は除く
    """
    seen = set()
    result = []
    for position, rule in enumerate(rules):
        if rule.is_matchable and rule.id not in seen:
            seen.add(rule.id)
            result.append((position, rule))
    return result


def build_index(rules: Iterable[FilterRule], include: Optional[Set[str]] = None) -> RuleIndex:
    """
    インデックスを構築

    Args:
        rules: パース済みルール（NETWORK / EXCEPTION 以外は除外）
        include: 指定時はこのIDのルールだけを入れる（順位は rules 全体での順番）

    Returns:
        RuleIndex
    """
    entries = matchable_rules(rules)
    if include is not None:
        entries = [(position, rule) for position, rule in entries if rule.id in include]
    tokens_of = {rule.id: rule_tokens(rule.pattern) for _, rule in entries}

    frequency = Counter()
    for tokens in tokens_of.values():
        frequency.update(tokens)

    index = RuleIndex()
    for position, rule in entries:
        token = _pick_token(tokens_of[rule.id], frequency.__getitem__)
        index._place(rule, position, token)

    logger.debug(
        "インデックス構築: %d件（バケット %d, fallback %d）",
        len(index), len(index.buckets), len(index.fallback)
    )
    return index


def first_matches(
    rule_ids: Iterable[str],
    rules: Dict[str, FilterRule],
    ctx: MatchContext
) -> Tuple[Optional[str], Optional[str]]:
    """
    順位順のルールIDから、最初に一致するネットワークルールと例外ルールを探す

    Returns:
        (ネットワークルールID, 例外ルールID)
    """
    network_rule = None
    exception_rule = None
    for rule_id in rule_ids:
        rule = rules[rule_id]
        if rule.is_exception:
            if exception_rule is None and rule_matches(rule, ctx):
                exception_rule = rule_id
        elif network_rule is None and rule_matches(rule, ctx):
            network_rule = rule_id
        if network_rule is not None and exception_rule is not None:
            break
    return network_rule, exception_rule


def passes_heuristics(ctx: MatchContext) -> bool:
    """
    照合前のヒューリスティック（トップレベル文書と非Webスキームは許可）

    Returns:
        照合が必要なら True
    """
    return ctx.request.resource_type != "main_document" and ctx.is_web


def decide(index: RuleIndex, request: Request, suffixes: SuffixTable) -> Decision:
    """
    リクエストの判定

    Args:
        index: 1つのルールセットから構築したインデックス
        request: リクエスト
        suffixes: サフィックステーブル

    Returns:
        Decision

    Raises:
        MalformedRequest: URLが不正
    """
    return decide_context(index, MatchContext(request, suffixes))


def decide_context(index: RuleIndex, ctx: MatchContext) -> Decision:
    if not passes_heuristics(ctx):
        return Decision.heuristic()
    network_rule, exception_rule = first_matches(index.candidates(ctx), index.rules, ctx)
    return Decision.from_matches(network_rule, exception_rule)


class LinearScan:
    """全ルールを順に照合する判定器（インデックスを使わない比較用）"""

    def __init__(self, rules: Iterable[FilterRule]):
        entries = matchable_rules(rules)
        self.order = [rule.id for _, rule in entries]
        self.rules = {rule.id: rule for _, rule in entries}

    def __len__(self) -> int:
        return len(self.order)

    def decide(self, request: Request, suffixes: SuffixTable) -> Decision:
        ctx = MatchContext(request, suffixes)
        if not passes_heuristics(ctx):
            return Decision.heuristic()
        network_rule, exception_rule = first_matches(self.order, self.rules, ctx)
        return Decision.from_matches(network_rule, exception_rule)


def decide_linear(rules: Iterable[FilterRule], request: Request, suffixes: SuffixTable) -> Decision:
    """
    全ルールを順に照合する判定

    Args:
        rules: パース済みルール
        request: リクエスト
        suffixes: サフィックステーブル

    Returns:
        Decision（decide と同じ結果になる）
    """
    return LinearScan(rules).decide(request, suffixes)
