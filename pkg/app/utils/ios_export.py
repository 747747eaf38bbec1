"""
iOS コンテンツブロッカー形式への変換

ネットワークルールは "block"、例外ルールは "ignore-previous-rules" に変換し、
例外はすべての block の後ろに並べる。正確に表現できないルールは近似せずに
スキップして理由を記録する。
"""

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from app.config import DEFAULT_MAX_RULES
from app.engine.index import build_index, decide_context, matchable_rules, passes_heuristics
from app.engine.matcher import MatchContext, rule_matches
from app.engine.suffix import SuffixTable
from app.errors import MalformedRequest, RuleLimitExceeded
from app.models.filter_rule import (
    RESOURCE_TYPES,
    Anchor,
    FilterRule,
    PartKind,
    Party,
    RuleKind,
)
from app.models.request import DecisionStatus, Request

logger = logging.getLogger(__name__)

SEPARATOR_CLASS = "[^A-Za-z0-9_.%-]"
DOMAIN_PREFIX = "^[A-Za-z][A-Za-z0-9+.-]*://([^/?#]*\\.)?"
REGEX_SPECIALS = set("\\.^$*+?()[]{}|")

# エンジンのリソース種別 → コンテンツブロッカーの resource-type
WEBKIT_TYPES: Dict[str, str] = {
    "script": "script",
    "image": "image",
    "stylesheet": "style-sheet",
    "object": "other",
    "subdocument": "document",
    "document": "document",
    "xmlhttprequest": "fetch",
    "websocket": "websocket",
    "font": "font",
    "media": "media",
    "ping": "ping",
    "other": "other",
}

SEPARATOR_CAVEAT = (
    "ドメインアンカー \"||\" と末尾の区切り文字 \"^\" は \"( )?\" のグループに変換しています。"
    "対象プラットフォームの正規表現がグループに対応しない場合、該当ルールは期待どおりに動作しません。"
)


@dataclass
class ExportReport:
    """変換結果の集計"""

    exported_count: int = 0
    limit: int = DEFAULT_MAX_RULES
    truncated: bool = False
    skipped: List[Tuple[str, str]] = field(default_factory=list)
    dropped: List[str] = field(default_factory=list)
    element_rules: int = 0
    group_rules: int = 0

    @property
    def caveat(self) -> Optional[str]:
        return SEPARATOR_CAVEAT if self.group_rules else None


class TranslationError(ValueError):
    """コンテンツブロッカー形式で正確に表現できない"""


def _escape(literal: str) -> str:
    if not literal.isascii():
        raise TranslationError("ASCII以外の文字を含みます")
    return "".join("\\" + c if c in REGEX_SPECIALS else c for c in literal)


def translate_pattern(rule: FilterRule) -> Tuple[str, bool]:
    """
    パターンを url-filter の正規表現に変換

    Returns:
        (正規表現, グループを使ったか)

    Raises:
        TranslationError: 正確に変換できない
    """
    pattern = rule.pattern
    parts = list(pattern.parts)

    trailing = 0
    while trailing < len(parts) and parts[len(parts) - 1 - trailing].kind == PartKind.SEPARATOR:
        trailing += 1
    if trailing > 1:
        raise TranslationError("末尾に \"^\" が連続しています")

    body_parts = parts[:len(parts) - trailing]
    literal_after = [False] * len(body_parts)
    seen_literal = False
    for i in range(len(body_parts) - 1, -1, -1):
        literal_after[i] = seen_literal
        if body_parts[i].kind == PartKind.LITERAL:
            seen_literal = True

    pieces = []
    if pattern.anchor == Anchor.DOMAIN_BOUNDARY:
        pieces.append(DOMAIN_PREFIX)
    elif pattern.anchor == Anchor.START_OF_URL:
        pieces.append("^")

    for i, part in enumerate(body_parts):
        if part.kind == PartKind.LITERAL:
            pieces.append(_escape(part.text))
        elif part.kind == PartKind.WILDCARD:
            pieces.append(".*")
        else:
            # 途中の "^" は後ろにリテラルがあれば必ず1文字に一致する
            if not literal_after[i]:
                raise TranslationError("\"^\" の後ろにリテラルがありません")
            pieces.append(SEPARATOR_CLASS)

    # "||" の前置部分もグループを使う
    uses_group = pattern.anchor == Anchor.DOMAIN_BOUNDARY
    if trailing:
        uses_group = True
        if pattern.end_anchored:
            pieces.append(f"({SEPARATOR_CLASS})?$")
        else:
            pieces.append(f"({SEPARATOR_CLASS}.*)?$")
    elif pattern.end_anchored:
        pieces.append("$")

    url_filter = "".join(pieces)
    if url_filter in ("", "^"):
        url_filter = ".*"
    return url_filter, uses_group


def _resource_types(rule: FilterRule) -> Optional[List[str]]:
    options = rule.options
    if options.include_types:
        wanted = set(options.include_types)
    elif options.exclude_types:
        wanted = set(RESOURCE_TYPES) - set(options.exclude_types)
    else:
        return None

    webkit = {WEBKIT_TYPES[t] for t in wanted}
    covered = {t for t in RESOURCE_TYPES if WEBKIT_TYPES[t] in webkit}
    if covered != wanted:
        raise TranslationError("リソース種別を正確に変換できません: " + ",".join(sorted(covered - wanted)))
    ordered = []
    for t in RESOURCE_TYPES:
        if WEBKIT_TYPES[t] in webkit and WEBKIT_TYPES[t] not in ordered:
            ordered.append(WEBKIT_TYPES[t])
    return ordered


def translate_rule(rule: FilterRule) -> Tuple[dict, bool]:
    """
    1ルールを変換

    Returns:
        (コンテンツブロッカーのエントリ, グループを使ったか)

    Raises:
        TranslationError: 正確に変換できない
    """
    if not rule.is_matchable:
        raise TranslationError(rule.error or "未対応のルール")
    options = rule.options
    if options.include_domains and options.exclude_domains:
        raise TranslationError("domain の包含と除外が混在しています")

    url_filter, uses_group = translate_pattern(rule)
    trigger = {
        "url-filter": url_filter,
        "url-filter-is-case-sensitive": rule.pattern.match_case,
    }
    resource_types = _resource_types(rule)
    if resource_types is not None:
        trigger["resource-type"] = resource_types
    if options.party == Party.THIRD_ONLY:
        trigger["load-type"] = ["third-party"]
    elif options.party == Party.FIRST_ONLY:
        trigger["load-type"] = ["first-party"]
    if options.include_domains:
        trigger["if-domain"] = ["*" + d for d in sorted(options.include_domains)]
    elif options.exclude_domains:
        trigger["unless-domain"] = ["*" + d for d in sorted(options.exclude_domains)]

    action = {"type": "ignore-previous-rules" if rule.is_exception else "block"}
    return {"trigger": trigger, "action": action}, uses_group


def export_ios(
    rules: Sequence[FilterRule],
    max_rules: int = DEFAULT_MAX_RULES,
    truncate: bool = False
) -> Tuple[List[dict], ExportReport]:
    """
    ルールをコンテンツブロッカーのJSON文書に変換

    Args:
        rules: パース済みルール
        max_rules: エントリ数の上限
        truncate: 上限を超えたとき、先頭から上限まで残すか

    Returns:
        (エントリのリスト, ExportReport)

    Raises:
        RuleLimitExceeded: 上限を超え、truncate も指定されていない
    """
    if max_rules < 1:
        raise ValueError(f"max_rules は1以上を指定してください: {max_rules}")

    report = ExportReport(limit=max_rules)
    blocks: List[Tuple[str, dict]] = []
    exceptions: List[Tuple[str, dict]] = []
    group_ids: Set[str] = set()

    seen: Set[str] = set()
    for rule in rules:
        if rule.kind in (RuleKind.ELEMENT, RuleKind.ELEMENT_EXCEPTION):
            report.element_rules += 1
            continue
        if rule.kind == RuleKind.COMMENT or rule.id in seen:
            continue
        seen.add(rule.id)
        try:
            entry, uses_group = translate_rule(rule)
        except TranslationError as e:
            report.skipped.append((rule.id, str(e)))
            continue
        if uses_group:
            group_ids.add(rule.id)
        (exceptions if rule.is_exception else blocks).append((rule.id, entry))

    total = len(blocks) + len(exceptions)
    if total > max_rules:
        if not truncate:
            raise RuleLimitExceeded(total, max_rules)
        kept_blocks = blocks[:max_rules]
        kept_exceptions = exceptions[:max_rules - len(kept_blocks)]
        report.dropped = [rule_id for rule_id, _ in blocks[len(kept_blocks):]]
        report.dropped += [rule_id for rule_id, _ in exceptions[len(kept_exceptions):]]
        report.truncated = True
        blocks, exceptions = kept_blocks, kept_exceptions
        logger.warning("上限 %d 件を超えたため %d 件を切り捨てました", max_rules, len(report.dropped))

    document = [entry for _, entry in blocks] + [entry for _, entry in exceptions]
    report.exported_count = len(document)
    report.group_rules = sum(1 for rule_id, _ in blocks + exceptions if rule_id in group_ids)
    if report.skipped:
        logger.info("変換できないルールを %d 件スキップしました", len(report.skipped))
    return document, report


def dumps_document(document: List[dict]) -> str:
    """キー順を保ったJSON文字列（同じ入力なら同じバイト列）"""
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


@dataclass(frozen=True)
class Mismatch:
    request: Request
    engine_status: DecisionStatus
    exported_blocks: bool


@dataclass
class VerifyResult:
    """変換結果の検証"""

    mismatches: List[Mismatch] = field(default_factory=list)
    compared: int = 0
    known_gaps: int = 0
    not_compared: int = 0


class _CompiledEntry:
    def __init__(self, entry: dict):
        trigger = entry["trigger"]
        flags = re.ASCII | re.DOTALL
        if not trigger.get("url-filter-is-case-sensitive", False):
            flags |= re.IGNORECASE
        self.regex = re.compile(trigger["url-filter"], flags)
        self.resource_types = set(trigger.get("resource-type", ()))
        self.load_types = set(trigger.get("load-type", ()))
        self.if_domain = trigger.get("if-domain")
        self.unless_domain = trigger.get("unless-domain")
        self.blocks = entry["action"]["type"] == "block"

    @staticmethod
    def _domain_hit(domains: List[str], host: str) -> bool:
        for domain in domains:
            if domain.startswith("*"):
                base = domain[1:]
                if host == base or host.endswith("." + base):
                    return True
            elif host == domain:
                return True
        return False

    def matches(self, ctx: MatchContext) -> bool:
        if self.resource_types and WEBKIT_TYPES[ctx.request.resource_type] not in self.resource_types:
            return False
        if self.regex.search(ctx.url) is None:
            return False
        if self.load_types:
            load_type = "third-party" if ctx.third_party else "first-party"
            if load_type not in self.load_types:
                return False
        host = ctx.initiator_host.lower()
        if self.if_domain is not None and not self._domain_hit(self.if_domain, host):
            return False
        if self.unless_domain is not None and self._domain_hit(self.unless_domain, host):
            return False
        return True


def evaluate_document(compiled: List[_CompiledEntry], ctx: MatchContext) -> bool:
    """エントリを順に評価し、ブロックされるかを返す"""
    blocked = False
    for entry in compiled:
        if entry.matches(ctx):
            blocked = entry.blocks
    return blocked


def verify_export(
    rules: Sequence[FilterRule],
    document: List[dict],
    corpus: Sequence[Request],
    suffixes: SuffixTable
) -> VerifyResult:
    """
    変換前のルールと変換後の文書で、ブロックの有無が一致するか検証

    スキップ・切り捨てたルールに一致するリクエストは known_gaps に数え、
    比較しない。ヒューリスティックで許可されるリクエストも比較しない。

    Args:
        rules: 変換前のルール
        document: export_ios の出力
        corpus: 検証用リクエスト
        suffixes: サフィックステーブル

    Returns:
        VerifyResult
    """
    exported = {json.dumps(entry, sort_keys=True) for entry in document}
    gap_rules = []
    for _, rule in matchable_rules(rules):
        try:
            entry, _ = translate_rule(rule)
        except TranslationError:
            gap_rules.append(rule)
            continue
        if json.dumps(entry, sort_keys=True) not in exported:
            gap_rules.append(rule)

    index = build_index(rules)
    gap_index = build_index(gap_rules)
    compiled = [_CompiledEntry(entry) for entry in document]

    result = VerifyResult()
    for request in corpus:
        try:
            ctx = MatchContext(request, suffixes)
        except MalformedRequest:
            result.not_compared += 1
            continue
        if not passes_heuristics(ctx):
            result.not_compared += 1
            continue
        if any(rule_matches(gap_index.rules[i], ctx) for i in gap_index.candidates(ctx)):
            result.known_gaps += 1
            continue

        decision = decide_context(index, ctx)
        exported_blocks = evaluate_document(compiled, ctx)
        result.compared += 1
        if (decision.status == DecisionStatus.BLOCKED) != exported_blocks:
            result.mismatches.append(Mismatch(request, decision.status, exported_blocks))

    if result.mismatches:
        logger.warning("変換結果の不一致: %d件", len(result.mismatches))
    return result
