"""
フィルタリストパーサー - EasyList 形式の行を FilterRule に変換
どんな入力でも例外は出さず、解釈できない行は UNSUPPORTED にする
"""

import re
from typing import List, Optional, Set, Tuple

from app.models.filter_rule import (
    RESOURCE_TYPES,
    SEPARATOR,
    WILDCARD,
    Anchor,
    FilterRule,
    ParseStats,
    PartKind,
    Party,
    PatternPart,
    PatternSpec,
    RuleKind,
    RuleOptions,
)

# 行末の "$opt1,opt2=..." を切り出す
OPTIONS_RE = re.compile(
    r"\$(~?[A-Za-z0-9_-]+(?:=[^,]*)?(?:,~?[A-Za-z0-9_-]+(?:=[^,]*)?)*)$"
)

ELEMENT_EXCEPTION_MARKER = "#@#"
ELEMENT_MARKER = "##"


def split_lines(text: str) -> List[str]:
    """
    LF / CRLF 区切りで行に分割

    Args:
        text: リスト全体のテキスト

    Returns:
        行のリスト（改行文字は含まない）
    """
    if not text:
        return []
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    return [line[:-1] if line.endswith("\r") else line for line in lines]


def parse_list(text: str) -> Tuple[List[FilterRule], ParseStats]:
    """
    リスト全体をパース

    Args:
        text: リスト全体のテキスト

    Returns:
        (行順の FilterRule リスト, 種別ごとの件数)
    """
    rules = []
    stats = ParseStats()
    for line in split_lines(text):
        rule = parse_rule(line)
        rules.append(rule)
        stats.add(rule.kind)
    return rules, stats


def parse_rule(line: str) -> FilterRule:
    """
    1行をパース

    Args:
        line: リストの1行（改行を含まない）

    Returns:
        FilterRule（raw は line そのもの）
    """
    text = line.strip()

    if not text or text.startswith("!") or (text.startswith("[") and text.endswith("]")):
        return FilterRule(raw=line, kind=RuleKind.COMMENT)

    is_exception = text.startswith("@@")
    body = text[2:] if is_exception else text

    options_match = OPTIONS_RE.search(body)
    head = body[:options_match.start()] if options_match else body

    # 要素隠蔽ルール（オプション部分の "##" は対象外）
    if not is_exception:
        if ELEMENT_EXCEPTION_MARKER in head:
            return FilterRule(raw=line, kind=RuleKind.ELEMENT_EXCEPTION)
        if ELEMENT_MARKER in head:
            return FilterRule(raw=line, kind=RuleKind.ELEMENT)

    if "#?#" in head or "#$#" in head or "#%#" in head:
        return _unsupported(line, "拡張要素ルール")

    options = RuleOptions()
    match_case = False
    if options_match:
        options, match_case, error = _parse_options(options_match.group(1))
        if error:
            return _unsupported(line, error)

    pattern, error = _parse_pattern(head, match_case, has_options=options_match is not None)
    if error:
        return _unsupported(line, error)

    kind = RuleKind.EXCEPTION if is_exception else RuleKind.NETWORK
    return FilterRule(raw=line, kind=kind, pattern=pattern, options=options)


def _unsupported(line: str, reason: str) -> FilterRule:
    return FilterRule(raw=line, kind=RuleKind.UNSUPPORTED, error=reason)


def _parse_options(text: str) -> Tuple[RuleOptions, bool, Optional[str]]:
    """
    オプション部分をパース

    Args:
        text: "$" を除いたオプション文字列

    Returns:
        (RuleOptions, match-case 指定の有無, エラー内容)
    """
    include_types: Set[str] = set()
    exclude_types: Set[str] = set()
    include_domains: Set[str] = set()
    exclude_domains: Set[str] = set()
    party = Party.ANY
    match_case = False
    unknown: List[str] = []

    for token in text.split(","):
        name, has_value, value = token.partition("=")
        negated = name.startswith("~")
        name = name.lstrip("~").lower()

        if name in RESOURCE_TYPES and not has_value:
            (exclude_types if negated else include_types).add(name)
        elif name == "third-party" and not has_value:
            wanted = Party.FIRST_ONLY if negated else Party.THIRD_ONLY
            if party not in (Party.ANY, wanted):
                unknown.append(token)
            party = wanted
        elif name == "domain" and has_value and not negated:
            for entry in value.split("|"):
                entry = entry.strip().lower()
                domain = entry[1:] if entry.startswith("~") else entry
                if not domain or "*" in domain or domain.startswith("~"):
                    unknown.append(token)
                    break
                (exclude_domains if entry.startswith("~") else include_domains).add(domain)
        elif name == "match-case" and not has_value and not negated:
            match_case = True
        else:
            unknown.append(token)

    if unknown:
        return RuleOptions(unknown_options=tuple(unknown)), match_case, \
            "未対応のオプション: " + ",".join(unknown)

    # 肯定と否定が混在する場合は肯定側だけで同じ意味になる
    if include_types and exclude_types:
        include_types -= exclude_types
        exclude_types = set()
        if not include_types:
            return RuleOptions(), match_case, "リソース種別の指定が矛盾しています: " + text

    options = RuleOptions(
        include_types=frozenset(include_types),
        exclude_types=frozenset(exclude_types),
        party=party,
        include_domains=frozenset(include_domains),
        exclude_domains=frozenset(exclude_domains),
    )
    return options, match_case, None


def _parse_pattern(
    text: str,
    match_case: bool,
    has_options: bool
) -> Tuple[Optional[PatternSpec], Optional[str]]:
    """
    URLパターンをパース

    Args:
        text: アンカーを含むパターン文字列（オプションは除く）
        match_case: 大文字小文字を区別するか
        has_options: オプション指定があるか（空パターンの可否に使う）

    Returns:
        (PatternSpec, エラー内容)
    """
    if len(text) > 2 and text.startswith("/") and text.endswith("/"):
        return None, "正規表現ルール: " + text

    anchor = Anchor.NONE
    if text.startswith("||"):
        anchor = Anchor.DOMAIN_BOUNDARY
        text = text[2:]
    elif text.startswith("|"):
        anchor = Anchor.START_OF_URL
        text = text[1:]

    end_anchored = False
    if text.endswith("|"):
        end_anchored = True
        text = text[:-1]

    parts: List[PatternPart] = []
    literal: List[str] = []
    for char in text:
        if char in "*^":
            if literal:
                parts.append(PatternPart(PartKind.LITERAL, "".join(literal)))
                literal = []
            if char == "^":
                parts.append(SEPARATOR)
            elif not parts or parts[-1] != WILDCARD:
                parts.append(WILDCARD)
        else:
            literal.append(char)
    if literal:
        parts.append(PatternPart(PartKind.LITERAL, "".join(literal)))

    # 先頭・末尾の "*" は意味を変えずに取り除ける
    if parts and parts[0] == WILDCARD:
        if anchor == Anchor.DOMAIN_BOUNDARY:
            return None, "\"||\" の直後がリテラルではありません: " + text
        parts.pop(0)
        anchor = Anchor.NONE
    if parts and parts[-1] == WILDCARD:
        parts.pop()
        end_anchored = False

    if anchor == Anchor.DOMAIN_BOUNDARY and (not parts or parts[0].kind != PartKind.LITERAL):
        return None, "\"||\" の直後がリテラルではありません: " + text

    if not parts and not has_options:
        return None, "空のパターン"

    pattern = PatternSpec(
        anchor=anchor,
        end_anchored=end_anchored,
        parts=tuple(parts),
        match_case=match_case,
    )
    return pattern, None
