"""
ルール照合 - 1つのルールが1つのリクエストに一致するかを判定
"""

import re
from functools import lru_cache
from typing import List, Optional, Set
from urllib.parse import urlsplit

from app.config import PATTERN_CACHE_SIZE, TOKEN_MIN_LENGTH
from app.engine.suffix import SuffixTable, etld_plus_one
from app.errors import MalformedRequest
from app.models.filter_rule import Anchor, FilterRule, PartKind, Party, PatternSpec
from app.models.request import Request

# "^" が一致する文字（英数字と "_-.%" 以外）
SEPARATOR_CLASS = r"[^A-Za-z0-9_\-.%]"

# "||" の前に来る部分（スキーム + "://" + 任意のサブドメイン）
DOMAIN_PREFIX = r"^[A-Za-z][A-Za-z0-9+.\-]*://(?:[^/?#]*\.)?"

HIERARCHICAL_SCHEMES = frozenset({"http", "https", "ws", "wss", "ftp"})
WEB_SCHEMES = frozenset({"http", "https", "ws", "wss"})

TOKEN_RE = re.compile(r"[A-Za-z0-9%]+")


@lru_cache(maxsize=PATTERN_CACHE_SIZE)
def compile_pattern(pattern: PatternSpec) -> "re.Pattern":
    """
    PatternSpec を Python の正規表現にコンパイル

    Args:
        pattern: URLパターン

    Returns:
        コンパイル済み正規表現（search で使う）
    """
    pieces = []
    if pattern.anchor == Anchor.DOMAIN_BOUNDARY:
        pieces.append(DOMAIN_PREFIX)
    elif pattern.anchor == Anchor.START_OF_URL:
        pieces.append("^")

    for part in pattern.parts:
        if part.kind == PartKind.LITERAL:
            pieces.append(re.escape(part.text))
        elif part.kind == PartKind.WILDCARD:
            pieces.append(".*")
        else:
            pieces.append(f"(?:{SEPARATOR_CLASS}|$)")

    if pattern.end_anchored:
        pieces.append("$")

    flags = re.ASCII | re.DOTALL
    if not pattern.match_case:
        flags |= re.IGNORECASE
    return re.compile("".join(pieces), flags)


def url_tokens(url: str) -> Set[str]:
    """URL中のトークン（英数字と "%" の連続、3文字以上）"""
    return {
        token.lower() for token in TOKEN_RE.findall(url)
        if len(token) >= TOKEN_MIN_LENGTH
    }


def rule_tokens(pattern: PatternSpec) -> List[str]:
    """
    インデックスに使えるトークンを抽出

    URL側でも必ず完全なトークンとして現れるものだけを返す。リテラルの端が
    "*" やアンカーなしのパターン端に接しているトークンは、URL上でさらに
    長いトークンの一部になりうるので使わない。

    Args:
        pattern: URLパターン

    Returns:
        トークンのリスト（小文字、出現順、重複なし）
    """
    tokens: List[str] = []
    parts = pattern.parts
    for i, part in enumerate(parts):
        if part.kind != PartKind.LITERAL:
            continue

        if i > 0:
            left_bounded = parts[i - 1].kind == PartKind.SEPARATOR
        else:
            left_bounded = pattern.anchor != Anchor.NONE
        if i < len(parts) - 1:
            right_bounded = parts[i + 1].kind == PartKind.SEPARATOR
        else:
            right_bounded = pattern.end_anchored

        text = part.text
        for match in TOKEN_RE.finditer(text):
            if match.start() == 0 and not left_bounded:
                continue
            if match.end() == len(text) and not right_bounded:
                continue
            token = match.group(0).lower()
            if len(token) >= TOKEN_MIN_LENGTH and token not in tokens:
                tokens.append(token)
    return tokens


class MatchContext:
    """
    照合用に1リクエストを前処理したもの

    ホスト・eTLD+1・トークンは最初に必要になったときに計算する。
    """

    __slots__ = (
        "request", "suffixes", "scheme", "host", "initiator_host",
        "_third_party", "_tokens",
    )

    def __init__(self, request: Request, suffixes: SuffixTable):
        self.request = request
        self.suffixes = suffixes
        self.scheme, self.host = _split_url(request.url)
        _, self.initiator_host = _split_url(request.initiator_url)
        self._third_party: Optional[bool] = None
        self._tokens: Optional[Set[str]] = None

    @property
    def url(self) -> str:
        return self.request.url

    @property
    def is_web(self) -> bool:
        return self.scheme in WEB_SCHEMES

    @property
    def third_party(self) -> bool:
        if self._third_party is None:
            if not self.host or not self.initiator_host:
                self._third_party = self.host != self.initiator_host
            else:
                self._third_party = (
                    etld_plus_one(self.host, self.suffixes)
                    != etld_plus_one(self.initiator_host, self.suffixes)
                )
        return self._third_party

    @property
    def tokens(self) -> Set[str]:
        if self._tokens is None:
            self._tokens = url_tokens(self.request.url)
        return self._tokens


def _split_url(url: str):
    """
    URLからスキームとホストを取り出す

    Raises:
        MalformedRequest: スキームがない、または階層型スキームでホストがない
    """
    try:
        parts = urlsplit(url)
        host = parts.hostname or ""
    except ValueError as e:
        raise MalformedRequest(f"URLを解釈できません: {url!r} ({e})") from e

    scheme = parts.scheme.lower()
    if not scheme:
        raise MalformedRequest(f"スキームがありません: {url!r}")
    if scheme in HIERARCHICAL_SCHEMES and not host:
        raise MalformedRequest(f"ホストがありません: {url!r}")
    return scheme, host


def match_rule(rule: FilterRule, request: Request, suffixes: SuffixTable) -> bool:
    """
    ルールがリクエストに一致するか判定

    Args:
        rule: NETWORK または EXCEPTION のルール
        request: リクエスト
        suffixes: サフィックステーブル

    Returns:
        パターンとすべてのオプションが満たされれば True

    Raises:
        MalformedRequest: リクエストのURLが不正
    """
    return rule_matches(rule, MatchContext(request, suffixes))


def rule_matches(rule: FilterRule, ctx: MatchContext) -> bool:
    """前処理済みのリクエストに対して照合"""
    if not rule.is_matchable:
        return False

    options = rule.options
    resource_type = ctx.request.resource_type
    if options.include_types and resource_type not in options.include_types:
        return False
    if options.exclude_types and resource_type in options.exclude_types:
        return False

    if compile_pattern(rule.pattern).search(ctx.url) is None:
        return False

    if options.party == Party.THIRD_ONLY and not ctx.third_party:
        return False
    if options.party == Party.FIRST_ONLY and ctx.third_party:
        return False

    if options.has_domains and not _domain_allowed(options, ctx.initiator_host):
        return False
    return True


def _domain_allowed(options, host: str) -> bool:
    """
    $domain= の判定（最も詳細に一致したエントリを優先）

    Args:
        options: RuleOptions
        host: 初期化元ページのホスト

    Returns:
        一致が許されるか
    """
    labels = host.lower().split(".") if host else []
    for i in range(len(labels)):
        candidate = ".".join(labels[i:])
        if candidate in options.exclude_domains:
            return False
        if candidate in options.include_domains:
            return True
    return not options.include_domains
