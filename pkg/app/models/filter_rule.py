"""
フィルタルールのデータ型
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Optional, Tuple


class RuleKind(str, Enum):
    """ルール種別"""

    NETWORK = "network"
    EXCEPTION = "exception"
    ELEMENT = "element"
    ELEMENT_EXCEPTION = "element_exception"
    COMMENT = "comment"
    UNSUPPORTED = "unsupported"


MATCHABLE_KINDS = frozenset({RuleKind.NETWORK, RuleKind.EXCEPTION})


class Anchor(str, Enum):
    """パターン先頭のアンカー（"|" / "||"）"""

    NONE = "none"
    START_OF_URL = "start"
    DOMAIN_BOUNDARY = "domain"


class PartKind(str, Enum):
    LITERAL = "literal"
    WILDCARD = "wildcard"
    SEPARATOR = "separator"


class Party(str, Enum):
    """$third-party / $~third-party"""

    ANY = "any"
    THIRD_ONLY = "third"
    FIRST_ONLY = "first"


# ルールのオプションで指定できるリソース種別
RESOURCE_TYPES: Tuple[str, ...] = (
    "script", "image", "stylesheet", "object", "subdocument", "document",
    "xmlhttprequest", "websocket", "font", "media", "ping", "other",
)

# リクエスト側はトップレベル文書を加えた種別
MAIN_DOCUMENT = "main_document"
REQUEST_TYPES: Tuple[str, ...] = RESOURCE_TYPES + (MAIN_DOCUMENT,)


@dataclass(frozen=True)
class PatternPart:
    """パターンの構成要素（リテラル / "*" / "^"）"""

    kind: PartKind
    text: str = ""


WILDCARD = PatternPart(PartKind.WILDCARD)
SEPARATOR = PatternPart(PartKind.SEPARATOR)


@dataclass(frozen=True)
class PatternSpec:
    """URLパターンの構造"""

    anchor: Anchor = Anchor.NONE
    end_anchored: bool = False
    parts: Tuple[PatternPart, ...] = ()
    match_case: bool = False

    @property
    def literals(self) -> Tuple[str, ...]:
        return tuple(p.text for p in self.parts if p.kind == PartKind.LITERAL)


@dataclass(frozen=True)
class RuleOptions:
    """"$" 以降のオプション"""

    include_types: FrozenSet[str] = frozenset()
    exclude_types: FrozenSet[str] = frozenset()
    party: Party = Party.ANY
    include_domains: FrozenSet[str] = frozenset()
    exclude_domains: FrozenSet[str] = frozenset()
    unknown_options: Tuple[str, ...] = ()

    @property
    def has_domains(self) -> bool:
        return bool(self.include_domains or self.exclude_domains)


@dataclass(frozen=True)
class FilterRule:
    """
    フィルタリストの1行

    raw は入力行そのもの（正規化しない）。pattern / options は
    NETWORK / EXCEPTION のときだけ設定される。UNSUPPORTED のときは
    error に原因となった箇所を記録する。
    """

    raw: str
    kind: RuleKind
    pattern: Optional[PatternSpec] = None
    options: Optional[RuleOptions] = None
    error: Optional[str] = None

    @property
    def id(self) -> str:
        """前後の空白を除いたルール文字列（安定ID）"""
        return self.raw.strip()

    @property
    def is_matchable(self) -> bool:
        return self.kind in MATCHABLE_KINDS

    @property
    def is_exception(self) -> bool:
        return self.kind == RuleKind.EXCEPTION


@dataclass
class ParseStats:
    """種別ごとの件数"""

    counts: Dict[RuleKind, int] = field(
        default_factory=lambda: {kind: 0 for kind in RuleKind}
    )

    def add(self, kind: RuleKind):
        self.counts[kind] += 1

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def rule_total(self) -> int:
        """コメントを除いた件数"""
        return self.total - self.counts[RuleKind.COMMENT]

    @property
    def element_total(self) -> int:
        return self.counts[RuleKind.ELEMENT] + self.counts[RuleKind.ELEMENT_EXCEPTION]

    def shares(self) -> Dict[str, float]:
        """
        ルール種別の構成比（コメントを除いた件数に対する割合）

        Returns:
            {"network", "exception", "element", "unsupported"} の比率
        """
        denominator = self.rule_total
        if denominator == 0:
            return {"network": 0.0, "exception": 0.0, "element": 0.0, "unsupported": 0.0}
        return {
            "network": self.counts[RuleKind.NETWORK] / denominator,
            "exception": self.counts[RuleKind.EXCEPTION] / denominator,
            "element": self.element_total / denominator,
            "unsupported": self.counts[RuleKind.UNSUPPORTED] / denominator,
        }
