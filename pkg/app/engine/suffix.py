"""
公開サフィックステーブル - eTLD+1 の算出

照合そのものは publicsuffixlist に任せ、ここではテーブルの読み込みと
戻り値の扱い（サフィックスそのもの・1ラベルのホスト）だけを決める。
"""

import logging
from pathlib import Path
from typing import FrozenSet, Iterable, Union

from publicsuffixlist import PublicSuffixList

logger = logging.getLogger(__name__)

# テスト用の最小テーブル（汎用TLD + 代表的な複数ラベルのサフィックス）
BUILTIN_SUFFIXES = (
    "com", "net", "org", "edu", "gov", "mil", "int", "info", "biz", "io",
    "co", "me", "tv", "cc", "us", "uk", "jp", "de", "fr", "it", "es", "nl",
    "ru", "cn", "br", "in", "au", "ca", "pl", "se", "ch", "be", "at", "dk",
    "no", "fi", "kr", "tw", "hk", "sg", "example", "test", "local",
    "co.uk", "org.uk", "ac.uk", "gov.uk", "co.jp", "ne.jp", "or.jp", "ac.jp",
    "com.au", "net.au", "org.au", "com.br", "com.cn", "com.tw", "com.hk",
    "co.kr", "co.in", "github.io", "blogspot.com", "appspot.com",
    "cloudfront.net", "herokuapp.com",
)


class SuffixTable:
    """公開サフィックスの集合"""

    def __init__(self, suffixes: Iterable[str]):
        """
        テーブルを初期化

        Args:
            suffixes: サフィックス文字列（"*.ck" のワイルドカード、"!www.ck" の例外も可）

        Raises:
            ValueError: 有効なサフィックスが1件もない
        """
        rules = []
        for suffix in suffixes:
            suffix = suffix.strip().lower().lstrip(".")
            if suffix:
                rules.append(suffix)
        if not any(not rule.startswith("!") for rule in rules):
            raise ValueError("サフィックステーブルが空です")

        self.rules: FrozenSet[str] = frozenset(rules)
        # 未知のTLDは1ラベルのサフィックスとして扱う（末尾2ラベルが eTLD+1）
        self._psl = PublicSuffixList(source=sorted(self.rules), accept_unknown=True)

    def __len__(self) -> int:
        return sum(1 for rule in self.rules if not rule.startswith("!"))

    def __contains__(self, suffix: str) -> bool:
        return suffix in self.rules

    @classmethod
    def builtin(cls) -> "SuffixTable":
        return cls(BUILTIN_SUFFIXES)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "SuffixTable":
        """
        ファイルからテーブルを読み込み

        Args:
            path: 1行1サフィックスのテキスト（"#" / "//" はコメント）

        Returns:
            SuffixTable
        """
        suffixes = []
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#") or line.startswith("//"):
                    continue
                suffixes.append(line.split()[0])
        logger.debug("サフィックステーブル読込: %s (%d件)", path, len(suffixes))
        return cls(suffixes)

    def registrable(self, host: str):
        """サフィックス + 1ラベル。ホスト自体がサフィックスなら None"""
        return self._psl.privatesuffix(host)


def etld_plus_one(host: str, suffixes: SuffixTable) -> str:
    """
    登録可能ドメイン（eTLD+1）を取得

    Args:
        host: ホスト名
        suffixes: サフィックステーブル

    Returns:
        最長サフィックス + 1ラベル。サフィックスが見つからなければ末尾2ラベル、
        1ラベルのホストやサフィックスそのもののホストはそのまま
    """
    host = host.lower().rstrip(".")
    if "." not in host:
        return host
    return suffixes.registrable(host) or host
