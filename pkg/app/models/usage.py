"""
ルール使用回数プロファイル
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set


@dataclass
class UsageProfile:
    """
    ルールIDごとの一致回数（計測期間つき）

    一致回数が1以上のルールを「使用された」ルールとみなす。
    """

    counts: Counter = field(default_factory=Counter)
    start_day: Optional[int] = None
    end_day: Optional[int] = None

    def record(self, rule_ids: Iterable[str], day: Optional[int] = None):
        """一致したルールを加算し、計測期間を広げる"""
        for rule_id in rule_ids:
            self.counts[rule_id] += 1
        if day is not None:
            self.start_day = day if self.start_day is None else min(self.start_day, day)
            self.end_day = day if self.end_day is None else max(self.end_day, day)

    def count(self, rule_id: str) -> int:
        return self.counts.get(rule_id, 0)

    def used_ids(self, min_count: int = 1) -> Set[str]:
        return {rule_id for rule_id, count in self.counts.items() if count >= min_count}

    def merge(self, other: "UsageProfile") -> "UsageProfile":
        """2つのプロファイルを合算した新しいプロファイル"""
        merged = UsageProfile(counts=self.counts + other.counts)
        for profile in (self, other):
            if profile.start_day is not None:
                merged.record((), profile.start_day)
                merged.record((), profile.end_day)
        return merged

    def as_dict(self) -> Dict[str, int]:
        return dict(self.counts)

    def ordered(self) -> List[str]:
        """回数の多い順（同数はID順）"""
        return sorted(self.counts, key=lambda rule_id: (-self.counts[rule_id], rule_id))
