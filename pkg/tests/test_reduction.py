"""
リスト縮小のテスト
"""

import pytest

from app.analytics.reduction import reduce_list
from app.models.usage import UsageProfile
from app.utils.filter_parser import parse_list

LIST_TEXT = "\n".join([
    "[Adblock Plus 2.0]",
    "! comment",
    "||ads0.com^",
    "||ads1.com^",
    "example.com##.banner",
    "||ads2.com^",
    "@@||ads2.com/ok^",
    "||ads3.com^",
])


@pytest.fixture
def rules():
    parsed, _ = parse_list(LIST_TEXT)
    return parsed


def _profile(counts):
    profile = UsageProfile()
    for rule_id, count in counts.items():
        profile.record([rule_id] * count)
    return profile


class TestReduceList:
    def test_used_rules_only(self, rules):
        profile = _profile({"||ads3.com^": 1, "||ads0.com^": 5, "@@||ads2.com/ok^": 2})
        reduced = reduce_list(rules, profile)
        # 元の順序を保つ
        assert [rule.id for rule in reduced] == ["||ads0.com^", "@@||ads2.com/ok^", "||ads3.com^"]

    def test_min_count(self, rules):
        profile = _profile({"||ads3.com^": 1, "||ads0.com^": 5, "@@||ads2.com/ok^": 2})
        assert [rule.id for rule in reduce_list(rules, profile, min_count=2)] == [
            "||ads0.com^", "@@||ads2.com/ok^"
        ]

    def test_min_count_above_every_count(self, rules):
        profile = _profile({"||ads0.com^": 5})
        assert reduce_list(rules, profile, min_count=6) == []

    def test_element_rules_are_dropped(self, rules):
        profile = _profile({"example.com##.banner": 3, "! comment": 1})
        assert reduce_list(rules, profile) == []

    def test_min_count_must_be_positive(self, rules):
        with pytest.raises(ValueError):
            reduce_list(rules, UsageProfile(), min_count=0)

    def test_output_is_subset_of_input(self, rules):
        profile = _profile({rule.id: 1 for rule in rules})
        reduced = reduce_list(rules, profile)
        assert all(rule in rules for rule in reduced)
        assert len(reduced) == 5
