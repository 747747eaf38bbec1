"""
フィルタリストパーサーのテスト
"""

import random

import pytest

from app.models.filter_rule import SEPARATOR, WILDCARD, Anchor, PartKind, Party, PatternPart, RuleKind
from app.utils.filter_parser import parse_list, parse_rule, split_lines


class TestParseRule:
    def test_third_party_domain_rule(self):
        rule = parse_rule("||betrad.com^$third-party")
        assert rule.kind == RuleKind.NETWORK
        assert rule.pattern.anchor == Anchor.DOMAIN_BOUNDARY
        assert rule.pattern.parts == (PatternPart(PartKind.LITERAL, "betrad.com"), SEPARATOR)
        assert rule.options.party == Party.THIRD_ONLY

    def test_comment(self):
        rule = parse_rule("! this is a comment")
        assert rule.kind == RuleKind.COMMENT
        assert rule.pattern is None

    def test_header_is_comment(self):
        assert parse_rule("[Adblock Plus 2.0]").kind == RuleKind.COMMENT

    def test_exception_with_type(self):
        rule = parse_rule("@@||example.com^$script")
        assert rule.kind == RuleKind.EXCEPTION
        assert rule.options.include_types == frozenset({"script"})

    def test_element_rule(self):
        rule = parse_rule("example.com##.ad-banner")
        assert rule.kind == RuleKind.ELEMENT
        assert rule.pattern is None
        assert rule.options is None

    def test_element_exception(self):
        assert parse_rule("example.com#@#.ad-banner").kind == RuleKind.ELEMENT_EXCEPTION

    def test_raw_is_kept(self):
        line = "  ||ads.example.com^  "
        rule = parse_rule(line)
        assert rule.raw == line
        assert rule.id == "||ads.example.com^"

    def test_wildcards_collapse_and_trim(self):
        rule = parse_rule("*/ads/**banner*")
        assert rule.pattern.anchor == Anchor.NONE
        assert rule.pattern.parts == (
            PatternPart(PartKind.LITERAL, "/ads/"), WILDCARD, PatternPart(PartKind.LITERAL, "banner"),
        )

    def test_end_anchor(self):
        rule = parse_rule("|https://ads.example.com/x.js|")
        assert rule.pattern.anchor == Anchor.START_OF_URL
        assert rule.pattern.end_anchored

    def test_domain_option(self):
        rule = parse_rule("/banner.js$domain=a.com|~b.a.com")
        assert rule.options.include_domains == frozenset({"a.com"})
        assert rule.options.exclude_domains == frozenset({"b.a.com"})

    def test_negated_types(self):
        rule = parse_rule("/ads/*$~image,~script")
        assert rule.options.exclude_types == frozenset({"image", "script"})
        assert not rule.options.include_types

    def test_match_case(self):
        assert parse_rule("/Banner.js$match-case").pattern.match_case

    @pytest.mark.parametrize("line", [
        "/ads/x$popup",
        "||example.com^$csp=script-src 'none'",
        "||example.com^$redirect=noop.js",
        "/^https?:\\/\\/ads\\./",
        "example.com#?#div:has(.ad)",
        "||*ads",
        "$domain=*.example.com",
    ])
    def test_unsupported(self, line):
        rule = parse_rule(line)
        assert rule.kind == RuleKind.UNSUPPORTED
        assert rule.error

    def test_conflicting_party(self):
        assert parse_rule("/ads/x$third-party,~third-party").kind == RuleKind.UNSUPPORTED


class TestParseList:
    def test_empty_text(self):
        rules, stats = parse_list("")
        assert rules == []
        assert stats.total == 0
        assert all(count == 0 for count in stats.counts.values())

    def test_three_lines(self):
        rules, stats = parse_list("!c\n||a.com^\n@@||a.com^")
        assert [r.kind for r in rules] == [RuleKind.COMMENT, RuleKind.NETWORK, RuleKind.EXCEPTION]
        assert stats.counts[RuleKind.COMMENT] == 1
        assert stats.counts[RuleKind.NETWORK] == 1
        assert stats.counts[RuleKind.EXCEPTION] == 1

    def test_crlf(self):
        rules, _ = parse_list("||a.com^\r\n||b.com^\r\n")
        assert [r.raw for r in rules] == ["||a.com^", "||b.com^"]

    def test_shares(self):
        text = "\n".join(["||a.com^"] * 2 + ["@@||a.com^"] + ["##.ad"] + ["! c"])
        _, stats = parse_list(text)
        shares = stats.shares()
        assert shares["network"] == pytest.approx(0.5)
        assert shares["exception"] == pytest.approx(0.25)
        assert shares["element"] == pytest.approx(0.25)

    def test_split_lines_keeps_blank(self):
        assert split_lines("a\n\nb\n") == ["a", "", "b"]


ALPHABET = "|^*$@#!~,=/.-_:?&abcdefghijklmnopqrstuvwxyz0123456789 \t\x00\xff[]"


def _random_line(rng: random.Random) -> str:
    if rng.random() < 0.3:
        return bytes(rng.randrange(256) for _ in range(rng.randrange(40))).decode("latin-1")
    return "".join(rng.choice(ALPHABET) for _ in range(rng.randrange(40)))


def test_parser_is_total_small():
    rng = random.Random(7)
    lines = [_random_line(rng) for _ in range(20_000)]
    for line in lines:
        rule = parse_rule(line)
        assert rule.raw == line


@pytest.mark.slow
def test_parser_fuzz_million_lines():
    rng = random.Random(2019)
    lines = [_random_line(rng).replace("\n", "").replace("\r", "") for _ in range(1_000_000)]
    rules, stats = parse_list("\n".join(lines) + "\n")
    assert len(rules) == len(lines)
    assert stats.total == len(lines)
