"""
ルール照合のテスト
"""

import string

import pytest

from app.config import PATTERN_CACHE_SIZE
from app.engine.matcher import MatchContext, compile_pattern, match_rule, rule_tokens
from app.errors import MalformedRequest
from app.utils.filter_parser import parse_rule


class TestObservedRules:
    """計測で実際にブロック・回避されたルールとURL"""

    def test_image_ad_path(self, suffixes, make_request):
        rule = parse_rule("/images/ad/*")
        assert match_rule(rule, make_request("https://etherscan.io/images/ad/ubex-20.png"), suffixes)
        assert not match_rule(rule, make_request("https://etherscan.io/images/gen/ubex-20.png"), suffixes)

    def test_dimension_rule(self, suffixes, make_request):
        rule = parse_rule("_160x600_")
        url = "https://s0.2mdn.net/dfp/x/lotto_kumulacja_160x600_009/images/lotto_swoosh.png"
        assert match_rule(rule, make_request(url), suffixes)

    def test_third_party_rule(self, suffixes, make_request):
        rule = parse_rule("||betrad.com^$third-party")
        url = "https://c.betrad.com/geo/ba.js?r170201"
        assert match_rule(rule, make_request(url, initiator="https://example.com/"), suffixes)
        assert not match_rule(rule, make_request(url, initiator="https://c.betrad.com/page"), suffixes)

    def test_moved_domain_no_longer_matches(self, suffixes, make_request):
        rule = parse_rule("||betrad.com^$third-party")
        url = "https://c.evidon.com/geo/ba.js?r170201"
        assert not match_rule(rule, make_request(url, initiator="https://example.com/"), suffixes)

    def test_domain_then_path(self, suffixes, make_request):
        rule = parse_rule("||turner.com^*/ads/")
        assert match_rule(rule, make_request("https://ssl.cdn.turner.com/x/ads/y.js"), suffixes)
        assert not match_rule(rule, make_request("https://cdn.cnn.com/x/ads/y.js"), suffixes)


class TestSeparator:
    @pytest.mark.parametrize("char", list("/?&=:;,!'\"()<>{}|~@#$+ "))
    def test_separator_characters(self, char, suffixes, make_request):
        rule = parse_rule("||example.com^")
        url = "https://example.com" + char + "x"
        assert match_rule(rule, make_request(url), suffixes)

    @pytest.mark.parametrize("char", list(string.ascii_letters + string.digits + "_-.%"))
    def test_word_characters_are_not_separators(self, char, suffixes, make_request):
        rule = parse_rule("/banner^")
        assert not match_rule(rule, make_request("https://a.com/banner" + char + "x"), suffixes)

    def test_separator_matches_end_of_url(self, suffixes, make_request):
        assert match_rule(parse_rule("/banner^"), make_request("https://a.com/banner"), suffixes)


class TestAnchors:
    def test_domain_anchor_needs_label_boundary(self, suffixes, make_request):
        rule = parse_rule("||example.com^")
        assert match_rule(rule, make_request("https://sub.example.com/"), suffixes)
        assert not match_rule(rule, make_request("https://badexample.com/"), suffixes)

    def test_start_anchor(self, suffixes, make_request):
        rule = parse_rule("|https://ads.")
        assert match_rule(rule, make_request("https://ads.example.com/"), suffixes)
        assert not match_rule(rule, make_request("https://x.com/?u=https://ads.example.com"), suffixes)

    def test_end_anchor(self, suffixes, make_request):
        rule = parse_rule("/ad.js|")
        assert match_rule(rule, make_request("https://a.com/ad.js"), suffixes)
        assert not match_rule(rule, make_request("https://a.com/ad.js?v=1"), suffixes)


class TestOptions:
    def test_case_insensitive_by_default(self, suffixes, make_request):
        rule = parse_rule("/BANNER/*")
        assert match_rule(rule, make_request("https://a.com/banner/x.png"), suffixes)

    def test_match_case(self, suffixes, make_request):
        rule = parse_rule("/Banner.png$match-case")
        assert match_rule(rule, make_request("https://a.com/Banner.png"), suffixes)
        assert not match_rule(rule, make_request("https://a.com/banner.png"), suffixes)

    def test_resource_types(self, suffixes, make_request):
        rule = parse_rule("/ads/banner$image")
        assert match_rule(rule, make_request("https://a.com/ads/banner.png", resource_type="image"), suffixes)
        assert not match_rule(rule, make_request("https://a.com/ads/banner.png", resource_type="script"), suffixes)

    def test_excluded_types(self, suffixes, make_request):
        rule = parse_rule("/ads/banner$~image")
        assert not match_rule(rule, make_request("https://a.com/ads/banner.png", resource_type="image"), suffixes)
        assert match_rule(rule, make_request("https://a.com/ads/banner.png", resource_type="script"), suffixes)

    def test_party_symmetry(self, suffixes, make_request):
        third = parse_rule("/ads/banner$third-party")
        first = parse_rule("/ads/banner$~third-party")
        for initiator in ("https://www.a.com/", "https://b.com/", "https://x.a.com/"):
            request = make_request("https://cdn.a.com/ads/banner.png", initiator=initiator)
            assert match_rule(third, request, suffixes) != match_rule(first, request, suffixes)

    def test_domain_option_most_specific_wins(self, suffixes, make_request):
        rule = parse_rule("/ads/banner$domain=a.com|~b.a.com")
        url = "https://cdn.x.com/ads/banner.js"
        assert match_rule(rule, make_request(url, initiator="https://www.a.com/"), suffixes)
        assert not match_rule(rule, make_request(url, initiator="https://b.a.com/"), suffixes)
        assert not match_rule(rule, make_request(url, initiator="https://c.com/"), suffixes)

    def test_exclude_only_domains(self, suffixes, make_request):
        rule = parse_rule("/ads/banner$domain=~a.com")
        url = "https://cdn.x.com/ads/banner.js"
        assert not match_rule(rule, make_request(url, initiator="https://a.com/"), suffixes)
        assert match_rule(rule, make_request(url, initiator="https://c.com/"), suffixes)


class TestMatchContext:
    def test_third_party_uses_registrable_domain(self, suffixes, make_request):
        ctx = MatchContext(make_request("https://img.bbc.co.uk/x", initiator="https://www.bbc.co.uk/"), suffixes)
        assert not ctx.third_party
        ctx = MatchContext(make_request("https://a.co.uk/x", initiator="https://b.co.uk/"), suffixes)
        assert ctx.third_party

    @pytest.mark.parametrize("url", ["not a url", "https:///nohost", "//example.com/x"])
    def test_malformed(self, url, suffixes, make_request):
        with pytest.raises(MalformedRequest):
            MatchContext(make_request(url), suffixes)


class TestRuleTokens:
    def test_bounded_literals(self):
        assert rule_tokens(parse_rule("||ads.example.com^").pattern) == ["ads", "example", "com"]

    def test_unbounded_edges_are_skipped(self):
        # "/ads/banner" の "banner" は右端がパターン端なので URL 側でより長いトークンになりうる
        assert rule_tokens(parse_rule("/ads/banner").pattern) == ["ads"]

    def test_short_tokens_are_skipped(self):
        assert rule_tokens(parse_rule("||a.io^").pattern) == []


def test_pattern_cache_is_bounded():
    assert compile_pattern.cache_info().maxsize == PATTERN_CACHE_SIZE
    compile_pattern(parse_rule("/banner/ad.gif").pattern)
    assert compile_pattern.cache_info().currsize <= PATTERN_CACHE_SIZE
