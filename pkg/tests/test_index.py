"""
トークンインデックスのテスト
"""

from dataclasses import replace

import numpy as np
import pytest

from app.engine.index import LinearScan, RuleIndex, build_index, decide
from app.engine.matcher import MatchContext, rule_matches
from app.models.request import DecisionStatus
from app.utils.filter_parser import parse_rule
from app.utils.synthetic import random_request, random_rules


class TestBuildIndex:
    def test_empty_index(self, suffixes, make_request):
        index = build_index([])
        assert len(index) == 0
        decision = decide(index, make_request("https://ads.example.com/x.js"), suffixes)
        assert decision.status == DecisionStatus.ALLOWED
        assert decision.matched_rules == []

    def test_single_rule_goes_to_one_bucket(self):
        rule = parse_rule("||ads.example.com^")
        index = build_index([rule])
        assert index.bucket_of(rule.id) in {"ads", "example", "com"}
        assert sum(rule.id in bucket for bucket in index.buckets.values()) == 1
        assert index.fallback == []

    def test_rarest_token_is_chosen(self):
        rules = [parse_rule("||common.com^/zzz"), parse_rule("/common/banner^")]
        index = build_index(rules)
        # "common" は2ルールにあるので、1つ目のルールは "com" に入る
        assert index.bucket_of(rules[0].id) == "com"
        assert index.bucket_of(rules[1].id) == "banner"

    def test_ruleless_tokens_go_to_fallback(self):
        rule = parse_rule("/ad.js")
        index = build_index([rule])
        assert index.fallback == [rule.id]
        assert index.bucket_of(rule.id) is None

    def test_non_matchable_are_excluded(self, sample_rules):
        index = build_index(sample_rules)
        assert "##.ad-banner" not in index
        assert "||adnet.com^" in index
        assert "@@||adnet.com/allowed/$script" in index

    def test_duplicates_keep_first_position(self):
        rules = [parse_rule("||a-ads.com^"), parse_rule("||b-ads.com^"), parse_rule("||a-ads.com^")]
        index = build_index(rules)
        assert len(index) == 2
        assert index.positions["||a-ads.com^"] == 0

    def test_include_keeps_full_list_positions(self):
        rules = [parse_rule("||a-ads.com^"), parse_rule("||b-ads.com^")]
        index = build_index(rules, include={"||b-ads.com^"})
        assert index.rule_ids == ["||b-ads.com^"]
        assert index.positions["||b-ads.com^"] == 1


class TestIncremental:
    def test_insert_and_remove(self, suffixes, make_request):
        index = RuleIndex()
        rule = parse_rule("||tracker.net^")
        request = make_request("https://cdn.tracker.net/t.js")

        index.insert(rule, 5)
        assert decide(index, request, suffixes).status == DecisionStatus.BLOCKED

        index.remove(rule.id)
        assert rule.id not in index
        assert index.buckets == {}
        assert decide(index, request, suffixes).status == DecisionStatus.ALLOWED

    def test_insert_keeps_position_order(self, suffixes, make_request):
        index = RuleIndex()
        late = parse_rule("/banner/ads.js")
        early = parse_rule("/banner/*")
        index.insert(late, 10)
        index.insert(early, 2)
        decision = decide(index, make_request("https://x.com/banner/ads.js"), suffixes)
        assert decision.network_rule == early.id

    def test_insert_ignores_known_and_unsupported(self):
        index = RuleIndex()
        rule = parse_rule("||tracker.net^")
        index.insert(rule, 0)
        index.insert(rule, 3)
        index.insert(parse_rule("##.ad"), 4)
        assert len(index) == 1
        assert index.positions[rule.id] == 0

    def test_remove_unknown_is_noop(self):
        index = RuleIndex()
        index.remove("||nothing.com^")
        assert len(index) == 0


class TestEquivalence:
    """インデックスあり / なしで判定が一致すること"""

    def test_sample_rules(self, sample_rules, suffixes, make_request):
        index = build_index(sample_rules)
        linear = LinearScan(sample_rules)
        urls = [
            "https://c.betrad.com/geo/ba.js",
            "https://adnet.com/allowed/x.js",
            "https://adnet.com/other/x.js",
            "https://etherscan.io/images/ad/1.png",
            "https://s0.2mdn.net/a_160x600_b.png",
            "https://www.example.com/index.html",
        ]
        for url in urls:
            request = make_request(url)
            assert decide(index, request, suffixes) == linear.decide(request, suffixes)

    def test_exception_without_network_rule_stays_allowed(self, sample_rules, suffixes, make_request):
        index = build_index([rule for rule in sample_rules if rule.is_exception])
        decision = decide(index, make_request("https://adnet.com/allowed/x.js"), suffixes)
        assert decision.status == DecisionStatus.ALLOWED
        assert decision.exception_rule == "@@||adnet.com/allowed/$script"

    def test_candidates_cover_all_matches(self, suffixes):
        rng = np.random.default_rng(11)
        rules = random_rules(rng, 500)
        index = build_index(rules)
        for _ in range(300):
            ctx = MatchContext(random_request(rng), suffixes)
            candidates = set(index.candidates(ctx))
            matching = {rule_id for rule_id, rule in index.rules.items() if rule_matches(rule, ctx)}
            assert matching <= candidates

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_random_corpus(self, seed, suffixes):
        rng = np.random.default_rng(seed)
        rules = random_rules(rng, 1000)
        index = build_index(rules)
        linear = LinearScan(rules)
        for _ in range(1000):
            request = random_request(rng)
            assert decide(index, request, suffixes) == linear.decide(request, suffixes)

    @pytest.mark.parametrize("seed", [4, 5])
    def test_lowercasing_url_keeps_decision(self, seed, suffixes):
        rng = np.random.default_rng(seed)
        rules = random_rules(rng, 500)
        assert not any(rule.pattern.match_case for rule in rules)
        index = build_index(rules)
        for _ in range(500):
            request = random_request(rng)
            scheme, rest = request.url.split("://", 1)
            mixed = scheme + "://" + "".join(c.upper() if rng.random() < 0.5 else c for c in rest)
            upper = replace(request, url=mixed)
            lower = replace(request, url=mixed.lower())
            assert decide(index, upper, suffixes) == decide(index, lower, suffixes)

    @pytest.mark.slow
    def test_ten_thousand_random_pairs(self, suffixes):
        compared = 0
        for seed in range(100, 110):
            rng = np.random.default_rng(seed)
            rules = random_rules(rng, 1000)
            index = build_index(rules)
            linear = LinearScan(rules)
            for _ in range(1000):
                request = random_request(rng)
                assert decide(index, request, suffixes) == linear.decide(request, suffixes)
                compared += 1
        assert compared == 10_000
