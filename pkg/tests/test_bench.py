"""
ベンチマークのテスト
"""

import numpy as np
import pytest

from app.engine.bench import run_bench
from app.engine.replay import replay
from app.engine.strategies import StrategyConfig, StrategyMode
from app.models.request import RequestLog
from app.utils.filter_parser import parse_rule
from app.utils.synthetic import generate_list, generate_log


def test_small_bench_agrees(suffixes):
    result = run_bench(suffixes, seed=1, rule_count=300, request_count=200)
    assert result.disagreements == 0
    assert result.agreement == 200
    assert result.requests == 200
    assert result.linear_requests == 200


def test_linear_sample_limits_scan(suffixes):
    result = run_bench(suffixes, seed=1, rule_count=300, request_count=200, linear_sample=50, warmup=10)
    assert result.requests == 200
    assert result.linear_requests == 50
    assert result.agreement == 50


@pytest.mark.slow
def test_index_is_faster_than_linear_scan(suffixes):
    result = run_bench(suffixes, seed=42, rule_count=5_000, request_count=1_000)
    assert result.disagreements == 0
    assert result.speedup > 1.0


@pytest.mark.slow
def test_index_speedup_at_easylist_scale(suffixes):
    # 全件走査は先頭2,000件だけ計測し、1件あたりの時間で比べる
    result = run_bench(suffixes, seed=42, rule_count=36_000, request_count=100_000, linear_sample=2_000)
    assert result.rules >= 35_000
    assert result.requests == 100_000
    assert result.disagreements == 0
    assert result.speedup >= 5.0


@pytest.mark.slow
def test_reduced_median_not_slower_than_full(suffixes):
    rng = np.random.default_rng(42)
    rules = [parse_rule(line) for line in generate_list(rng, 35_000, element_share=0.0)]
    log = generate_log(rng, rules, 20_000, blockable_share=0.3, days=2)

    first_day = RequestLog([record for record in log if record.day == 0])
    profile = replay(first_day, StrategyConfig(StrategyMode.FULL, rules), suffixes).rule_usage
    matchable = sum(1 for rule in rules if rule.is_matchable)
    hot = set(profile.ordered()[: matchable // 10])

    full = replay(log, StrategyConfig(StrategyMode.FULL, rules), suffixes)
    reduced = replay(log, StrategyConfig(StrategyMode.REDUCED, rules, hot), suffixes)
    assert reduced.sync_rules <= matchable // 10
    assert reduced.eval_time.median_ms <= full.eval_time.median_ms
