"""
ベンチマーク - 全件走査とトークンインデックスの判定時間を比べる
"""

import logging
import time
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from app.config import DEFAULT_SEED, REPLAY_WARMUP
from app.engine.index import LinearScan, build_index, decide
from app.engine.matcher import compile_pattern
from app.engine.suffix import SuffixTable
from app.errors import MalformedRequest
from app.utils.filter_parser import parse_rule
from app.utils.synthetic import generate_list, generate_log

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchResult:
    """
    ベンチマーク結果

    全件走査は linear_requests 件（先頭から）だけを計測することがある。
    speedup は1件あたりの時間の比。
    """

    seed: int
    rules: int
    requests: int
    linear_requests: int
    linear_seconds: float
    indexed_seconds: float
    agreement: int
    disagreements: int

    @property
    def speedup(self) -> float:
        if self.indexed_seconds <= 0 or self.linear_requests == 0:
            return float("inf")
        per_linear = self.linear_seconds / self.linear_requests
        per_indexed = self.indexed_seconds / self.requests
        return per_linear / per_indexed


def run_bench(
    suffixes: SuffixTable,
    seed: int = DEFAULT_SEED,
    rule_count: int = 5_000,
    request_count: int = 2_000,
    linear_sample: Optional[int] = None,
    warmup: int = REPLAY_WARMUP
) -> BenchResult:
    """
    生成したリストとログで、全件走査とインデックスの判定を比べる

    判定結果（状態と一致ルール）が食い違った件数も数える。計測の前に
    パターンのコンパイル結果を作り直し、両方の判定器を同じ件数だけ空回しする。

    Args:
        suffixes: サフィックステーブル
        seed: 乱数シード
        rule_count: 生成するネットワーク / 例外ルールの数の目安
        request_count: リクエスト数
        linear_sample: 全件走査を計測する件数（省略時は全件）
        warmup: 計測前に空回しする件数

    Returns:
        BenchResult
    """
    rng = np.random.default_rng(seed)
    lines = generate_list(rng, rule_count, element_share=0.0)
    rules = [parse_rule(line) for line in lines]
    log = generate_log(rng, rules, request_count, blockable_share=0.3)
    requests = [record.request for record in log]
    linear_requests = requests if linear_sample is None else requests[:linear_sample]

    scan = LinearScan(rules)
    index = build_index(rules)
    logger.info(
        "ベンチマーク: ルール %d件 / リクエスト %d件（全件走査 %d件）",
        len(scan), len(requests), len(linear_requests)
    )

    compile_pattern.cache_clear()
    for rule in scan.rules.values():
        compile_pattern(rule.pattern)
    _timed(lambda r: scan.decide(r, suffixes), requests[:warmup])
    _timed(lambda r: decide(index, r, suffixes), requests[:warmup])

    linear, linear_seconds = _timed(lambda r: scan.decide(r, suffixes), linear_requests)
    indexed, indexed_seconds = _timed(lambda r: decide(index, r, suffixes), requests)

    disagreements = sum(1 for a, b in zip(linear, indexed) if a != b)
    if disagreements:
        logger.warning("判定の食い違い: %d件", disagreements)

    return BenchResult(
        seed=seed,
        rules=len(scan),
        requests=len(requests),
        linear_requests=len(linear_requests),
        linear_seconds=linear_seconds,
        indexed_seconds=indexed_seconds,
        agreement=len(linear_requests) - disagreements,
        disagreements=disagreements,
    )


def _timed(decide_one, requests) -> tuple:
    results: List = []
    start = time.perf_counter()
    for request in requests:
        try:
            results.append(decide_one(request))
        except MalformedRequest:
            results.append(None)
    return results, time.perf_counter() - start
