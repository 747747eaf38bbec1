"""
リストの縮小 - 使われたルールだけを残す
"""

import logging
from typing import Iterable, List

from app.engine.index import matchable_rules
from app.models.filter_rule import FilterRule
from app.models.usage import UsageProfile

logger = logging.getLogger(__name__)


def reduce_list(
    full_rules: Iterable[FilterRule],
    profile: UsageProfile,
    min_count: int = 1
) -> List[FilterRule]:
    """
    使用回数が min_count 以上のネットワーク / 例外ルールだけを残す

    Args:
        full_rules: 元のリスト
        profile: 使用回数プロファイル
        min_count: 残す最小の使用回数（1以上）

    Returns:
        元の順序を保ったルールのリスト（要素・コメント行は除く）
    """
    if min_count < 1:
        raise ValueError(f"min_count は1以上を指定してください: {min_count}")

    entries = matchable_rules(full_rules)
    reduced = [rule for _, rule in entries if profile.count(rule.id) >= min_count]

    if not reduced:
        logger.warning("使用回数 %d 回以上のルールがありません", min_count)
    else:
        logger.info(
            "縮小: %d件 → %d件 (%.2f%%)",
            len(entries), len(reduced), 100.0 * len(reduced) / len(entries)
        )
    return reduced
