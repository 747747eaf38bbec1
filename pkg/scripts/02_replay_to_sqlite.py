"""
リプレイ + SQLite格納スクリプト
日次ログを3つの戦略（全件 / 縮小リスト / ハイブリッド）でリプレイし、
リクエストごとの判定を data/measurements.db に保存する
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from app.analytics.reduction import reduce_list
from app.engine.replay import replay, usage_summary
from app.engine.strategies import StrategyConfig, StrategyMode
from app.engine.suffix import SuffixTable
from app.models.database import MeasurementDatabase
from app.utils.exporter import ResultExporter
from app.utils.importer import load_list, load_log_directory, merge_logs

# 縮小リスト・ホットセットを作る期間（先頭から何日分）
PROFILE_DAYS = 7


def main():
    base_dir = Path(__file__).parent.parent
    data_dir = base_dir / "data"
    db_path = data_dir / "measurements.db"

    list_path = data_dir / "easylist.txt"
    if not list_path.exists():
        print(f"ERROR: リストが見つかりません: {list_path}")
        print("先に 01_generate_sample_data.py を実行してください。")
        return

    suffixes = SuffixTable.builtin()

    print("=== データ読込 ===")
    rules, stats = load_list(list_path)
    logs = load_log_directory(data_dir / "logs")
    log = merge_logs(logs)
    print(f"ルール: {stats.rule_total:,}件")
    print(f"リクエスト: {len(log):,}件（{len(logs)}日分）")

    print("\n=== プロファイル作成（全件リスト） ===")
    full = replay(log, StrategyConfig(StrategyMode.FULL, rules), suffixes)
    profile_log = merge_logs({day: logs[day] for day in sorted(logs)[:PROFILE_DAYS]})
    profile = replay(profile_log, StrategyConfig(StrategyMode.FULL, rules), suffixes).rule_usage
    summary = usage_summary(full.rule_usage, rules)
    print(f"使用ルール: {summary.used_count:,} / {summary.rule_count:,} ({summary.used_fraction * 100:.2f}%)")
    ResultExporter.write_profile(data_dir / "profile.csv", profile)

    reduced = reduce_list(rules, profile)
    hot = {rule.id for rule in reduced}
    print(f"縮小リスト（先頭{PROFILE_DAYS}日で使われたルール）: {len(reduced):,}件")

    print("\n=== リプレイ ===")
    reports = [
        full,
        replay(log, StrategyConfig(StrategyMode.REDUCED, rules, hot), suffixes),
        replay(log, StrategyConfig(StrategyMode.HYBRID, rules, hot), suffixes),
    ]
    for report in reports:
        line = (
            f"  {report.mode.value:<8} 同期ルール {report.sync_rules:>6,}  "
            f"ブロック {report.counts['blocked']:>6,}  例外 {report.counts['excepted']:>5,}  "
            f"中央値 {report.eval_time.median_ms:.2f}ms"
        )
        if report.hybrid is not None:
            line += f"  遅延ブロック {report.hybrid['late_blocks']}  過剰ブロック {report.hybrid['over_blocks']}  昇格 {report.hybrid['promotions']}"
        print(line)

    print("\n=== SQLite保存 ===")
    with MeasurementDatabase(str(db_path)) as db:
        for report in reports:
            db.save_decisions(report.mode.value, report.decisions, suffixes)
    print(f"DB保存完了: {db_path}")


if __name__ == "__main__":
    main()
