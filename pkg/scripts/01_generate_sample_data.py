"""
サンプルデータ生成スクリプト
- EasyList 風のフィルタリスト
- 30日分の日次スナップショット（毎日少しずつ追加・削除）
- 30日分のリクエストログ（reqlog v1 形式）
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from app.config import DEFAULT_SEED
from app.models.filter_rule import RuleKind
from app.utils.filter_parser import parse_list
from app.utils.synthetic import format_log, generate_corpus

# 乱数シード固定（再現性のため）
SEED = DEFAULT_SEED

RULE_COUNT = 2_000
DAYS = 30
REQUESTS_PER_DAY = 500


def write_lines(path: Path, lines):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main():
    base_dir = Path(__file__).parent.parent
    data_dir = base_dir / "data"

    print("サンプルデータを生成中...")
    corpus = generate_corpus(SEED, RULE_COUNT, DAYS, REQUESTS_PER_DAY)

    list_path = data_dir / "easylist.txt"
    write_lines(list_path, corpus.list_lines)
    print(f"  {list_path.name}: {len(corpus.list_lines):,}行")

    for day, lines in corpus.snapshots:
        write_lines(data_dir / "snapshots" / f"{day.isoformat()}.txt", lines)
    print(f"  snapshots/: {len(corpus.snapshots)}件")

    log_dir = data_dir / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    for day, log in corpus.logs.items():
        (log_dir / f"{day.isoformat()}.log").write_text(format_log(log), encoding="utf-8")
    total = sum(len(log) for log in corpus.logs.values())
    print(f"  logs/: {len(corpus.logs)}日分 {total:,}件")

    # 統計表示
    _, stats = parse_list("\n".join(corpus.list_lines))
    shares = stats.shares()
    print("\n=== データ統計 ===")
    print(f"ルール数（コメント除く）: {stats.rule_total:,}")
    print(f"ネットワーク: {stats.counts[RuleKind.NETWORK]:,} ({shares['network'] * 100:.1f}%)")
    print(f"例外: {stats.counts[RuleKind.EXCEPTION]:,} ({shares['exception'] * 100:.1f}%)")
    print(f"要素: {stats.element_total:,} ({shares['element'] * 100:.1f}%)")
    print(f"期間: {corpus.snapshots[0][0]} - {corpus.snapshots[-1][0]}")


if __name__ == "__main__":
    main()
