"""
基本集計・データ検証スクリプト
SQLiteから判定結果を読み込み、各種集計を実行
"""

import pandas as pd
import sqlite3
from pathlib import Path


def connect_db(db_path: Path) -> sqlite3.Connection:
    """DB接続"""
    return sqlite3.connect(db_path)


def validate_data(conn: sqlite3.Connection):
    """データ検証"""
    print("=" * 60)
    print("データ検証")
    print("=" * 60)

    # 基本統計
    query = """
    SELECT
        COUNT(*) as total_records,
        COUNT(DISTINCT mode) as modes,
        COUNT(DISTINCT day) as days,
        COUNT(DISTINCT page_etld1) as sites,
        COUNT(DISTINCT network_rule) as network_rules
    FROM request_decisions
    """
    stats = pd.read_sql(query, conn)
    print("\n【基本統計】")
    print(f"  総レコード数: {stats['total_records'].iloc[0]:,}")
    print(f"  戦略数: {stats['modes'].iloc[0]}")
    print(f"  日数: {stats['days'].iloc[0]}")
    print(f"  訪問サイト数: {stats['sites'].iloc[0]}")
    print(f"  一致したネットワークルール数: {stats['network_rules'].iloc[0]}")

    # 整合性チェック
    query = """
    SELECT
        SUM(CASE WHEN status = 'blocked' AND network_rule IS NULL THEN 1 ELSE 0 END) as blocked_without_rule,
        SUM(CASE WHEN status = 'excepted' AND exception_rule IS NULL THEN 1 ELSE 0 END) as excepted_without_rule,
        SUM(CASE WHEN status = 'allowed' AND network_rule IS NOT NULL THEN 1 ELSE 0 END) as allowed_with_rule,
        SUM(CASE WHEN request_etld1 IS NULL THEN 1 ELSE 0 END) as null_site
    FROM request_decisions
    """
    checks = pd.read_sql(query, conn)
    print("\n【整合性チェック】")
    print(f"  ルールなしのブロック: {checks['blocked_without_rule'].iloc[0]}")
    print(f"  例外ルールなしの例外: {checks['excepted_without_rule'].iloc[0]}")
    print(f"  ルール一致ありの許可: {checks['allowed_with_rule'].iloc[0]}")
    print(f"  eTLD+1 なし: {checks['null_site'].iloc[0]}")


def mode_summary(conn: sqlite3.Connection):
    """戦略別サマリー"""
    print("\n" + "=" * 60)
    print("戦略別サマリー")
    print("=" * 60)

    query = """
    SELECT
        mode as 戦略,
        SUM(CASE WHEN status = 'blocked' THEN 1 ELSE 0 END) as ブロック,
        SUM(CASE WHEN status = 'excepted' THEN 1 ELSE 0 END) as 例外,
        SUM(CASE WHEN status = 'allowed' THEN 1 ELSE 0 END) as 許可,
        COUNT(*) as 合計
    FROM request_decisions
    GROUP BY mode
    ORDER BY mode
    """
    df = pd.read_sql(query, conn)
    df["ブロック率"] = (df["ブロック"] / df["合計"] * 100).round(2)
    print(df.to_string(index=False))


def missed_blocks(conn: sqlite3.Connection):
    """全件リストと比べて、ブロックされなかったリクエスト"""
    print("\n" + "=" * 60)
    print("全件リストとの差")
    print("=" * 60)

    query = """
    SELECT
        other.mode as 戦略,
        COUNT(*) as 見逃し
    FROM request_decisions full_list
    JOIN request_decisions other
      ON full_list.timestamp = other.timestamp
     AND full_list.url = other.url
     AND full_list.page_url = other.page_url
    WHERE full_list.mode = 'full' AND other.mode != 'full'
      AND full_list.status = 'blocked' AND other.status != 'blocked'
    GROUP BY other.mode
    """
    df = pd.read_sql(query, conn)
    if df.empty:
        print("  見逃しはありません")
        return
    for _, row in df.iterrows():
        print(f"  {row['戦略']:<8} {row['見逃し']:>6,}件")


def daily_rule_usage(conn: sqlite3.Connection):
    """日別の使用ルール数"""
    print("\n" + "=" * 60)
    print("日別の使用ルール数（full）")
    print("=" * 60)

    query = """
    SELECT day as 日, COUNT(DISTINCT rule_id) as 使用ルール数 FROM (
        SELECT day, network_rule as rule_id FROM request_decisions
        WHERE mode = 'full' AND network_rule IS NOT NULL
        UNION ALL
        SELECT day, exception_rule as rule_id FROM request_decisions
        WHERE mode = 'full' AND exception_rule IS NOT NULL
    )
    GROUP BY day
    ORDER BY day
    """
    df = pd.read_sql(query, conn)
    for _, row in df.iterrows():
        bar = "█" * int(row["使用ルール数"] // 5)
        print(f"  {row['日']:3d}日目 {row['使用ルール数']:5d} {bar}")


def top_rules(conn: sqlite3.Connection, top_n: int = 10):
    """よく使われるルール"""
    print("\n" + "=" * 60)
    print(f"よく使われるルール TOP{top_n}")
    print("=" * 60)

    query = f"""
    SELECT network_rule as ルール, COUNT(*) as 回数
    FROM request_decisions
    WHERE mode = 'full' AND network_rule IS NOT NULL
    GROUP BY network_rule
    ORDER BY 回数 DESC, network_rule
    LIMIT {top_n}
    """
    df = pd.read_sql(query, conn)
    for i, row in df.iterrows():
        print(f"  {i + 1:2d}. {row['ルール']:<50} {row['回数']:>6,}")


def third_parties(conn: sqlite3.Connection):
    """サードパーティ接続数（日, ページ, 接続先 の組）"""
    print("\n" + "=" * 60)
    print("サードパーティ接続数")
    print("=" * 60)

    query = """
    SELECT mode as 戦略, COUNT(*) as 接続数 FROM (
        SELECT DISTINCT mode, day, page_etld1, request_etld1
        FROM request_decisions
        WHERE status != 'blocked'
          AND page_etld1 IS NOT NULL AND request_etld1 IS NOT NULL
          AND page_etld1 != request_etld1
    )
    GROUP BY mode
    ORDER BY mode
    """
    df = pd.read_sql(query, conn)
    for _, row in df.iterrows():
        print(f"  {row['戦略']:<8} {row['接続数']:>8,}")


def main():
    base_dir = Path(__file__).parent.parent
    db_path = base_dir / "data" / "measurements.db"

    if not db_path.exists():
        print(f"ERROR: データベースが見つかりません: {db_path}")
        print("先に 02_replay_to_sqlite.py を実行してください。")
        return

    conn = connect_db(db_path)

    try:
        validate_data(conn)
        mode_summary(conn)
        missed_blocks(conn)
        daily_rule_usage(conn)
        top_rules(conn)
        third_parties(conn)
    finally:
        conn.close()

    print("\n" + "=" * 60)
    print("検証完了")
    print("=" * 60)


if __name__ == "__main__":
    main()
