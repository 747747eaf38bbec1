"""
設定値 - 各モジュールで共有する既定値
"""

from pathlib import Path

# プロジェクトルート/data がデータ置き場
PROJECT_ROOT = Path(__file__).parent.parent
DEFAULT_DATA_DIR = PROJECT_ROOT / "data"
DEFAULT_DB_PATH = DEFAULT_DATA_DIR / "measurements.db"

# 乱数シード（再現性のため固定）
DEFAULT_SEED = 42

# iOS コンテンツブロッカーのルール上限
DEFAULT_MAX_RULES = 50_000

# リクエストログ
LOG_HEADER = "reqlog v1"
MALFORMED_LOG_LIMIT = 0.10

# トークンインデックス
TOKEN_MIN_LENGTH = 3
# コンパイル済みパターンの保持件数（EasyList 1本分より多め）
PATTERN_CACHE_SIZE = 65_536

# 回避検出
MIN_EVASION_SIZE = 50 * 1024
MIN_RULE_PERSISTENCE_DAYS = 14

# 使用回数の集計区分（0回 / 1-100回 / 101-1,000回 / 1,000回超）
USAGE_BUCKETS = [(0, 0), (1, 100), (101, 1000), (1001, None)]

# リプレイ時の計測前の空回し件数
REPLAY_WARMUP = 100
