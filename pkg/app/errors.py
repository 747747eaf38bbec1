"""
例外定義
"""


class AdblockLabError(Exception):
    """本ツールの例外の基底クラス"""


class MalformedRequest(AdblockLabError):
    """リクエストのURLが不正（ログデータの不備）"""


class LogRejected(AdblockLabError):
    """不正な行が多すぎるため、ログファイルとして受け付けない"""


class EmptyInput(AdblockLabError, ValueError):
    """統計処理の入力が空"""


class RuleLimitExceeded(AdblockLabError):
    """変換後のルール数が上限を超えた"""

    def __init__(self, count: int, limit: int):
        super().__init__(f"ルール数 {count:,} 件が上限 {limit:,} 件を超えています")
        self.count = count
        self.limit = limit


class AlreadyHot(AdblockLabError):
    """昇格済みのルールを再度昇格しようとした"""


class ConfigError(AdblockLabError):
    """設定ファイル（マニフェスト等）の不備"""


class UsageError(AdblockLabError):
    """コマンドの指定が足りない（必須の入力がない）"""
