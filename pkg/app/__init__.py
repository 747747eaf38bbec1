"""
EasyList 適用戦略 計測ツール アプリケーション
"""

__version__ = "0.1.0"
