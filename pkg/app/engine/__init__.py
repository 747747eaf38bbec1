"""
engine パッケージ - 照合エンジンと適用戦略
"""
