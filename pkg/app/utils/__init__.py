"""
utils パッケージ - ユーティリティ
"""
