"""
models パッケージ - データ型とデータアクセス層
"""
