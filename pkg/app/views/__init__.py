"""
views パッケージ - テキストレポートの表示
"""
