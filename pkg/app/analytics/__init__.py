"""
analytics パッケージ - リスト・スナップショット・ログの分析
"""
