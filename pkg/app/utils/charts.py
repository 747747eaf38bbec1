"""
グラフ出力 - matplotlib（Agg）でPNGに書き出す
"""

import logging
import platform
from pathlib import Path
from typing import Sequence, Tuple, Union

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.figure import Figure

from app.analytics.snapshots import SnapshotDiff
from app.models.filter_rule import ParseStats

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def setup_japanese_font():
    """日本語フォントを設定"""
    system = platform.system()

    if system == "Windows":
        font_candidates = ["MS Gothic", "Meiryo", "Yu Gothic"]
    elif system == "Darwin":
        font_candidates = ["Hiragino Sans", "Hiragino Kaku Gothic ProN"]
    else:
        font_candidates = ["IPAexGothic", "IPAGothic", "Noto Sans CJK JP"]

    import matplotlib.font_manager as fm
    available_fonts = {f.name for f in fm.fontManager.ttflist}

    for font in font_candidates:
        if font in available_fonts:
            plt.rcParams["font.family"] = font
            break
    else:
        plt.rcParams["font.family"] = "sans-serif"

    # マイナス記号の文字化け対策
    plt.rcParams["axes.unicode_minus"] = False


setup_japanese_font()


def _new_figure(figsize: Tuple[float, float] = (6, 4)):
    figure = Figure(figsize=figsize, dpi=100)
    return figure, figure.add_subplot(111)


def _save(figure: Figure, path: PathLike):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    figure.tight_layout()
    figure.savefig(path)
    logger.info("グラフ出力: %s", path)


def plot_rule_types(stats: ParseStats, path: PathLike):
    """
    ルール種別の構成比の棒グラフ

    Args:
        stats: parse_list の集計
        path: 出力PNG
    """
    figure, ax = _new_figure()
    shares = stats.shares()
    labels = ["ネットワーク", "例外", "要素", "未対応"]
    values = [shares["network"] * 100, shares["exception"] * 100,
              shares["element"] * 100, shares["unsupported"] * 100]
    bars = ax.bar(labels, values)
    for bar, value in zip(bars, values):
        ax.annotate(f"{value:.1f}%", (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=9)
    ax.set_ylabel("割合 (%)")
    ax.set_title(f"ルール種別の内訳（{stats.rule_total:,}件）", fontsize=12)
    _save(figure, path)


def plot_cdf(
    points: Sequence[Tuple[float, float]],
    path: PathLike,
    title: str = "",
    xlabel: str = "",
    log_x: bool = False
):
    """
    累積分布の階段グラフ

    Args:
        points: [(値, 累積割合)]
        path: 出力PNG
        title: グラフタイトル
        xlabel: X軸ラベル
        log_x: X軸を対数にするか（値0の点は除く）
    """
    figure, ax = _new_figure()
    if log_x:
        points = [(x, y) for x, y in points if x > 0]
        ax.set_xscale("log")
    if points:
        xs = [x for x, _ in points]
        ys = [y for _, y in points]
        ax.step(xs, ys, where="post")
    else:
        ax.text(0.5, 0.5, "データがありません", ha="center", va="center", fontsize=12)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("累積割合")
    if xlabel:
        ax.set_xlabel(xlabel)
    if title:
        ax.set_title(title, fontsize=12)
    ax.grid(True, alpha=0.3)
    _save(figure, path)


def plot_evolution(diff: SnapshotDiff, path: PathLike):
    """リストの大きさと日ごとの追加・削除の推移"""
    figure, ax = _new_figure((8, 4))
    days = [day for day, _ in diff.sizes]
    ax.plot(days, [size for _, size in diff.sizes], label="ルール数")
    changed = days[1:]
    ax.bar(changed, [diff.insertions[d] for d in changed], alpha=0.5, label="追加")
    ax.bar(changed, [-diff.removals[d] for d in changed], alpha=0.5, label="削除")
    ax.set_title("リストの推移", fontsize=12)
    ax.legend()
    ax.grid(True, alpha=0.3)
    figure.autofmt_xdate()
    _save(figure, path)
