"""
統計処理 - 経験分布関数と2標本コルモゴロフ–スミルノフ検定
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from app.errors import EmptyInput

# 級数の打ち切り（項が十分小さくなったら止める）
_SERIES_TERMS = 100
_SERIES_EPS = 1e-16


@dataclass(frozen=True)
class KSResult:
    """KS検定の結果"""

    statistic: float
    p_value: float
    n_a: int
    n_b: int


def ecdf(values: Sequence[float]) -> List[Tuple[float, float]]:
    """
    経験分布関数の点列

    Args:
        values: 標本

    Returns:
        [(値, その値以下の割合)]。値は昇順で重複なし

    Raises:
        EmptyInput: 標本が空
    """
    data = np.sort(np.asarray(values, dtype=float))
    if data.size == 0:
        raise EmptyInput("標本が空です")
    xs, counts = np.unique(data, return_counts=True)
    fractions = np.cumsum(counts) / data.size
    return [(float(x), float(f)) for x, f in zip(xs, fractions)]


def ecdf_at(points: List[Tuple[float, float]], x: float) -> float:
    """ecdf の点列から F(x) を求める"""
    fraction = 0.0
    for value, cumulative in points:
        if value > x:
            break
        fraction = cumulative
    return fraction


def kolmogorov_sf(lam: float) -> float:
    """
    コルモゴロフ分布の上側確率 Q(λ) = P(K > λ)

    λ が小さいときは収束の速い別表現の級数を使う。
    """
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        # 1 - sqrt(2π)/λ Σ exp(-(2k-1)²π²/(8λ²))
        coef = math.sqrt(2 * math.pi) / lam
        total = 0.0
        for k in range(1, _SERIES_TERMS):
            term = math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8 * lam ** 2))
            total += term
            if term < _SERIES_EPS:
                break
        p = 1.0 - coef * total
    else:
        # 2 Σ (-1)^(k-1) exp(-2k²λ²)
        total = 0.0
        for k in range(1, _SERIES_TERMS):
            term = math.exp(-2 * k * k * lam * lam)
            total += term if k % 2 == 1 else -term
            if term < _SERIES_EPS:
                break
        p = 2.0 * total
    return min(1.0, max(0.0, p))


def ks_statistic(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """D = sup |F_a(x) - F_b(x)|（両標本の全観測点で評価）"""
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    points = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, points, side="right") / a.size
    cdf_b = np.searchsorted(b, points, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_two_sample(sample_a: Sequence[float], sample_b: Sequence[float]) -> KSResult:
    """
    2標本KS検定（漸近分布によるp値）

    Args:
        sample_a: 標本A（ルールごとの使用回数など）
        sample_b: 標本B

    Returns:
        KSResult

    Raises:
        EmptyInput: どちらかの標本が空
    """
    n_a = len(sample_a)
    n_b = len(sample_b)
    if n_a == 0 or n_b == 0:
        raise EmptyInput("KS検定には空でない2つの標本が必要です")

    d = ks_statistic(sample_a, sample_b)
    en = math.sqrt(n_a * n_b / (n_a + n_b))
    p_value = kolmogorov_sf(en * d)
    return KSResult(statistic=d, p_value=p_value, n_a=n_a, n_b=n_b)
