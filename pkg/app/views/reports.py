"""
レポート表示 - 集計結果を標準出力・レポートファイル向けのテキストにする

表は pandas の to_string、機械可読部分は key=value 形式。
判定時間はマシンによって変わるため、ここでは出力しない（exporter.write_timing）。
"""

from typing import List, Optional, Sequence, Tuple

import pandas as pd

from app.analytics.evasion import EvasionCandidate
from app.analytics.snapshots import SnapshotDiff
from app.analytics.stats import KSResult
from app.analytics.usage import AgeUsageReport
from app.engine.bench import BenchResult
from app.engine.replay import ReplayReport, UsageSummary
from app.models.filter_rule import ParseStats, RuleKind
from app.utils.exporter import format_key_values
from app.utils.ios_export import ExportReport, VerifyResult

RULE_KIND_LABELS = {
    RuleKind.NETWORK: "ネットワーク",
    RuleKind.EXCEPTION: "例外",
    RuleKind.ELEMENT: "要素",
    RuleKind.ELEMENT_EXCEPTION: "要素（例外）",
    RuleKind.COMMENT: "コメント",
    RuleKind.UNSUPPORTED: "未対応",
}


def _table(df: pd.DataFrame) -> str:
    if df.empty:
        return "(データなし)\n"
    return df.to_string(index=False) + "\n"


def _percent(value: float) -> str:
    return f"{value * 100:.1f}%"


def render_parse_stats(stats: ParseStats) -> str:
    """inspect の出力（種別ごとの件数と構成比）"""
    shares = stats.shares()
    denominator = stats.rule_total
    rows = []
    for kind in RuleKind:
        count = stats.counts[kind]
        share = "" if kind == RuleKind.COMMENT or not denominator else _percent(count / denominator)
        rows.append({"種別": RULE_KIND_LABELS[kind], "件数": f"{count:,}", "構成比": share})

    values = {
        "total_lines": stats.total,
        "rules": stats.rule_total,
        "network": stats.counts[RuleKind.NETWORK],
        "exception": stats.counts[RuleKind.EXCEPTION],
        "element": stats.element_total,
        "unsupported": stats.counts[RuleKind.UNSUPPORTED],
        "network_share": shares["network"],
        "exception_share": shares["exception"],
        "element_share": shares["element"],
    }
    return "【ルール種別】\n" + _table(pd.DataFrame(rows)) + "\n" + format_key_values(values)


def render_replay_report(reports: Sequence[ReplayReport]) -> str:
    """
    replay の出力

    戦略ごと（または同じ戦略の回ごと）に1行の表と、key=value の詳細。

    Args:
        reports: リプレイ結果（複数回リプレイした場合は回の順）

    Returns:
        レポートのテキスト
    """
    rows = []
    for number, report in enumerate(reports, start=1):
        row = {
            "回": number,
            "戦略": report.mode.value,
            "同期ルール数": report.sync_rules,
            "ブロック": report.counts["blocked"],
            "例外": report.counts["excepted"],
            "許可": report.counts["allowed"],
            "サードパーティ接続": report.third_parties_contacted,
        }
        if report.hybrid is not None:
            row["遅延ブロック"] = report.hybrid["late_blocks"]
            row["過剰ブロック"] = report.hybrid["over_blocks"]
            row["昇格"] = report.hybrid["promotions"]
        rows.append(row)

    lines = ["【リプレイ結果】\n", _table(pd.DataFrame(rows))]
    for number, report in enumerate(reports, start=1):
        values = {
            "pass": number,
            "mode": report.mode.value,
            "sync_rules": report.sync_rules,
            "total_requests": report.total_requests,
            "blocked": report.counts["blocked"],
            "excepted": report.counts["excepted"],
            "allowed": report.counts["allowed"],
            "exception_only": report.exception_only,
            "skipped": report.skipped,
            "third_parties_contacted": report.third_parties_contacted,
            "used_rules": len(report.rule_usage.used_ids()),
        }
        if report.hybrid is not None:
            values.update(report.hybrid)
        lines.append("\n" + format_key_values(values))
    return "".join(lines)


def render_usage_summary(summary: UsageSummary) -> str:
    """profile の出力"""
    rows = [{"使用回数": label, "割合": _percent(share)} for label, share in summary.buckets.items()]
    values = {
        "rule_count": summary.rule_count,
        "used_count": summary.used_count,
        "used_fraction": summary.used_fraction,
        "unused_fraction": summary.unused_fraction,
    }
    return "【ルール使用率】\n" + _table(pd.DataFrame(rows)) + "\n" + format_key_values(values)


def render_snapshot_diff(diff: SnapshotDiff, cdf: Optional[List[Tuple[float, float]]] = None) -> str:
    """snapshots の出力（日ごとの大きさ・追加・削除と寿命の分布）"""
    rows = []
    for day, size in diff.sizes:
        rows.append({
            "日付": day.isoformat(),
            "ルール数": size,
            "追加": diff.insertions.get(day, 0),
            "削除": diff.removals.get(day, 0),
        })
    removed = diff.removed_lifetimes()
    values = {
        "snapshots": len(diff.days),
        "first_day": diff.days[0].isoformat(),
        "last_day": diff.days[-1].isoformat(),
        "total_insertions": diff.total_insertions,
        "total_removals": diff.total_removals,
        "removed_rules": len(removed),
    }
    if removed:
        values["median_lifetime_days"] = float(pd.Series([r.lifetime_days for r in removed]).median())
    text = "【スナップショットの推移】\n" + _table(pd.DataFrame(rows)) + "\n" + format_key_values(values)
    if cdf:
        cdf_rows = [{"寿命（日）": int(x), "累積割合": f"{y:.3f}"} for x, y in cdf]
        text += "\n【削除されたルールの寿命】\n" + _table(pd.DataFrame(cdf_rows))
    return text


def render_ks(result: KSResult, label_a: str = "a", label_b: str = "b") -> str:
    values = {
        "n_" + label_a: result.n_a,
        "n_" + label_b: result.n_b,
        "statistic": result.statistic,
        "p_value": result.p_value,
    }
    return format_key_values(values)


def render_age_usage(report: AgeUsageReport) -> str:
    """ルールの古さごとの使用状況とKS検定"""
    rows = [
        {
            "年": year,
            "比較": "1年未満" if label == "vs_new" else "前年",
            "D": f"{result.statistic:.4f}",
            "p値": f"{result.p_value:.4g}",
            "件数": f"{result.n_a}/{result.n_b}",
        }
        for year, label, result in report.tests
    ]
    text = "【古さ別の使用状況】\n" + _table(report.table) + "\n【KS検定】\n" + _table(pd.DataFrame(rows))
    if report.skipped:
        text += "スキップ: " + ", ".join(f"{year}年({label})" for year, label in report.skipped) + "\n"
    return text


def render_evasions(candidates: Sequence[EvasionCandidate]) -> str:
    """evasions の出力"""
    rows = [
        {
            "ルール": candidate.rule_id,
            "追加日": candidate.rule_added.isoformat(),
            "ハッシュ": candidate.content_hash[:12],
            "分類": candidate.hint,
            "追加前URL数": len(candidate.urls_before),
            "追加後URL数": len(candidate.urls_after),
            "新URL/日（前）": f"{candidate.rate_before:.3f}",
            "新URL/日（後）": f"{candidate.rate_after:.3f}",
        }
        for candidate in candidates
    ]
    text = f"【回避の候補】{len(candidates)}件\n" + _table(pd.DataFrame(rows))
    for candidate in candidates:
        text += f"\n{candidate.rule_id} / {candidate.content_hash}\n"
        text += "".join(f"  前: {url}\n" for url in sorted(candidate.urls_before))
        text += "".join(f"  後: {url}\n" for url in sorted(candidate.urls_after))
    return text


def render_export_report(report: ExportReport, verify: Optional[VerifyResult] = None) -> str:
    values = {
        "exported_count": report.exported_count,
        "limit": report.limit,
        "truncated": str(report.truncated).lower(),
        "skipped": len(report.skipped),
        "dropped": len(report.dropped),
    }
    if verify is not None:
        values["verified"] = verify.compared
        values["mismatches"] = len(verify.mismatches)
        values["known_gaps"] = verify.known_gaps
    text = format_key_values(values)
    if report.caveat:
        text += report.caveat + "\n"
    return text


def render_bench(result: BenchResult) -> str:
    """bench の出力（時間を含むため決定的ではない）"""
    values = {
        "seed": result.seed,
        "rules": result.rules,
        "requests": result.requests,
        "linear_requests": result.linear_requests,
        "linear_seconds": result.linear_seconds,
        "indexed_seconds": result.indexed_seconds,
        "speedup": result.speedup,
        "agreement": result.agreement,
        "disagreements": result.disagreements,
    }
    return format_key_values(values)
