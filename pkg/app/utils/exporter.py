"""
エクスポート - プロファイル・CDF・レポート・リストなどのファイル出力
"""

import csv
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from app.engine.replay import ReplayReport
from app.engine.strategies import Promotion
from app.models.filter_rule import FilterRule
from app.models.usage import UsageProfile
from app.utils.ios_export import ExportReport, dumps_document

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _open_for_write(path: PathLike):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def format_key_values(values: Dict[str, object]) -> str:
    """key=value 形式（キーは挿入順）"""
    lines = []
    for key, value in values.items():
        if isinstance(value, float):
            value = f"{value:.6f}"
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


class ResultExporter:
    """計測結果をファイルに出力するクラス"""

    @staticmethod
    def write_text(path: PathLike, text: str):
        with _open_for_write(path) as f:
            f.write(text)
        logger.info("出力: %s", path)

    @staticmethod
    def write_profile(path: PathLike, profile: UsageProfile):
        """
        使用回数プロファイルを出力

        Args:
            path: 出力ファイルパス
            profile: プロファイル（回数の多い順に並べる）
        """
        with _open_for_write(path) as f:
            header = "# usage-profile"
            if profile.start_day is not None:
                header += f" start_day={profile.start_day}"
            if profile.end_day is not None:
                header += f" end_day={profile.end_day}"
            f.write(header + "\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["rule_id", "count"])
            for rule_id in profile.ordered():
                writer.writerow([rule_id, profile.count(rule_id)])
        logger.info("プロファイル出力: %s (%d件)", path, len(profile.counts))

    @staticmethod
    def write_cdf(path: PathLike, points: Sequence[Tuple[float, float]], value_label: str = "value"):
        """CDFを2列の表（値, 累積割合）で出力"""
        with _open_for_write(path) as f:
            writer = csv.writer(f, delimiter="\t", lineterminator="\n")
            writer.writerow([value_label, "cumulative_fraction"])
            for value, fraction in points:
                value_text = str(int(value)) if float(value).is_integer() else f"{value:.6f}"
                writer.writerow([value_text, f"{fraction:.6f}"])

    @staticmethod
    def write_rules(path: PathLike, rules: Iterable[FilterRule]):
        """ルールを元の行のまま出力"""
        with _open_for_write(path) as f:
            for rule in rules:
                f.write(rule.raw + "\n")

    @staticmethod
    def write_hot_ids(path: PathLike, rule_ids: Iterable[str]):
        with _open_for_write(path) as f:
            for rule_id in rule_ids:
                f.write(rule_id + "\n")

    @staticmethod
    def write_promotions(path: PathLike, promotions: List[Promotion]):
        """昇格ログ（timestamp, rule_id, url）"""
        with _open_for_write(path) as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["timestamp", "rule_id", "url"])
            for promotion in promotions:
                writer.writerow([f"{promotion.timestamp:.3f}", promotion.rule_id, promotion.request.url])

    @staticmethod
    def write_timing(path: PathLike, report: ReplayReport):
        """
        判定時間を別ファイルに出力（マシンごとに変わるため本体のレポートとは分ける）
        """
        values = {
            "mode": report.mode.value,
            "samples": report.eval_time.samples,
            "median_ms": f"{report.eval_time.median_ms:.2f}",
            "p90_ms": f"{report.eval_time.p90_ms:.2f}",
        }
        if report.async_time is not None:
            values["async_samples"] = report.async_time.samples
            values["async_median_ms"] = f"{report.async_time.median_ms:.2f}"
            values["async_p90_ms"] = f"{report.async_time.p90_ms:.2f}"
        ResultExporter.write_text(path, format_key_values(values))

    @staticmethod
    def write_ios(path: PathLike, document: List[dict]):
        ResultExporter.write_text(path, dumps_document(document))

    @staticmethod
    def write_ios_report(path: PathLike, report: ExportReport):
        values = {
            "exported_count": report.exported_count,
            "limit": report.limit,
            "truncated": str(report.truncated).lower(),
            "skipped": len(report.skipped),
            "dropped": len(report.dropped),
            "element_rules": report.element_rules,
            "group_rules": report.group_rules,
        }
        lines = [format_key_values(values)]
        if report.caveat:
            lines.append(f"# {report.caveat}\n")
        for rule_id, reason in report.skipped:
            lines.append(f"skip\t{rule_id}\t{reason}\n")
        for rule_id in report.dropped:
            lines.append(f"drop\t{rule_id}\n")
        ResultExporter.write_text(path, "".join(lines))
