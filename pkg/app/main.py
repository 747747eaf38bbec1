"""
フィルタリスト計測ツール - エントリーポイント

使い方:
    python app/main.py inspect easylist.txt
    python app/main.py replay --log logs/ --list easylist.txt --mode hybrid --hot hot.txt
    python app/main.py --help
"""

import sys
from pathlib import Path

# プロジェクトルートをパスに追加（直接実行時用）
project_root = Path(__file__).parent.parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

import argparse
import logging
from datetime import date
from typing import List, Optional

import numpy as np

from app.analytics.evasion import block_timeline, detect_evasions
from app.analytics.reduction import reduce_list
from app.analytics.snapshots import diff_snapshots, lifetime_cdf
from app.analytics.stats import ks_two_sample
from app.analytics.usage import age_usage_analysis, daily_usage, new_vs_old_usage
from app.config import DEFAULT_MAX_RULES, DEFAULT_SEED, REPLAY_WARMUP
from app.engine.bench import run_bench
from app.engine.replay import replay, replay_with, usage_summary
from app.engine.strategies import Strategy, StrategyConfig, StrategyMode
from app.engine.suffix import SuffixTable
from app.errors import AdblockLabError, ConfigError, EmptyInput, UsageError
from app.models.database import MeasurementDatabase
from app.models.request import RequestLog
from app.utils.charts import plot_cdf, plot_evolution, plot_rule_types
from app.utils.exporter import ResultExporter
from app.utils.importer import (
    load_hot_ids,
    load_list,
    load_log,
    load_log_directory,
    load_profile,
    load_snapshots,
    merge_logs,
)
from app.utils.ios_export import export_ios, verify_export
from app.utils.synthetic import format_log, generate_corpus, random_request
from app.views.reports import (
    render_age_usage,
    render_bench,
    render_evasions,
    render_export_report,
    render_ks,
    render_parse_stats,
    render_replay_report,
    render_snapshot_diff,
    render_usage_summary,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def _require_file(path: Optional[str], option: str) -> Path:
    if path is None:
        raise UsageError(f"{option} を指定してください")
    resolved = Path(path)
    if not resolved.is_file():
        raise ConfigError(f"ファイルが見つかりません: {path} ({option})")
    return resolved


def _require_dir(path: Optional[str], option: str) -> Path:
    if path is None:
        raise UsageError(f"{option} を指定してください")
    resolved = Path(path)
    if not resolved.is_dir():
        raise ConfigError(f"ディレクトリが見つかりません: {path} ({option})")
    return resolved


def _require_log(path: Optional[str], option: str = "--log") -> Path:
    """ログはファイルでも日付ごとのディレクトリでもよい"""
    if path is None:
        raise UsageError(f"{option} を指定してください")
    resolved = Path(path)
    if not resolved.exists():
        raise ConfigError(f"ログが見つかりません: {path} ({option})")
    return resolved


def _load_log(path: Path) -> RequestLog:
    if path.is_dir():
        return merge_logs(load_log_directory(path))
    return load_log(path)


def _load_suffixes(args) -> SuffixTable:
    if args.suffixes:
        return SuffixTable.from_file(_require_file(args.suffixes, "--suffixes"))
    return SuffixTable.builtin()


def _emit(text: str, out: Optional[str] = None):
    """レポートを標準出力に表示し、指定があればファイルにも書き出す"""
    print(text, end="")
    if out:
        ResultExporter.write_text(out, text)


# =============================================================================
# サブコマンド
# =============================================================================

def cmd_inspect(args) -> int:
    path = _require_file(args.list, "list")
    _, stats = load_list(path)
    _emit(render_parse_stats(stats), args.report)
    if args.plot:
        plot_rule_types(stats, args.plot)
    return 0


def _strategy_config(args):
    if args.manifest:
        return StrategyConfig.from_manifest(_require_file(args.manifest, "--manifest"))

    list_path = _require_file(args.list, "--list")
    hot_path = _require_file(args.hot, "--hot") if args.hot else None
    profile_path = _require_file(args.profile, "--profile") if args.profile else None

    rules, _ = load_list(list_path)
    mode = StrategyMode(args.mode)
    hot = set()
    if hot_path is not None:
        hot = load_hot_ids(hot_path)
    elif profile_path is not None:
        hot = StrategyConfig.hot_from_profile(load_profile(profile_path), args.hot_min_count)
    elif mode != StrategyMode.FULL:
        logger.warning("ホットセットの指定がありません。空のホットセットで開始します")
    return StrategyConfig(mode=mode, full_rules=rules, hot_rule_ids=hot)


def cmd_replay(args) -> int:
    log_path = _require_log(args.log)
    if args.passes < 1:
        raise ConfigError("--passes は1以上を指定してください")
    suffixes = _load_suffixes(args)
    config = _strategy_config(args)
    log = _load_log(log_path)

    strategy = Strategy(config, suffixes)
    reports = [
        replay_with(strategy, log, warmup=args.warmup, background=args.background)
        for _ in range(args.passes)
    ]
    _emit(render_replay_report(reports), args.report)

    last = reports[-1]
    if args.timing:
        ResultExporter.write_timing(args.timing, last)
    if args.promotions:
        ResultExporter.write_promotions(args.promotions, strategy.promotions)
    if args.hot_out:
        ResultExporter.write_hot_ids(args.hot_out, sorted(strategy.hot_ids))
    if args.profile_out:
        ResultExporter.write_profile(args.profile_out, last.rule_usage)
    if args.db:
        with MeasurementDatabase(args.db) as db:
            db.save_decisions(last.mode.value, last.decisions, suffixes)
    return 0


def cmd_profile(args) -> int:
    list_path = _require_file(args.list, "--list")
    if args.log is None and args.db is None:
        raise UsageError("--log か --db を指定してください")
    log_path = _require_log(args.log) if args.log else None
    db_path = _require_file(args.db, "--db") if args.db else None

    rules, _ = load_list(list_path)
    suffixes = _load_suffixes(args)
    daily_text = ""
    if log_path is not None:
        report = replay(_load_log(log_path), StrategyConfig(StrategyMode.FULL, rules), suffixes)
        profile = report.rule_usage
    else:
        with MeasurementDatabase(str(db_path)) as db:
            profile = db.usage_profile(args.mode, args.start_day, args.end_day)
            daily, mean = daily_usage(db, usage_summary(profile, rules).rule_count)
            if not daily.empty:
                daily_text = f"daily_used_fraction_mean={mean:.6f}\n"

    summary = usage_summary(profile, rules)
    _emit(render_usage_summary(summary) + daily_text, args.report)
    if args.out:
        ResultExporter.write_profile(args.out, profile)
    if args.cdf:
        ResultExporter.write_cdf(args.cdf, summary.cdf, "uses")
    if args.plot:
        plot_cdf(summary.cdf, args.plot, title="ルールごとの使用回数", xlabel="使用回数", log_x=True)
    return 0


def cmd_reduce(args) -> int:
    list_path = _require_file(args.list, "--list")
    profile_path = _require_file(args.profile, "--profile")
    if args.min_count < 1:
        raise ConfigError("--min-count は1以上を指定してください")

    rules, _ = load_list(list_path)
    reduced = reduce_list(rules, load_profile(profile_path), args.min_count)
    ResultExporter.write_rules(args.out, reduced)
    print(f"縮小リスト: {len(reduced):,}件 -> {args.out}")
    return 0


def cmd_snapshots(args) -> int:
    directory = _require_dir(args.dir, "--dir")
    series = load_snapshots(directory)
    diff = diff_snapshots(series)
    try:
        cdf = lifetime_cdf(diff.removed_lifetimes())
    except EmptyInput:
        logger.info("削除されたルールがないため、寿命の分布は出力しません")
        cdf = []

    _emit(render_snapshot_diff(diff, cdf), args.out)
    if args.cdf and cdf:
        ResultExporter.write_cdf(args.cdf, cdf, "lifetime_days")
    if args.plot:
        plot_dir = Path(args.plot)
        plot_dir.mkdir(parents=True, exist_ok=True)
        plot_evolution(diff, plot_dir / "evolution.png")
        plot_cdf(cdf, plot_dir / "lifetime_cdf.png", title="削除されたルールの寿命", xlabel="日数")
    return 0


def _read_samples(path: Path) -> List[float]:
    values = np.loadtxt(path, ndmin=1, comments="#")
    return [float(v) for v in values]


def cmd_ks(args) -> int:
    if args.snapshots:
        directory = _require_dir(args.snapshots, "--snapshots")
        profile_path = _require_file(args.profile, "--profile")
        series = load_snapshots(directory)
        profile = load_profile(profile_path)
        reference = date.fromisoformat(args.reference_date) if args.reference_date else series.last.day
        text = render_age_usage(age_usage_analysis(series, profile, reference))
        if args.window_start:
            table = new_vs_old_usage(series, profile, date.fromisoformat(args.window_start))
            text += "\n【新旧ルールの使用状況】\n" + table.to_string(index=False) + "\n"
        _emit(text, args.report)
        return 0

    sample_a = _read_samples(_require_file(args.a, "--a"))
    sample_b = _read_samples(_require_file(args.b, "--b"))
    _emit(render_ks(ks_two_sample(sample_a, sample_b)), args.report)
    return 0


def cmd_evasions(args) -> int:
    snapshot_dir = _require_dir(args.snapshots, "--snapshots")
    log_dir = _require_dir(args.logs, "--logs")
    suffixes = _load_suffixes(args)
    series = load_snapshots(snapshot_dir)
    logs = load_log_directory(log_dir)

    candidates = detect_evasions(series, logs, suffixes)
    text = render_evasions(candidates)
    if args.timeline:
        timeline = block_timeline(series, logs, args.timeline, suffixes)
        text += f"\n【{args.timeline} の日別判定】\n" + timeline.to_string(index=False) + "\n"
    _emit(text, args.report)
    return 0


def cmd_export_ios(args) -> int:
    list_path = _require_file(args.list, "--list")
    if args.max < 1:
        raise ConfigError("--max は1以上を指定してください")
    rules, _ = load_list(list_path)
    document, report = export_ios(rules, max_rules=args.max, truncate=args.truncate)

    verify = None
    if args.verify:
        rng = np.random.default_rng(args.seed)
        corpus = [random_request(rng) for _ in range(args.verify)]
        verify = verify_export(rules, document, corpus, _load_suffixes(args))

    ResultExporter.write_ios(args.out, document)
    if args.report:
        ResultExporter.write_ios_report(args.report, report)
    print(render_export_report(report, verify), end="")
    if verify is not None and verify.mismatches:
        logger.error("変換結果がエンジンの判定と %d 件食い違いました", len(verify.mismatches))
        return 1
    return 0


def cmd_bench(args) -> int:
    result = run_bench(
        _load_suffixes(args), args.seed, args.rules, args.requests, linear_sample=args.linear_sample
    )
    _emit(render_bench(result), args.report)
    return 0 if result.disagreements == 0 else 1


def cmd_generate(args) -> int:
    out = Path(args.out)
    corpus = generate_corpus(args.seed, args.rules, args.days, args.requests)
    ResultExporter.write_text(out / "easylist.txt", "\n".join(corpus.list_lines) + "\n")
    for day, lines in corpus.snapshots:
        ResultExporter.write_text(out / "snapshots" / f"{day.isoformat()}.txt", "\n".join(lines) + "\n")
    for day, log in corpus.logs.items():
        ResultExporter.write_text(out / "logs" / f"{day.isoformat()}.log", format_log(log))
    print(f"サンプルデータを生成しました: {out}")
    return 0


# =============================================================================
# 引数の定義
# =============================================================================

def _common_options(suppress: bool) -> argparse.ArgumentParser:
    """
    全サブコマンドで使える共通オプション

    Args:
        suppress: True なら既定値を置かない（サブコマンド側。指定したときだけ上書きする）
    """
    common = argparse.ArgumentParser(add_help=False)
    unset = argparse.SUPPRESS
    common.add_argument(
        "--suffixes",
        default=unset if suppress else None,
        help="パブリックサフィックスのファイル（省略時は内蔵テーブル）",
    )
    common.add_argument("--seed", type=int, default=unset if suppress else DEFAULT_SEED, help="乱数シード")
    verbosity = common.add_mutually_exclusive_group()
    for flag, text in (("--quiet", "警告以上のみ表示"), ("--verbose", "デバッグ情報を表示")):
        verbosity.add_argument(flag, action="store_true", default=unset if suppress else False, help=text)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adblock-lab",
        description="フィルタリスト（EasyList形式）の計測・分析ツール",
        parents=[_common_options(suppress=False)],
    )
    common = _common_options(suppress=True)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", parents=[common], help="リストの種別ごとの件数")
    p.add_argument("list")
    p.add_argument("--report")
    p.add_argument("--plot", help="種別の構成比のグラフ（PNG）")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("replay", parents=[common], help="ログをリプレイして判定")
    p.add_argument("--log", required=True, help="ログファイル、または日付ごとのログのディレクトリ")
    p.add_argument("--list")
    p.add_argument("--mode", choices=["full", "reduced", "hybrid"], default="full")
    p.add_argument("--hot", help="ホットセットのIDファイル")
    p.add_argument("--profile", help="ホットセットを作るプロファイル")
    p.add_argument("--hot-min-count", type=int, default=1)
    p.add_argument("--manifest", help="戦略のマニフェスト（JSON）")
    p.add_argument("--passes", type=int, default=1, help="同じ状態でのリプレイ回数")
    p.add_argument("--warmup", type=int, default=REPLAY_WARMUP)
    p.add_argument("--background", action="store_true", help="非同期照合を別スレッドで行う")
    p.add_argument("--report")
    p.add_argument("--timing", help="判定時間の出力先")
    p.add_argument("--promotions", help="昇格ログの出力先")
    p.add_argument("--hot-out", help="リプレイ後のホットセットの出力先")
    p.add_argument("--profile-out", help="使用回数プロファイルの出力先")
    p.add_argument("--db", help="判定結果を保存するSQLite")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("profile", parents=[common], help="使用回数プロファイルを作成")
    p.add_argument("--list", required=True)
    p.add_argument("--log")
    p.add_argument("--db")
    p.add_argument("--mode", default="full", help="--db のときの戦略名")
    p.add_argument("--start-day", type=int)
    p.add_argument("--end-day", type=int)
    p.add_argument("--out")
    p.add_argument("--cdf")
    p.add_argument("--plot")
    p.add_argument("--report")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("reduce", parents=[common], help="使われたルールだけのリストを作成")
    p.add_argument("--list", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("snapshots", parents=[common], help="スナップショット列の差分と寿命")
    p.add_argument("--dir", required=True)
    p.add_argument("--out")
    p.add_argument("--cdf")
    p.add_argument("--plot", help="グラフの出力ディレクトリ")
    p.set_defaults(func=cmd_snapshots)

    p = sub.add_parser("ks", parents=[common], help="2標本KS検定（またはルールの古さ別の検定）")
    p.add_argument("--a", help="標本Aのファイル（1行1値）")
    p.add_argument("--b", help="標本Bのファイル（1行1値）")
    p.add_argument("--snapshots", help="スナップショットのディレクトリ")
    p.add_argument("--profile")
    p.add_argument("--reference-date")
    p.add_argument("--window-start")
    p.add_argument("--report")
    p.set_defaults(func=cmd_ks)

    p = sub.add_parser("evasions", parents=[common], help="広告配信側の回避を検出")
    p.add_argument("--snapshots", required=True)
    p.add_argument("--logs", required=True)
    p.add_argument("--timeline", help="日別の判定を表示するルール")
    p.add_argument("--report")
    p.set_defaults(func=cmd_evasions)

    p = sub.add_parser("export-ios", parents=[common], help="iOS のコンテンツブロッカー形式に変換")
    p.add_argument("--list", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max", type=int, default=DEFAULT_MAX_RULES)
    p.add_argument("--truncate", action="store_true")
    p.add_argument("--report")
    p.add_argument("--verify", type=int, default=0, help="検証に使うランダムURLの数")
    p.set_defaults(func=cmd_export_ios)

    p = sub.add_parser("bench", parents=[common], help="全件走査とインデックスの比較")
    p.add_argument("--rules", type=int, default=5_000)
    p.add_argument("--requests", type=int, default=2_000)
    p.add_argument("--linear-sample", type=int, help="全件走査を計測する件数（省略時は全件）")
    p.add_argument("--report")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", parents=[common], help="サンプルデータを生成")
    p.add_argument("--out", required=True)
    p.add_argument("--rules", type=int, default=2_000)
    p.add_argument("--days", type=int, default=30)
    p.add_argument("--requests", type=int, default=500, help="1日あたりのリクエスト数")
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    コマンドを実行

    Returns:
        終了コード（0: 成功、1: データエラー、2: 使い方の誤り）
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.INFO
    if args.quiet:
        level = logging.WARNING
    elif args.verbose:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)

    try:
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))
    except (AdblockLabError, OSError, ValueError) as e:
        print(f"エラー: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
