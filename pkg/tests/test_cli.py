"""
コマンドラインのテスト
"""

import json

import numpy as np
import pytest

from app.main import main
from app.models.usage import UsageProfile
from app.utils.exporter import ResultExporter
from app.utils.filter_parser import parse_rule
from app.utils.synthetic import format_log, generate_list, generate_log


def _key_values(text):
    values = {}
    for line in text.splitlines():
        key, sep, value = line.partition("=")
        if sep and " " not in key:
            values[key] = value
    return values


@pytest.fixture
def workspace(tmp_path):
    """合成リストとログを書き出したディレクトリ"""
    rng = np.random.default_rng(5)
    lines = generate_list(rng, 400)
    rules = [parse_rule(line) for line in lines]
    log = generate_log(rng, rules, 800, blockable_share=0.4, days=2)
    (tmp_path / "list.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (tmp_path / "requests.log").write_text(format_log(log), encoding="utf-8")
    return tmp_path


class TestInspect:
    def test_shares(self, tmp_path, capsys):
        path = tmp_path / "list.txt"
        path.write_text("! c\n||a.com^\n||b.com^\n@@||a.com/ok^\n##.ad\n", encoding="utf-8")
        assert main(["--quiet", "inspect", str(path)]) == 0
        values = _key_values(capsys.readouterr().out)
        assert values["rules"] == "4"
        assert values["network_share"] == "0.500000"
        assert values["element_share"] == "0.250000"

    def test_missing_file(self, tmp_path, capsys):
        assert main(["--quiet", "inspect", str(tmp_path / "nope.txt")]) == 1
        assert "nope.txt" in capsys.readouterr().err


class TestUsageErrors:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code == 2

    def test_missing_required_option(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["reduce", "--list", "a.txt"])
        assert excinfo.value.code == 2

    def test_bad_mode(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["replay", "--log", "x.log", "--mode", "sometimes"])
        assert excinfo.value.code == 2

    def test_replay_without_list(self, workspace):
        with pytest.raises(SystemExit) as excinfo:
            main(["--quiet", "replay", "--log", str(workspace / "requests.log")])
        assert excinfo.value.code == 2

    def test_profile_without_log_or_db(self, workspace):
        with pytest.raises(SystemExit) as excinfo:
            main(["--quiet", "profile", "--list", str(workspace / "list.txt")])
        assert excinfo.value.code == 2

    def test_ks_without_samples(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["ks", "--quiet"])
        assert excinfo.value.code == 2


class TestReduce:
    def test_empty_profile(self, workspace, capsys):
        profile_path = workspace / "profile.csv"
        ResultExporter.write_profile(profile_path, UsageProfile())
        out = workspace / "reduced.txt"
        code = main([
            "--quiet", "reduce", "--list", str(workspace / "list.txt"),
            "--profile", str(profile_path), "--out", str(out),
        ])
        assert code == 0
        assert out.read_text(encoding="utf-8") == ""

    def test_bad_min_count(self, workspace):
        profile_path = workspace / "profile.csv"
        ResultExporter.write_profile(profile_path, UsageProfile())
        code = main([
            "--quiet", "reduce", "--list", str(workspace / "list.txt"),
            "--profile", str(profile_path), "--out", str(workspace / "r.txt"), "--min-count", "0",
        ])
        assert code == 1


class TestReplay:
    def test_profile_then_reduce(self, workspace):
        profile_path = workspace / "profile.csv"
        assert main([
            "--quiet", "profile", "--list", str(workspace / "list.txt"),
            "--log", str(workspace / "requests.log"), "--out", str(profile_path),
        ]) == 0
        out = workspace / "reduced.txt"
        assert main([
            "--quiet", "reduce", "--list", str(workspace / "list.txt"),
            "--profile", str(profile_path), "--out", str(out),
        ]) == 0
        assert out.read_text(encoding="utf-8").strip() != ""

    def test_hybrid_second_run_has_no_late_blocks(self, workspace, capsys):
        hot = workspace / "hot.txt"
        assert main([
            "--quiet", "replay", "--log", str(workspace / "requests.log"),
            "--list", str(workspace / "list.txt"), "--mode", "hybrid", "--hot-out", str(hot),
        ]) == 0
        first = _key_values(capsys.readouterr().out)
        assert int(first["late_blocks"]) > 0

        assert main([
            "--quiet", "replay", "--log", str(workspace / "requests.log"),
            "--list", str(workspace / "list.txt"), "--mode", "hybrid", "--hot", str(hot),
        ]) == 0
        second = _key_values(capsys.readouterr().out)
        assert second["late_blocks"] == "0"
        assert second["promotions"] == "0"

    def test_report_is_deterministic(self, workspace):
        reports = []
        for name in ("a.txt", "b.txt"):
            report = workspace / name
            assert main([
                "--quiet", "replay", "--log", str(workspace / "requests.log"),
                "--list", str(workspace / "list.txt"), "--report", str(report),
                "--timing", str(workspace / f"timing-{name}"),
            ]) == 0
            reports.append(report.read_bytes())
        assert reports[0] == reports[1]

    def test_missing_log(self, workspace, capsys):
        code = main([
            "--quiet", "replay", "--log", str(workspace / "missing.log"),
            "--list", str(workspace / "list.txt"),
        ])
        assert code == 1
        assert "missing.log" in capsys.readouterr().err

    def test_unknown_hot_rule(self, workspace):
        hot = workspace / "hot.txt"
        hot.write_text("||not-in-list.example^\n", encoding="utf-8")
        code = main([
            "--quiet", "replay", "--log", str(workspace / "requests.log"),
            "--list", str(workspace / "list.txt"), "--mode", "reduced", "--hot", str(hot),
        ])
        assert code == 1

    def test_common_options_after_subcommand(self, workspace):
        suffixes = workspace / "suffixes.dat"
        suffixes.write_text("// test\ncom\nnet\nio\nco.uk\njp\nde\n", encoding="utf-8")
        report = workspace / "report.txt"
        code = main([
            "replay", "--log", str(workspace / "requests.log"), "--list", str(workspace / "list.txt"),
            "--mode", "full", "--suffixes", str(suffixes), "--report", str(report), "--quiet", "--seed", "7",
        ])
        assert code == 0
        assert _key_values(report.read_text(encoding="utf-8"))["mode"] == "full"

    def test_missing_suffix_file_after_subcommand(self, workspace, capsys):
        code = main([
            "replay", "--log", str(workspace / "requests.log"), "--list", str(workspace / "list.txt"),
            "--suffixes", str(workspace / "nope.dat"),
        ])
        assert code == 1
        assert "nope.dat" in capsys.readouterr().err


class TestExportIos:
    def test_export_and_verify(self, workspace):
        out = workspace / "blocker.json"
        report = workspace / "export.txt"
        code = main([
            "--quiet", "export-ios", "--list", str(workspace / "list.txt"),
            "--out", str(out), "--report", str(report), "--verify", "200",
        ])
        assert code == 0
        document = json.loads(out.read_text(encoding="utf-8"))
        assert _key_values(report.read_text(encoding="utf-8"))["exported_count"] == str(len(document))

    def test_limit_exceeded(self, workspace, capsys):
        code = main([
            "--quiet", "export-ios", "--list", str(workspace / "list.txt"),
            "--out", str(workspace / "blocker.json"), "--max", "5",
        ])
        assert code == 1
        assert not (workspace / "blocker.json").exists()


class TestSnapshotsAndKs:
    def test_snapshots(self, tmp_path, capsys):
        snapshots = tmp_path / "snapshots"
        snapshots.mkdir()
        (snapshots / "2019-01-01.txt").write_text("||a.com^\n||b.com^\n", encoding="utf-8")
        (snapshots / "2019-01-02.txt").write_text("||a.com^\n||b.com^\n||c.com^\n", encoding="utf-8")
        (snapshots / "2019-01-03.txt").write_text("||a.com^\n||c.com^\n", encoding="utf-8")
        cdf = tmp_path / "lifetimes.tsv"
        assert main(["--quiet", "snapshots", "--dir", str(snapshots), "--cdf", str(cdf)]) == 0
        assert cdf.read_text(encoding="utf-8") == "lifetime_days\tcumulative_fraction\n2\t1.000000\n"

    def test_ks(self, tmp_path, capsys):
        (tmp_path / "a.txt").write_text("0\n0\n0\n0\n", encoding="utf-8")
        (tmp_path / "b.txt").write_text("1\n1\n1\n1\n", encoding="utf-8")
        assert main(["--quiet", "ks", "--a", str(tmp_path / "a.txt"), "--b", str(tmp_path / "b.txt")]) == 0
        assert "1.000000" in capsys.readouterr().out

