"""
テスト共通設定
"""

import sys
from pathlib import Path

import pytest

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

from app.engine.suffix import SuffixTable
from app.models.request import Request
from app.utils.filter_parser import parse_list, parse_rule


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="時間のかかるテストも実行")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 時間のかかるテスト（--runslow で実行）")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="--runslow を指定すると実行")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def suffixes() -> SuffixTable:
    return SuffixTable.builtin()


@pytest.fixture
def make_request():
    """Request を作る（initiator を省略するとページURLと同じ）"""

    def _make(url, initiator="https://www.example.com/", resource_type="script", **kwargs):
        return Request(url=url, initiator_url=initiator, resource_type=resource_type, **kwargs)

    return _make


@pytest.fixture
def rule():
    """1行からルールを作る"""
    return parse_rule


SAMPLE_LIST = """[Adblock Plus 2.0]
! Title: sample
||betrad.com^$third-party
/images/ad/*
_160x600_
||adnet.com^
@@||adnet.com/allowed/$script
##.ad-banner
example.com##div.sponsor
"""


@pytest.fixture
def sample_rules():
    rules, _ = parse_list(SAMPLE_LIST)
    return rules
