"""
サンプルデータ生成 - フィルタリスト・リクエストログ・スナップショット

すべて numpy の乱数生成器にシードを与えて生成する（同じシードなら同じ結果）。
"""

import logging
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config import DEFAULT_SEED, LOG_HEADER
from app.models.filter_rule import Anchor, FilterRule, PartKind, Party, RuleKind
from app.models.request import LogRecord, Request, RequestLog
from app.utils.filter_parser import parse_rule

logger = logging.getLogger(__name__)

AD_DOMAINS = [
    "adnet", "trackly", "pixelhub", "bannerco", "metricsio", "clickbay", "promoflow",
    "adserve", "beaconly", "sponsorix", "retarget", "popcash", "admatic", "statcount",
]
SITE_DOMAINS = [
    "newsdaily", "shopzone", "videoplay", "socialbuzz", "techworld", "recipebox",
    "sportsnow", "travelhub", "weatherly", "moviebase", "financepro", "gamezone",
]
CDN_HOSTS = ["cdn.fastassets.net", "static.cloudimg.com", "img.mediastore.io"]
TLDS = ["com", "net", "io", "co.uk", "jp", "de"]
WORDS = [
    "ads", "banner", "track", "pixel", "beacon", "promo", "sponsor", "widget", "count",
    "analytics", "popup", "adframe", "adunit", "tag", "collect", "impression", "sync",
]
BENIGN_WORDS = ["static", "assets", "img", "js", "css", "fonts", "media", "article", "news"]
SIZES = [(160, 600), (300, 250), (728, 90), (320, 50), (970, 250)]
TYPES = ["script", "image", "stylesheet", "subdocument", "xmlhttprequest", "font", "media", "ping"]
TYPE_OPTIONS = ["script", "image", "stylesheet", "subdocument", "xmlhttprequest", "object"]

# 1日の開始時刻（UTC）
EPOCH = datetime(2019, 1, 1, tzinfo=timezone.utc)


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


def _domain(rng: np.random.Generator, names: Sequence[str]) -> str:
    return f"{_pick(rng, names)}.{_pick(rng, TLDS)}"


def random_network_rule(rng: np.random.Generator) -> str:
    """EasyList 風のネットワークルールを1行生成"""
    kind = int(rng.integers(10))
    word = _pick(rng, WORDS)
    if kind == 0:
        return f"||{_domain(rng, AD_DOMAINS)}^"
    if kind == 1:
        return f"||{_domain(rng, AD_DOMAINS)}^$third-party"
    if kind == 2:
        return f"/{word}/{_pick(rng, WORDS)}_"
    if kind == 3:
        width, height = _pick(rng, SIZES)
        return f"_{width}x{height}_"
    if kind == 4:
        types = sorted({_pick(rng, TYPE_OPTIONS) for _ in range(int(rng.integers(1, 4)))})
        return f"||{_domain(rng, AD_DOMAINS)}/{word}/$" + ",".join(types)
    if kind == 5:
        return f"&{word}{int(rng.integers(100))}="
    if kind == 6:
        return f".{_pick(rng, TLDS)}/{word}/$image,object,subdocument"
    if kind == 7:
        return f"|https://{_domain(rng, AD_DOMAINS)}/{word}"
    if kind == 8:
        site = _domain(rng, SITE_DOMAINS)
        return f"/{word}.js$domain={site}"
    return f"/{word}/*/{_pick(rng, WORDS)}{int(rng.integers(1000))}."


def random_exception_rule(rng: np.random.Generator) -> str:
    kind = int(rng.integers(3))
    if kind == 0:
        return f"@@||{_domain(rng, AD_DOMAINS)}/{_pick(rng, WORDS)}/$script"
    if kind == 1:
        return f"@@||{_domain(rng, AD_DOMAINS)}^$domain={_domain(rng, SITE_DOMAINS)}"
    return f"@@/{_pick(rng, WORDS)}/{_pick(rng, WORDS)}_"


def random_element_rule(rng: np.random.Generator) -> str:
    kind = int(rng.integers(3))
    if kind == 0:
        return f"##.ad-{_pick(rng, WORDS)}{int(rng.integers(1000))}"
    if kind == 1:
        return f"{_domain(rng, SITE_DOMAINS)}##div.{_pick(rng, WORDS)}-{int(rng.integers(1000))}"
    return f"{_domain(rng, SITE_DOMAINS)}#@#.{_pick(rng, WORDS)}{int(rng.integers(100))}"


def generate_list(
    rng: np.random.Generator,
    rule_count: int,
    exception_share: float = 0.09,
    element_share: float = 0.44
) -> List[str]:
    """
    フィルタリストの行を生成（重複なし、先頭にヘッダーとコメント）

    Args:
        rng: 乱数生成器
        rule_count: コメントを除いた行数
        exception_share: 例外ルールの割合
        element_share: 要素ルールの割合

    Returns:
        行のリスト
    """
    lines = ["[Adblock Plus 2.0]", "! Title: Synthetic EasyList"]
    seen = set()
    attempts = 0
    while len(seen) < rule_count and attempts < rule_count * 50:
        attempts += 1
        roll = rng.random()
        if roll < element_share:
            line = random_element_rule(rng)
        elif roll < element_share + exception_share:
            line = random_exception_rule(rng)
        else:
            line = random_network_rule(rng)
        if line not in seen:
            seen.add(line)
            lines.append(line)
    return lines


def url_for_rule(rng: np.random.Generator, rule: FilterRule) -> Tuple[str, str, str]:
    """
    ルールに一致しやすいリクエストを作る

    Returns:
        (URL, ページURL, リソース種別)
    """
    pattern = rule.pattern
    pieces = []
    for i, part in enumerate(pattern.parts):
        if part.kind == PartKind.LITERAL:
            pieces.append(part.text)
        elif part.kind == PartKind.WILDCARD:
            pieces.append(f"{_pick(rng, BENIGN_WORDS)}{int(rng.integers(10))}/")
        else:
            pieces.append("/" if i < len(pattern.parts) - 1 else "/x.js")
    body = "".join(pieces)

    if pattern.anchor == Anchor.DOMAIN_BOUNDARY:
        prefix = "https://" + ("cdn." if rng.random() < 0.5 else "")
        url = prefix + body
        if "/" not in body:
            url += "/"
    elif pattern.anchor == Anchor.START_OF_URL:
        url = body
    elif body.startswith("/") or body.startswith("."):
        url = f"https://{_pick(rng, AD_DOMAINS)}" + ("" if body.startswith(".") else f".{_pick(rng, TLDS)}") + body
    else:
        url = f"https://{_domain(rng, AD_DOMAINS)}/p?id=1" + body
    if not pattern.end_anchored and rng.random() < 0.5:
        url += f"?r={int(rng.integers(100000))}"

    options = rule.options
    if options.include_types:
        resource_type = sorted(options.include_types)[int(rng.integers(len(options.include_types)))]
    else:
        allowed = [t for t in TYPES if t not in options.exclude_types]
        resource_type = _pick(rng, allowed or TYPES)

    if options.include_domains:
        page_host = "www." + sorted(options.include_domains)[0]
    elif options.party == Party.FIRST_ONLY:
        page_host = url.split("://", 1)[-1].split("/", 1)[0]
    else:
        page_host = "www." + _domain(rng, SITE_DOMAINS)
    page_url = f"https://{page_host}/article/{int(rng.integers(1000))}"
    return url, page_url, resource_type


def benign_request(rng: np.random.Generator, page_url: str) -> Tuple[str, str]:
    host = _pick(rng, CDN_HOSTS) if rng.random() < 0.6 else page_url.split("/")[2]
    url = f"https://{host}/{_pick(rng, BENIGN_WORDS)}/{_pick(rng, BENIGN_WORDS)}{int(rng.integers(500))}.js"
    return url, _pick(rng, TYPES)


def _timestamp(day: int, second: int) -> float:
    return (EPOCH + timedelta(days=day, seconds=second)).timestamp()


def generate_log(
    rng: np.random.Generator,
    rules: Sequence[FilterRule],
    request_count: int,
    blockable_share: float = 0.3,
    days: int = 1,
    first_day: int = 0
) -> RequestLog:
    """
    リクエストログを生成

    ルールの人気は順位に反比例する（一部のルールに一致が集中する）。

    Args:
        rng: 乱数生成器
        rules: 一致させる候補のルール（NETWORK / EXCEPTION 以外は無視）
        request_count: レコード数
        blockable_share: ルールに一致させるリクエストの割合
        days: 日数（レコードは日ごとに均等に分ける）
        first_day: 最初の日インデックス

    Returns:
        RequestLog
    """
    targets = [rule for rule in rules if rule.is_matchable]
    weights = None
    if targets:
        order = rng.permutation(len(targets))
        weights = 1.0 / (np.argsort(order) + 1.0)
        weights /= weights.sum()

    records = []
    per_day = max(1, request_count // max(1, days))
    for i in range(request_count):
        day = first_day + min(days - 1, i // per_day)
        timestamp = _timestamp(day, i % per_day)
        page_url = f"https://www.{_domain(rng, SITE_DOMAINS)}/article/{int(rng.integers(1000))}"
        roll = rng.random()
        if roll < 0.05:
            request = Request(page_url, page_url, "main_document", timestamp)
        elif targets and roll < 0.05 + blockable_share:
            rule = targets[int(rng.choice(len(targets), p=weights))]
            url, page_url, resource_type = url_for_rule(rng, rule)
            request = Request(url, page_url, resource_type, timestamp)
        else:
            url, resource_type = benign_request(rng, page_url)
            request = Request(url, page_url, resource_type, timestamp)
        records.append(LogRecord(request=request, page_url=page_url, day=day))
    return RequestLog(records)


def format_log(log: RequestLog) -> str:
    """ログファイルの形式に変換"""
    lines = [LOG_HEADER]
    for record in log:
        request = record.request
        timestamp = datetime.fromtimestamp(request.timestamp, tz=timezone.utc).isoformat()
        fields = [
            timestamp, record.page_url, request.initiator_url, request.url, request.resource_type,
            request.content_hash or "",
            "" if request.content_size is None else str(request.content_size),
        ]
        while fields and fields[-1] == "" and len(fields) > 5:
            fields.pop()
        lines.append("|".join(fields))
    return "\n".join(lines) + "\n"


@dataclass
class SyntheticCorpus:
    """生成したリスト・スナップショット・日別ログ一式"""

    list_lines: List[str]
    snapshots: List[Tuple[date, List[str]]]
    logs: Dict[date, RequestLog] = field(default_factory=dict)


def generate_snapshots(
    rng: np.random.Generator,
    base_lines: List[str],
    start: date,
    days: int,
    add_per_day: int = 3,
    remove_rate: float = 0.01
) -> List[Tuple[date, List[str]]]:
    """
    日次スナップショットを生成（毎日いくつか追加し、一定割合を削除）

    Returns:
        [(日付, 行のリスト)]
    """
    header = [line for line in base_lines if line.startswith("[") or line.startswith("!")]
    current = [line for line in base_lines if line not in header]
    snapshots = [(start, header + list(current))]
    existing = set(current)
    for offset in range(1, days):
        keep = [line for line in current if rng.random() >= remove_rate]
        added = []
        while len(added) < add_per_day:
            line = random_network_rule(rng) if rng.random() < 0.7 else random_element_rule(rng)
            if line not in existing:
                existing.add(line)
                added.append(line)
        current = keep + added
        snapshots.append((start + timedelta(days=offset), header + list(current)))
    return snapshots


def plant_evasion(
    logs: Dict[date, RequestLog],
    snapshots: List[Tuple[date, List[str]]],
    rule_line: str,
    old_url: str,
    new_url: str,
    content_hash: str = "e3b0c44298fc1c149afbf4c8996fb924",
    content_size: int = 120_000
):
    """
    ルール追加を境にURLが変わるリソースをログに埋め込む

    rule_line をスナップショット列の中ほどで追加し、それ以前は old_url、
    追加日の翌日に old_url（ブロックされる）、以降は new_url から配信する。
    """
    middle = len(snapshots) // 2
    added_day = snapshots[middle][0]
    for i in range(middle, len(snapshots)):
        _, lines = snapshots[i]
        if rule_line not in lines:
            lines.append(rule_line)

    days = sorted(logs)
    base = days[0]
    for day in days:
        if day == added_day:
            continue
        url = old_url if day <= added_day + timedelta(days=1) else new_url
        page_url = "https://www.example.com/"
        request = Request(
            url, page_url, "script", _timestamp((day - base).days, 86_000),
            content_hash=content_hash, content_size=content_size,
        )
        logs[day].records.append(LogRecord(request=request, page_url=page_url, day=(day - base).days))


def generate_corpus(
    seed: int = DEFAULT_SEED,
    rule_count: int = 2_000,
    days: int = 30,
    requests_per_day: int = 500,
    start: date = date(2019, 1, 1)
) -> SyntheticCorpus:
    """
    リスト・スナップショット・日別ログを一式生成

    Args:
        seed: 乱数シード
        rule_count: 最終リストの行数（コメント除く）の目安
        days: 日数（スナップショットとログ）
        requests_per_day: 1日あたりのリクエスト数
        start: 開始日

    Returns:
        SyntheticCorpus
    """
    rng = np.random.default_rng(seed)
    base_lines = generate_list(rng, rule_count)
    snapshots = generate_snapshots(rng, base_lines, start, days)

    logs: Dict[date, RequestLog] = {}
    for offset, (day, lines) in enumerate(snapshots):
        rules = [parse_rule(line) for line in lines]
        logs[day] = generate_log(rng, rules, requests_per_day, first_day=offset)

    plant_evasion(
        logs, snapshots, "||betrad.com^$third-party",
        old_url="https://c.betrad.com/geo/ba.js?r170201",
        new_url="https://c.evidon.com/geo/ba.js?r170201",
    )
    final_lines = snapshots[-1][1]
    logger.info(
        "サンプル生成: ルール %d 行 / スナップショット %d 件 / リクエスト %d 件",
        len(final_lines), len(snapshots), sum(len(log) for log in logs.values())
    )
    return SyntheticCorpus(list_lines=final_lines, snapshots=snapshots, logs=logs)


def random_url(rng: np.random.Generator) -> str:
    """照合テスト用のランダムなURL"""
    scheme = _pick(rng, ["https", "http", "wss"])
    host = (_pick(rng, ["", "www.", "cdn.", "c."]) + _domain(rng, AD_DOMAINS + SITE_DOMAINS))
    path = "/".join(_pick(rng, WORDS + BENIGN_WORDS) for _ in range(int(rng.integers(0, 4))))
    url = f"{scheme}://{host}/{path}"
    extra = int(rng.integers(5))
    if extra == 0:
        width, height = _pick(rng, SIZES)
        url += f"/x_{width}x{height}_y.png"
    elif extra == 1:
        url += f"?{_pick(rng, WORDS)}{int(rng.integers(100))}=1&{_pick(rng, WORDS)}=2"
    elif extra == 2:
        url += ".js"
    return url


def random_request(rng: np.random.Generator) -> Request:
    url = random_url(rng)
    page = f"https://www.{_domain(rng, SITE_DOMAINS + AD_DOMAINS)}/"
    return Request(url, page, _pick(rng, TYPES + ["other", "websocket"]))


def random_rules(rng: np.random.Generator, count: int) -> List[FilterRule]:
    """照合テスト用のランダムなルール（ネットワークと例外）"""
    rules = []
    for _ in range(count):
        line = random_exception_rule(rng) if rng.random() < 0.15 else random_network_rule(rng)
        rules.append(parse_rule(line))
    return rules
