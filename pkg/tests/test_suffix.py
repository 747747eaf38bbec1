"""
公開サフィックステーブルのテスト
"""

import pytest

from app.engine.suffix import SuffixTable, etld_plus_one


@pytest.mark.parametrize("host, expected", [
    ("c.betrad.com", "betrad.com"),
    ("a.b.co.uk", "b.co.uk"),
    ("www.bbc.co.uk", "bbc.co.uk"),
    ("localhost", "localhost"),
    ("example.com", "example.com"),
    ("WWW.Example.COM.", "example.com"),
    ("user.github.io", "user.github.io"),
    ("co.uk", "co.uk"),
    ("a.b.unknowntld", "b.unknowntld"),
])
def test_etld_plus_one(host, expected, suffixes):
    assert etld_plus_one(host, suffixes) == expected


class TestSuffixTable:
    def test_wildcard_and_exception(self):
        table = SuffixTable(["ck", "*.ck", "!www.ck"])
        assert etld_plus_one("a.b.foo.ck", table) == "b.foo.ck"
        assert etld_plus_one("www.ck", table) == "www.ck"
        assert etld_plus_one("x.www.ck", table) == "www.ck"

    def test_empty_table_is_rejected(self):
        with pytest.raises(ValueError):
            SuffixTable(["", "  "])

    def test_from_file(self, tmp_path):
        path = tmp_path / "suffixes.dat"
        path.write_text("// comment\n# also comment\ncom\n\nco.uk\n", encoding="utf-8")
        table = SuffixTable.from_file(path)
        assert len(table) == 2
        assert "co.uk" in table
        assert etld_plus_one("a.b.co.uk", table) == "b.co.uk"

    def test_exceptions_alone_are_rejected(self):
        with pytest.raises(ValueError):
            SuffixTable(["!www.ck"])

    def test_public_suffix_list_format(self, tmp_path):
        path = tmp_path / "public_suffix_list.dat"
        path.write_text(
            "// ===BEGIN ICANN DOMAINS===\njp\n*.kawasaki.jp\n!city.kawasaki.jp\nuk\nco.uk\n",
            encoding="utf-8",
        )
        table = SuffixTable.from_file(path)
        assert etld_plus_one("www.city.kawasaki.jp", table) == "city.kawasaki.jp"
        assert etld_plus_one("a.shop.kawasaki.jp", table) == "a.shop.kawasaki.jp"
        assert etld_plus_one("x.a.shop.kawasaki.jp", table) == "a.shop.kawasaki.jp"
        assert etld_plus_one("news.bbc.co.uk", table) == "bbc.co.uk"
