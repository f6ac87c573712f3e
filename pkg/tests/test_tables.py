import math

import numpy as np
import pytest

from fbm_lab.tables import Table, find_tables, read_table, write_table


def _table():
    t = Table("demo", ("a", "b", "c", "d"))
    t.add(a=1, b=0.1, c=True, d=None)
    t.add(a=np.int64(2), b=np.float64(1 / 3), c=False, d="x")
    t.add(a=3, b=float("nan"), c=True, d=2.5)
    return t


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip(tmp_path, fmt):
    path = write_table(_table(), tmp_path, fmt)
    back = read_table(path)
    assert back.columns == ("a", "b", "c", "d")
    assert back.column("a") == [1, 2, 3]
    assert back.rows[1]["b"] == 1 / 3
    assert math.isnan(back.rows[2]["b"])
    assert back.column("c") == [True, False, True]


def test_csv_text_is_plain(tmp_path):
    text = write_table(_table(), tmp_path).read_text()
    assert "np." not in text
    assert text.splitlines()[2] == "2,0.3333333333333333,false,x"


def test_rewrite_is_byte_identical(tmp_path):
    a = write_table(_table(), tmp_path / "one").read_bytes()
    b = write_table(_table(), tmp_path / "two").read_bytes()
    assert a == b


def test_row_validation():
    t = Table("x", ("a",))
    with pytest.raises(KeyError):
        t.add(b=1)
    with pytest.raises(KeyError):
        t.extend(Table("y", ("b",)))
    with pytest.raises(ValueError):
        write_table(t, ".", "xlsx")


def test_find_tables(tmp_path):
    write_table(_table(), tmp_path)
    (tmp_path / "manifest.json").write_text("{}")
    assert set(find_tables(tmp_path)) == {"demo"}
    assert find_tables(tmp_path, names=["other"]) == {}
