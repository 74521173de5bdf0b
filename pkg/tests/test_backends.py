from typing import ClassVar, Dict, List

import pytest

from multipitch.backends import CsvDB, ExcelDB
from multipitch.exceptions import NotFoundError, ValidationError
from multipitch.interfaces import TableModel


class Row(TableModel):
    table_name: ClassVar[str] = "Rows"
    list_fields: ClassVar = ("tags",)

    name: str
    value: int
    tags: List[str] = []

    @classmethod
    def get_field_map(cls) -> Dict[str, str]:
        return {"value": "Value"}


ROWS = [Row(name="a", value=1, tags=["x", "y"]), Row(name="b", value=2)]


def test_csv_round_trip_with_field_map_and_lists(tmp_path):
    path = tmp_path / "rows.csv"
    db = CsvDB(path)
    db.insert_many(ROWS)

    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "name;Value;tags"
    assert CsvDB(path).get_all(Row) == ROWS
    assert CsvDB(path).get_one(Row, {"name": "b"}).value == 2


def test_csv_filters_and_missing_row(tmp_path):
    db = CsvDB(tmp_path / "rows.csv")
    db.insert_many(ROWS)
    assert [r.name for r in db.get_all(Row, {"value": 1})] == ["a"]
    with pytest.raises(NotFoundError):
        db.get_one(Row, {"name": "zzz"})


def test_csv_replace_all_and_delete_all(tmp_path):
    db = CsvDB(tmp_path / "rows.csv")
    db.insert_many(ROWS)
    db.replace_all([Row(name="c", value=3)])
    assert [r.name for r in db.get_all(Row)] == ["c"]
    db.delete_all(Row)
    assert db.get_all(Row) == []


def test_csv_strict_mode_raises_on_bad_row(tmp_path):
    path = tmp_path / "rows.csv"
    path.write_text("name;Value;tags\na;not-a-number;\n", encoding="utf-8")
    assert CsvDB(path).get_all(Row) == []
    with pytest.raises(ValidationError):
        CsvDB(path, strict=True).get_all(Row)


def test_missing_csv_reads_empty(tmp_path):
    assert CsvDB(tmp_path / "nope.csv").get_all(Row) == []


def test_excel_round_trip(tmp_path):
    path = tmp_path / "rows.xlsx"
    db = ExcelDB(path)
    db.insert_many(ROWS)

    reread = ExcelDB(path)
    assert reread.get_all(Row) == ROWS
    reread.delete_all(Row)
    assert ExcelDB(path).get_all(Row) == []


def test_excel_unknown_sheet(tmp_path):
    with pytest.raises(NotFoundError):
        ExcelDB(tmp_path / "empty.xlsx").get_all(Row)


def test_csv_reads_comma_delimited_tables(tmp_path):
    path = tmp_path / "rows.csv"
    path.write_text('name,Value,tags\n"a, first",1,\n', encoding="utf-8")
    assert CsvDB(path, strict=True, delimiter=",").get_all(Row) == [Row(name="a, first", value=1)]
    assert CsvDB(path).get_all(Row) == []
