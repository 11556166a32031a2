import json
from fractions import Fraction

import pandas as pd

from report_store import ReportStore


def test_render_is_sorted_and_exact():
    text = ReportStore.render({"b": Fraction(1, 2), "a": (1, Fraction(4, 2))})
    assert text == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": "1/2"\n}\n'


def test_write_json_creates_folders(tmp_path):
    store = ReportStore()
    path = store.write_json(str(tmp_path / "out" / "report.json"), {"status": "pass"})
    with open(path, encoding="utf-8") as f:
        assert json.load(f) == {"status": "pass"}


def test_csv_roundtrip(tmp_path):
    store = ReportStore()
    path = str(tmp_path / "table.csv")
    assert store.read_csv(path) is None
    store.write_csv(path, pd.DataFrame({"u": [0.5, 0.25], "err": [1e-3, 2.5e-4]}))
    table = store.read_csv(path)
    assert list(table.columns) == ["u", "err"]
    assert table["err"].tolist() == [1e-3, 2.5e-4]
