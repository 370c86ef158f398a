import json
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from commitplan.report import canonical, csv_text, dumps, svg_chart


@dataclass
class _Thing:
    x: float
    when: datetime


def test_canonical_types():
    doc = canonical({"a": np.float64(1 / 3), "b": np.arange(2), "c": _Thing(np.inf, datetime(2024, 1, 1, tzinfo=timezone.utc))})
    assert doc == {"a": 0.3333333333, "b": [0, 1], "c": {"x": None, "when": "2024-01-01T00:00:00+00:00"}}


def test_dumps_is_sorted_and_stable():
    a = dumps({"z": 1.0 + 1e-14, "a": [1, 2]})
    b = dumps({"a": [1, 2], "z": 1.0})
    assert a == b and list(json.loads(a)) == ["a", "z"]


def test_csv_and_svg():
    assert csv_text(["x", "y"], [(1, 0.5), (2, np.nan)]) == "x,y\n1,0.5\n2,\n"
    svg = svg_chart("t <1>", [("a", [0, 1], [2, 3])], hlines=[("c", 2.5)])
    assert svg.startswith("<svg") and "t &lt;1&gt;" in svg and "stroke-dasharray" in svg
