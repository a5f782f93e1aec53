from __future__ import annotations

import json

import pandas as pd

from lib.report_service import REPORT_KEYS, RunReport, stopwatch


def test_key_order_with_extras():
    report = RunReport("solve", {"file": "a.lrv"}, "SystemWins", 0, {"states": 3}, 0.5, {"fragment": "LRV[⊤]"})
    d = report.as_dict()
    assert list(d) == [*REPORT_KEYS, "fragment"]
    assert d["stats"] == {"states": 3}


def test_dataframe_stats_become_records():
    stats = pd.DataFrame({"level": [0, 1], "frames": [2, 6]})
    d = RunReport("frames", {}, stats=stats).as_dict()
    assert d["stats"] == [{"level": 0, "frames": 2}, {"level": 1, "frames": 6}]
    assert d["verdict"] is None
    assert d["cap"] is None


def test_json_keeps_unicode():
    text = RunReport("classify", {}, extra={"fragment": "LRV[⊤,≈]"}).to_json()
    assert "LRV[⊤,≈]" in text
    assert json.loads(text)["command"] == "classify"


def test_wall_time_rounded():
    assert RunReport("x", {}, wall_time=1.23456789).as_dict()["wall_time"] == 1.234568


def test_stopwatch():
    with stopwatch() as clock:
        assert clock[0] == 0.0
        sum(range(1000))
    assert clock[0] > 0
