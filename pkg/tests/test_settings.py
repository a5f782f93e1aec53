from __future__ import annotations

import pytest

from lib.settings import DEFAULT_CAP_SCHEDULE, get_settings, parse_cap_schedule

ENV_VARS = ("LRVG_CAP_SCHEDULE", "LRVG_ASSUME_COMPLETE", "LRVG_JOBS", "LRVG_SEED", "LRVG_LOG_LEVEL")


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)


def test_defaults():
    s = get_settings()
    assert s.cap_schedule == DEFAULT_CAP_SCHEDULE
    assert not s.assume_complete
    assert (s.jobs, s.seed, s.log_level) == (1, 0, "WARNING")


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("LRVG_CAP_SCHEDULE", "1, 3,8")
    monkeypatch.setenv("LRVG_ASSUME_COMPLETE", "Yes")
    monkeypatch.setenv("LRVG_JOBS", "4")
    monkeypatch.setenv("LRVG_SEED", "17")
    monkeypatch.setenv("LRVG_LOG_LEVEL", "debug")
    s = get_settings()
    assert s.cap_schedule == (1, 3, 8)
    assert s.assume_complete
    assert (s.jobs, s.seed, s.log_level) == (4, 17, "DEBUG")


def test_blank_values_fall_back(monkeypatch):
    monkeypatch.setenv("LRVG_CAP_SCHEDULE", "  ")
    monkeypatch.setenv("LRVG_JOBS", "")
    assert get_settings().cap_schedule == DEFAULT_CAP_SCHEDULE
    assert get_settings().jobs == 1


@pytest.mark.parametrize(
    "name, value, message",
    [
        ("LRVG_JOBS", "many", "not an integer"),
        ("LRVG_JOBS", "0", ">= 1"),
        ("LRVG_SEED", "-2", ">= 0"),
        ("LRVG_LOG_LEVEL", "loud", "not a logging level"),
        ("LRVG_CAP_SCHEDULE", "1,x", "LRVG_CAP_SCHEDULE"),
    ],
)
def test_bad_values(monkeypatch, name, value, message):
    monkeypatch.setenv(name, value)
    with pytest.raises(RuntimeError, match=message):
        get_settings()


@pytest.mark.parametrize("text, caps", [("0", (0,)), ("0,1,2,4", (0, 1, 2, 4)), ("3,", (3,))])
def test_cap_schedule(text, caps):
    assert parse_cap_schedule(text) == caps


@pytest.mark.parametrize("text", ["", "2,1", "1,1", "-1,2", "a"])
def test_bad_cap_schedule(text):
    with pytest.raises(RuntimeError, match="--cap-schedule"):
        parse_cap_schedule(text)
