from __future__ import annotations

import logging
import os
from dataclasses import dataclass

DEFAULT_CAP_SCHEDULE = (0, 1, 2, 4)


@dataclass(frozen=True)
class Settings:
    cap_schedule: tuple[int, ...]
    assume_complete: bool
    jobs: int
    seed: int
    log_level: str


def get_settings() -> Settings:
    # Environment variables only; CLI flags override these.
    raw_caps = os.getenv("LRVG_CAP_SCHEDULE", "").strip() or None
    raw_complete = os.getenv("LRVG_ASSUME_COMPLETE", "").strip() or None
    raw_jobs = os.getenv("LRVG_JOBS", "").strip() or None
    raw_seed = os.getenv("LRVG_SEED", "").strip() or None
    log_level = (os.getenv("LRVG_LOG_LEVEL", "").strip() or "WARNING").upper()

    cap_schedule = parse_cap_schedule(raw_caps, source="LRVG_CAP_SCHEDULE") if raw_caps else DEFAULT_CAP_SCHEDULE
    assume_complete = (raw_complete or "").lower() in {"1", "true", "yes", "on"}
    jobs = _parse_int(raw_jobs, name="LRVG_JOBS", default=1, minimum=1)
    seed = _parse_int(raw_seed, name="LRVG_SEED", default=0, minimum=0)

    if not isinstance(logging.getLevelName(log_level), int):
        raise RuntimeError(f"LRVG_LOG_LEVEL={log_level!r} is not a logging level name.")

    return Settings(
        cap_schedule=cap_schedule,
        assume_complete=assume_complete,
        jobs=jobs,
        seed=seed,
        log_level=log_level,
    )


def parse_cap_schedule(text: str, *, source: str = "--cap-schedule") -> tuple[int, ...]:
    try:
        caps = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise RuntimeError(f"{source}={text!r}: expected comma-separated integers.") from None
    if not caps or any(c < 0 for c in caps) or list(caps) != sorted(set(caps)):
        raise RuntimeError(f"{source}={text!r}: caps must be non-negative and strictly increasing.")
    return caps


def _parse_int(raw: str | None, *, name: str, default: int, minimum: int) -> int:
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise RuntimeError(f"{name}={raw!r} is not an integer.") from None
    if value < minimum:
        raise RuntimeError(f"{name} must be >= {minimum}, got {value}.")
    return value
