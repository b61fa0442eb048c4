"""Enumeration bounds, overridable through environment variables."""

from __future__ import annotations

import os

DEFAULTS = {
    "SMGSYNTH_MAX_PROFILES": 1_000_000,
    "SMGSYNTH_EC_BOUND": 16,
    "SMGSYNTH_UNFOLD_LIMIT": 20_000,
    "SMGSYNTH_MAX_SENTENCES": 100_000,
}


def limit(name: str) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return DEFAULTS[name]
    return int(raw)
