"""Example games shipped with the package."""

from __future__ import annotations

from importlib import resources


def path(name: str):
    return resources.files(__name__).joinpath(name)


def read(name: str) -> str:
    if "." not in name:
        name += ".smg"
    return path(name).read_text(encoding="utf-8")


def load(name: str):
    from ..text import parse_arena

    return parse_arena(read(name))
