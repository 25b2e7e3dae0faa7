"""Bundled brief fixtures for batch runs and tests."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

BRIEF_NAMES = ("t1", "t2", "t3", "t4")


def brief_path(name: str) -> Path:
    if name not in BRIEF_NAMES:
        raise KeyError(f"unknown brief fixture {name!r}; expected one of {BRIEF_NAMES}")
    ref = resources.files("briefstudio.fixtures").joinpath("briefs", f"{name}.txt")
    return Path(str(ref))


def brief_text(name: str) -> str:
    return brief_path(name).read_text(encoding="utf-8")
