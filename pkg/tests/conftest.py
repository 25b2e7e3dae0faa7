from __future__ import annotations

from datetime import date
from pathlib import Path

import pytest

from briefstudio.persistence import Store
from briefstudio.pipeline import Pipeline, PipelineConfig
from briefstudio.providers import ProviderSettings, build_providers

FIXED_DATE = date(2025, 10, 1)


def make_pipeline(
    root: Path,
    seed: int = 0,
    config: PipelineConfig | None = None,
) -> Pipeline:
    store = Store(root)
    providers = build_providers(ProviderSettings(provider="mock", seed=seed), store.blobs)
    return Pipeline(store, providers, config=config, today=lambda: FIXED_DATE)


@pytest.fixture
def store(tmp_path) -> Store:
    return Store(tmp_path / "store")


@pytest.fixture
def pipeline(tmp_path) -> Pipeline:
    return make_pipeline(tmp_path / "store")


def strip_volatile(node):
    """Drop wall-clock fields so cross-run structures can be compared."""
    if isinstance(node, dict):
        return {
            k: strip_volatile(v)
            for k, v in node.items()
            if k not in ("created_at", "duration_ms", "timestamp")
        }
    if isinstance(node, list):
        return [strip_volatile(v) for v in node]
    return node
