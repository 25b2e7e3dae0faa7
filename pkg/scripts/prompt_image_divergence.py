#!/usr/bin/env python3
"""Prompt-distance vs image-distance quadrants for generated design pairs.

For each bundled brief: run the batch pipeline, swap the selected composition
card for the second candidate, integrate again, then embed the two integrated
prompts and the two final images and compare their pairwise distances. Pairs
land in quadrants relative to the per-axis medians, which is how prompt-level
exploration can diverge from pixel-level variety.

Usage: python3 scripts/prompt_image_divergence.py [--seed 0]
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

from briefstudio.analytics import divergence_report, pairwise_distance
from briefstudio.domain import ElementType
from briefstudio.fixtures import BRIEF_NAMES, brief_text
from briefstudio.persistence import Store
from briefstudio.pipeline import Pipeline
from briefstudio.providers import ProviderSettings, build_providers


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    pairs = []
    with tempfile.TemporaryDirectory(prefix="briefstudio-divergence-") as tmp:
        for name in BRIEF_NAMES:
            store = Store(Path(tmp) / name)
            providers = build_providers(
                ProviderSettings(provider="mock", seed=args.seed), store.blobs
            )
            pipeline = Pipeline(store, providers)
            session = pipeline.run_auto(brief_text(name), n=2, session_id=name)
            # Recombine: keep everything but swap in the other composition.
            other_comp = session.cards(ElementType.COMPOSITION)[1]
            pipeline.set_selected(name, other_comp.id, True)
            pipeline.integrate_and_generate(name)
            session = store.load_session(name)
            embedder = providers.embedder
            prompt_d = pairwise_distance(
                embedder.embed_text(session.integrated_prompts[0].text),
                embedder.embed_text(session.integrated_prompts[1].text),
            )
            image_d = pairwise_distance(
                embedder.embed_image(session.history[0].image_ref),
                embedder.embed_image(session.history[1].image_ref),
            )
            pairs.append((name, prompt_d, image_d))

    for item in divergence_report(pairs):
        print(
            f"{item['id']}: prompt={item['prompt_distance']:.4f} "
            f"image={item['image_distance']:.4f} -> {item['quadrant']}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
