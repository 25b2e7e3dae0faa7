"""Diversity and timing metrics over sessions and external corpora.

The diversity score of a set is the mean of 1 - cosine similarity over all
unordered pairs. Vectors arrive unit-normalized from the providers, so the
distance range is [0, 2].
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Optional, Sequence

from briefstudio.domain import Session
from briefstudio.errors import DimensionMismatchError, TooFewItemsError
from briefstudio.providers import Embedder, EmbeddingVector


@dataclass(frozen=True)
class DiversityReport:
    item_count: int
    pair_count: int
    mean_pairwise_distance: float
    per_pair: tuple[tuple[str, str, float], ...]

    def to_dict(self) -> dict:
        return {
            "item_count": self.item_count,
            "pair_count": self.pair_count,
            "mean_pairwise_distance": self.mean_pairwise_distance,
            "per_pair": [
                {"id_a": a, "id_b": b, "distance": d} for a, b, d in self.per_pair
            ],
        }


@dataclass(frozen=True)
class SessionMetrics:
    images_generated: int
    completion_time_s: Optional[float] = None
    time_per_generation_s: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "images_generated": self.images_generated,
            "completion_time_s": self.completion_time_s,
            "time_per_generation_s": self.time_per_generation_s,
        }


def pairwise_distance(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """1 - cos(u, v); symmetric, zero for identical vectors."""
    if u.dims != v.dims:
        raise DimensionMismatchError(f"dims differ: {u.dims} vs {v.dims}")
    # Unit norms are a type invariant, so the dot product is the cosine.
    dot = sum(a * b for a, b in zip(u.values, v.values))
    return 1.0 - dot


def diversity(
    vectors: Sequence[EmbeddingVector], ids: Optional[Sequence[str]] = None
) -> DiversityReport:
    """Mean pairwise dissimilarity over all unordered pairs.

    Pairs are enumerated in lexicographic index order (0,1), (0,2), ...
    """
    if len(vectors) < 2:
        raise TooFewItemsError("diversity needs at least two items")
    if ids is None:
        ids = [str(i) for i in range(len(vectors))]
    if len(ids) != len(vectors):
        raise DimensionMismatchError("ids must match vectors one-to-one")
    per_pair: list[tuple[str, str, float]] = []
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            per_pair.append((ids[i], ids[j], pairwise_distance(vectors[i], vectors[j])))
    mean = sum(d for _, _, d in per_pair) / len(per_pair)
    return DiversityReport(
        item_count=len(vectors),
        pair_count=len(per_pair),
        mean_pairwise_distance=mean,
        per_pair=tuple(per_pair),
    )


def corpus_diversity(
    items: Sequence[str],
    embedder: Embedder,
    ids: Optional[Sequence[str]] = None,
    kind: str = "text",
) -> DiversityReport:
    """Embed a corpus of texts (or image refs with kind="image") and score it."""
    if len(items) < 2:
        raise TooFewItemsError("diversity needs at least two items")
    if kind == "text":
        vectors = [embedder.embed_text(item) for item in items]
    else:
        vectors = [embedder.embed_image(item) for item in items]
    return diversity(vectors, ids)


def _parse_ts(value: str) -> datetime:
    return datetime.fromisoformat(value)


def session_metrics(session: Session, events: Sequence) -> SessionMetrics:
    """Descriptive timing metrics for one session.

    Completion time runs from the session-created event to the last
    artifact-added or session-closed event; absent when neither end exists.
    """
    images = len(session.history)
    opened: Optional[datetime] = None
    closed: Optional[datetime] = None
    for event in events:
        kind = event.kind if hasattr(event, "kind") else event["kind"]
        ts = event.timestamp if hasattr(event, "timestamp") else event["timestamp"]
        if kind == "session_created" and opened is None:
            opened = _parse_ts(ts)
        if kind in ("artifact_added", "session_closed"):
            closed = _parse_ts(ts)
    completion: Optional[float] = None
    per_generation: Optional[float] = None
    if opened is not None and closed is not None:
        completion = max(0.0, (closed - opened).total_seconds())
        if images > 0:
            per_generation = completion / images
    return SessionMetrics(
        images_generated=images,
        completion_time_s=completion,
        time_per_generation_s=per_generation,
    )


QUADRANT_LABELS = {
    (True, True): "high prompt / high image divergence",
    (True, False): "high prompt / low image divergence",
    (False, True): "low prompt / high image divergence",
    (False, False): "low prompt / low image divergence",
}


def divergence_quadrant(
    prompt_distance: float,
    image_distance: float,
    prompt_threshold: float,
    image_threshold: float,
) -> str:
    """Classify one (prompt distance, image distance) pair against thresholds."""
    return QUADRANT_LABELS[
        (prompt_distance >= prompt_threshold, image_distance >= image_threshold)
    ]


def _median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def divergence_report(
    pairs: Sequence[tuple[str, float, float]]
) -> list[dict]:
    """Label each (id, prompt distance, image distance) point with the
    quadrant it falls in relative to the per-axis medians."""
    if len(pairs) < 2:
        raise TooFewItemsError("divergence report needs at least two pairs")
    prompt_threshold = _median([p for _, p, _ in pairs])
    image_threshold = _median([i for _, _, i in pairs])
    return [
        {
            "id": pair_id,
            "prompt_distance": p,
            "image_distance": i,
            "quadrant": divergence_quadrant(p, i, prompt_threshold, image_threshold),
        }
        for pair_id, p, i in pairs
    ]


def artifact_prompt_texts(session: Session) -> list[str]:
    """Integrated prompt text for each artifact in history order."""
    texts = []
    for artifact in session.history:
        prompt = session.find_integrated_prompt(artifact.integrated_prompt_id)
        if prompt is not None:
            texts.append(prompt.text)
    return texts
