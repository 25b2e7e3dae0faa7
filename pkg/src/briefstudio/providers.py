"""Provider interfaces plus deterministic offline mocks.

Three capabilities back the pipeline: chat completion with structured output,
image generation, and text/image embedding. Mock implementations are pure
functions of (inputs, seed), so end-to-end runs are reproducible without
network access. Every provider keeps an in-memory attempt log that tests use
to assert call counts and ordering.
"""

from __future__ import annotations

import hashlib
import io
import math
import os
import time
from dataclasses import dataclass, field as dc_field
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Protocol

from PIL import Image, ImageDraw

from briefstudio.domain import (
    CANONICAL_FIELD_ORDER,
    ImageRef,
    RequirementField,
    collapse_to_single_line,
)
from briefstudio.errors import (
    SchemaViolationError,
    TimeoutError_,
    TransportError,
    ValidationError,
)
from briefstudio.prompts import RenderedPrompt

_FIELD_KEYS = frozenset(f.key for f in CANONICAL_FIELD_ORDER)
_LABEL_TO_KEY = {f.label: f.key for f in CANONICAL_FIELD_ORDER}

CORRECTIVE_SUFFIX = (
    "\n\nThe previous response did not match the required output schema. "
    "Respond again, strictly matching the schema."
)


class SchemaId(Enum):
    EXTRACTED_REQUIREMENTS = "ExtractedRequirements"
    REQUIREMENT_CANDIDATES = "RequirementCandidates"
    ELEMENT_CANDIDATES = "ElementCandidates"
    ENHANCED_LINE = "EnhancedLine"
    INTEGRATED_PARAGRAPH = "IntegratedParagraph"


@dataclass(frozen=True)
class StructuredSchema:
    """Declares the shape a structured completion must return."""

    schema_id: SchemaId
    count: Optional[int] = None

    def validate(self, payload: Any) -> None:
        sid = self.schema_id
        if sid is SchemaId.EXTRACTED_REQUIREMENTS:
            if not isinstance(payload, dict) or set(payload.keys()) != _FIELD_KEYS:
                raise SchemaViolationError(
                    "extracted requirements must map exactly the eight field keys"
                )
            for key, values in payload.items():
                if not isinstance(values, list) or not all(
                    isinstance(v, str) for v in values
                ):
                    raise SchemaViolationError(f"field {key} must hold a list of strings")
        elif sid in (SchemaId.REQUIREMENT_CANDIDATES, SchemaId.ELEMENT_CANDIDATES):
            if not isinstance(payload, list):
                raise SchemaViolationError("candidates payload must be a list")
            if self.count is not None and len(payload) != self.count:
                raise SchemaViolationError(
                    f"expected {self.count} candidates, got {len(payload)}"
                )
            for item in payload:
                if not isinstance(item, dict):
                    raise SchemaViolationError("candidate must be a record")
                if not isinstance(item.get("value"), str) or not item["value"].strip():
                    raise SchemaViolationError("candidate value must be a non-empty string")
                if not isinstance(item.get("reasoning"), str):
                    raise SchemaViolationError("candidate reasoning must be a string")
                fields = item.get("influencing_fields")
                if not isinstance(fields, list) or not all(
                    isinstance(f, str) and f in _FIELD_KEYS for f in fields
                ):
                    raise SchemaViolationError(
                        "influencing_fields must list known requirement field keys"
                    )
        elif sid is SchemaId.ENHANCED_LINE:
            if not isinstance(payload, str) or not payload.strip():
                raise SchemaViolationError("enhanced line must be a non-empty string")
            if "\n" in payload:
                raise SchemaViolationError("enhanced line must not contain newlines")
        elif sid is SchemaId.INTEGRATED_PARAGRAPH:
            if not isinstance(payload, str) or not payload.strip():
                raise SchemaViolationError("integrated paragraph must be a non-empty string")
        else:  # pragma: no cover - closed enum
            raise SchemaViolationError(f"unknown schema {sid}")


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: Optional[str] = None
    model: Optional[str] = None
    timeout_ms: int = 60_000
    max_retries: int = 1
    sampling: float = 0.0
    retry_backoff_s: float = 0.0

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValidationError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be non-negative")


@dataclass(frozen=True)
class EmbeddingVector:
    dims: int
    values: tuple[float, ...]

    def __post_init__(self):
        if self.dims != len(self.values):
            raise ValidationError("dims must match the number of values")
        norm = math.sqrt(sum(v * v for v in self.values))
        if not (norm > 0.0 and math.isfinite(norm)):
            raise ValidationError("embedding must have a positive finite norm")
        object.__setattr__(
            self, "values", tuple(v / norm for v in self.values)
        )

    @classmethod
    def from_values(cls, values) -> "EmbeddingVector":
        vals = tuple(float(v) for v in values)
        return cls(dims=len(vals), values=vals)


@dataclass(frozen=True)
class ProviderCall:
    kind: str
    prompt_digest: str
    schema_id: Optional[str]
    duration_ms: int
    ok: bool


def prompt_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


class BlobSink(Protocol):
    def put_blob(self, data: bytes, media_type: str) -> ImageRef: ...


class ChatProvider:
    """Structured chat completion with schema validation and bounded retries.

    Concrete providers implement `_complete`. Schema violations get exactly
    one corrective retry; transport errors back off exponentially up to
    `max_retries` extra attempts. A payload is never returned unvalidated.
    """

    def __init__(self, config: Optional[ProviderConfig] = None):
        self.config = config or ProviderConfig()
        self.calls: list[ProviderCall] = []

    def _complete(self, prompt_text: str, prompt: RenderedPrompt, schema: StructuredSchema) -> Any:
        raise NotImplementedError

    def _attempt(self, prompt_text: str, prompt: RenderedPrompt, schema: StructuredSchema) -> Any:
        started = time.monotonic()
        ok = False
        try:
            payload = self._complete(prompt_text, prompt, schema)
            ok = True
            return payload
        finally:
            self.calls.append(
                ProviderCall(
                    kind="chat",
                    prompt_digest=prompt_digest(prompt_text),
                    schema_id=schema.schema_id.value,
                    duration_ms=int((time.monotonic() - started) * 1000),
                    ok=ok,
                )
            )

    def complete_structured(self, prompt: RenderedPrompt, schema: StructuredSchema) -> Any:
        delay = self.config.retry_backoff_s
        transport_attempts = 0
        schema_retried = False
        text = prompt.text
        while True:
            try:
                payload = self._attempt(text, prompt, schema)
            except TransportError:
                transport_attempts += 1
                if transport_attempts > self.config.max_retries:
                    raise
                if delay > 0:
                    time.sleep(delay)
                    delay *= 2
                continue
            try:
                schema.validate(payload)
                return payload
            except SchemaViolationError:
                if schema_retried:
                    raise
                schema_retried = True
                text = prompt.text + CORRECTIVE_SUFFIX


class ImageProvider:
    """Image generation against a content-addressed blob sink."""

    def __init__(self, blobs: BlobSink, config: Optional[ProviderConfig] = None):
        self.blobs = blobs
        self.config = config or ProviderConfig()
        self.calls: list[ProviderCall] = []

    def _generate(self, prompt: str, width: int, height: int, nonce: int) -> bytes:
        raise NotImplementedError

    def generate_image(self, prompt: str, width: int, height: int, nonce: int = 0) -> ImageRef:
        if not prompt.strip():
            raise ValidationError("image prompt must be non-empty")
        if width <= 0 or height <= 0:
            raise ValidationError("image dimensions must be positive")
        started = time.monotonic()
        ok = False
        try:
            data = self._generate(prompt, width, height, nonce)
            ref = self.blobs.put_blob(data, "image/png")
            ok = True
            return ref
        finally:
            self.calls.append(
                ProviderCall(
                    kind="image",
                    prompt_digest=prompt_digest(prompt),
                    schema_id=None,
                    duration_ms=int((time.monotonic() - started) * 1000),
                    ok=ok,
                )
            )


class Embedder:
    """Fixed-dimension unit-norm embeddings for texts and stored images."""

    dims: int = 64

    def __init__(self):
        self.calls: list[ProviderCall] = []

    def _embed_tokens(self, tokens: list[str]) -> EmbeddingVector:
        raise NotImplementedError

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise ValidationError("cannot embed empty text")
        started = time.monotonic()
        vector = self._embed_tokens(text.split())
        self.calls.append(
            ProviderCall(
                kind="embed_text",
                prompt_digest=prompt_digest(text),
                schema_id=None,
                duration_ms=int((time.monotonic() - started) * 1000),
                ok=True,
            )
        )
        return vector

    def embed_image(self, ref: ImageRef) -> EmbeddingVector:
        started = time.monotonic()
        chunk = 8
        tokens = [
            ref.content_hash[i : i + chunk]
            for i in range(0, len(ref.content_hash), chunk)
        ]
        vector = self._embed_tokens(tokens)
        self.calls.append(
            ProviderCall(
                kind="embed_image",
                prompt_digest=ref.content_hash[:12],
                schema_id=None,
                duration_ms=int((time.monotonic() - started) * 1000),
                ok=True,
            )
        )
        return vector


def _digest_words(text: str, limit: int = 6) -> str:
    words = text.split()[:limit]
    return " ".join(words) if words else "empty"


class MockChatProvider(ChatProvider):
    """Deterministic chat mock; payloads derive from the rendered variables.

    Rules:
    - extraction: brief words are dealt into the eight fields, three per field,
      in canonical order ("mock-<field_key>: <words>")
    - candidates: value i is "mock-<name>-<i>: <first 6 words of the serialized
      requirements>" where <name> is the element type label or field key
    - enhancement: "ENHANCED[<template kind>]: <rough prompt, single-lined>"
    - integration: the selected-elements sections joined with " | "
    """

    def __init__(
        self,
        seed: int = 0,
        config: Optional[ProviderConfig] = None,
        faults: frozenset[str] = frozenset(),
    ):
        super().__init__(config)
        self.seed = seed
        self.faults = faults

    def _complete(self, prompt_text: str, prompt: RenderedPrompt, schema: StructuredSchema) -> Any:
        if "transport" in self.faults:
            raise TransportError("injected transport fault")
        if "timeout" in self.faults:
            raise TimeoutError_("injected timeout fault")
        if "schema" in self.faults:
            return {"malformed": True}
        variables = prompt.variables_used
        sid = schema.schema_id
        if sid is SchemaId.EXTRACTED_REQUIREMENTS:
            words = variables["user_input"].split()
            payload: dict[str, list[str]] = {}
            for i, f in enumerate(CANONICAL_FIELD_ORDER):
                chunk = words[i * 3 : i * 3 + 3]
                payload[f.key] = [f"mock-{f.key}: {' '.join(chunk)}"] if chunk else []
            return payload
        if sid is SchemaId.REQUIREMENT_CANDIDATES:
            key = _LABEL_TO_KEY.get(variables["target_field"], variables["target_field"])
            digest = _digest_words(variables["known_requirements"])
            return [
                {
                    "value": f"mock-{key}-{i}: {digest}",
                    "reasoning": f"mock-reason-{i}",
                    "influencing_fields": [],
                }
                for i in range(1, (schema.count or 1) + 1)
            ]
        if sid is SchemaId.ELEMENT_CANDIDATES:
            label = variables["element_type"]
            digest = _digest_words(variables["requirements_text"])
            return [
                {
                    "value": f"mock-{label}-{i}: {digest}",
                    "reasoning": f"mock-reason-{i}",
                    "influencing_fields": [
                        RequirementField.DELIVERABLE_FORMAT.key,
                        RequirementField.BUSINESS_CONTEXT.key,
                    ],
                }
                for i in range(1, (schema.count or 1) + 1)
            ]
        if sid is SchemaId.ENHANCED_LINE:
            rough = collapse_to_single_line(variables["rough_prompt"])
            return f"ENHANCED[{prompt.kind.value}]: {rough}"
        if sid is SchemaId.INTEGRATED_PARAGRAPH:
            sections = variables["selected_elements"].split("\n\n")
            return " | ".join(collapse_to_single_line(s) for s in sections)
        raise SchemaViolationError(f"mock cannot produce schema {sid}")


class MockImageProvider(ImageProvider):
    """Deterministic placeholder images; pixels are a function of
    hash(seed, prompt, dims, nonce)."""

    def __init__(
        self,
        blobs: BlobSink,
        seed: int = 0,
        config: Optional[ProviderConfig] = None,
        faults: frozenset[str] = frozenset(),
    ):
        super().__init__(blobs, config)
        self.seed = seed
        self.faults = faults

    def _generate(self, prompt: str, width: int, height: int, nonce: int) -> bytes:
        if "transport" in self.faults:
            raise TransportError("injected transport fault")
        if "timeout" in self.faults:
            raise TimeoutError_("injected timeout fault")
        digest = hashlib.sha256(
            f"{self.seed}|{prompt}|{width}x{height}|{nonce}".encode("utf-8")
        ).digest()
        base = tuple(digest[0:3])
        accent = tuple(digest[3:6])
        img = Image.new("RGB", (width, height), base)
        draw = ImageDraw.Draw(img)
        # Accent band whose placement is hash-derived, so distinct prompts
        # are visually distinguishable in the studio.
        x0 = digest[6] % max(1, width // 2)
        y0 = digest[7] % max(1, height // 2)
        x1 = x0 + 1 + digest[8] % max(1, width - x0 - 1) if width > 1 else x0
        y1 = y0 + 1 + digest[9] % max(1, height - y0 - 1) if height > 1 else y0
        draw.rectangle([x0, y0, x1, y1], fill=accent)
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()


class MockEmbedder(Embedder):
    """Bucket-count embedder: each token hashes into one of `dims` buckets,
    counts are L2-normalized."""

    def __init__(self, dims: int = 64, seed: int = 0):
        super().__init__()
        if dims < 1:
            raise ValidationError("dims must be positive")
        self.dims = dims
        self.seed = seed

    def _embed_tokens(self, tokens: list[str]) -> EmbeddingVector:
        counts = [0.0] * self.dims
        for token in tokens:
            h = hashlib.sha256(f"{self.seed}:{token}".encode("utf-8")).digest()
            bucket = int.from_bytes(h[:8], "big") % self.dims
            counts[bucket] += 1.0
        if not any(counts):
            counts[0] = 1.0
        return EmbeddingVector.from_values(counts)


class HttpChatProvider(ChatProvider):
    """Adapter for an HTTP completion endpoint; exercised only by the opt-in
    smoke test, never by the offline suites."""

    def __init__(self, endpoint: str, api_key: str = "", config: Optional[ProviderConfig] = None):
        super().__init__(config)
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key

    def _complete(self, prompt_text: str, prompt: RenderedPrompt, schema: StructuredSchema) -> Any:
        import httpx

        try:
            response = httpx.post(
                f"{self.endpoint}/complete",
                json={
                    "prompt": prompt_text,
                    "schema_id": schema.schema_id.value,
                    "count": schema.count,
                },
                headers={"Authorization": f"Bearer {self.api_key}"} if self.api_key else {},
                timeout=self.config.timeout_ms / 1000,
            )
        except httpx.TimeoutException as exc:
            raise TimeoutError_(str(exc))
        except httpx.HTTPError as exc:
            raise TransportError(str(exc))
        if response.status_code != 200:
            raise TransportError(f"endpoint returned {response.status_code}")
        return response.json().get("payload")


class HttpImageProvider(ImageProvider):
    def __init__(
        self,
        blobs: BlobSink,
        endpoint: str,
        api_key: str = "",
        config: Optional[ProviderConfig] = None,
    ):
        super().__init__(blobs, config)
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key

    def _generate(self, prompt: str, width: int, height: int, nonce: int) -> bytes:
        import httpx

        try:
            response = httpx.post(
                f"{self.endpoint}/image",
                json={"prompt": prompt, "width": width, "height": height},
                headers={"Authorization": f"Bearer {self.api_key}"} if self.api_key else {},
                timeout=self.config.timeout_ms / 1000,
            )
        except httpx.TimeoutException as exc:
            raise TimeoutError_(str(exc))
        except httpx.HTTPError as exc:
            raise TransportError(str(exc))
        if response.status_code != 200:
            raise TransportError(f"endpoint returned {response.status_code}")
        return response.content


@dataclass(frozen=True)
class ProviderSettings:
    provider: str = "mock"
    seed: int = 0
    endpoint: Optional[str] = None
    api_key: str = ""
    embed_dims: int = 64

    def __post_init__(self):
        if self.provider not in ("mock", "http"):
            raise ValidationError(f"unknown provider kind: {self.provider!r}")


def load_provider_settings(root: Optional[Path] = None) -> ProviderSettings:
    """Resolve provider settings: defaults < `<root>/config` file < env vars.

    Recognized env vars: B2D_PROVIDER, B2D_SEED, B2D_ENDPOINT, B2D_API_KEY.
    The config file holds `key=value` lines with the same lowercase keys.
    """
    values: dict[str, str] = {}
    if root is not None:
        config_path = Path(root) / "config"
        if config_path.is_file():
            for line in config_path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line or line.startswith("#") or "=" not in line:
                    continue
                key, _, value = line.partition("=")
                values[key.strip().lower()] = value.strip()
    for env_key, key in (
        ("B2D_PROVIDER", "provider"),
        ("B2D_SEED", "seed"),
        ("B2D_ENDPOINT", "endpoint"),
        ("B2D_API_KEY", "api_key"),
    ):
        if env_key in os.environ:
            values[key] = os.environ[env_key]
    return ProviderSettings(
        provider=values.get("provider", "mock"),
        seed=int(values.get("seed", "0")),
        endpoint=values.get("endpoint") or None,
        api_key=values.get("api_key", ""),
        embed_dims=int(values.get("embed_dims", "64")),
    )


@dataclass
class ProviderSet:
    chat: ChatProvider
    image: ImageProvider
    embedder: Embedder
    settings: ProviderSettings = dc_field(default_factory=ProviderSettings)


def build_providers(settings: ProviderSettings, blobs: BlobSink) -> ProviderSet:
    if settings.provider == "mock":
        return ProviderSet(
            chat=MockChatProvider(seed=settings.seed),
            image=MockImageProvider(blobs, seed=settings.seed),
            embedder=MockEmbedder(dims=settings.embed_dims, seed=settings.seed),
            settings=settings,
        )
    if not settings.endpoint:
        raise ValidationError("http provider requires an endpoint")
    config = ProviderConfig(endpoint=settings.endpoint, retry_backoff_s=0.25)
    return ProviderSet(
        chat=HttpChatProvider(settings.endpoint, settings.api_key, config),
        image=HttpImageProvider(blobs, settings.endpoint, settings.api_key, config),
        embedder=MockEmbedder(dims=settings.embed_dims, seed=settings.seed),
        settings=settings,
    )
