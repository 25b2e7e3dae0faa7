"""Durable storage: sessions, event logs, image blobs, and session bundles.

Layout under one root directory:

    <root>/sessions/<id>/session.json     canonical session document + digest
    <root>/sessions/<id>/events.jsonl     append-only event log
    <root>/blobs/<hh>/<hash>              content-addressed blobs

A bundle is a single zip archive with the same internal layout, carrying one
session, its full event log, and every blob it references.
"""

from __future__ import annotations

import json
import hashlib
import struct
import threading
import zipfile
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any, Iterable, Optional

from briefstudio.domain import (
    CardStatus,
    DeliverableContext,
    DesignArtifact,
    ElementCard,
    ElementType,
    EntryOrigin,
    ImageRef,
    IntegratedPrompt,
    Orientation,
    RequirementCardSet,
    RequirementEntry,
    RequirementField,
    SelectionSet,
    Session,
    ValidatedSelection,
    utc_now_iso,
)
from briefstudio.errors import (
    BlobNotFoundError,
    CorruptRecordError,
    IdCollisionError,
    MissingBlobError,
    SessionNotFoundError,
    ValidationError,
)

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def payload_digest(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# codecs

def image_ref_to_dict(ref: ImageRef) -> dict:
    return {
        "content_hash": ref.content_hash,
        "width": ref.width,
        "height": ref.height,
        "media_type": ref.media_type,
    }


def image_ref_from_dict(d: dict) -> ImageRef:
    return ImageRef(
        content_hash=d["content_hash"],
        width=d["width"],
        height=d["height"],
        media_type=d["media_type"],
    )


def entry_to_dict(entry: RequirementEntry) -> dict:
    return {
        "id": entry.id,
        "field": entry.field.key,
        "text": entry.text,
        "origin": entry.origin.value,
        "created_at": entry.created_at,
    }


def entry_from_dict(d: dict) -> RequirementEntry:
    return RequirementEntry(
        id=d["id"],
        field=RequirementField.from_key(d["field"]),
        text=d["text"],
        origin=EntryOrigin(d["origin"]),
        created_at=d["created_at"],
    )


def card_set_to_dict(card_set: RequirementCardSet) -> dict:
    return {
        f.key: [entry_to_dict(e) for e in card_set.entries(f)]
        for f in RequirementField
    }


def card_set_from_dict(d: dict) -> RequirementCardSet:
    entries = {
        RequirementField.from_key(key): tuple(entry_from_dict(e) for e in values)
        for key, values in d.items()
        if values
    }
    return RequirementCardSet(entries)


def card_to_dict(card: ElementCard) -> dict:
    return {
        "id": card.id,
        "type": card.type.key,
        "rough_prompt": card.rough_prompt,
        "reasoning": card.reasoning,
        "influencing_fields": [f.key for f in card.influencing_fields],
        "enhanced_prompt": card.enhanced_prompt,
        "preview_ref": image_ref_to_dict(card.preview_ref) if card.preview_ref else None,
        "status": card.status.value,
        "revision": card.revision,
        "parent_id": card.parent_id,
        "selected": card.selected,
        "error": card.error,
    }


def card_from_dict(d: dict) -> ElementCard:
    return ElementCard(
        id=d["id"],
        type=ElementType.from_key(d["type"]),
        rough_prompt=d["rough_prompt"],
        reasoning=d.get("reasoning"),
        influencing_fields=tuple(
            RequirementField.from_key(k) for k in d.get("influencing_fields", [])
        ),
        enhanced_prompt=d.get("enhanced_prompt"),
        preview_ref=image_ref_from_dict(d["preview_ref"]) if d.get("preview_ref") else None,
        status=CardStatus(d["status"]),
        revision=d["revision"],
        parent_id=d.get("parent_id"),
        selected=d.get("selected", False),
        error=d.get("error"),
    )


def selection_to_dict(sel: SelectionSet) -> dict:
    return {
        "composition_id": sel.composition_id,
        "object_id": sel.object_id,
        "background_id": sel.background_id,
        "typography_id": sel.typography_id,
        "text_ids": list(sel.text_ids),
    }


def selection_from_dict(d: dict) -> SelectionSet:
    return SelectionSet(
        composition_id=d.get("composition_id"),
        object_id=d.get("object_id"),
        background_id=d.get("background_id"),
        typography_id=d.get("typography_id"),
        text_ids=tuple(d.get("text_ids", [])),
    )


def validated_selection_to_dict(sel: ValidatedSelection) -> dict:
    return {
        "composition": card_to_dict(sel.composition),
        "object": card_to_dict(sel.object) if sel.object else None,
        "background": card_to_dict(sel.background) if sel.background else None,
        "typography": card_to_dict(sel.typography) if sel.typography else None,
        "texts": [card_to_dict(c) for c in sel.texts],
    }


def validated_selection_from_dict(d: dict) -> ValidatedSelection:
    return ValidatedSelection(
        composition=card_from_dict(d["composition"]),
        object=card_from_dict(d["object"]) if d.get("object") else None,
        background=card_from_dict(d["background"]) if d.get("background") else None,
        typography=card_from_dict(d["typography"]) if d.get("typography") else None,
        texts=tuple(card_from_dict(c) for c in d["texts"]),
    )


def integrated_prompt_to_dict(p: IntegratedPrompt) -> dict:
    return {
        "id": p.id,
        "text": p.text,
        "selection_snapshot": validated_selection_to_dict(p.selection_snapshot),
        "created_at": p.created_at,
    }


def integrated_prompt_from_dict(d: dict) -> IntegratedPrompt:
    return IntegratedPrompt(
        id=d["id"],
        text=d["text"],
        selection_snapshot=validated_selection_from_dict(d["selection_snapshot"]),
        created_at=d["created_at"],
    )


def artifact_to_dict(a: DesignArtifact) -> dict:
    return {
        "id": a.id,
        "image_ref": image_ref_to_dict(a.image_ref),
        "integrated_prompt_id": a.integrated_prompt_id,
        "duration_ms": a.duration_ms,
        "created_at": a.created_at,
    }


def artifact_from_dict(d: dict) -> DesignArtifact:
    return DesignArtifact(
        id=d["id"],
        image_ref=image_ref_from_dict(d["image_ref"]),
        integrated_prompt_id=d["integrated_prompt_id"],
        duration_ms=d["duration_ms"],
        created_at=d["created_at"],
    )


def session_to_dict(session: Session) -> dict:
    orientation = session.deliverable_context.orientation
    return {
        "id": session.id,
        "brief_text": session.brief_text,
        "output_language": session.output_language,
        "deliverable_context": {
            "deliverable_format": session.deliverable_context.deliverable_format,
            "orientation": orientation.value if orientation else None,
        },
        "created_at": session.created_at,
        "requirement_cards": card_set_to_dict(session.requirement_cards),
        "element_cards": {
            t.key: [card_to_dict(c) for c in session.cards(t)] for t in ElementType
        },
        "selection": selection_to_dict(session.selection) if session.selection else None,
        "integrated_prompts": [integrated_prompt_to_dict(p) for p in session.integrated_prompts],
        "history": [artifact_to_dict(a) for a in session.history],
        "next_seq": session.next_seq,
    }


def session_from_dict(d: dict) -> Session:
    ctx = d["deliverable_context"]
    return Session(
        id=d["id"],
        brief_text=d["brief_text"],
        output_language=d["output_language"],
        deliverable_context=DeliverableContext(
            deliverable_format=ctx.get("deliverable_format", ""),
            orientation=Orientation(ctx["orientation"]) if ctx.get("orientation") else None,
        ),
        created_at=d["created_at"],
        requirement_cards=card_set_from_dict(d.get("requirement_cards", {})),
        element_cards={
            ElementType.from_key(key): tuple(card_from_dict(c) for c in cards)
            for key, cards in d.get("element_cards", {}).items()
            if cards
        },
        selection=selection_from_dict(d["selection"]) if d.get("selection") else None,
        integrated_prompts=tuple(
            integrated_prompt_from_dict(p) for p in d.get("integrated_prompts", [])
        ),
        history=tuple(artifact_from_dict(a) for a in d.get("history", [])),
        next_seq=d.get("next_seq", 1),
    )


# ---------------------------------------------------------------------------
# events

@dataclass(frozen=True)
class EventRecord:
    seq: int
    timestamp: str
    session_id: str
    kind: str
    payload_digest: str
    detail: dict
    duration_ms: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "session_id": self.session_id,
            "kind": self.kind,
            "payload_digest": self.payload_digest,
            "detail": self.detail,
            "duration_ms": self.duration_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EventRecord":
        return cls(
            seq=d["seq"],
            timestamp=d["timestamp"],
            session_id=d["session_id"],
            kind=d["kind"],
            payload_digest=d["payload_digest"],
            detail=d.get("detail", {}),
            duration_ms=d.get("duration_ms"),
        )


@dataclass
class ReplayState:
    """Session facts reconstructed by folding the event log."""

    live_cards: dict[str, str] = dc_field(default_factory=dict)  # card_id -> type key
    revisions: dict[str, int] = dc_field(default_factory=dict)
    entry_count: int = 0
    selection: Optional[dict] = None
    history_length: int = 0


def replay_events(events: Iterable[EventRecord]) -> ReplayState:
    """Fold the log into card revision counts, selection, and history length."""
    state = ReplayState()
    for event in events:
        detail = event.detail
        if event.kind == "cards_recommended":
            for card_id in detail.get("card_ids", []):
                state.live_cards[card_id] = detail.get("type", "")
                state.revisions[card_id] = 0
        elif event.kind == "card_added":
            state.live_cards[detail["card_id"]] = detail.get("type", "")
            state.revisions[detail["card_id"]] = 0
        elif event.kind == "card_edited" or event.kind == "card_regenerated":
            card_id = detail["card_id"]
            state.revisions[card_id] = state.revisions.get(card_id, 0) + 1
        elif event.kind == "card_deleted":
            state.live_cards.pop(detail["card_id"], None)
        elif event.kind == "entry_added":
            state.entry_count += 1
        elif event.kind == "entries_extracted":
            state.entry_count += len(detail.get("entry_ids", []))
        elif event.kind == "entry_deleted":
            state.entry_count -= 1
        elif event.kind == "selection_changed":
            state.selection = detail.get("selection")
        elif event.kind == "artifact_added":
            state.history_length += 1
    return state


# ---------------------------------------------------------------------------
# blob store

def png_dimensions(data: bytes) -> tuple[int, int]:
    if len(data) < 24 or not data.startswith(_PNG_SIGNATURE):
        raise ValidationError("not a PNG stream")
    width, height = struct.unpack(">II", data[16:24])
    return width, height


class BlobStore:
    """Content-addressed blob storage; put is idempotent."""

    def __init__(self, root: Path):
        self.root = Path(root)
        (self.root / "blobs").mkdir(parents=True, exist_ok=True)

    def _path(self, content_hash: str) -> Path:
        return self.root / "blobs" / content_hash[:2] / content_hash

    def put_blob(self, data: bytes, media_type: str) -> ImageRef:
        if media_type != "image/png":
            raise ValidationError(f"unsupported media type: {media_type}")
        width, height = png_dimensions(data)
        content_hash = hashlib.sha256(data).hexdigest()
        path = self._path(content_hash)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        return ImageRef(
            content_hash=content_hash, width=width, height=height, media_type=media_type
        )

    def get_blob(self, ref_or_hash) -> bytes:
        content_hash = getattr(ref_or_hash, "content_hash", ref_or_hash)
        path = self._path(content_hash)
        if not path.exists():
            raise BlobNotFoundError(f"no blob {content_hash}")
        return path.read_bytes()

    def has_blob(self, content_hash: str) -> bool:
        return self._path(content_hash).exists()


# ---------------------------------------------------------------------------
# session store

def _collect_content_hashes(node: Any, out: set[str]) -> None:
    if isinstance(node, dict):
        if "content_hash" in node and isinstance(node["content_hash"], str):
            out.add(node["content_hash"])
        for value in node.values():
            _collect_content_hashes(value, out)
    elif isinstance(node, list):
        for value in node:
            _collect_content_hashes(value, out)


class Store:
    """Session documents, per-session event logs, and the blob store."""

    def __init__(self, root: Path):
        self.root = Path(root)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        self.blobs = BlobStore(self.root)
        self._event_locks: dict[str, threading.Lock] = {}
        self._next_seq: dict[str, int] = {}
        self._registry_lock = threading.Lock()

    # -- sessions ----------------------------------------------------------

    def _session_dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def session_exists(self, session_id: str) -> bool:
        return (self._session_dir(session_id) / "session.json").exists()

    def list_sessions(self) -> list[str]:
        base = self.root / "sessions"
        return sorted(p.name for p in base.iterdir() if (p / "session.json").exists())

    def save_session(self, session: Session) -> None:
        doc = session_to_dict(session)
        wrapper = {"version": 1, "digest": payload_digest(doc), "session": doc}
        path = self._session_dir(session.id) / "session.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(wrapper, ensure_ascii=False, indent=2), encoding="utf-8")
        tmp.replace(path)

    def load_session(self, session_id: str) -> Session:
        path = self._session_dir(session_id) / "session.json"
        if not path.exists():
            raise SessionNotFoundError(f"no session {session_id}")
        try:
            wrapper = json.loads(path.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CorruptRecordError(f"session {session_id} unreadable: {exc}")
        doc = wrapper.get("session")
        if doc is None or wrapper.get("digest") != payload_digest(doc):
            raise CorruptRecordError(f"session {session_id} failed digest check")
        return session_from_dict(doc)

    # -- events --------------------------------------------------------------

    def _events_path(self, session_id: str) -> Path:
        return self._session_dir(session_id) / "events.jsonl"

    def _event_lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self._event_locks:
                self._event_locks[session_id] = threading.Lock()
            return self._event_locks[session_id]

    def append_event(
        self,
        session_id: str,
        kind: str,
        detail: Optional[dict] = None,
        duration_ms: Optional[int] = None,
    ) -> EventRecord:
        detail = detail or {}
        lock = self._event_lock(session_id)
        with lock:
            if session_id not in self._next_seq:
                existing = self.read_events(session_id) if self._events_path(session_id).exists() else []
                self._next_seq[session_id] = existing[-1].seq + 1 if existing else 1
            seq = self._next_seq[session_id]
            self._next_seq[session_id] = seq + 1
            record = EventRecord(
                seq=seq,
                timestamp=utc_now_iso(),
                session_id=session_id,
                kind=kind,
                payload_digest=payload_digest(detail),
                detail=detail,
                duration_ms=duration_ms,
            )
            path = self._events_path(session_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
        return record

    def read_events(self, session_id: str) -> list[EventRecord]:
        path = self._events_path(session_id)
        if not path.exists():
            return []
        records: list[EventRecord] = []
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
                record = EventRecord.from_dict(payload)
            except (json.JSONDecodeError, KeyError) as exc:
                raise CorruptRecordError(
                    f"event log for {session_id} corrupt at line {line_no}: {exc}"
                )
            if record.payload_digest != payload_digest(record.detail):
                raise CorruptRecordError(
                    f"event log for {session_id} failed digest check at line {line_no}"
                )
            records.append(record)
        return records

    # -- bundles ---------------------------------------------------------------

    def referenced_blobs(self, session: Session) -> set[str]:
        hashes: set[str] = set()
        _collect_content_hashes(session_to_dict(session), hashes)
        return hashes

    def export_bundle(self, session_id: str, path: Path) -> Path:
        session = self.load_session(session_id)
        hashes = self.referenced_blobs(session)
        for h in hashes:
            if not self.blobs.has_blob(h):
                raise MissingBlobError(f"blob {h} referenced but absent")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as archive:
            archive.writestr(
                f"sessions/{session_id}/session.json",
                (self._session_dir(session_id) / "session.json").read_text(encoding="utf-8"),
            )
            events_path = self._events_path(session_id)
            archive.writestr(
                f"sessions/{session_id}/events.jsonl",
                events_path.read_text(encoding="utf-8") if events_path.exists() else "",
            )
            for h in sorted(hashes):
                archive.writestr(f"blobs/{h[:2]}/{h}", self.blobs.get_blob(h))
        return path

    def import_bundle(self, path: Path) -> Session:
        path = Path(path)
        if not path.exists():
            raise SessionNotFoundError(f"no bundle at {path}")
        with zipfile.ZipFile(path) as archive:
            names = archive.namelist()
            session_docs = [
                n for n in names if n.startswith("sessions/") and n.endswith("/session.json")
            ]
            if len(session_docs) != 1:
                raise CorruptRecordError("bundle must contain exactly one session document")
            session_id = session_docs[0].split("/")[1]
            if self.session_exists(session_id):
                raise IdCollisionError(f"session {session_id} already exists")
            target = self._session_dir(session_id)
            target.mkdir(parents=True, exist_ok=True)
            (target / "session.json").write_bytes(archive.read(session_docs[0]))
            events_name = f"sessions/{session_id}/events.jsonl"
            if events_name in names:
                (target / "events.jsonl").write_bytes(archive.read(events_name))
            for name in names:
                if name.startswith("blobs/") and not name.endswith("/"):
                    content_hash = name.rsplit("/", 1)[-1]
                    blob_path = self.blobs._path(content_hash)
                    if not blob_path.exists():
                        blob_path.parent.mkdir(parents=True, exist_ok=True)
                        blob_path.write_bytes(archive.read(name))
        session = self.load_session(session_id)
        for h in self.referenced_blobs(session):
            if not self.blobs.has_blob(h):
                raise MissingBlobError(f"bundle is missing referenced blob {h}")
        return session


def read_bundle_events(path: Path) -> tuple[str, list[EventRecord], dict]:
    """Read a bundle without importing it: (session_id, events, session doc)."""
    with zipfile.ZipFile(Path(path)) as archive:
        names = archive.namelist()
        session_docs = [
            n for n in names if n.startswith("sessions/") and n.endswith("/session.json")
        ]
        if len(session_docs) != 1:
            raise CorruptRecordError("bundle must contain exactly one session document")
        session_id = session_docs[0].split("/")[1]
        wrapper = json.loads(archive.read(session_docs[0]).decode("utf-8"))
        doc = wrapper.get("session")
        if doc is None or wrapper.get("digest") != payload_digest(doc):
            raise CorruptRecordError("bundle session document failed digest check")
        events: list[EventRecord] = []
        events_name = f"sessions/{session_id}/events.jsonl"
        if events_name in names:
            for line in archive.read(events_name).decode("utf-8").splitlines():
                if line.strip():
                    events.append(EventRecord.from_dict(json.loads(line)))
        return session_id, events, doc
