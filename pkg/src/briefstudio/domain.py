"""Core value types for the brief-to-design workflow.

Everything here is an immutable value object: mutation happens by building a
new version. The pipeline serializes per-session mutation, so these types can
be copied and shared freely between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from briefstudio.errors import (
    EmptyAfterTrimError,
    EmptyPartError,
    MissingCompositionError,
    NoColonError,
    NoTextError,
    TypeMismatchError,
    UnknownCardError,
    ValidationError,
)

_WS_RUN = re.compile(r"\s+")


def utc_now_iso() -> str:
    """Current wall-clock time as a UTC ISO-8601 string."""
    return datetime.now(timezone.utc).isoformat()


class RequirementField(Enum):
    """The eight fixed categories a design brief is structured into."""

    DELIVERABLE_FORMAT = "deliverable_format"
    BUSINESS_CONTEXT = "business_context"
    TARGET_AUDIENCE = "target_audience"
    CREATIVE_DIRECTION = "creative_direction"
    TONE_AND_MANNER = "tone_and_manner"
    KEYWORDS_AND_MOTIFS = "keywords_and_motifs"
    DESIGN_SPECIFICATIONS = "design_specifications"
    RESTRICTIONS = "restrictions"

    @property
    def key(self) -> str:
        return self.value

    @property
    def label(self) -> str:
        return _FIELD_LABELS[self]

    @property
    def description(self) -> str:
        return _FIELD_DESCRIPTIONS[self]

    @classmethod
    def from_key(cls, key: str) -> "RequirementField":
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(f"unknown requirement field: {key!r}")


_FIELD_LABELS = {
    RequirementField.DELIVERABLE_FORMAT: "Deliverable Format",
    RequirementField.BUSINESS_CONTEXT: "Business Context",
    RequirementField.TARGET_AUDIENCE: "Target Audience",
    RequirementField.CREATIVE_DIRECTION: "Creative Direction",
    RequirementField.TONE_AND_MANNER: "Tone and Manner",
    RequirementField.KEYWORDS_AND_MOTIFS: "Keywords and Motifs",
    RequirementField.DESIGN_SPECIFICATIONS: "Design Specifications",
    RequirementField.RESTRICTIONS: "Restrictions",
}

_FIELD_DESCRIPTIONS = {
    RequirementField.DELIVERABLE_FORMAT: (
        "The medium, size, and format of the final deliverable, such as a poster, banner, direct mail piece, or digital signage."
    ),
    RequirementField.BUSINESS_CONTEXT: (
        "The business, product, service, or event the design promotes, including brand and campaign background."
    ),
    RequirementField.TARGET_AUDIENCE: (
        "Who the design is meant to reach, including demographics, interests, and viewing situations."
    ),
    RequirementField.CREATIVE_DIRECTION: (
        "The overall creative concept or visual direction the design should pursue."
    ),
    RequirementField.TONE_AND_MANNER: (
        "The mood, feeling, and stylistic register the design should convey."
    ),
    RequirementField.KEYWORDS_AND_MOTIFS: (
        "Concrete keywords, phrases, and visual motifs that should appear in or inspire the design."
    ),
    RequirementField.DESIGN_SPECIFICATIONS: (
        "Explicit specifications such as colors, required copy, dates, logos, and other mandatory content."
    ),
    RequirementField.RESTRICTIONS: (
        "Constraints and prohibitions the design must respect."
    ),
}

CANONICAL_FIELD_ORDER: tuple[RequirementField, ...] = tuple(RequirementField)


class EntryOrigin(Enum):
    EXTRACTED = "extracted"
    RECOMMENDED = "recommended"
    MANUAL = "manual"


def normalize_entry_text(raw: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends.

    Original casing is preserved; use :func:`dedup_key` for equality checks.
    Raises EmptyAfterTrimError when nothing remains.
    """
    collapsed = _WS_RUN.sub(" ", raw).strip()
    if not collapsed:
        raise EmptyAfterTrimError("entry text is empty after trimming")
    return collapsed


def dedup_key(raw: str) -> str:
    """Case-folded, whitespace-collapsed key used for duplicate detection."""
    return normalize_entry_text(raw).casefold()


def parse_text_entry(raw: str) -> tuple[str, str]:
    """Split a text element value at the first colon into (role, content)."""
    if ":" not in raw:
        raise NoColonError(f"text entry lacks a colon: {raw!r}")
    role, _, content = raw.partition(":")
    role = role.strip()
    content = content.strip()
    if not role or not content:
        raise EmptyPartError(f"text entry has an empty role or content: {raw!r}")
    return role, content


def format_text_entry(role: str, content: str) -> str:
    return f"{role}: {content}"


@dataclass(frozen=True)
class RequirementEntry:
    id: str
    field: RequirementField
    text: str
    origin: EntryOrigin
    created_at: str

    def __post_init__(self):
        normalized = normalize_entry_text(self.text)
        object.__setattr__(self, "text", normalized)

    @property
    def dedup_key(self) -> str:
        return self.text.casefold()


@dataclass(frozen=True)
class RequirementCardSet:
    """Entries grouped by field; absent field means empty list."""

    entries_by_field: dict[RequirementField, tuple[RequirementEntry, ...]] = field(
        default_factory=dict
    )

    def __post_init__(self):
        # Canonical form: absent field == empty list, so drop empties.
        normalized = {
            f: tuple(entries) for f, entries in self.entries_by_field.items() if entries
        }
        object.__setattr__(self, "entries_by_field", normalized)
        for f, entries in normalized.items():
            keys = [e.dedup_key for e in entries]
            if len(keys) != len(set(keys)):
                raise ValidationError(f"duplicate entries in field {f.key}")
            for e in entries:
                if e.field is not f:
                    raise ValidationError(
                        f"entry {e.id} filed under {f.key} but tagged {e.field.key}"
                    )

    def entries(self, f: RequirementField) -> tuple[RequirementEntry, ...]:
        return self.entries_by_field.get(f, ())

    def all_entries(self) -> tuple[RequirementEntry, ...]:
        out: list[RequirementEntry] = []
        for f in CANONICAL_FIELD_ORDER:
            out.extend(self.entries(f))
        return tuple(out)

    def find(self, entry_id: str) -> Optional[RequirementEntry]:
        for e in self.all_entries():
            if e.id == entry_id:
                return e
        return None

    def has_duplicate(self, f: RequirementField, text: str) -> bool:
        key = dedup_key(text)
        return any(e.dedup_key == key for e in self.entries(f))

    def with_entry(self, entry: RequirementEntry) -> "RequirementCardSet":
        from briefstudio.errors import DuplicateEntryError

        if self.has_duplicate(entry.field, entry.text):
            raise DuplicateEntryError(
                f"field {entry.field.key} already holds an equivalent entry",
                details={"field": entry.field.key, "text": entry.text},
            )
        updated = dict(self.entries_by_field)
        updated[entry.field] = self.entries(entry.field) + (entry,)
        return RequirementCardSet(updated)

    def with_edited_entry(self, entry_id: str, new_text: str) -> "RequirementCardSet":
        from briefstudio.errors import DuplicateEntryError, UnknownEntryError

        target = self.find(entry_id)
        if target is None:
            raise UnknownEntryError(f"no entry with id {entry_id}")
        key = dedup_key(new_text)
        for sibling in self.entries(target.field):
            if sibling.id != entry_id and sibling.dedup_key == key:
                raise DuplicateEntryError(
                    f"field {target.field.key} already holds an equivalent entry"
                )
        updated = dict(self.entries_by_field)
        updated[target.field] = tuple(
            replace(e, text=normalize_entry_text(new_text)) if e.id == entry_id else e
            for e in self.entries(target.field)
        )
        return RequirementCardSet(updated)

    def without_entry(self, entry_id: str) -> "RequirementCardSet":
        from briefstudio.errors import UnknownEntryError

        target = self.find(entry_id)
        if target is None:
            raise UnknownEntryError(f"no entry with id {entry_id}")
        updated = dict(self.entries_by_field)
        updated[target.field] = tuple(
            e for e in self.entries(target.field) if e.id != entry_id
        )
        return RequirementCardSet(updated)

    def is_empty(self) -> bool:
        return not any(self.entries_by_field.values())


class ElementType(Enum):
    OBJECT = "object"
    BACKGROUND = "background"
    TEXT = "text"
    TYPOGRAPHY = "typography"
    COMPOSITION = "composition"

    @property
    def key(self) -> str:
        return self.value

    @property
    def label(self) -> str:
        return _ELEMENT_LABELS[self]

    @property
    def is_visual(self) -> bool:
        return self is not ElementType.TEXT

    @classmethod
    def from_key(cls, key: str) -> "ElementType":
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(f"unknown element type: {key!r}")


_ELEMENT_LABELS = {
    ElementType.OBJECT: "Object",
    ElementType.BACKGROUND: "Background",
    ElementType.TEXT: "Text",
    ElementType.TYPOGRAPHY: "Typography",
    ElementType.COMPOSITION: "Composition",
}

ELEMENT_TYPE_ORDER: tuple[ElementType, ...] = tuple(ElementType)


class CardStatus(Enum):
    DRAFTED = "drafted"
    ENHANCED = "enhanced"
    PREVIEWED = "previewed"
    FAILED = "failed"


class Orientation(Enum):
    PORTRAIT = "portrait"
    LANDSCAPE = "landscape"
    SQUARE = "square"

    @classmethod
    def from_key(cls, key: str) -> "Orientation":
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(f"unknown orientation: {key!r}")


@dataclass(frozen=True)
class ImageRef:
    content_hash: str
    width: int
    height: int
    media_type: str

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("image dimensions must be positive")
        if not self.content_hash:
            raise ValidationError("content_hash must be non-empty")


@dataclass(frozen=True)
class ElementCard:
    id: str
    type: ElementType
    rough_prompt: str
    reasoning: Optional[str] = None
    influencing_fields: tuple[RequirementField, ...] = ()
    enhanced_prompt: Optional[str] = None
    preview_ref: Optional[ImageRef] = None
    status: CardStatus = CardStatus.DRAFTED
    revision: int = 0
    parent_id: Optional[str] = None
    selected: bool = False
    error: Optional[str] = None

    def __post_init__(self):
        if not self.rough_prompt.strip():
            raise ValidationError("rough_prompt must be non-empty")
        if self.revision < 0:
            raise ValidationError("revision must be non-negative")
        if self.type is ElementType.TEXT:
            if self.enhanced_prompt is not None or self.preview_ref is not None:
                raise ValidationError(
                    "text cards carry textual content only; no enhanced prompt or preview"
                )
            # Must follow "Role: content".
            parse_text_entry(self.rough_prompt)
        if self.enhanced_prompt is not None and "\n" in self.enhanced_prompt:
            raise ValidationError("enhanced_prompt must be a single line")
        if self.status is CardStatus.PREVIEWED:
            if self.enhanced_prompt is None or self.preview_ref is None:
                raise ValidationError(
                    "previewed cards need both an enhanced prompt and a preview image"
                )


@dataclass(frozen=True)
class SelectionSet:
    """User-curated element ids feeding integration.

    composition_id may be None while the user is still picking; it becomes an
    error at validation time, not construction time.
    """

    composition_id: Optional[str] = None
    object_id: Optional[str] = None
    background_id: Optional[str] = None
    typography_id: Optional[str] = None
    text_ids: tuple[str, ...] = ()

    def referenced_ids(self) -> tuple[str, ...]:
        ids = [
            i
            for i in (
                self.composition_id,
                self.object_id,
                self.background_id,
                self.typography_id,
            )
            if i is not None
        ]
        ids.extend(self.text_ids)
        return tuple(ids)


@dataclass(frozen=True)
class ValidatedSelection:
    """A selection with each id bound to its card, frozen at validation time."""

    composition: ElementCard
    object: Optional[ElementCard]
    background: Optional[ElementCard]
    typography: Optional[ElementCard]
    texts: tuple[ElementCard, ...]

    def cards(self) -> tuple[ElementCard, ...]:
        out = [self.composition]
        for c in (self.background, self.typography, self.object):
            if c is not None:
                out.append(c)
        out.extend(self.texts)
        return tuple(out)

    def as_selection_set(self) -> SelectionSet:
        return SelectionSet(
            composition_id=self.composition.id,
            object_id=self.object.id if self.object else None,
            background_id=self.background.id if self.background else None,
            typography_id=self.typography.id if self.typography else None,
            text_ids=tuple(c.id for c in self.texts),
        )


@dataclass(frozen=True)
class IntegratedPrompt:
    id: str
    text: str
    selection_snapshot: ValidatedSelection
    created_at: str

    def __post_init__(self):
        if not self.text:
            raise ValidationError("integrated prompt must be non-empty")
        if "\n" in self.text:
            raise ValidationError("integrated prompt must be a single paragraph")


@dataclass(frozen=True)
class DesignArtifact:
    id: str
    image_ref: ImageRef
    integrated_prompt_id: str
    duration_ms: int
    created_at: str

    def __post_init__(self):
        if self.duration_ms < 0:
            raise ValidationError("duration_ms must be non-negative")


@dataclass(frozen=True)
class DeliverableContext:
    deliverable_format: str = ""
    orientation: Optional[Orientation] = Orientation.PORTRAIT


@dataclass(frozen=True)
class Session:
    id: str
    brief_text: str
    output_language: str
    deliverable_context: DeliverableContext
    created_at: str
    requirement_cards: RequirementCardSet = field(default_factory=RequirementCardSet)
    element_cards: dict[ElementType, tuple[ElementCard, ...]] = field(default_factory=dict)
    selection: Optional[SelectionSet] = None
    integrated_prompts: tuple[IntegratedPrompt, ...] = ()
    history: tuple[DesignArtifact, ...] = ()
    next_seq: int = 1

    def __post_init__(self):
        normalized = {
            t: tuple(cards) for t, cards in self.element_cards.items() if cards
        }
        object.__setattr__(self, "element_cards", normalized)

    def cards(self, t: ElementType) -> tuple[ElementCard, ...]:
        return self.element_cards.get(t, ())

    def all_cards(self) -> tuple[ElementCard, ...]:
        out: list[ElementCard] = []
        for t in ELEMENT_TYPE_ORDER:
            out.extend(self.cards(t))
        return tuple(out)

    def find_card(self, card_id: str) -> Optional[ElementCard]:
        for c in self.all_cards():
            if c.id == card_id:
                return c
        return None

    def find_integrated_prompt(self, prompt_id: str) -> Optional[IntegratedPrompt]:
        for p in self.integrated_prompts:
            if p.id == prompt_id:
                return p
        return None

    def next_id(self, prefix: str) -> tuple[str, "Session"]:
        """Mint a deterministic session-scoped id; returns (id, session with bumped counter)."""
        minted = f"{prefix}{self.next_seq:04d}"
        return minted, replace(self, next_seq=self.next_seq + 1)


def validate_selection(session: Session, sel: Optional[SelectionSet]) -> ValidatedSelection:
    """Re-check every selection invariant against the session's cards.

    Returns a snapshot binding each referenced id to its card so later stages
    survive card edits or deletions.
    """
    if sel is None or sel.composition_id is None:
        raise MissingCompositionError("selection requires a composition element")
    if not sel.text_ids:
        raise NoTextError("selection requires at least one text element")

    ids = sel.referenced_ids()
    if len(ids) != len(set(ids)):
        raise ValidationError("selection references a card more than once")

    def bind(card_id: str, expected: ElementType) -> ElementCard:
        card = session.find_card(card_id)
        if card is None:
            raise UnknownCardError(f"no card with id {card_id}", details={"card_id": card_id})
        if card.type is not expected:
            raise TypeMismatchError(
                f"card {card_id} is {card.type.key}, slot expects {expected.key}",
                details={"card_id": card_id, "expected": expected.key, "actual": card.type.key},
            )
        if not card.selected:
            raise ValidationError(f"card {card_id} is referenced but not selected")
        return card

    composition = bind(sel.composition_id, ElementType.COMPOSITION)
    obj = bind(sel.object_id, ElementType.OBJECT) if sel.object_id else None
    background = bind(sel.background_id, ElementType.BACKGROUND) if sel.background_id else None
    typography = bind(sel.typography_id, ElementType.TYPOGRAPHY) if sel.typography_id else None
    texts = tuple(bind(i, ElementType.TEXT) for i in sel.text_ids)

    return ValidatedSelection(
        composition=composition,
        object=obj,
        background=background,
        typography=typography,
        texts=texts,
    )


def derive_selection(session: Session) -> Optional[SelectionSet]:
    """Assemble a SelectionSet from card selected flags.

    Returns None unless the flags form a fully valid set (one composition,
    at least one text); a partial pick is not stored on the session.
    """
    def selected(t: ElementType) -> list[ElementCard]:
        return [c for c in session.cards(t) if c.selected]

    compositions = selected(ElementType.COMPOSITION)
    texts = selected(ElementType.TEXT)
    if len(compositions) != 1 or not texts:
        return None
    objs = selected(ElementType.OBJECT)
    backgrounds = selected(ElementType.BACKGROUND)
    typographies = selected(ElementType.TYPOGRAPHY)
    if len(objs) > 1 or len(backgrounds) > 1 or len(typographies) > 1:
        return None
    return SelectionSet(
        composition_id=compositions[0].id,
        object_id=objs[0].id if objs else None,
        background_id=backgrounds[0].id if backgrounds else None,
        typography_id=typographies[0].id if typographies else None,
        text_ids=tuple(c.id for c in texts),
    )


def collapse_to_single_line(text: str) -> str:
    """Replace newline-containing whitespace runs with single spaces."""
    return _WS_RUN.sub(lambda m: " " if "\n" in m.group(0) else m.group(0), text).strip()
