"""Orchestration of the three-step workflow over persisted sessions.

Step 1 structures the brief into requirement cards, step 2 explores element
cards with enhanced prompts and preview images, step 3 integrates the
selected elements composition-first into a final design image.

Per-session mutations are serialized behind a lock; every provider call and
mutation appends one event to the session's append-only log, which is enough
to replay revision counts, selection, and history length.
"""

from __future__ import annotations

import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import date
from typing import Any, Callable, Optional

from briefstudio.domain import (
    CANONICAL_FIELD_ORDER,
    CardStatus,
    DeliverableContext,
    DesignArtifact,
    ELEMENT_TYPE_ORDER,
    ElementCard,
    ElementType,
    EntryOrigin,
    IntegratedPrompt,
    Orientation,
    RequirementCardSet,
    RequirementEntry,
    RequirementField,
    SelectionSet,
    Session,
    ValidatedSelection,
    collapse_to_single_line,
    dedup_key,
    derive_selection,
    parse_text_entry,
    utc_now_iso,
    validate_selection,
)
from briefstudio.errors import (
    BriefStudioError,
    EmptyBriefError,
    EmptyPartError,
    InvalidTextFormatError,
    JobNotFoundError,
    NoColonError,
    NoPriorArtifactError,
    NoTextError,
    MissingCompositionError,
    PreconditionError,
    TypeMismatchError,
    UnknownCardError,
    UnsupportedForTextError,
    ValidationError,
)
from briefstudio.persistence import Store, selection_to_dict
from briefstudio.prompts import (
    ENHANCER_KINDS,
    canonical_field_specs,
    render_element_recommender,
    render_enhancer,
    render_integrator,
    render_requirement_extractor,
    render_requirement_recommender,
    RenderedPrompt,
)
from briefstudio.providers import ProviderSet, SchemaId, StructuredSchema

PREVIEW_SIZE = (512, 512)
FINAL_SIZES = {
    Orientation.PORTRAIT: (768, 1152),
    Orientation.LANDSCAPE: (1152, 768),
    Orientation.SQUARE: (1024, 1024),
}


@dataclass(frozen=True)
class PipelineConfig:
    element_candidates: int = 4
    requirement_candidates: int = 3
    preview_size: tuple[int, int] = PREVIEW_SIZE

    def final_size(self, orientation: Optional[Orientation]) -> tuple[int, int]:
        return FINAL_SIZES[orientation or Orientation.PORTRAIT]


class Pipeline:
    def __init__(
        self,
        store: Store,
        providers: ProviderSet,
        config: Optional[PipelineConfig] = None,
        today: Callable[[], date] = date.today,
    ):
        self.store = store
        self.providers = providers
        self.config = config or PipelineConfig()
        self.today = today
        self._locks: dict[str, threading.RLock] = {}
        self._locks_guard = threading.Lock()

    # -- plumbing ------------------------------------------------------------

    def _lock(self, session_id: str) -> threading.RLock:
        with self._locks_guard:
            if session_id not in self._locks:
                self._locks[session_id] = threading.RLock()
            return self._locks[session_id]

    def _event(
        self,
        session_id: str,
        kind: str,
        detail: Optional[dict] = None,
        duration_ms: Optional[int] = None,
    ) -> None:
        self.store.append_event(session_id, kind, detail or {}, duration_ms)

    def _chat(self, session_id: str, prompt: RenderedPrompt, schema: StructuredSchema) -> Any:
        from briefstudio.providers import prompt_digest

        chat = self.providers.chat
        before = len(chat.calls)
        started = time.monotonic()
        try:
            payload = chat.complete_structured(prompt, schema)
            return payload
        finally:
            self._event(
                session_id,
                "complete_structured",
                {
                    "schema": schema.schema_id.value,
                    "prompt_digest": prompt_digest(prompt.text),
                    "attempts": len(chat.calls) - before,
                },
                duration_ms=int((time.monotonic() - started) * 1000),
            )

    def _image(
        self, session_id: str, prompt_text: str, width: int, height: int, nonce: int
    ):
        from briefstudio.providers import prompt_digest

        started = time.monotonic()
        ref = self.providers.image.generate_image(prompt_text, width, height, nonce=nonce)
        self._event(
            session_id,
            "generate_image",
            {
                "prompt_digest": prompt_digest(prompt_text),
                "width": width,
                "height": height,
                "nonce": nonce,
                "content_hash": ref.content_hash,
            },
            duration_ms=int((time.monotonic() - started) * 1000),
        )
        return ref

    # -- sessions --------------------------------------------------------------

    def create_session(
        self,
        brief_text: str,
        output_language: str = "en",
        deliverable_format: str = "",
        orientation: Optional[str] = "portrait",
        session_id: Optional[str] = None,
    ) -> Session:
        session_id = session_id or uuid.uuid4().hex[:12]
        if self.store.session_exists(session_id):
            from briefstudio.errors import IdCollisionError

            raise IdCollisionError(f"session {session_id} already exists")
        session = Session(
            id=session_id,
            brief_text=brief_text,
            output_language=output_language,
            deliverable_context=DeliverableContext(
                deliverable_format=deliverable_format,
                orientation=Orientation.from_key(orientation) if orientation else None,
            ),
            created_at=utc_now_iso(),
        )
        self.store.save_session(session)
        self._event(
            session_id,
            "session_created",
            {
                "output_language": output_language,
                "deliverable_format": deliverable_format,
                "orientation": orientation,
            },
        )
        return session

    def get_session(self, session_id: str) -> Session:
        return self.store.load_session(session_id)

    def events(self, session_id: str):
        return self.store.read_events(session_id)

    # -- step 1: requirements ----------------------------------------------------

    def extract_requirements(
        self, session_id: str, brief_text: Optional[str] = None
    ) -> RequirementCardSet:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            brief = brief_text if brief_text is not None else session.brief_text
            if not brief.strip():
                raise EmptyBriefError("cannot extract requirements from an empty brief")
            prompt = render_requirement_extractor(
                session.output_language, canonical_field_specs(), brief
            )
            self._event(session_id, "render_extractor", {"template": prompt.kind.value})
            payload = self._chat(
                session_id, prompt, StructuredSchema(SchemaId.EXTRACTED_REQUIREMENTS)
            )
            entries: dict[RequirementField, tuple[RequirementEntry, ...]] = {}
            entry_ids: list[str] = []
            now = utc_now_iso()
            for f in CANONICAL_FIELD_ORDER:
                collected: list[RequirementEntry] = []
                seen: set[str] = set()
                for value in payload.get(f.key, []):
                    try:
                        key = dedup_key(value)
                    except BriefStudioError:
                        continue
                    if key in seen:
                        continue
                    seen.add(key)
                    entry_id, session = session.next_id("e")
                    collected.append(
                        RequirementEntry(
                            id=entry_id,
                            field=f,
                            text=value,
                            origin=EntryOrigin.EXTRACTED,
                            created_at=now,
                        )
                    )
                    entry_ids.append(entry_id)
                if collected:
                    entries[f] = tuple(collected)
            card_set = RequirementCardSet(entries)
            session = replace(session, requirement_cards=card_set)
            self.store.save_session(session)
            self._event(session_id, "entries_extracted", {"entry_ids": entry_ids})
            return card_set

    def recommend_requirements(
        self, session_id: str, field: RequirementField, n: Optional[int] = None
    ) -> list[RequirementEntry]:
        n = n if n is not None else self.config.requirement_candidates
        if n < 1:
            raise PreconditionError("candidate count must be at least 1")
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            prompt = render_requirement_recommender(
                n, session.output_language, session.requirement_cards, field, field.description
            )
            self._event(
                session_id,
                "render_requirement_recommender",
                {"template": prompt.kind.value, "field": field.key, "n": n},
            )
            payload = self._chat(
                session_id, prompt, StructuredSchema(SchemaId.REQUIREMENT_CANDIDATES, count=n)
            )
            existing = {e.dedup_key for e in session.requirement_cards.entries(field)}
            now = utc_now_iso()
            candidates: list[RequirementEntry] = []
            for item in payload:
                try:
                    key = dedup_key(item["value"])
                except BriefStudioError:
                    continue
                if key in existing:
                    continue
                existing.add(key)
                entry_id, session = session.next_id("e")
                candidates.append(
                    RequirementEntry(
                        id=entry_id,
                        field=field,
                        text=item["value"],
                        origin=EntryOrigin.RECOMMENDED,
                        created_at=now,
                    )
                )
            self.store.save_session(session)
            self._event(
                session_id,
                "requirements_recommended",
                {"field": field.key, "count": len(candidates)},
            )
            return candidates

    def _add_entry(
        self, session_id: str, field: RequirementField, text: str, origin: EntryOrigin
    ) -> RequirementCardSet:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            entry_id, session = session.next_id("e")
            entry = RequirementEntry(
                id=entry_id,
                field=field,
                text=text,
                origin=origin,
                created_at=utc_now_iso(),
            )
            card_set = session.requirement_cards.with_entry(entry)
            session = replace(session, requirement_cards=card_set)
            self.store.save_session(session)
            self._event(
                session_id,
                "entry_added",
                {
                    "entry_id": entry.id,
                    "field": field.key,
                    "origin": origin.value,
                    "text": entry.text,
                },
            )
            return card_set

    def add_manual_entry(
        self, session_id: str, field: RequirementField, text: str
    ) -> RequirementCardSet:
        return self._add_entry(session_id, field, text, EntryOrigin.MANUAL)

    def accept_candidate(
        self, session_id: str, field: RequirementField, text: str
    ) -> RequirementCardSet:
        return self._add_entry(session_id, field, text, EntryOrigin.RECOMMENDED)

    def edit_entry(self, session_id: str, entry_id: str, text: str) -> RequirementCardSet:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            card_set = session.requirement_cards.with_edited_entry(entry_id, text)
            session = replace(session, requirement_cards=card_set)
            self.store.save_session(session)
            self._event(
                session_id,
                "entry_edited",
                {"entry_id": entry_id, "text": card_set.find(entry_id).text},
            )
            return card_set

    def delete_entry(self, session_id: str, entry_id: str) -> RequirementCardSet:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            card_set = session.requirement_cards.without_entry(entry_id)
            session = replace(session, requirement_cards=card_set)
            self.store.save_session(session)
            self._event(session_id, "entry_deleted", {"entry_id": entry_id})
            return card_set

    # -- step 2: elements ----------------------------------------------------------

    def recommend_elements(
        self, session_id: str, element_type: ElementType, n: Optional[int] = None
    ) -> list[ElementCard]:
        n = n if n is not None else self.config.element_candidates
        if n < 1:
            raise PreconditionError("candidate count must be at least 1")
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            predetermined = [c.rough_prompt for c in session.cards(element_type)]
            prompt = render_element_recommender(
                element_type,
                n,
                session.output_language,
                self.today(),
                session.requirement_cards,
                predetermined,
            )
            self._event(
                session_id,
                "render_element_recommender",
                {
                    "template": prompt.kind.value,
                    "type": element_type.key,
                    "n": n,
                    "predetermined_count": len(predetermined),
                },
            )
            payload = self._chat(
                session_id, prompt, StructuredSchema(SchemaId.ELEMENT_CANDIDATES, count=n)
            )
            new_cards: list[ElementCard] = []
            for item in payload:
                value = item["value"]
                if element_type is ElementType.TEXT:
                    try:
                        parse_text_entry(value)
                    except (NoColonError, EmptyPartError):
                        continue  # defensive: drop malformed text candidates
                card_id, session = session.next_id("c")
                new_cards.append(
                    ElementCard(
                        id=card_id,
                        type=element_type,
                        rough_prompt=value,
                        reasoning=item.get("reasoning"),
                        influencing_fields=tuple(
                            RequirementField.from_key(k)
                            for k in item.get("influencing_fields", [])
                        ),
                    )
                )
            cards = dict(session.element_cards)
            cards[element_type] = session.cards(element_type) + tuple(new_cards)
            session = replace(session, element_cards=cards)
            self.store.save_session(session)
            self._event(
                session_id,
                "cards_recommended",
                {"type": element_type.key, "card_ids": [c.id for c in new_cards]},
            )
            return new_cards

    def recommend_and_preview(
        self, session_id: str, element_type: ElementType, n: Optional[int] = None
    ) -> list[ElementCard]:
        """Recommend a batch, then enhance and preview each visual card.

        Backs the recommend endpoint so fresh cards arrive with previews.
        """
        cards = self.recommend_elements(session_id, element_type, n)
        if element_type.is_visual:
            cards = [self.enhance_and_preview(session_id, c.id) for c in cards]
        return cards

    def add_manual_card(
        self, session_id: str, element_type: ElementType, rough_prompt: str
    ) -> ElementCard:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            if element_type is ElementType.TEXT:
                try:
                    parse_text_entry(rough_prompt)
                except (NoColonError, EmptyPartError) as exc:
                    raise InvalidTextFormatError(
                        'text elements must follow "Role: content"'
                    ) from exc
            card_id, session = session.next_id("c")
            card = ElementCard(id=card_id, type=element_type, rough_prompt=rough_prompt)
            cards = dict(session.element_cards)
            cards[element_type] = session.cards(element_type) + (card,)
            session = replace(session, element_cards=cards)
            self.store.save_session(session)
            self._event(
                session_id, "card_added", {"card_id": card.id, "type": element_type.key}
            )
            if element_type.is_visual:
                _, card = self._enhance_card(session, card)
            return card

    def _replace_card(self, session: Session, card: ElementCard) -> Session:
        cards = dict(session.element_cards)
        cards[card.type] = tuple(
            card if c.id == card.id else c for c in session.cards(card.type)
        )
        return replace(session, element_cards=cards)

    def _enhance_card(
        self, session: Session, card: ElementCard
    ) -> tuple[Session, ElementCard]:
        """Render the type's enhancer, obtain the enhanced line, generate the
        preview. On failure the card is persisted as failed and the error is
        re-raised."""
        session_id = session.id
        try:
            ctx = session.deliverable_context
            kind = ENHANCER_KINDS[card.type]
            prompt = render_enhancer(
                kind,
                card.rough_prompt,
                session.output_language,
                deliverable_format=ctx.deliverable_format or None,
                orientation=ctx.orientation.value if ctx.orientation else None,
            )
            self._event(
                session_id,
                "render_enhancer",
                {"template": kind.value, "card_id": card.id},
            )
            line = self._chat(
                session_id, prompt, StructuredSchema(SchemaId.ENHANCED_LINE)
            )
            enhanced = replace(card, enhanced_prompt=line, status=CardStatus.ENHANCED)
            width, height = self.config.preview_size
            ref = self._image(session_id, line, width, height, nonce=card.revision)
            done = replace(
                enhanced, preview_ref=ref, status=CardStatus.PREVIEWED, error=None
            )
            session = self._replace_card(session, done)
            self.store.save_session(session)
            self._event(
                session_id,
                "card_previewed",
                {"card_id": done.id, "content_hash": ref.content_hash},
            )
            return session, done
        except BriefStudioError as exc:
            failed = replace(
                card,
                status=CardStatus.FAILED,
                error=f"{exc.code}: {exc.message}",
                preview_ref=None,
            )
            session = self._replace_card(session, failed)
            self.store.save_session(session)
            self._event(
                session_id, "card_failed", {"card_id": card.id, "code": exc.code}
            )
            raise

    def enhance_and_preview(self, session_id: str, card_id: str) -> ElementCard:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            card = session.find_card(card_id)
            if card is None:
                raise UnknownCardError(f"no card with id {card_id}")
            if card.type is ElementType.TEXT:
                return card  # text cards carry no visuals; zero provider calls
            if card.status not in (
                CardStatus.DRAFTED,
                CardStatus.ENHANCED,
                CardStatus.FAILED,
            ):
                raise PreconditionError(
                    f"card {card_id} is {card.status.value}; use regenerate instead"
                )
            _, card = self._enhance_card(session, card)
            return card

    def edit_rough(self, session_id: str, card_id: str, new_rough: str) -> ElementCard:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            card = session.find_card(card_id)
            if card is None:
                raise UnknownCardError(f"no card with id {card_id}")
            if not new_rough.strip():
                raise ValidationError("rough prompt must be non-empty")
            if card.type is ElementType.TEXT:
                try:
                    parse_text_entry(new_rough)
                except (NoColonError, EmptyPartError) as exc:
                    raise InvalidTextFormatError(
                        'text elements must follow "Role: content"'
                    ) from exc
            edited = replace(
                card,
                rough_prompt=new_rough,
                revision=card.revision + 1,
                enhanced_prompt=None,
                preview_ref=None,
                status=CardStatus.DRAFTED,
                error=None,
            )
            session = self._replace_card(session, edited)
            self.store.save_session(session)
            self._event(
                session_id,
                "card_edited",
                {"card_id": card_id, "revision": edited.revision},
            )
            if edited.type.is_visual:
                _, edited = self._enhance_card(session, edited)
            return edited

    def regenerate_preview(self, session_id: str, card_id: str) -> ElementCard:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            card = session.find_card(card_id)
            if card is None:
                raise UnknownCardError(f"no card with id {card_id}")
            if card.type is ElementType.TEXT:
                raise UnsupportedForTextError("text cards have no preview to regenerate")
            if card.status not in (
                CardStatus.ENHANCED,
                CardStatus.PREVIEWED,
                CardStatus.FAILED,
            ):
                raise PreconditionError(
                    f"card {card_id} has no prior enhancement to regenerate"
                )
            fresh = replace(
                card,
                revision=card.revision + 1,
                parent_id=card.id,
                enhanced_prompt=None,
                preview_ref=None,
                status=CardStatus.DRAFTED,
                error=None,
            )
            session = self._replace_card(session, fresh)
            self.store.save_session(session)
            self._event(
                session_id,
                "card_regenerated",
                {"card_id": card_id, "revision": fresh.revision},
            )
            _, fresh = self._enhance_card(session, fresh)
            return fresh

    def delete_card(self, session_id: str, card_id: str) -> Session:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            card = session.find_card(card_id)
            if card is None:
                raise UnknownCardError(f"no card with id {card_id}")
            cards = dict(session.element_cards)
            cards[card.type] = tuple(c for c in session.cards(card.type) if c.id != card_id)
            session = replace(session, element_cards=cards)
            session = replace(session, selection=derive_selection(session))
            self.store.save_session(session)
            self._event(session_id, "card_deleted", {"card_id": card_id})
            if card.selected:
                self._event(
                    session_id,
                    "selection_changed",
                    {
                        "selection": selection_to_dict(session.selection)
                        if session.selection
                        else None
                    },
                )
            return session

    def set_selected(self, session_id: str, card_id: str, flag: bool) -> Session:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            card = session.find_card(card_id)
            if card is None:
                raise UnknownCardError(f"no card with id {card_id}")
            if flag and card.type.is_visual:
                # Slot semantics: picking a visual card replaces the previous
                # pick of that type.
                for other in session.cards(card.type):
                    if other.selected and other.id != card_id:
                        session = self._replace_card(session, replace(other, selected=False))
            session = self._replace_card(session, replace(card, selected=flag))
            session = replace(session, selection=derive_selection(session))
            self.store.save_session(session)
            self._event(
                session_id,
                "selection_changed",
                {
                    "card_id": card_id,
                    "selected": flag,
                    "selection": selection_to_dict(session.selection)
                    if session.selection
                    else None,
                },
            )
            return session

    def set_selection(self, session_id: str, selection: SelectionSet) -> ValidatedSelection:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            if selection.composition_id is None:
                raise MissingCompositionError("selection requires a composition element")
            if not selection.text_ids:
                raise NoTextError("selection requires at least one text element")
            ids = selection.referenced_ids()
            if len(ids) != len(set(ids)):
                raise ValidationError("selection references a card more than once")
            slots = [
                (selection.composition_id, ElementType.COMPOSITION),
                (selection.object_id, ElementType.OBJECT),
                (selection.background_id, ElementType.BACKGROUND),
                (selection.typography_id, ElementType.TYPOGRAPHY),
            ] + [(text_id, ElementType.TEXT) for text_id in selection.text_ids]
            for card_id, expected in slots:
                if card_id is None:
                    continue
                card = session.find_card(card_id)
                if card is None:
                    raise UnknownCardError(f"no card with id {card_id}")
                if card.type is not expected:
                    raise TypeMismatchError(
                        f"card {card_id} is {card.type.key}, slot expects {expected.key}"
                    )
            referenced = set(ids)
            for card in session.all_cards():
                if card.selected != (card.id in referenced):
                    session = self._replace_card(
                        session, replace(card, selected=card.id in referenced)
                    )
            session = replace(session, selection=selection)
            self.store.save_session(session)
            self._event(
                session_id,
                "selection_changed",
                {"selection": selection_to_dict(selection)},
            )
            return validate_selection(session, selection)

    # -- step 3: integration ----------------------------------------------------------

    def _integrate(self, session: Session) -> DesignArtifact:
        session_id = session.id
        validated = validate_selection(session, session.selection)
        started = time.monotonic()
        prompt = render_integrator(validated, session.output_language)
        self._event(session_id, "render_integrator", {"template": prompt.kind.value})
        paragraph = self._chat(
            session_id, prompt, StructuredSchema(SchemaId.INTEGRATED_PARAGRAPH)
        )
        text = collapse_to_single_line(paragraph)
        width, height = self.config.final_size(session.deliverable_context.orientation)
        nonce = len(session.history)
        ref = self._image(session_id, text, width, height, nonce=nonce)
        duration_ms = int((time.monotonic() - started) * 1000)
        now = utc_now_iso()
        prompt_id, session = session.next_id("p")
        integrated = IntegratedPrompt(
            id=prompt_id, text=text, selection_snapshot=validated, created_at=now
        )
        artifact_id, session = session.next_id("a")
        artifact = DesignArtifact(
            id=artifact_id,
            image_ref=ref,
            integrated_prompt_id=prompt_id,
            duration_ms=duration_ms,
            created_at=now,
        )
        session = replace(
            session,
            integrated_prompts=session.integrated_prompts + (integrated,),
            history=session.history + (artifact,),
        )
        self.store.save_session(session)
        self._event(session_id, "integrated_prompt_created", {"prompt_id": prompt_id})
        self._event(
            session_id,
            "artifact_added",
            {
                "artifact_id": artifact_id,
                "integrated_prompt_id": prompt_id,
                "content_hash": ref.content_hash,
            },
        )
        return artifact

    def integrate_and_generate(self, session_id: str) -> DesignArtifact:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            return self._integrate(session)

    def regenerate_design(self, session_id: str) -> DesignArtifact:
        with self._lock(session_id):
            session = self.store.load_session(session_id)
            if not session.history:
                raise NoPriorArtifactError(
                    "regenerate needs a prior successful design; generate first"
                )
            return self._integrate(session)

    # -- batch mode ---------------------------------------------------------------

    def run_auto(
        self,
        brief_text: str,
        output_language: str = "en",
        deliverable_format: str = "poster",
        orientation: str = "portrait",
        n: Optional[int] = None,
        session_id: Optional[str] = None,
    ) -> Session:
        """Desk-scale batch run: extract, recommend per type, enhance visuals,
        select the first candidate per visual type plus all text candidates,
        then integrate. The partial session stays persisted on failure."""
        if not brief_text.strip():
            raise EmptyBriefError("brief must be non-empty")
        session = self.create_session(
            brief_text,
            output_language=output_language,
            deliverable_format=deliverable_format,
            orientation=orientation,
            session_id=session_id,
        )
        self.extract_requirements(session.id)
        for element_type in ELEMENT_TYPE_ORDER:
            self.recommend_elements(session.id, element_type, n)
        current = self.store.load_session(session.id)
        for element_type in ELEMENT_TYPE_ORDER:
            if not element_type.is_visual:
                continue
            for card in current.cards(element_type):
                self.enhance_and_preview(session.id, card.id)
        current = self.store.load_session(session.id)
        for element_type in ELEMENT_TYPE_ORDER:
            cards = current.cards(element_type)
            if not cards:
                continue
            if element_type is ElementType.TEXT:
                for card in cards:
                    self.set_selected(session.id, card.id, True)
            else:
                self.set_selected(session.id, cards[0].id, True)
        self.integrate_and_generate(session.id)
        return self.store.load_session(session.id)


# ---------------------------------------------------------------------------
# background jobs

_JOB_STATES = ("queued", "running", "done", "failed")


@dataclass
class JobHandle:
    job_id: str
    kind: str
    state: str = "queued"
    result: Any = None
    error: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "state": self.state,
            "result": self.result,
            "error": self.error,
        }


class JobRegistry:
    """Bounded worker pool with pollable handles for long operations."""

    def __init__(self, workers: int = 4):
        self._executor = ThreadPoolExecutor(max_workers=workers)
        self._jobs: dict[str, JobHandle] = {}
        self._lock = threading.Lock()

    def submit(self, kind: str, fn: Callable[[], Any]) -> JobHandle:
        handle = JobHandle(job_id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._jobs[handle.job_id] = handle

        def run():
            with self._lock:
                handle.state = "running"
            try:
                result = fn()
            except BriefStudioError as exc:
                with self._lock:
                    handle.state = "failed"
                    handle.error = {"code": exc.code, "message": exc.message}
            except Exception as exc:  # unexpected bug; keep the registry alive
                with self._lock:
                    handle.state = "failed"
                    handle.error = {"code": "internal_error", "message": str(exc)}
            else:
                with self._lock:
                    handle.state = "done"
                    handle.result = result

        self._executor.submit(run)
        return handle

    def get(self, job_id: str) -> JobHandle:
        with self._lock:
            handle = self._jobs.get(job_id)
        if handle is None:
            raise JobNotFoundError(f"no job {job_id}")
        return handle

    def wait(self, job_id: str, timeout_s: float = 10.0) -> JobHandle:
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            handle = self.get(job_id)
            if handle.state in ("done", "failed"):
                return handle
            time.sleep(0.005)
        return self.get(job_id)

    def shutdown(self):
        self._executor.shutdown(wait=True)
