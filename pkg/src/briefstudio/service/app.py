"""HTTP API over the pipeline.

Long operations return a pollable job handle; synchronous endpoints cover
requirement-entry edits, selection, and reads. The HTTP layer holds no
business logic: each handler forwards to exactly one pipeline operation, so
the produced event log matches a direct pipeline invocation.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from briefstudio.analytics import artifact_prompt_texts, corpus_diversity, session_metrics
from briefstudio.domain import (
    ElementType,
    EntryOrigin,
    RequirementField,
    SelectionSet,
    validate_selection,
)
from briefstudio.errors import (
    BriefStudioError,
    CorruptRecordError,
    IdCollisionError,
    MissingBlobError,
    NotFoundError,
    ProviderError,
    RenderError,
    StateError,
    ValidationError,
)
from briefstudio.persistence import (
    Store,
    artifact_to_dict,
    card_set_to_dict,
    card_to_dict,
    entry_to_dict,
    integrated_prompt_to_dict,
    selection_to_dict,
    session_to_dict,
    validated_selection_to_dict,
)
from briefstudio.pipeline import JobRegistry, Pipeline


def error_status(exc: BriefStudioError) -> int:
    if isinstance(exc, NotFoundError):
        return 404
    if isinstance(exc, (StateError, IdCollisionError)):
        return 409
    if isinstance(exc, ProviderError):
        return 502
    if isinstance(exc, (ValidationError, RenderError)):
        return 422
    if isinstance(exc, (CorruptRecordError, MissingBlobError)):
        return 500
    return 500


class CreateSessionBody(BaseModel):
    brief_text: str
    output_language: str = "en"
    deliverable_format: str = ""
    orientation: Optional[str] = "portrait"


class CountBody(BaseModel):
    n: Optional[int] = None


class EntryBody(BaseModel):
    field: str
    text: str
    origin: str = "manual"


class EntryEditBody(BaseModel):
    text: str


class RoughPromptBody(BaseModel):
    rough_prompt: str


class SelectionBody(BaseModel):
    composition_id: Optional[str] = None
    object_id: Optional[str] = None
    background_id: Optional[str] = None
    typography_id: Optional[str] = None
    text_ids: list[str] = Field(default_factory=list)


def create_app(
    pipeline: Pipeline,
    registry: JobRegistry,
    store: Store,
    ui_dir: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="briefstudio", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(BriefStudioError)
    def handle_domain_error(request: Request, exc: BriefStudioError):
        return JSONResponse(
            status_code=error_status(exc),
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    def require_session(session_id: str) -> None:
        if not store.session_exists(session_id):
            from briefstudio.errors import SessionNotFoundError

            raise SessionNotFoundError(f"no session {session_id}")

    # -- sessions ------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = pipeline.create_session(
            body.brief_text,
            output_language=body.output_language,
            deliverable_format=body.deliverable_format,
            orientation=body.orientation,
        )
        return session_to_dict(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_to_dict(store.load_session(session_id))

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        session = store.load_session(session_id)
        items = []
        for artifact in session.history:
            prompt = session.find_integrated_prompt(artifact.integrated_prompt_id)
            items.append(
                {
                    "artifact": artifact_to_dict(artifact),
                    "integrated_prompt": integrated_prompt_to_dict(prompt) if prompt else None,
                }
            )
        return {"history": items}

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str):
        require_session(session_id)
        return {"events": [e.to_dict() for e in store.read_events(session_id)]}

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        session = store.load_session(session_id)
        events = store.read_events(session_id)
        metrics = session_metrics(session, events)
        texts = artifact_prompt_texts(session)
        prompt_diversity = None
        if len(texts) >= 2:
            report = corpus_diversity(
                texts,
                pipeline.providers.embedder,
                ids=[a.id for a in session.history],
            )
            prompt_diversity = report.to_dict()
        return {"metrics": metrics.to_dict(), "prompt_diversity": prompt_diversity}

    # -- step 1: requirements ----------------------------------------------------

    @app.post("/sessions/{session_id}/requirements/extract", status_code=202)
    def extract(session_id: str):
        require_session(session_id)

        def run():
            card_set = pipeline.extract_requirements(session_id)
            return {"requirement_cards": card_set_to_dict(card_set)}

        return registry.submit("extract", run).to_dict()

    @app.post("/sessions/{session_id}/requirements/{field}/recommend", status_code=202)
    def recommend_requirements(session_id: str, field: str, body: CountBody):
        require_session(session_id)
        target = RequirementField.from_key(field)

        def run():
            candidates = pipeline.recommend_requirements(session_id, target, body.n)
            return {"candidates": [entry_to_dict(e) for e in candidates]}

        return registry.submit("recommend_requirements", run).to_dict()

    @app.post("/sessions/{session_id}/requirements/entries")
    def add_entry(session_id: str, body: EntryBody):
        target = RequirementField.from_key(body.field)
        if body.origin == EntryOrigin.RECOMMENDED.value:
            card_set = pipeline.accept_candidate(session_id, target, body.text)
        elif body.origin == EntryOrigin.MANUAL.value:
            card_set = pipeline.add_manual_entry(session_id, target, body.text)
        else:
            raise ValidationError(f"origin must be manual or recommended, got {body.origin!r}")
        return {"requirement_cards": card_set_to_dict(card_set)}

    @app.patch("/sessions/{session_id}/requirements/entries/{entry_id}")
    def edit_entry(session_id: str, entry_id: str, body: EntryEditBody):
        card_set = pipeline.edit_entry(session_id, entry_id, body.text)
        return {"requirement_cards": card_set_to_dict(card_set)}

    @app.delete("/sessions/{session_id}/requirements/entries/{entry_id}")
    def delete_entry(session_id: str, entry_id: str):
        card_set = pipeline.delete_entry(session_id, entry_id)
        return {"requirement_cards": card_set_to_dict(card_set)}

    # -- step 2: elements ----------------------------------------------------------

    @app.post("/sessions/{session_id}/elements/{element_type}/recommend", status_code=202)
    def recommend_elements(session_id: str, element_type: str, body: CountBody):
        require_session(session_id)
        target = ElementType.from_key(element_type)

        def run():
            cards = pipeline.recommend_and_preview(session_id, target, body.n)
            return {"cards": [card_to_dict(c) for c in cards]}

        return registry.submit("recommend_elements", run).to_dict()

    @app.post("/sessions/{session_id}/elements/{element_type}", status_code=202)
    def add_card(session_id: str, element_type: str, body: RoughPromptBody):
        require_session(session_id)
        target = ElementType.from_key(element_type)

        def run():
            card = pipeline.add_manual_card(session_id, target, body.rough_prompt)
            return {"card": card_to_dict(card)}

        return registry.submit("enhance_preview", run).to_dict()

    @app.post("/sessions/{session_id}/elements/{card_id}/edit", status_code=202)
    def edit_card(session_id: str, card_id: str, body: RoughPromptBody):
        require_session(session_id)

        def run():
            card = pipeline.edit_rough(session_id, card_id, body.rough_prompt)
            return {"card": card_to_dict(card)}

        return registry.submit("enhance_preview", run).to_dict()

    @app.post("/sessions/{session_id}/elements/{card_id}/regenerate", status_code=202)
    def regenerate_card(session_id: str, card_id: str):
        require_session(session_id)

        def run():
            card = pipeline.regenerate_preview(session_id, card_id)
            return {"card": card_to_dict(card)}

        return registry.submit("enhance_preview", run).to_dict()

    @app.delete("/sessions/{session_id}/elements/{card_id}")
    def delete_card(session_id: str, card_id: str):
        pipeline.delete_card(session_id, card_id)
        return {"ok": True}

    @app.put("/sessions/{session_id}/selection")
    def put_selection(session_id: str, body: SelectionBody):
        validated = pipeline.set_selection(
            session_id,
            SelectionSet(
                composition_id=body.composition_id,
                object_id=body.object_id,
                background_id=body.background_id,
                typography_id=body.typography_id,
                text_ids=tuple(body.text_ids),
            ),
        )
        return {
            "selection": selection_to_dict(validated.as_selection_set()),
            "validated": validated_selection_to_dict(validated),
        }

    # -- step 3: integration ----------------------------------------------------------

    @app.post("/sessions/{session_id}/integrate", status_code=202)
    def integrate(session_id: str):
        # Cheap validation up front so an unusable selection is a synchronous
        # 409 instead of a failed job.
        session = store.load_session(session_id)
        validate_selection(session, session.selection)

        def run():
            artifact = pipeline.integrate_and_generate(session_id)
            session = store.load_session(session_id)
            prompt = session.find_integrated_prompt(artifact.integrated_prompt_id)
            return {
                "artifact": artifact_to_dict(artifact),
                "integrated_prompt": integrated_prompt_to_dict(prompt) if prompt else None,
            }

        return registry.submit("integrate", run).to_dict()

    @app.post("/sessions/{session_id}/regenerate-design", status_code=202)
    def regenerate_design(session_id: str):
        session = store.load_session(session_id)
        if not session.history:
            from briefstudio.errors import NoPriorArtifactError

            raise NoPriorArtifactError("regenerate needs a prior successful design")
        validate_selection(session, session.selection)

        def run():
            artifact = pipeline.regenerate_design(session_id)
            session = store.load_session(session_id)
            prompt = session.find_integrated_prompt(artifact.integrated_prompt_id)
            return {
                "artifact": artifact_to_dict(artifact),
                "integrated_prompt": integrated_prompt_to_dict(prompt) if prompt else None,
            }

        return registry.submit("regenerate_design", run).to_dict()

    # -- jobs and blobs ---------------------------------------------------------------

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        return registry.get(job_id).to_dict()

    @app.get("/images/{content_hash}")
    def get_image(content_hash: str):
        data = store.blobs.get_blob(content_hash)
        return Response(content=data, media_type="image/png")

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="studio")

    return app
