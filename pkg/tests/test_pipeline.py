from __future__ import annotations

import pytest

from briefstudio.domain import (
    CardStatus,
    ElementType,
    EntryOrigin,
    RequirementField,
)
from briefstudio.errors import (
    DuplicateEntryError,
    EmptyBriefError,
    InvalidTextFormatError,
    JobNotFoundError,
    MissingCompositionError,
    MissingContextError,
    NoPriorArtifactError,
    PreconditionError,
    UnknownCardError,
    UnknownEntryError,
    UnsupportedForTextError,
)
from briefstudio.fixtures import brief_text
from briefstudio.pipeline import JobRegistry, Pipeline
from briefstudio.prompts import serialize_requirements
from conftest import make_pipeline, strip_volatile
from briefstudio.persistence import card_set_to_dict


def capture_prompts(pipe: Pipeline) -> list:
    seen = []
    original = pipe.providers.chat.complete_structured

    def wrapper(prompt, schema):
        seen.append(prompt)
        return original(prompt, schema)

    pipe.providers.chat.complete_structured = wrapper
    return seen


class TestExtract:
    def test_t2_brief_fills_deliverable_format(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t2"))
        cards = pipeline.extract_requirements(session.id)
        assert cards.entries(RequirementField.DELIVERABLE_FORMAT)
        assert all(
            e.origin is EntryOrigin.EXTRACTED
            for e in cards.all_entries()
        )

    def test_empty_brief(self, pipeline: Pipeline):
        session = pipeline.create_session("   ")
        with pytest.raises(EmptyBriefError):
            pipeline.extract_requirements(session.id)

    def test_same_seed_same_card_sets(self, tmp_path):
        results = []
        for name in ("a", "b"):
            pipe = make_pipeline(tmp_path / name, seed=5)
            session = pipe.create_session(brief_text("t2"), session_id="x1")
            results.append(card_set_to_dict(pipe.extract_requirements("x1")))
        assert strip_volatile(results[0]) == strip_volatile(results[1])


class TestRecommendRequirements:
    def test_three_candidates_for_empty_field(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        candidates = pipeline.recommend_requirements(
            session.id, RequirementField.TARGET_AUDIENCE, 3
        )
        assert len(candidates) == 3
        assert all(c.origin is EntryOrigin.RECOMMENDED for c in candidates)

    def test_collision_with_existing_entry_is_filtered(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        # Oracle: the mock's first candidate value is derivable from the
        # serialized requirements; plant it as an existing entry.
        current = pipeline.get_session(session.id)
        digest = " ".join(serialize_requirements(current.requirement_cards).split()[:6])
        expected_first = f"mock-target_audience-1: {digest}"
        pipeline.add_manual_entry(
            session.id, RequirementField.TARGET_AUDIENCE, expected_first
        )
        candidates = pipeline.recommend_requirements(
            session.id, RequirementField.TARGET_AUDIENCE, 3
        )
        assert len(candidates) == 2
        assert expected_first not in [c.text for c in candidates]

    def test_zero_count_rejected(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        with pytest.raises(PreconditionError):
            pipeline.recommend_requirements(session.id, RequirementField.RESTRICTIONS, 0)


class TestEntryOps:
    def test_add_manual_entry(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t4"))
        cards = pipeline.add_manual_entry(
            session.id, RequirementField.TARGET_AUDIENCE, "students and part-timers"
        )
        assert "students and part-timers" in [
            e.text for e in cards.entries(RequirementField.TARGET_AUDIENCE)
        ]

    def test_delete_twice(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t4"))
        cards = pipeline.add_manual_entry(
            session.id, RequirementField.RESTRICTIONS, "no stock photos"
        )
        entry_id = cards.entries(RequirementField.RESTRICTIONS)[0].id
        pipeline.delete_entry(session.id, entry_id)
        with pytest.raises(UnknownEntryError):
            pipeline.delete_entry(session.id, entry_id)

    def test_edit_to_duplicate_sibling(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t4"))
        pipeline.add_manual_entry(session.id, RequirementField.RESTRICTIONS, "no red")
        cards = pipeline.add_manual_entry(
            session.id, RequirementField.RESTRICTIONS, "no blue"
        )
        target = cards.entries(RequirementField.RESTRICTIONS)[1].id
        with pytest.raises(DuplicateEntryError):
            pipeline.edit_entry(session.id, target, "No  Red")

    def test_accept_candidate_keeps_recommended_origin(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        cards = pipeline.accept_candidate(
            session.id, RequirementField.TONE_AND_MANNER, "clean and elegant"
        )
        entry = cards.entries(RequirementField.TONE_AND_MANNER)[0]
        assert entry.origin is EntryOrigin.RECOMMENDED


class TestRecommendElements:
    def test_first_call_yields_drafted_cards(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        cards = pipeline.recommend_elements(session.id, ElementType.OBJECT, 4)
        assert len(cards) == 4
        assert all(c.status is CardStatus.DRAFTED for c in cards)
        assert all(c.type is ElementType.OBJECT for c in cards)

    def test_extra_recommendation_passes_predetermined(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        first = pipeline.recommend_elements(session.id, ElementType.OBJECT, 4)
        seen = capture_prompts(pipeline)
        pipeline.recommend_elements(session.id, ElementType.OBJECT, 2)
        predetermined = seen[-1].variables_used["predetermined_section"]
        for card in first:
            assert card.rough_prompt in predetermined

    def test_text_cards_parse(self, pipeline: Pipeline):
        from briefstudio.domain import parse_text_entry

        session = pipeline.create_session(brief_text("t1"))
        cards = pipeline.recommend_elements(session.id, ElementType.TEXT, 3)
        for card in cards:
            role, content = parse_text_entry(card.rough_prompt)
            assert role and content


class TestEnhanceAndPreview:
    def test_object_card_enhanced_and_previewed(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"), deliverable_format="signage")
        card = pipeline.recommend_elements(session.id, ElementType.OBJECT, 1)[0]
        done = pipeline.enhance_and_preview(session.id, card.id)
        assert done.enhanced_prompt == f"ENHANCED[EnhanceObject]: {card.rough_prompt}"
        assert done.status is CardStatus.PREVIEWED
        assert done.preview_ref is not None
        assert (done.preview_ref.width, done.preview_ref.height) == (512, 512)

    def test_text_card_untouched_zero_provider_calls(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        card = pipeline.recommend_elements(session.id, ElementType.TEXT, 1)[0]
        chat_before = len(pipeline.providers.chat.calls)
        image_before = len(pipeline.providers.image.calls)
        back = pipeline.enhance_and_preview(session.id, card.id)
        assert back == card
        assert len(pipeline.providers.chat.calls) == chat_before
        assert len(pipeline.providers.image.calls) == image_before

    def test_composition_without_orientation_fails(self, pipeline: Pipeline):
        session = pipeline.create_session(
            brief_text("t1"), deliverable_format="poster", orientation=None
        )
        card = pipeline.recommend_elements(session.id, ElementType.COMPOSITION, 1)[0]
        with pytest.raises(MissingContextError):
            pipeline.enhance_and_preview(session.id, card.id)
        stored = pipeline.get_session(session.id).find_card(card.id)
        assert stored.status is CardStatus.FAILED
        assert "missing_context" in stored.error

    def test_unknown_card(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        with pytest.raises(UnknownCardError):
            pipeline.enhance_and_preview(session.id, "ghost")


class TestEditRough:
    def test_edit_changes_preview_hash(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        card = pipeline.recommend_elements(session.id, ElementType.OBJECT, 1)[0]
        before = pipeline.enhance_and_preview(session.id, card.id)
        after = pipeline.edit_rough(session.id, card.id, "a crowd at a festival")
        assert after.rough_prompt == "a crowd at a festival"
        assert after.revision == before.revision + 1
        assert after.preview_ref.content_hash != before.preview_ref.content_hash

    def test_edit_removes_phrase_from_enhanced(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t3"))
        card = pipeline.recommend_elements(session.id, ElementType.OBJECT, 1)[0]
        pipeline.edit_rough(
            session.id, card.id, "young people dancing holding neon glow sticks"
        )
        trimmed = pipeline.edit_rough(session.id, card.id, "young people dancing")
        assert "holding neon glow sticks" not in trimmed.enhanced_prompt

    def test_edit_text_card_revalidates(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        card = pipeline.recommend_elements(session.id, ElementType.TEXT, 1)[0]
        with pytest.raises(InvalidTextFormatError):
            pipeline.edit_rough(session.id, card.id, "no colon here")
        edited = pipeline.edit_rough(session.id, card.id, "Offer: 50% off")
        assert edited.rough_prompt == "Offer: 50% off"
        assert edited.enhanced_prompt is None


class TestRegeneratePreview:
    def test_keeps_rough_changes_hash(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        card = pipeline.recommend_elements(session.id, ElementType.BACKGROUND, 1)[0]
        first = pipeline.enhance_and_preview(session.id, card.id)
        second = pipeline.regenerate_preview(session.id, card.id)
        assert second.rough_prompt == first.rough_prompt
        assert second.revision == first.revision + 1
        assert second.parent_id == card.id
        assert second.preview_ref.content_hash != first.preview_ref.content_hash

    def test_text_unsupported(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        card = pipeline.recommend_elements(session.id, ElementType.TEXT, 1)[0]
        with pytest.raises(UnsupportedForTextError):
            pipeline.regenerate_preview(session.id, card.id)

    def test_drafted_card_rejected(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        card = pipeline.recommend_elements(session.id, ElementType.OBJECT, 1)[0]
        with pytest.raises(PreconditionError):
            pipeline.regenerate_preview(session.id, card.id)


class TestDeleteAndSelect:
    def test_delete_removes_card(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        card = pipeline.recommend_elements(session.id, ElementType.OBJECT, 1)[0]
        pipeline.delete_card(session.id, card.id)
        assert pipeline.get_session(session.id).find_card(card.id) is None
        with pytest.raises(UnknownCardError):
            pipeline.delete_card(session.id, card.id)

    def test_second_composition_replaces_first(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        comps = pipeline.recommend_elements(session.id, ElementType.COMPOSITION, 2)
        texts = pipeline.recommend_elements(session.id, ElementType.TEXT, 1)
        pipeline.set_selected(session.id, texts[0].id, True)
        pipeline.set_selected(session.id, comps[0].id, True)
        mid = pipeline.get_session(session.id)
        assert mid.selection.composition_id == comps[0].id
        pipeline.set_selected(session.id, comps[1].id, True)
        final = pipeline.get_session(session.id)
        assert final.selection.composition_id == comps[1].id
        assert not final.find_card(comps[0].id).selected

    def test_deleting_selected_card_clears_selection(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        comp = pipeline.recommend_elements(session.id, ElementType.COMPOSITION, 1)[0]
        text = pipeline.recommend_elements(session.id, ElementType.TEXT, 1)[0]
        pipeline.set_selected(session.id, comp.id, True)
        pipeline.set_selected(session.id, text.id, True)
        assert pipeline.get_session(session.id).selection is not None
        pipeline.delete_card(session.id, comp.id)
        assert pipeline.get_session(session.id).selection is None

    def test_partial_selection_not_stored(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        comp = pipeline.recommend_elements(session.id, ElementType.COMPOSITION, 1)[0]
        pipeline.set_selected(session.id, comp.id, True)
        assert pipeline.get_session(session.id).selection is None


class TestIntegrate:
    def _prepare_selection(self, pipeline: Pipeline, session_id: str) -> None:
        for element_type in ElementType:
            pipeline.recommend_elements(session_id, element_type, 1)
        session = pipeline.get_session(session_id)
        for element_type in ElementType:
            card = session.cards(element_type)[0]
            if element_type.is_visual:
                pipeline.enhance_and_preview(session_id, card.id)
            pipeline.set_selected(session_id, card.id, True)

    def test_composition_precedes_object_in_integrated_text(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"), deliverable_format="signage")
        self._prepare_selection(pipeline, session.id)
        pipeline.integrate_and_generate(session.id)
        final = pipeline.get_session(session.id)
        text = final.integrated_prompts[-1].text
        assert "\n" not in text
        comp_pos = text.index("Composition:")
        obj_pos = text.index("Object:")
        assert comp_pos < obj_pos
        assert text.index("Background:") < text.index("Text:")

    def test_history_grows_by_one(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"), deliverable_format="signage")
        self._prepare_selection(pipeline, session.id)
        pipeline.integrate_and_generate(session.id)
        assert len(pipeline.get_session(session.id).history) == 1
        pipeline.integrate_and_generate(session.id)
        assert len(pipeline.get_session(session.id).history) == 2

    def test_missing_composition_makes_no_provider_calls(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        chat_before = len(pipeline.providers.chat.calls)
        image_before = len(pipeline.providers.image.calls)
        with pytest.raises(MissingCompositionError):
            pipeline.integrate_and_generate(session.id)
        assert len(pipeline.providers.chat.calls) == chat_before
        assert len(pipeline.providers.image.calls) == image_before

    def test_final_size_honors_orientation(self, tmp_path):
        for orientation, expected in (
            ("portrait", (768, 1152)),
            ("landscape", (1152, 768)),
            ("square", (1024, 1024)),
        ):
            pipe = make_pipeline(tmp_path / orientation)
            session = pipe.create_session(
                brief_text("t1"), deliverable_format="poster", orientation=orientation
            )
            self._prepare_selection(pipe, session.id)
            artifact = pipe.integrate_and_generate(session.id)
            assert (artifact.image_ref.width, artifact.image_ref.height) == expected

    def test_snapshot_survives_card_deletion(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"), deliverable_format="signage")
        self._prepare_selection(pipeline, session.id)
        pipeline.integrate_and_generate(session.id)
        final = pipeline.get_session(session.id)
        comp_id = final.selection.composition_id
        pipeline.delete_card(session.id, comp_id)
        after = pipeline.get_session(session.id)
        snapshot = after.integrated_prompts[-1].selection_snapshot
        assert snapshot.composition.id == comp_id


class TestRegenerateDesign:
    def test_regenerate_appends_distinct_artifact(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"), deliverable_format="signage")
        TestIntegrate()._prepare_selection(pipeline, session.id)
        first = pipeline.integrate_and_generate(session.id)
        second = pipeline.regenerate_design(session.id)
        final = pipeline.get_session(session.id)
        assert len(final.history) == 2
        assert first.image_ref.content_hash != second.image_ref.content_hash

    def test_without_prior_artifact(self, pipeline: Pipeline):
        session = pipeline.create_session(brief_text("t1"))
        with pytest.raises(NoPriorArtifactError):
            pipeline.regenerate_design(session.id)


class TestRunAuto:
    def test_t3_produces_five_lists_and_one_artifact(self, pipeline: Pipeline):
        session = pipeline.run_auto(brief_text("t3"), n=2)
        assert set(session.element_cards) == set(ElementType)
        assert all(len(cards) == 2 for cards in session.element_cards.values())
        assert len(session.history) == 1

    def test_n1_gives_five_cards_total(self, pipeline: Pipeline):
        session = pipeline.run_auto(brief_text("t3"), n=1)
        assert sum(len(cards) for cards in session.element_cards.values()) == 5

    def test_same_seed_identical_integrated_prompt(self, tmp_path):
        prompts = []
        for name in ("a", "b"):
            pipe = make_pipeline(tmp_path / name, seed=9)
            session = pipe.run_auto(brief_text("t3"), n=1, session_id="same")
            prompts.append(session.integrated_prompts[-1].text)
        assert prompts[0] == prompts[1]

    def test_ordering_integrator_before_image(self, pipeline: Pipeline):
        session = pipeline.run_auto(brief_text("t4"), n=1)
        kinds = [e.kind for e in pipeline.events(session.id)]
        render_pos = kinds.index("render_integrator")
        chat_pos = render_pos + kinds[render_pos:].index("complete_structured")
        image_pos = chat_pos + kinds[chat_pos:].index("generate_image")
        assert render_pos < chat_pos < image_pos


class TestJobRegistry:
    def test_submit_and_wait(self):
        registry = JobRegistry(workers=2)
        handle = registry.submit("extract", lambda: {"ok": True})
        finished = registry.wait(handle.job_id)
        assert finished.state == "done"
        assert finished.result == {"ok": True}
        registry.shutdown()

    def test_failure_captures_code(self):
        registry = JobRegistry(workers=1)

        def boom():
            raise EmptyBriefError("nope")

        handle = registry.submit("extract", boom)
        finished = registry.wait(handle.job_id)
        assert finished.state == "failed"
        assert finished.error["code"] == "empty_brief"
        registry.shutdown()

    def test_unknown_job(self):
        registry = JobRegistry(workers=1)
        with pytest.raises(JobNotFoundError):
            registry.get("ghost")
        registry.shutdown()
