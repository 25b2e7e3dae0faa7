from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from briefstudio.domain import ElementType, RequirementField, SelectionSet
from briefstudio.fixtures import brief_text
from briefstudio.pipeline import JobRegistry
from briefstudio.providers import MockChatProvider, ProviderConfig
from briefstudio.service.app import create_app
from conftest import make_pipeline


@pytest.fixture
def api(tmp_path):
    pipeline = make_pipeline(tmp_path / "store")
    registry = JobRegistry(workers=2)
    app = create_app(pipeline, registry, pipeline.store)
    client = TestClient(app)
    yield client, pipeline, registry
    registry.shutdown()


def wait_job(client: TestClient, job: dict) -> dict:
    import time

    deadline = time.monotonic() + 10
    while time.monotonic() < deadline:
        response = client.get(f"/jobs/{job['job_id']}")
        assert response.status_code == 200
        payload = response.json()
        if payload["state"] in ("done", "failed"):
            return payload
        time.sleep(0.01)
    raise AssertionError("job did not finish in time")


def create_session(client: TestClient, brief: str = "t1", **overrides) -> dict:
    body = {
        "brief_text": brief_text(brief),
        "output_language": "en",
        "deliverable_format": "digital signage",
        "orientation": "portrait",
    }
    body.update(overrides)
    response = client.post("/sessions", json=body)
    assert response.status_code == 201
    return response.json()


class TestSessionEndpoints:
    def test_create_and_get(self, api):
        client, _, _ = api
        session = create_session(client)
        got = client.get(f"/sessions/{session['id']}")
        assert got.status_code == 200
        assert got.json()["brief_text"] == session["brief_text"]

    def test_unknown_session_404(self, api):
        client, _, _ = api
        response = client.get("/sessions/ghost")
        assert response.status_code == 404
        assert response.json()["code"] == "session_not_found"

    def test_unknown_job_404(self, api):
        client, _, _ = api
        response = client.get("/jobs/ghost")
        assert response.status_code == 404
        assert response.json()["code"] == "job_not_found"

    def test_job_endpoints_return_handles_fast(self, api):
        import time

        client, _, _ = api
        session = create_session(client)
        wait_job(client, client.post(f"/sessions/{session['id']}/requirements/extract").json())
        started = time.perf_counter()
        job = client.post(f"/sessions/{session['id']}/elements/object/recommend", json={"n": 4})
        elapsed = time.perf_counter() - started
        assert job.status_code == 202
        assert elapsed < 0.1, f"job submission took {elapsed:.3f}s"
        wait_job(client, job.json())


class TestRequirementEndpoints:
    def test_extract_job_flow(self, api):
        client, _, _ = api
        session = create_session(client)
        job = client.post(f"/sessions/{session['id']}/requirements/extract")
        assert job.status_code == 202
        finished = wait_job(client, job.json())
        assert finished["state"] == "done"
        cards = finished["result"]["requirement_cards"]
        assert cards["deliverable_format"]

    def test_recommend_then_accept(self, api):
        client, _, _ = api
        session = create_session(client)
        job = client.post(
            f"/sessions/{session['id']}/requirements/target_audience/recommend",
            json={"n": 3},
        )
        finished = wait_job(client, job.json())
        candidates = finished["result"]["candidates"]
        assert len(candidates) == 3
        accepted = client.post(
            f"/sessions/{session['id']}/requirements/entries",
            json={
                "field": "target_audience",
                "text": candidates[0]["text"],
                "origin": "recommended",
            },
        )
        assert accepted.status_code == 200
        entries = accepted.json()["requirement_cards"]["target_audience"]
        assert entries[0]["origin"] == "recommended"

    def test_entry_crud(self, api):
        client, _, _ = api
        session = create_session(client)
        added = client.post(
            f"/sessions/{session['id']}/requirements/entries",
            json={"field": "restrictions", "text": "no stock photos"},
        )
        entry_id = added.json()["requirement_cards"]["restrictions"][0]["id"]
        edited = client.patch(
            f"/sessions/{session['id']}/requirements/entries/{entry_id}",
            json={"text": "no watermarks"},
        )
        assert edited.json()["requirement_cards"]["restrictions"][0]["text"] == "no watermarks"
        duplicate = client.post(
            f"/sessions/{session['id']}/requirements/entries",
            json={"field": "restrictions", "text": "NO  watermarks"},
        )
        assert duplicate.status_code == 422
        assert duplicate.json()["code"] == "duplicate_entry"
        deleted = client.delete(
            f"/sessions/{session['id']}/requirements/entries/{entry_id}"
        )
        assert deleted.status_code == 200
        missing = client.delete(
            f"/sessions/{session['id']}/requirements/entries/{entry_id}"
        )
        assert missing.status_code == 404

    def test_unknown_field_422(self, api):
        client, _, _ = api
        session = create_session(client)
        response = client.post(
            f"/sessions/{session['id']}/requirements/mood/recommend", json={}
        )
        assert response.status_code == 422


class TestElementEndpoints:
    def test_recommend_cards_arrive_previewed(self, api):
        client, _, _ = api
        session = create_session(client)
        job = client.post(
            f"/sessions/{session['id']}/elements/object/recommend", json={"n": 2}
        )
        finished = wait_job(client, job.json())
        cards = finished["result"]["cards"]
        assert len(cards) == 2
        assert all(c["status"] == "previewed" for c in cards)
        assert all(c["preview_ref"] for c in cards)

    def test_text_recommend_has_no_previews(self, api):
        client, _, _ = api
        session = create_session(client)
        job = client.post(
            f"/sessions/{session['id']}/elements/text/recommend", json={"n": 2}
        )
        cards = wait_job(client, job.json())["result"]["cards"]
        assert all(c["preview_ref"] is None for c in cards)

    def test_edit_regenerate_delete(self, api):
        client, _, _ = api
        session = create_session(client)
        job = client.post(
            f"/sessions/{session['id']}/elements/background/recommend", json={"n": 1}
        )
        card = wait_job(client, job.json())["result"]["cards"][0]
        edit = client.post(
            f"/sessions/{session['id']}/elements/{card['id']}/edit",
            json={"rough_prompt": "deep navy gradient"},
        )
        edited = wait_job(client, edit.json())["result"]["card"]
        assert edited["rough_prompt"] == "deep navy gradient"
        assert edited["revision"] == card["revision"] + 1
        assert edited["preview_ref"]["content_hash"] != card["preview_ref"]["content_hash"]
        regen = client.post(
            f"/sessions/{session['id']}/elements/{card['id']}/regenerate"
        )
        regenerated = wait_job(client, regen.json())["result"]["card"]
        assert regenerated["rough_prompt"] == "deep navy gradient"
        assert (
            regenerated["preview_ref"]["content_hash"]
            != edited["preview_ref"]["content_hash"]
        )
        gone = client.delete(f"/sessions/{session['id']}/elements/{card['id']}")
        assert gone.status_code == 200
        again = client.delete(f"/sessions/{session['id']}/elements/{card['id']}")
        assert again.status_code == 404

    def test_manual_add_card(self, api):
        client, _, _ = api
        session = create_session(client)
        job = client.post(
            f"/sessions/{session['id']}/elements/object",
            json={"rough_prompt": "a hand-drawn mascot"},
        )
        card = wait_job(client, job.json())["result"]["card"]
        assert card["status"] == "previewed"

    def test_image_served(self, api):
        client, _, _ = api
        session = create_session(client)
        job = client.post(
            f"/sessions/{session['id']}/elements/object/recommend", json={"n": 1}
        )
        card = wait_job(client, job.json())["result"]["cards"][0]
        image = client.get(f"/images/{card['preview_ref']['content_hash']}")
        assert image.status_code == 200
        assert image.headers["content-type"] == "image/png"
        assert image.content.startswith(b"\x89PNG")
        missing = client.get(f"/images/{'0' * 64}")
        assert missing.status_code == 404


def _prepare_selection(client: TestClient, session_id: str) -> dict:
    ids: dict[str, str] = {}
    for element_type in ("composition", "object", "text"):
        job = client.post(
            f"/sessions/{session_id}/elements/{element_type}/recommend", json={"n": 1}
        )
        cards = wait_job(client, job.json())["result"]["cards"]
        ids[element_type] = cards[0]["id"]
    response = client.put(
        f"/sessions/{session_id}/selection",
        json={
            "composition_id": ids["composition"],
            "object_id": ids["object"],
            "text_ids": [ids["text"]],
        },
    )
    assert response.status_code == 200
    return ids


class TestSelectionAndIntegration:
    def test_selection_and_generate_flow(self, api):
        client, _, _ = api
        session = create_session(client)
        _prepare_selection(client, session["id"])
        job = client.post(f"/sessions/{session['id']}/integrate")
        assert job.status_code == 202
        finished = wait_job(client, job.json())
        assert finished["state"] == "done"
        artifact = finished["result"]["artifact"]
        assert finished["result"]["integrated_prompt"]["text"]
        history = client.get(f"/sessions/{session['id']}/history").json()["history"]
        assert len(history) == 1
        assert history[0]["artifact"]["id"] == artifact["id"]
        regen = client.post(f"/sessions/{session['id']}/regenerate-design")
        assert regen.status_code == 202
        assert wait_job(client, regen.json())["state"] == "done"
        assert len(client.get(f"/sessions/{session['id']}/history").json()["history"]) == 2

    def test_integrate_without_selection_409(self, api):
        client, _, _ = api
        session = create_session(client)
        response = client.post(f"/sessions/{session['id']}/integrate")
        assert response.status_code == 409
        assert response.json()["code"] == "missing_composition"

    def test_regenerate_without_artifact_409(self, api):
        client, _, _ = api
        session = create_session(client)
        response = client.post(f"/sessions/{session['id']}/regenerate-design")
        assert response.status_code == 409
        assert response.json()["code"] == "no_prior_artifact"

    def test_selection_type_mismatch_422(self, api):
        client, _, _ = api
        session = create_session(client)
        ids = _prepare_selection(client, session["id"])
        response = client.put(
            f"/sessions/{session['id']}/selection",
            json={"composition_id": ids["object"], "text_ids": [ids["text"]]},
        )
        assert response.status_code == 422
        assert response.json()["code"] == "type_mismatch"

    def test_metrics_endpoint(self, api):
        client, _, _ = api
        session = create_session(client)
        _prepare_selection(client, session["id"])
        for _ in range(2):
            job = client.post(f"/sessions/{session['id']}/integrate")
            assert wait_job(client, job.json())["state"] == "done"
        metrics = client.get(f"/sessions/{session['id']}/metrics")
        payload = metrics.json()
        assert payload["metrics"]["images_generated"] == 2
        assert payload["prompt_diversity"] is not None
        assert payload["prompt_diversity"]["item_count"] == 2


class TestProviderFaultSurfaced:
    def test_fault_injection_job_error(self, tmp_path):
        pipeline = make_pipeline(tmp_path / "store")
        pipeline.providers.chat = MockChatProvider(
            seed=0,
            faults=frozenset({"transport"}),
            config=ProviderConfig(max_retries=0, retry_backoff_s=0),
        )
        registry = JobRegistry(workers=1)
        client = TestClient(create_app(pipeline, registry, pipeline.store))
        session = create_session(client)
        job = client.post(f"/sessions/{session['id']}/requirements/extract")
        finished = wait_job(client, job.json())
        assert finished["state"] == "failed"
        assert finished["error"]["code"] == "transport_error"
        registry.shutdown()


class TestHttpMatchesDirectInvocation:
    def test_event_logs_identical_for_scripted_scenario(self, tmp_path):
        # The same scripted scenario through HTTP and through the pipeline
        # directly must yield (kind, payload_digest)-identical event logs.
        http_pipe = make_pipeline(tmp_path / "http", seed=4)
        direct_pipe = make_pipeline(tmp_path / "direct", seed=4)
        registry = JobRegistry(workers=1)
        client = TestClient(create_app(http_pipe, registry, http_pipe.store))

        session = create_session(client, brief="t2")
        sid = session["id"]
        wait_job(client, client.post(f"/sessions/{sid}/requirements/extract").json())
        wait_job(
            client,
            client.post(
                f"/sessions/{sid}/requirements/target_audience/recommend", json={"n": 2}
            ).json(),
        )
        client.post(
            f"/sessions/{sid}/requirements/entries",
            json={"field": "restrictions", "text": "no stock photos"},
        )
        for element_type in ("composition", "text", "object"):
            wait_job(
                client,
                client.post(
                    f"/sessions/{sid}/elements/{element_type}/recommend", json={"n": 1}
                ).json(),
            )
        http_session = client.get(f"/sessions/{sid}").json()
        comp_id = http_session["element_cards"]["composition"][0]["id"]
        text_id = http_session["element_cards"]["text"][0]["id"]
        obj_id = http_session["element_cards"]["object"][0]["id"]
        wait_job(
            client,
            client.post(
                f"/sessions/{sid}/elements/{obj_id}/edit",
                json={"rough_prompt": "bottle on podium"},
            ).json(),
        )
        client.put(
            f"/sessions/{sid}/selection",
            json={"composition_id": comp_id, "text_ids": [text_id]},
        )
        wait_job(client, client.post(f"/sessions/{sid}/integrate").json())
        client.delete(f"/sessions/{sid}/elements/{obj_id}")

        # Direct invocation with the same arguments and session id.
        direct_pipe.create_session(
            brief_text("t2"),
            output_language="en",
            deliverable_format="digital signage",
            orientation="portrait",
            session_id=sid,
        )
        direct_pipe.extract_requirements(sid)
        direct_pipe.recommend_requirements(sid, RequirementField.TARGET_AUDIENCE, 2)
        direct_pipe.add_manual_entry(sid, RequirementField.RESTRICTIONS, "no stock photos")
        for element_type in (ElementType.COMPOSITION, ElementType.TEXT, ElementType.OBJECT):
            direct_pipe.recommend_and_preview(sid, element_type, 1)
        direct_pipe.edit_rough(sid, obj_id, "bottle on podium")
        direct_pipe.set_selection(
            sid, SelectionSet(composition_id=comp_id, text_ids=(text_id,))
        )
        direct_pipe.integrate_and_generate(sid)
        direct_pipe.delete_card(sid, obj_id)

        http_events = [
            (e.kind, e.payload_digest) for e in http_pipe.store.read_events(sid)
        ]
        direct_events = [
            (e.kind, e.payload_digest) for e in direct_pipe.store.read_events(sid)
        ]
        assert http_events == direct_events
        registry.shutdown()
