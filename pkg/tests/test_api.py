"""HTTP surface: endpoint contracts, error mapping, event streams."""

from __future__ import annotations

import json
import threading

import httpx
import pytest
from fastapi.testclient import TestClient

from odrmediator import demo
from odrmediator.detection import Lexicon
from odrmediator.engine import MediationEngine
from odrmediator.eventlog import EventLog
from odrmediator.providers import ScriptedProvider
from odrmediator.server import create_app, event_wire


@pytest.fixture
def service(make_engine):
    engine = make_engine()
    app = create_app(engine, start_poller=False)
    client = TestClient(app, raise_server_exceptions=False)
    return engine, app, client


def _create_dispute(client, **overrides) -> dict:
    body = {
        "title": "Broken camera",
        "party_a": {"name": "John", "id": "john"},
        "party_b": {"name": "Jane", "id": "jane"},
        "mediator": {"name": "Maria", "id": "maria"},
    }
    body.update(overrides)
    response = client.post("/disputes", json=body)
    assert response.status_code == 201, response.text
    return response.json()


class TestDisputeEndpoints:
    def test_create_returns_entity(self, service):
        _, _, client = service
        snapshot = _create_dispute(client)
        assert snapshot["status"] == "open"
        assert snapshot["messages"] == []
        assert snapshot["participants"]["party_a"]["id"] == "john"
        assert snapshot["participants"]["mediator"]["id"] == "maria"
        assert snapshot["participants"]["ai_mediator"]["id"] == "ai-mediator"

    def test_duplicate_party_is_400(self, service):
        _, _, client = service
        response = client.post(
            "/disputes",
            json={"title": "x", "party_a": {"name": "John"}, "party_b": {"name": "John"}},
        )
        assert response.status_code == 400
        assert response.json()["code"] == "duplicate_participant"

    def test_snapshot_roundtrip(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        response = client.get(f"/disputes/{dispute['id']}")
        assert response.status_code == 200
        assert response.json() == dispute

    def test_unknown_dispute_404(self, service):
        _, _, client = service
        response = client.get("/disputes/nope")
        assert response.status_code == 404
        assert response.json() == {"code": "unknown_dispute", "message": response.json()["message"]}

    def test_listing(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        listed = client.get("/disputes").json()["disputes"]
        assert [d["id"] for d in listed] == [dispute["id"]]

    def test_status_change_and_closed_conflict(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        response = client.post(
            f"/disputes/{dispute['id']}/status", json={"actor_id": "john", "status": "settled"}
        )
        assert response.status_code == 200
        assert response.json()["status"] == "settled"
        response = client.post(
            f"/disputes/{dispute['id']}/messages",
            json={"author_id": "john", "body": "too late?"},
        )
        assert response.status_code == 409
        assert response.json()["code"] == "dispute_closed"

    def test_attach_mediator(self, service):
        _, _, client = service
        dispute = _create_dispute(client, mediator=None)
        response = client.post(
            f"/disputes/{dispute['id']}/mediator", json={"name": "Hugo", "id": "hugo"}
        )
        assert response.status_code == 201
        assert response.json()["role"] == "mediator"


class TestMessageEndpoints:
    def test_clean_message_is_201_sent(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        response = client.post(
            f"/disputes/{dispute['id']}/messages",
            json={"author_id": "john", "body": "Thank you for the update."},
        )
        assert response.status_code == 201
        payload = response.json()
        assert payload["outcome"] == "sent"
        assert payload["message"]["origin"] == "human_original"
        assert payload["message"]["seq"] == 1

    def test_flagged_message_is_202_suggestion(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        original, rewrite = demo.REFORMULATION_PAIRS[0]
        response = client.post(
            f"/disputes/{dispute['id']}/messages",
            json={"author_id": "john", "body": original},
        )
        assert response.status_code == 202
        payload = response.json()
        assert payload["outcome"] == "suggestion_offered"
        assert payload["suggestion"]["generated_text"] == rewrite
        assert payload["suggestion"]["status"] == "pending"

    def test_empty_body_400(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        response = client.post(
            f"/disputes/{dispute['id']}/messages", json={"author_id": "john", "body": ""}
        )
        assert response.status_code == 400

    def test_missing_fields_400(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        response = client.post(f"/disputes/{dispute['id']}/messages", json={"body": "x"})
        assert response.status_code == 400
        assert response.json()["code"] == "validation_error"

    def test_non_participant_403(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        response = client.post(
            f"/disputes/{dispute['id']}/messages", json={"author_id": "eve", "body": "hi"}
        )
        assert response.status_code == 403

    def test_mediator_author_posts_freeform(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        response = client.post(
            f"/disputes/{dispute['id']}/messages",
            json={"author_id": "maria", "body": "Please keep it civil."},
        )
        assert response.status_code == 201
        assert response.json()["message"]["origin"] == "mediator_freeform"

    def test_resolve_flow_and_conflict(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        original, rewrite = demo.REFORMULATION_PAIRS[1]
        suggestion = client.post(
            f"/disputes/{dispute['id']}/messages",
            json={"author_id": "jane", "body": original},
        ).json()["suggestion"]

        response = client.post(
            f"/suggestions/{suggestion['id']}/resolve",
            json={"actor_id": "jane", "action": "send_reformulated"},
        )
        assert response.status_code == 201
        message = response.json()["message"]
        assert message["body"] == rewrite
        assert message["origin"] == "human_accepted_reformulation"
        assert message["suggestion_id"] == suggestion["id"]

        again = client.post(
            f"/suggestions/{suggestion['id']}/resolve",
            json={"actor_id": "jane", "action": "send_original"},
        )
        assert again.status_code == 409
        assert again.json()["code"] == "already_resolved"

    def test_manual_reformulate_endpoint(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        original, rewrite = demo.REFORMULATION_PAIRS[2]
        response = client.post(
            f"/disputes/{dispute['id']}/reformulate",
            json={"author_id": "john", "body": original},
        )
        assert response.status_code == 201
        assert response.json()["suggestion"]["generated_text"] == rewrite


class TestMediatorAndAiEndpoints:
    def _seeded_camera(self, client) -> dict:
        dispute = _create_dispute(client, title=demo.CAMERA.title)
        for author_id, body in demo.CAMERA.messages:
            response = client.post(
                f"/disputes/{dispute['id']}/messages",
                json={"author_id": author_id, "body": body, "force_send": True},
            )
            assert response.status_code == 201
        return dispute

    def test_draft_without_and_with_instructions(self, service):
        _, _, client = service
        dispute = self._seeded_camera(client)
        response = client.post(
            f"/disputes/{dispute['id']}/draft", json={"mediator_id": "maria"}
        )
        assert response.status_code == 201
        assert response.json()["suggestion"]["generated_text"] == demo.CAMERA_DRAFTS[0][1]

        response = client.post(
            f"/disputes/{dispute['id']}/draft",
            json={"mediator_id": "maria", "instructions": demo.CAMERA_INSTRUCTION_INSURANCE},
        )
        assert response.status_code == 201
        assert response.json()["suggestion"]["generated_text"] == demo.CAMERA_DRAFTS[1][1]

    def test_draft_by_party_403(self, service):
        _, _, client = service
        dispute = self._seeded_camera(client)
        response = client.post(f"/disputes/{dispute['id']}/draft", json={"mediator_id": "john"})
        assert response.status_code == 403

    def test_draft_on_empty_dispute_400(self, service):
        _, _, client = service
        dispute = _create_dispute(client)
        response = client.post(f"/disputes/{dispute['id']}/draft", json={"mediator_id": "maria"})
        assert response.status_code == 400
        assert response.json()["code"] == "empty_context"

    def test_ai_intervene(self, make_engine):
        engine = make_engine()
        client = TestClient(create_app(engine, start_poller=False), raise_server_exceptions=False)
        dispute = _create_dispute(client, title=demo.WATER_LEAK.title)
        for author_id, body in demo.WATER_LEAK.messages:
            client.post(
                f"/disputes/{dispute['id']}/messages",
                json={"author_id": author_id, "body": body, "force_send": True},
            )
        response = client.post(
            f"/disputes/{dispute['id']}/ai-intervene", json={"requester_id": "jane"}
        )
        assert response.status_code == 201
        message = response.json()["message"]
        assert message["origin"] == "ai_autonomous"
        assert message["author_role"] == "ai_mediator"
        assert message["body"] == demo.AUTONOMOUS_INTERVENTIONS["water_leak"]

    def test_ai_intervene_disabled_policy_403(self, service):
        _, _, client = service
        dispute = _create_dispute(
            client,
            policy={
                "party_request_enabled": False,
            },
        )
        client.post(
            f"/disputes/{dispute['id']}/messages",
            json={"author_id": "john", "body": "hello", "force_send": True},
        )
        response = client.post(
            f"/disputes/{dispute['id']}/ai-intervene", json={"requester_id": "john"}
        )
        assert response.status_code == 403
        assert response.json()["code"] == "policy_disabled"


class TestProviderOutage:
    def test_502_with_retry_hint_and_force_send_fallback(self, tmp_path):
        engine = MediationEngine(
            ScriptedProvider([]),  # always misses
            EventLog(tmp_path / "outage.log"),
            lexicon=Lexicon.from_terms("idiot"),
        )
        client = TestClient(create_app(engine, start_poller=False), raise_server_exceptions=False)
        dispute = _create_dispute(client)
        response = client.post(
            f"/disputes/{dispute['id']}/messages",
            json={"author_id": "john", "body": "you idiot"},
        )
        assert response.status_code == 502
        payload = response.json()
        assert payload["code"] == "reformulation_unavailable"
        assert payload["retry_after_seconds"] == 5
        assert response.headers["retry-after"] == "5"

        fallback = client.post(
            f"/disputes/{dispute['id']}/messages",
            json={"author_id": "john", "body": "you idiot", "force_send": True},
        )
        assert fallback.status_code == 201
        assert fallback.json()["message"]["body"] == "you idiot"


class TestEventEndpoints:
    def test_events_match_log_exactly_and_resume(self, service):
        engine, _, client = service
        dispute = _create_dispute(client)
        client.post(
            f"/disputes/{dispute['id']}/messages",
            json={"author_id": "john", "body": "Hello Jane."},
        )
        client.post(
            f"/disputes/{dispute['id']}/messages",
            json={"author_id": "jane", "body": "Hello John."},
        )

        full = client.get(f"/disputes/{dispute['id']}/events").json()
        expected = [event_wire(r) for r in engine.log.events(dispute["id"])]
        assert full["events"] == expected
        assert full["last_seq"] == expected[-1]["event_seq"]

        cursor = full["events"][1]["event_seq"]
        tail = client.get(f"/disputes/{dispute['id']}/events", params={"since": cursor}).json()
        assert tail["events"] == expected[2:]

    def test_events_unknown_dispute_404(self, service):
        _, _, client = service
        assert client.get("/disputes/nope/events").status_code == 404

    def test_stream_delivers_in_order(self, make_engine, live_server):
        engine = make_engine()
        server = live_server(create_app(engine, start_poller=False))
        with httpx.Client(base_url=server.base_url, timeout=10) as client:
            dispute = _create_dispute(client)
            for i in range(3):
                client.post(
                    f"/disputes/{dispute['id']}/messages",
                    json={"author_id": "john", "body": f"message {i}"},
                )
            received = []
            with client.stream(
                "GET", f"/disputes/{dispute['id']}/stream", params={"since": 0}
            ) as response:
                assert response.status_code == 200
                assert response.headers["content-type"].startswith("text/event-stream")
                for line in response.iter_lines():
                    if line.startswith("data: "):
                        received.append(json.loads(line[len("data: ") :]))
                        if len(received) == 4:  # dispute_created + 3 messages
                            break
        assert [r["event_seq"] for r in received] == sorted(r["event_seq"] for r in received)
        assert received[0]["kind"] == "dispute_created"
        assert [r["kind"] for r in received[1:]] == ["message_appended"] * 3

    def test_stream_resume_skips_delivered_events(self, make_engine, live_server):
        engine = make_engine()
        server = live_server(create_app(engine, start_poller=False))
        with httpx.Client(base_url=server.base_url, timeout=10) as client:
            dispute = _create_dispute(client)
            client.post(
                f"/disputes/{dispute['id']}/messages",
                json={"author_id": "john", "body": "first"},
            )
            events = client.get(f"/disputes/{dispute['id']}/events").json()["events"]
            cursor = events[-2]["event_seq"]
            received = []
            with client.stream(
                "GET", f"/disputes/{dispute['id']}/stream", params={"since": cursor}
            ) as response:
                for line in response.iter_lines():
                    if line.startswith("data: "):
                        received.append(json.loads(line[len("data: ") :]))
                        break
        assert received[0]["event_seq"] == events[-1]["event_seq"]

    def test_stream_unknown_dispute_404(self, service):
        _, _, client = service
        assert client.get("/disputes/nope/stream").status_code == 404

    def test_two_subscribers_observe_identical_sequences(self, make_engine, live_server):
        engine = make_engine()
        server = live_server(create_app(engine, start_poller=False))
        setup_client = httpx.Client(base_url=server.base_url, timeout=10)
        dispute = _create_dispute(setup_client)
        target_events = 5  # dispute_created + 4 messages

        transcripts: dict[str, list] = {"a": [], "b": []}
        errors: list[Exception] = []
        connected = threading.Barrier(3, timeout=10)

        def subscribe(name: str) -> None:
            try:
                with httpx.Client(base_url=server.base_url, timeout=30) as subscriber:
                    with subscriber.stream(
                        "GET", f"/disputes/{dispute['id']}/stream", params={"since": 0}
                    ) as response:
                        connected.wait()
                        for line in response.iter_lines():
                            if line.startswith("data: "):
                                transcripts[name].append(json.loads(line[len("data: ") :]))
                                if len(transcripts[name]) >= target_events:
                                    break
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=subscribe, args=(n,)) for n in ("a", "b")]
        for t in threads:
            t.start()
        connected.wait()
        for body in ["one", "two", "three", "four"]:
            setup_client.post(
                f"/disputes/{dispute['id']}/messages",
                json={"author_id": "john", "body": body},
            )
        for t in threads:
            t.join(timeout=30)
        setup_client.close()
        assert errors == []
        assert not any(t.is_alive() for t in threads), "subscribers did not finish"
        assert transcripts["a"] == transcripts["b"]
        assert len(transcripts["a"]) == target_events
        seqs = [e["event_seq"] for e in transcripts["a"]]
        assert seqs == sorted(seqs)
