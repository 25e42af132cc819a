"""HTTP surface: JSON API plus a server-sent-events update stream.

Demo-grade by design: there is no authentication; clients select which
participant they act as per dispute. Errors use one JSON shape
{"code", "message"}; provider outages answer 502 with a retry-after
hint so clients can offer the force-send fallback.
"""

from __future__ import annotations

import asyncio
import json
import logging
from contextlib import asynccontextmanager
from datetime import timedelta
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import domain, engine as engine_mod, eventlog, prompting, providers
from .detection import DetectionStrategy
from .domain import (
    DisputeStatus,
    EveryNPolicy,
    HeatedPolicy,
    InactivityPolicy,
    PartyRequestPolicy,
    TriggerPolicySet,
)
from .engine import MediationEngine, ResolveAction, TriggerPoller

logger = logging.getLogger(__name__)

PROVIDER_RETRY_AFTER_SECONDS = 5

# How often the SSE generator checks the log for new events.
STREAM_POLL_SECONDS = 0.2
STREAM_HEARTBEAT_SECONDS = 15.0


# ---------------------------------------------------------------------------
# Request bodies
# ---------------------------------------------------------------------------


class ParticipantSpec(BaseModel):
    name: str
    id: Optional[str] = None


class PolicySpec(BaseModel):
    party_request_enabled: bool = True
    inactivity_enabled: bool = False
    inactivity_threshold_seconds: float = 3600.0
    every_n_enabled: bool = False
    every_n: int = 10
    heated_enabled: bool = False
    heated_detector: str = DetectionStrategy.KEYWORD_SCAN.value

    def to_domain(self) -> TriggerPolicySet:
        return TriggerPolicySet(
            party_request=PartyRequestPolicy(self.party_request_enabled),
            inactivity=InactivityPolicy(
                self.inactivity_enabled, timedelta(seconds=self.inactivity_threshold_seconds)
            ),
            every_n=EveryNPolicy(self.every_n_enabled, self.every_n),
            heated=HeatedPolicy(self.heated_enabled, DetectionStrategy(self.heated_detector)),
        )


class CreateDisputeRequest(BaseModel):
    title: str
    party_a: ParticipantSpec
    party_b: ParticipantSpec
    mediator: Optional[ParticipantSpec] = None
    policy: Optional[PolicySpec] = None


class PostMessageRequest(BaseModel):
    author_id: str
    body: str
    force_send: bool = False


class ResolveRequest(BaseModel):
    actor_id: str
    action: str
    edited_text: Optional[str] = None


class ReformulateRequest(BaseModel):
    author_id: str
    body: str


class DraftRequest(BaseModel):
    mediator_id: str
    instructions: Optional[str] = None


class AiInterveneRequest(BaseModel):
    requester_id: str


class AttachMediatorRequest(BaseModel):
    name: str
    id: Optional[str] = None


class StatusRequest(BaseModel):
    actor_id: str
    status: str


# ---------------------------------------------------------------------------
# Error mapping
# ---------------------------------------------------------------------------

_ERROR_STATUS: list[tuple[type[Exception], int, str]] = [
    (engine_mod.UnknownDispute, 404, "unknown_dispute"),
    (engine_mod.UnknownSuggestion, 404, "unknown_suggestion"),
    (eventlog.UnknownDispute, 404, "unknown_dispute"),
    (engine_mod.NotAParty, 403, "not_a_party"),
    (engine_mod.NotMediator, 403, "not_mediator"),
    (engine_mod.NotRequester, 403, "not_requester"),
    (engine_mod.PolicyDisabled, 403, "policy_disabled"),
    (domain.DisputeClosed, 409, "dispute_closed"),
    (engine_mod.AlreadyResolved, 409, "already_resolved"),
    (engine_mod.ReformulationUnavailable, 502, "reformulation_unavailable"),
    (providers.ProviderError, 502, "provider_error"),
    (engine_mod.EmptyEdit, 400, "empty_edit"),
    (engine_mod.InvalidResolveAction, 400, "invalid_action"),
    (prompting.EmptyContext, 400, "empty_context"),
    (prompting.EmptyDraft, 400, "empty_body"),
    (domain.EmptyBody, 400, "empty_body"),
    (domain.DuplicateParticipant, 400, "duplicate_participant"),
    (domain.InvalidOrigin, 400, "invalid_origin"),
    (domain.NotAParticipant, 403, "not_a_participant"),
    (domain.DomainError, 400, "domain_error"),
    (engine_mod.EngineError, 400, "engine_error"),
    (ValueError, 400, "validation_error"),
]


def _error_response(exc: Exception) -> JSONResponse:
    for exc_type, status, code in _ERROR_STATUS:
        if isinstance(exc, exc_type):
            body = {"code": code, "message": str(exc)}
            headers = {}
            if status == 502:
                body["retry_after_seconds"] = PROVIDER_RETRY_AFTER_SECONDS
                headers["Retry-After"] = str(PROVIDER_RETRY_AFTER_SECONDS)
            return JSONResponse(body, status_code=status, headers=headers)
    logger.exception("unhandled error", exc_info=exc)
    return JSONResponse(
        {"code": "internal_error", "message": "internal server error"}, status_code=500
    )


# ---------------------------------------------------------------------------
# Wire shapes
# ---------------------------------------------------------------------------


def dispute_snapshot(dispute: domain.Dispute) -> dict:
    return {
        "id": dispute.id,
        "title": dispute.title,
        "status": dispute.status.value,
        "created_at": dispute.created_at.isoformat(timespec="milliseconds"),
        "participants": {
            role.value: eventlog.participant_to_payload(p)
            for role, p in dispute.participants.items()
        },
        "policy": eventlog.policy_to_payload(dispute.policy),
        "messages": [eventlog.message_to_payload(m) for m in dispute.messages],
        "suggestions": {
            sid: eventlog.suggestion_to_payload(s) for sid, s in dispute.suggestions.items()
        },
        "audit": [eventlog.trigger_to_payload(t) for t in dispute.audit],
    }


def event_wire(record: eventlog.EventRecord) -> dict:
    return {
        "event_seq": record.event_seq,
        "dispute_id": record.dispute_id,
        "kind": record.kind.value,
        "recorded_at": record.recorded_at.isoformat(timespec="milliseconds"),
        "payload": record.payload,
    }


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------


def create_app(
    engine: MediationEngine,
    *,
    poll_interval: float = 30.0,
    start_poller: bool = True,
    ui_path: Optional[Path] = None,
) -> FastAPI:
    poller = TriggerPoller(engine, poll_interval)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if start_poller:
            poller.start()
        yield
        poller.stop()

    app = FastAPI(title="odrmediator", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.engine = engine
    app.state.poller = poller

    @app.exception_handler(Exception)
    async def _handle(request: Request, exc: Exception) -> JSONResponse:
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def _handle_validation(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            {"code": "validation_error", "message": str(exc.errors()[:3])}, status_code=400
        )

    # -- disputes ---------------------------------------------------------

    @app.get("/disputes")
    def list_disputes() -> JSONResponse:
        items = []
        for dispute_id in engine.dispute_ids():
            d = engine.get_dispute(dispute_id)
            items.append(
                {
                    "id": d.id,
                    "title": d.title,
                    "status": d.status.value,
                    "message_count": len(d.messages),
                }
            )
        return JSONResponse({"disputes": items})

    @app.post("/disputes", status_code=201)
    def create_dispute(body: CreateDisputeRequest) -> JSONResponse:
        try:
            dispute = engine.create_dispute(
                body.title,
                body.party_a.name,
                body.party_b.name,
                body.policy.to_domain() if body.policy else None,
                party_a_id=body.party_a.id,
                party_b_id=body.party_b.id,
                mediator=body.mediator.name if body.mediator else None,
                mediator_id=body.mediator.id if body.mediator else None,
            )
        except Exception as exc:  # noqa: BLE001 - mapped to wire errors
            return _error_response(exc)
        return JSONResponse(dispute_snapshot(dispute), status_code=201)

    @app.get("/disputes/{dispute_id}")
    def get_dispute(dispute_id: str) -> JSONResponse:
        try:
            dispute = engine.get_dispute(dispute_id)
        except Exception as exc:  # noqa: BLE001
            return _error_response(exc)
        return JSONResponse(dispute_snapshot(dispute))

    @app.post("/disputes/{dispute_id}/mediator", status_code=201)
    def attach_mediator(dispute_id: str, body: AttachMediatorRequest) -> JSONResponse:
        try:
            mediator = engine.attach_mediator(dispute_id, body.name, mediator_id=body.id)
        except Exception as exc:  # noqa: BLE001
            return _error_response(exc)
        return JSONResponse(eventlog.participant_to_payload(mediator), status_code=201)

    @app.post("/disputes/{dispute_id}/status")
    def set_status(dispute_id: str, body: StatusRequest) -> JSONResponse:
        try:
            dispute = engine.set_status(dispute_id, body.actor_id, DisputeStatus(body.status))
        except Exception as exc:  # noqa: BLE001
            return _error_response(exc)
        return JSONResponse(dispute_snapshot(dispute))

    # -- messages and suggestions -----------------------------------------

    @app.post("/disputes/{dispute_id}/messages")
    def post_message(dispute_id: str, body: PostMessageRequest) -> JSONResponse:
        try:
            dispute = engine.get_dispute(dispute_id)
            role = dispute.role_of(body.author_id)
            if role is domain.ParticipantRole.MEDIATOR:
                message = engine.send_mediator_message(dispute_id, body.author_id, body.body)
                return JSONResponse(
                    {"outcome": "sent", "message": eventlog.message_to_payload(message)},
                    status_code=201,
                )
            outcome = engine.submit_party_message(
                dispute_id, body.author_id, body.body, body.force_send
            )
        except Exception as exc:  # noqa: BLE001
            return _error_response(exc)
        if outcome.was_sent:
            assert outcome.sent is not None
            return JSONResponse(
                {"outcome": "sent", "message": eventlog.message_to_payload(outcome.sent)},
                status_code=201,
            )
        assert outcome.suggestion is not None
        return JSONResponse(
            {
                "outcome": "suggestion_offered",
                "suggestion": eventlog.suggestion_to_payload(outcome.suggestion),
            },
            status_code=202,
        )

    @app.post("/disputes/{dispute_id}/reformulate", status_code=201)
    def reformulate(dispute_id: str, body: ReformulateRequest) -> JSONResponse:
        try:
            suggestion = engine.request_reformulation(dispute_id, body.author_id, body.body)
        except Exception as exc:  # noqa: BLE001
            return _error_response(exc)
        return JSONResponse(
            {"suggestion": eventlog.suggestion_to_payload(suggestion)}, status_code=201
        )

    @app.post("/suggestions/{suggestion_id}/resolve", status_code=201)
    def resolve(suggestion_id: str, body: ResolveRequest) -> JSONResponse:
        try:
            action = ResolveAction(body.action)
            message = engine.resolve_suggestion(
                suggestion_id, body.actor_id, action, body.edited_text
            )
        except Exception as exc:  # noqa: BLE001
            return _error_response(exc)
        return JSONResponse({"message": eventlog.message_to_payload(message)}, status_code=201)

    @app.post("/disputes/{dispute_id}/draft", status_code=201)
    def draft(dispute_id: str, body: DraftRequest) -> JSONResponse:
        try:
            suggestion = engine.draft_intervention(
                dispute_id, body.mediator_id, body.instructions
            )
        except Exception as exc:  # noqa: BLE001
            return _error_response(exc)
        return JSONResponse(
            {"suggestion": eventlog.suggestion_to_payload(suggestion)}, status_code=201
        )

    @app.post("/disputes/{dispute_id}/ai-intervene", status_code=201)
    def ai_intervene(dispute_id: str, body: AiInterveneRequest) -> JSONResponse:
        try:
            message = engine.request_ai_intervention(dispute_id, body.requester_id)
        except Exception as exc:  # noqa: BLE001
            return _error_response(exc)
        return JSONResponse({"message": eventlog.message_to_payload(message)}, status_code=201)

    # -- events -----------------------------------------------------------

    @app.get("/disputes/{dispute_id}/events")
    def get_events(dispute_id: str, since: int = 0) -> JSONResponse:
        if not engine.log.has_dispute(dispute_id):
            return _error_response(engine_mod.UnknownDispute(f"no dispute {dispute_id}"))
        records = engine.log.events(dispute_id, since_seq=since)
        return JSONResponse(
            {
                "events": [event_wire(r) for r in records],
                "last_seq": records[-1].event_seq if records else since,
            }
        )

    @app.get("/disputes/{dispute_id}/stream")
    async def stream_events(dispute_id: str, request: Request, since: int = 0) -> Response:
        if not engine.log.has_dispute(dispute_id):
            return _error_response(engine_mod.UnknownDispute(f"no dispute {dispute_id}"))

        async def generate():
            cursor = since
            idle = 0.0
            while True:
                if await request.is_disconnected():
                    return
                records = engine.log.events(dispute_id, since_seq=cursor)
                if records:
                    idle = 0.0
                    for record in records:
                        cursor = record.event_seq
                        data = json.dumps(event_wire(record), ensure_ascii=False)
                        yield f"id: {record.event_seq}\ndata: {data}\n\n"
                else:
                    idle += STREAM_POLL_SECONDS
                    if idle >= STREAM_HEARTBEAT_SECONDS:
                        idle = 0.0
                        yield ": heartbeat\n\n"
                await asyncio.sleep(STREAM_POLL_SECONDS)

        return StreamingResponse(
            generate(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    if ui_path is not None and Path(ui_path).exists():
        app.mount("/", StaticFiles(directory=ui_path, html=True), name="ui")

    return app
