"""Shared fixtures: engines wired to the bundled demo script and lexicon."""

from __future__ import annotations

import threading
import time
from datetime import datetime, timedelta, timezone

import pytest
import uvicorn

from odrmediator.cli import bundled_data_path
from odrmediator.detection import load_lexicon
from odrmediator.engine import MediationEngine
from odrmediator.eventlog import EventLog
from odrmediator.providers import ScriptedProvider, ScriptEntry, load_script


class FakeClock:
    """Deterministic millisecond-aligned clock for trigger tests."""

    def __init__(self, start: datetime | None = None):
        self.now = start or datetime(2024, 1, 1, 12, 0, 0, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        return self.now

    def advance(self, **kwargs) -> None:
        self.now += timedelta(**kwargs)


@pytest.fixture
def fake_clock() -> FakeClock:
    return FakeClock()


@pytest.fixture
def demo_provider():
    return load_script(bundled_data_path("demo_script.json"))


@pytest.fixture
def sample_lexicon():
    return load_lexicon(bundled_data_path("lexicon.txt"))


@pytest.fixture
def default_provider():
    """Scripted provider that always answers something."""
    return ScriptedProvider([ScriptEntry(None, "Understood, let us keep talking.")])


@pytest.fixture
def make_engine(tmp_path, demo_provider, sample_lexicon):
    """Factory for engines; each gets its own event log file."""
    counter = {"n": 0}

    def _make(provider=None, lexicon=None, *, clock=None, fsync=True, log=None, **kwargs):
        counter["n"] += 1
        if log is None:
            log = EventLog(tmp_path / f"events-{counter['n']}.log", fsync=fsync)
        engine_kwargs = dict(lexicon=lexicon if lexicon is not None else sample_lexicon)
        if clock is not None:
            engine_kwargs["clock"] = clock
        engine_kwargs.update(kwargs)
        return MediationEngine(provider or demo_provider, log, **engine_kwargs)

    return _make


@pytest.fixture
def engine(make_engine):
    return make_engine()


class LiveServer:
    """Real uvicorn server in a thread; needed for streaming endpoints,
    which the in-process test client would buffer to completion."""

    def __init__(self, app):
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)
        self.base_url = ""

    def start(self) -> "LiveServer":
        self.thread.start()
        deadline = time.monotonic() + 10
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start in time")
            time.sleep(0.01)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        self.base_url = f"http://127.0.0.1:{port}"
        return self

    def stop(self) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=5)


@pytest.fixture
def live_server():
    servers: list[LiveServer] = []

    def _start(app) -> LiveServer:
        server = LiveServer(app).start()
        servers.append(server)
        return server

    yield _start
    for server in servers:
        server.stop()
