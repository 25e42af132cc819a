"""Service configuration: file loading and engine bootstrapping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import detection, prompting
from .engine import MediationEngine
from .eventlog import EventLog
from .providers import CompletionProvider, ProviderConfig, RemoteProvider, load_script


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    """Process configuration; exactly one provider mode must be active."""

    listen_address: str = "127.0.0.1:8470"
    provider: Optional[ProviderConfig] = None
    script_path: Optional[Path] = None
    lexicon_path: Optional[Path] = None
    llm_classifier_enabled: bool = False
    trigger_poll_interval: float = 30.0
    context_window_size: int = prompting.DEFAULT_CONTEXT_WINDOW
    log_path: Path = field(default=Path("events.log"))
    ui_path: Optional[Path] = None

    def __post_init__(self) -> None:
        if (self.provider is None) == (self.script_path is None):
            raise ConfigError("configure exactly one provider mode: remote or scripted")
        if self.context_window_size < 1:
            raise ConfigError("context_window_size must be >= 1")
        if self.trigger_poll_interval <= 0:
            raise ConfigError("trigger_poll_interval must be positive")

    @property
    def host(self) -> str:
        host, _, _ = self.listen_address.rpartition(":")
        return host or "127.0.0.1"

    @property
    def port(self) -> int:
        _, _, port = self.listen_address.rpartition(":")
        try:
            return int(port)
        except ValueError as exc:
            raise ConfigError(f"bad listen address {self.listen_address!r}") from exc


def load_config(path: str | Path) -> ServiceConfig:
    """Load a JSON config file; keys mirror ServiceConfig.

    The "provider" key is either {"mode": "scripted", "script_path": ...}
    or {"mode": "remote", "endpoint_url": ..., "model_id": ..., ...}.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")

    provider_cfg = data.get("provider") or {}
    mode = provider_cfg.get("mode")
    provider: Optional[ProviderConfig] = None
    script_path: Optional[Path] = None
    if mode == "scripted":
        if "script_path" not in provider_cfg:
            raise ConfigError("scripted provider needs script_path")
        script_path = Path(provider_cfg["script_path"])
    elif mode == "remote":
        try:
            provider = ProviderConfig(
                endpoint_url=provider_cfg["endpoint_url"],
                model_id=provider_cfg["model_id"],
                api_key_env=provider_cfg.get("api_key_env", "LLM_API_KEY"),
                max_context_tokens=provider_cfg.get("max_context_tokens", 8192),
                max_completion_tokens=provider_cfg.get("max_completion_tokens", 1024),
                temperature=provider_cfg.get("temperature", 0.7),
                request_timeout=provider_cfg.get("request_timeout", 30.0),
                max_retries=provider_cfg.get("max_retries", 2),
            )
        except KeyError as exc:
            raise ConfigError(f"remote provider config missing {exc}") from exc
    else:
        raise ConfigError("provider.mode must be 'remote' or 'scripted'")

    return ServiceConfig(
        listen_address=data.get("listen_address", "127.0.0.1:8470"),
        provider=provider,
        script_path=script_path,
        lexicon_path=Path(data["lexicon_path"]) if data.get("lexicon_path") else None,
        llm_classifier_enabled=data.get("llm_classifier_enabled", False),
        trigger_poll_interval=data.get("trigger_poll_interval", 30.0),
        context_window_size=data.get("context_window_size", prompting.DEFAULT_CONTEXT_WINDOW),
        log_path=Path(data.get("log_path", "events.log")),
        ui_path=Path(data["ui_path"]) if data.get("ui_path") else None,
    )


def build_provider(config: ServiceConfig) -> CompletionProvider:
    if config.script_path is not None:
        return load_script(config.script_path)
    assert config.provider is not None
    return RemoteProvider(config.provider)


def build_engine(config: ServiceConfig, *, fsync: bool = True) -> MediationEngine:
    """Wire provider, lexicon and event log into a ready engine."""
    provider = build_provider(config)
    lexicon = (
        detection.load_lexicon(config.lexicon_path)
        if config.lexicon_path
        else detection.EMPTY_LEXICON
    )
    log = EventLog(config.log_path, fsync=fsync)
    return MediationEngine(
        provider,
        log,
        lexicon=lexicon,
        llm_classifier_enabled=config.llm_classifier_enabled,
        context_window_size=config.context_window_size,
    )
