"""Command-line entry point.

One-command offline demo:

    odrmediator serve --scripted --seed-demo

which runs the server against the bundled scripted provider, sample
lexicon and demo disputes — no network, no API key.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from importlib import resources
from pathlib import Path

import uvicorn

from . import demo
from .config import ConfigError, ServiceConfig, build_engine, load_config
from .server import create_app

logger = logging.getLogger(__name__)

BUNDLED = "__bundled__"


def bundled_data_path(name: str) -> Path:
    return Path(str(resources.files("odrmediator").joinpath("data", name)))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odrmediator",
        description="Online dispute resolution platform with LLM-assisted mediation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the platform server")
    serve.add_argument("--config", type=Path, help="JSON config file (keys mirror ServiceConfig)")
    serve.add_argument(
        "--scripted",
        nargs="?",
        const=BUNDLED,
        metavar="SCRIPT",
        help="use the scripted provider; omit the path for the bundled demo script",
    )
    serve.add_argument("--listen", help="host:port to bind (overrides config)")
    serve.add_argument("--log", type=Path, help="event log path (overrides config)")
    serve.add_argument("--lexicon", type=Path, help="lexicon file path (overrides config)")
    serve.add_argument("--ui", type=Path, help="directory of built web UI files to serve at /")
    serve.add_argument(
        "--seed-demo",
        action="store_true",
        help="create the demo disputes at startup (skipped if the log already has them)",
    )
    return parser


def _resolve_config(args: argparse.Namespace) -> ServiceConfig:
    if args.config:
        config = load_config(args.config)
    else:
        # No config file: default to an offline scripted setup.
        config = ServiceConfig(
            script_path=bundled_data_path("demo_script.json"),
            lexicon_path=bundled_data_path("lexicon.txt"),
        )
    overrides: dict = {}
    if args.scripted:
        script = bundled_data_path("demo_script.json") if args.scripted == BUNDLED else Path(args.scripted)
        overrides["script_path"] = script
        overrides["provider"] = None
    if args.listen:
        overrides["listen_address"] = args.listen
    if args.log:
        overrides["log_path"] = args.log
    if args.lexicon:
        overrides["lexicon_path"] = args.lexicon
    if args.ui:
        overrides["ui_path"] = args.ui
    return dataclasses.replace(config, **overrides) if overrides else config


def serve(args: argparse.Namespace) -> int:
    try:
        config = _resolve_config(args)
        engine = build_engine(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed_demo and not engine.dispute_ids():
        seeded = demo.seed_all(engine)
        for key, dispute in seeded.items():
            print(f"seeded demo dispute {key}: {dispute.id}")
    app = create_app(engine, poll_interval=config.trigger_poll_interval, ui_path=config.ui_path)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        return serve(args)
    return 2  # pragma: no cover - argparse enforces the command set


if __name__ == "__main__":
    sys.exit(main())
