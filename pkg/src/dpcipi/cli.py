"""Thin command-line client for the pipeline service.

Subcommands mirror the service endpoints one to one. By default each command
invokes the endpoint handler in process; with --server it sends the same
request to a running instance over HTTP. Exit codes: 0 success, 1 internal
error, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx
from pydantic import ValidationError

from .config import RunConfig
from .errors import InputError

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpcipi",
        description="Predict cross-immunity between influenza gene sequence pairs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="path to the run-config JSON file")
        p.add_argument("--server", help="base URL of a running service instance")
        p.add_argument("--seed", type=int)
        p.add_argument("--task", choices=["binary", "multilevel"])
        p.add_argument("--operator", choices=["mii", "concat"])
        p.add_argument("--init", choices=["pretrained", "random"], dest="embed_init")
        p.add_argument("--epochs", type=int)
        p.add_argument("--workdir")

    for name in ("preprocess", "train", "evaluate", "ablate"):
        common(sub.add_parser(name))
    predict = sub.add_parser("predict")
    common(predict)
    predict.add_argument("--reference", required=True, help="reference strain bases")
    predict.add_argument("--test", required=True, help="test strain bases")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def load_run_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise InputError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"config file is not valid JSON: {exc}") from None
    for field in ("seed", "task", "operator", "embed_init", "epochs"):
        value = getattr(args, field, None)
        if value is not None:
            data[field] = value
    if getattr(args, "workdir", None):
        data.setdefault("paths", {})["workdir"] = args.workdir
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise InputError(f"invalid configuration: {exc}") from None


def _remote(server: str, command: str, payload: dict) -> dict:
    url = server.rstrip("/") + "/" + command
    response = httpx.post(url, json=payload, timeout=None)
    if response.status_code == 400:
        raise InputError(response.json().get("detail", response.text))
    if response.status_code >= 500:
        raise RuntimeError(f"server error {response.status_code}: {response.text}")
    response.raise_for_status()
    return response.json()


def run_command(args: argparse.Namespace) -> dict:
    cfg = load_run_config(args)
    command = args.command
    if command == "predict":
        payload = {"config": cfg.model_dump(), "reference": args.reference, "test": args.test}
    elif command == "ablate":
        payload = {"config": cfg.model_dump(), "tasks": ["binary", "multilevel"]}
    else:
        payload = cfg.model_dump()
    if args.server:
        return _remote(args.server, command, payload)

    from . import pipeline

    if command == "preprocess":
        return pipeline.preprocess(cfg)
    if command == "train":
        return pipeline.train(cfg)
    if command == "evaluate":
        return pipeline.evaluate(cfg)
    if command == "ablate":
        return pipeline.ablate(cfg)
    if command == "predict":
        return pipeline.predict(cfg, args.reference, args.test)
    raise RuntimeError(f"unhandled command '{command}'")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK
    try:
        result = run_command(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
