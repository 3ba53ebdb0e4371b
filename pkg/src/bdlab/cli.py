"""Command line client for the experiment service.

The CLI computes nothing itself.  By default it mounts the service
in-process through an ASGI transport (no socket, nothing to start);
with BDLAB_URL set it sends the same requests to a remote server, so
scripts written against the CLI behave identically in both setups.

Exit codes: 0 success, 1 simulation or criterion failure, 2 config
violations.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path
from types import SimpleNamespace

import httpx

from .verification import format_result

ENV_URL = "BDLAB_URL"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bdlab",
        description="two-species tissue growth lab: Brinkman flow and its Darcy limit",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, jobs=False):
        sp.add_argument("--out", default=None, help="output root (overrides BDLAB_OUT)")
        sp.add_argument("--plots", action="store_true", help="emit SVG plots")
        if jobs:
            sp.add_argument("--jobs", type=int, default=1, help="parallel sweep members")

    sp = sub.add_parser("run", help="single simulation: snapshots, ledger, monitor")
    sp.add_argument("config", help="config file")
    common(sp)

    sp = sub.add_parser("sweep", help="sigma sweep against the Darcy reference")
    sp.add_argument("config", help="config file")
    common(sp, jobs=True)

    sp = sub.add_parser("regsweep", help="regularized-vs-direct consistency table")
    sp.add_argument("config", help="config file")
    common(sp)

    sp = sub.add_parser("verify", help="run the built-in acceptance suite")
    sp.add_argument("config", nargs="?", default=None,
                    help="optional config; validated, criteria stay pinned")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default=None, help="where to write results.csv")

    sp = sub.add_parser("serve", help="start the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    return p


def _client() -> httpx.AsyncClient:
    url = os.environ.get(ENV_URL)
    if url:
        return httpx.AsyncClient(base_url=url, timeout=None)
    from .service.app import app

    return httpx.AsyncClient(
        transport=httpx.ASGITransport(app=app), base_url="http://bdlab", timeout=None
    )


async def _post(path: str, payload: dict) -> tuple:
    async with _client() as client:
        resp = await client.post(path, json=payload)
        try:
            body = resp.json()
        except ValueError:
            body = {"error": resp.text}
    return resp.status_code, body


def _failure(status: int, body: dict) -> int:
    sys.stderr.write(json.dumps(body, sort_keys=True) + "\n")
    return 2 if status == 422 else 1


def _cmd_run(args) -> int:
    payload = {
        "config": Path(args.config).read_text(),
        "out": args.out,
        "plots": args.plots,
    }
    status, body = asyncio.run(_post("/run", payload))
    if status != 200:
        return _failure(status, body)
    print(f"artifacts in {body['out_dir']}")
    for key in ("manifest", "energy", "monitor"):
        print(f"  {body[key]}")
    print(f"  {len(body['snapshots'])} snapshot files")
    return 0


def _cmd_sweep(args) -> int:
    payload = {
        "config": Path(args.config).read_text(),
        "out": args.out,
        "plots": args.plots,
        "jobs": args.jobs,
    }
    status, body = asyncio.run(_post("/sweep", payload))
    if status != 200:
        return _failure(status, body)
    print(f"sweep of {body['rows']} members in {body['out_dir']}")
    print(f"  {body['report']}")
    print(f"  {body['shift']}")
    for path in body.get("plots", []):
        print(f"  {path}")
    return 0


def _cmd_regsweep(args) -> int:
    payload = {
        "config": Path(args.config).read_text(),
        "out": args.out,
        "plots": args.plots,
    }
    status, body = asyncio.run(_post("/regsweep", payload))
    if status != 200:
        return _failure(status, body)
    print(f"consistency table of {body['rows']} rows in {body['out_dir']}")
    print(f"  {body['table']}")
    for path in body.get("plots", []):
        print(f"  {path}")
    return 0


def _cmd_verify(args) -> int:
    payload = {"jobs": args.jobs, "out": args.out}
    if args.config is not None:
        payload["config"] = Path(args.config).read_text()
    status, body = asyncio.run(_post("/verify", payload))
    if status != 200:
        return _failure(status, body)
    for r in body["results"]:
        print(format_result(SimpleNamespace(**r)))
    failures = [r for r in body["results"] if not r["passed"]]
    if body.get("results_path"):
        print(f"results written to {body['results_path']}")
    if failures:
        sys.stderr.write(json.dumps(failures, sort_keys=True) + "\n")
        return 1
    print(f"all {len(body['results'])} criteria passed")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "regsweep": _cmd_regsweep,
    "verify": _cmd_verify,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        sys.stderr.write(json.dumps({"error": str(exc)}) + "\n")
        return 2
    except httpx.HTTPError as exc:
        sys.stderr.write(json.dumps({"error": f"transport: {exc}"}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
