"""Thin command-line client for the balancing service.

Every subcommand serializes its arguments into a service request.  By
default the request runs against an in-process copy of the app (no
server needed, byte-identical results); pass ``--server URL`` to talk
to a running instance instead.

Exit codes: 0 success, 1 runtime failure, 2 infeasible verdict from the
``feasible`` subcommand, 64 usage errors.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

EX_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EX_USAGE)


def _post(path: str, payload: dict, server: str | None) -> dict:
    async def in_process() -> httpx.Response:
        from .service.app import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://balnet") as client:
            return await client.post(path, json=payload, timeout=None)

    if server:
        resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
    else:
        resp = asyncio.run(in_process())
    if resp.status_code >= 400:
        detail = resp.json().get("detail", resp.text) if resp.content else resp.text
        raise RuntimeError(f"{path} failed ({resp.status_code}): {detail}")
    return resp.json()


def cmd_generate(args) -> int:
    graph = _post("/generate", {"n": args.n, "p": args.p, "seed": args.seed}, args.server)
    text = json.dumps(graph, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_feasible(args) -> int:
    graph = json.loads(Path(args.graph).read_text())
    bounds = json.loads(Path(args.bounds).read_text())["bounds"]
    verdict = _post(
        "/feasible",
        {"graph": graph, "bounds": bounds, "brute_force": args.brute_force},
        args.server,
    )
    if verdict["feasible"]:
        sys.stdout.write(json.dumps({"feasible": True, "witness": verdict["witness"]}) + "\n")
        return 0
    out = {"feasible": False, "subset": verdict["subset"]}
    if verdict.get("bad_edge"):
        out["bad_edge"] = verdict["bad_edge"]
    sys.stdout.write(json.dumps(out) + "\n")
    return 2


def cmd_run(args) -> int:
    config = json.loads(Path(args.config).read_text())
    result = _post("/run", {"config": config}, args.server)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, csv_text in sorted(result["traces"].items()):
        (out_dir / name).write_text(csv_text)
    summary = {
        "summaries": result["summaries"],
        "warnings": result["warnings"],
        "mean_epsilon_per_round": result["mean_epsilon_per_round"],
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for warning in result["warnings"]:
        sys.stderr.write(f"warning: {warning}\n")
    sys.stdout.write(f"{len(result['summaries'])} run(s) -> {out_dir}\n")
    return 0


def cmd_replay(args) -> int:
    csv_text = Path(args.trace).read_text()
    result = _post(
        "/replay",
        {"trace_csv": csv_text, "monotone": args.monotone},
        args.server,
    )
    if not args.check_invariants:
        return 0
    for v in result["violations"]:
        sys.stderr.write(f"violation: {v}\n")
    return 0 if result["ok"] else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="balnet", description=__doc__)
    parser.add_argument("--server", default=None, help="service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a seeded random strongly connected digraph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("feasible", help="check the integer circulation conditions")
    p.add_argument("--graph", required=True)
    p.add_argument("--bounds", required=True)
    p.add_argument("--brute-force", action="store_true")
    p.set_defaults(fn=cmd_feasible)

    p = sub.add_parser("run", help="execute a seeded experiment batch")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("replay", help="re-validate an emitted trace file")
    p.add_argument("--trace", required=True)
    p.add_argument("--check-invariants", action="store_true")
    p.add_argument("--monotone", action="store_true")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EX_USAGE
    try:
        return args.fn(args)
    except (OSError, json.JSONDecodeError, RuntimeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
