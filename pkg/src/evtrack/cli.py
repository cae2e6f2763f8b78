"""Command-line client for the service API.

By default each command spins the FastAPI app up in-process (ASGI
transport, no sockets) so single-shot runs stay self-contained and
deterministic; ``--server URL`` points the same commands at a remote
instance instead. ``serve`` starts the HTTP server. On failure a
machine-readable error JSON goes to stderr and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx


def _call(server: str | None, path: str, payload: dict) -> dict:
    async def go() -> httpx.Response:
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=600.0) as client:
                return await client.post(path, json=payload)
        from .service.app import create_app
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://evtrack",
                                     timeout=600.0) as client:
            return await client.post(path, json=payload)

    response = asyncio.run(go())
    body = response.json()
    if response.status_code != 200:
        raise SystemExit(_fail(body if "error" in body else
                               {"error": {"type": f"http_{response.status_code}",
                                          "message": json.dumps(body)}}))
    return body


def _fail(error_body: dict) -> int:
    print(json.dumps(error_body), file=sys.stderr)
    return 1


def _emit(body: dict) -> None:
    print(json.dumps(body, indent=2, sort_keys=True))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="evtrack",
                                     description="event-camera tracking pipeline client")
    parser.add_argument("--server", default=None,
                        help="service URL; default runs the service in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="replay an event stream per a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--gating", choices=("on", "off"), default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--output-dir", default=None)

    p_synth = sub.add_parser("synth", help="generate a synthetic linear-motion stream")
    p_synth.add_argument("--speed", type=float, required=True, help="pixels per second")
    p_synth.add_argument("--size", type=int, required=True, help="object side, pixels")
    p_synth.add_argument("--duration", type=float, required=True, help="seconds")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--width", type=int, default=346)
    p_synth.add_argument("--height", type=int, default=260)
    p_synth.add_argument("--event-rate", type=float, default=3.0)
    p_synth.add_argument("--noise-rate", type=float, default=0.05)
    p_synth.add_argument("--seed", type=int, default=0)

    p_score = sub.add_parser("score", help="score a tracks CSV against ground truth")
    p_score.add_argument("--results", required=True)
    p_score.add_argument("--truth", required=True)
    p_score.add_argument("--iou", type=float, default=0.65)

    p_cal = sub.add_parser("calibrate-th", help="grid-search the TH gains")
    p_cal.add_argument("--sweep", default=None,
                       help="JSON sweep spec file; defaults to the built-in sweep")
    p_cal.add_argument("--seed", type=int, default=None)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            payload = {"config_path": args.config}
            if args.gating is not None:
                payload["gating"] = args.gating == "on"
            if args.seed is not None:
                payload["seed"] = args.seed
            if args.output_dir is not None:
                payload["output_dir"] = args.output_dir
            _emit(_call(args.server, "/run", payload))
        elif args.command == "synth":
            _emit(_call(args.server, "/synth", {
                "out_dir": args.out, "speed": args.speed, "object_size": args.size,
                "duration": args.duration, "width": args.width, "height": args.height,
                "event_rate": args.event_rate, "noise_rate": args.noise_rate,
                "seed": args.seed,
            }))
        elif args.command == "score":
            _emit(_call(args.server, "/score", {
                "results_path": args.results, "truth_path": args.truth,
                "iou_threshold": args.iou,
            }))
        elif args.command == "calibrate-th":
            payload = {}
            if args.sweep:
                with open(args.sweep, "r", encoding="ascii") as fh:
                    payload = json.load(fh)
            if args.seed is not None:
                payload["seed"] = args.seed
            _emit(_call(args.server, "/calibrate", payload))
        elif args.command == "serve":
            import uvicorn

            from .service.app import create_app
            uvicorn.run(create_app(), host=args.host, port=args.port)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        return _fail({"error": {"type": type(exc).__name__, "message": str(exc)}})
    return 0


if __name__ == "__main__":
    sys.exit(main())
