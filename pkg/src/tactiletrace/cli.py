"""Command-line client for the tactile fingertip service.

All commands go through the HTTP API: by default against an in-process
instance of the service, or against a remote one with ``--server``.
Exit codes: 0 ok, 1 usage error, 2 data error.

A config file (``--config``) holds flat ``key = value`` lines using the
long flag names (dashes or underscores); explicit flags override it.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_TIMEOUT = 300.0


class CliError(Exception):
    """Data-level failure; carries the exit code."""

    def __init__(self, message: str, code: int = EXIT_DATA):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for data
    # errors, so remap.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class ServiceClient:
    """Minimal HTTP client; in-process ASGI unless a server URL is given."""

    def __init__(self, server: str | None = None):
        self.server = server

    def request(self, method: str, path: str, **kwargs) -> httpx.Response:
        try:
            if self.server:
                with httpx.Client(base_url=self.server, timeout=_TIMEOUT) as client:
                    return client.request(method, path, **kwargs)
            from .service import create_app

            async def _go() -> httpx.Response:
                transport = httpx.ASGITransport(app=create_app())
                async with httpx.AsyncClient(
                    transport=transport, base_url="http://tactiletrace.local", timeout=_TIMEOUT
                ) as client:
                    return await client.request(method, path, **kwargs)

            return asyncio.run(_go())
        except httpx.HTTPError as exc:
            raise CliError(f"service request failed: {exc}") from exc

    def checked(self, method: str, path: str, **kwargs) -> httpx.Response:
        response = self.request(method, path, **kwargs)
        if response.status_code >= 400:
            try:
                payload = response.json()
                detail = f"{payload.get('error', 'error')}: {payload.get('detail', response.text)}"
            except (ValueError, AttributeError):
                detail = response.text
            raise CliError(f"service returned {response.status_code}: {detail}")
        return response


def _read_kv_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` (or ``key value``) lines; # starts a comment."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        else:
            key, _, value = line.partition(" ")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if not key or not value:
            raise CliError(f"{path}:{line_no}: expected 'key = value'")
        out[key] = value
    return out


def _resolve(args: argparse.Namespace, config: dict[str, str], key: str, default, cast):
    flag_value = getattr(args, key, None)
    if flag_value is not None:
        return flag_value
    if key in config:
        try:
            return cast(config[key])
        except ValueError as exc:
            raise CliError(f"config value for {key!r}: {exc}") from exc
    return default


def _grid_payload(args, config) -> dict:
    grid_path = _resolve(args, config, "grid", None, str)
    if grid_path is None:
        return {}
    values = _read_kv_file(grid_path)
    payload = {}
    for key, cast in (
        ("rows", int),
        ("cols", int),
        ("pitch_x_mm", float),
        ("pitch_y_mm", float),
        ("odd_row_offset", float),
    ):
        if key in values:
            try:
                payload[key] = cast(values[key])
            except ValueError as exc:
                raise CliError(f"{grid_path}: bad {key}: {exc}") from exc
    return {"grid": payload} if payload else {}


def _sensor_payload(args, config) -> dict:
    return {
        "sensor": {
            "noise_sigma": _resolve(args, config, "noise_sigma", 0.0, float),
            "samples_per_cell": _resolve(args, config, "samples_per_cell", 64, int),
            "seed": _resolve(args, config, "seed", 0, int),
        }
    }


def _scene_payload(args, config) -> dict:
    scene = _resolve(args, config, "scene", None, str)
    if scene is None:
        raise CliError("a scene is required (--scene NAME_OR_PATH)")
    path = Path(scene)
    if path.is_file():
        return {"scene_text": path.read_text("utf-8")}
    if path.suffix or "/" in scene:
        raise CliError(f"scene file not found: {scene}")
    return {"scene_name": scene}


def _write_out(data: bytes | str, out: str | None) -> None:
    if out is None or out == "-":
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        return
    path = Path(out)
    if path.parent and not path.parent.exists():
        raise CliError(f"output directory does not exist: {path.parent}")
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_text(data, "utf-8")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--server", help="service URL (default: in-process)")
    parser.add_argument("--grid", help="grid spec file (flat key/value)")
    parser.add_argument("--seed", type=int, help="RNG seed (default 0)")
    parser.add_argument("--noise-sigma", dest="noise_sigma", type=float, help="sensor noise, reported units")
    parser.add_argument("--samples-per-cell", dest="samples_per_cell", type=int, help="supersampling count")


def build_parser() -> _Parser:
    parser = _Parser(prog="tactiletrace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a scene into a .tfl frame log")
    _add_common(p)
    p.add_argument("--scene", help="builtin scene name or scene file path")
    p.add_argument("--frames", type=int, help="number of frames (default 10)")
    p.add_argument("--out", required=True, help="output .tfl path ('-' for stdout)")

    p = sub.add_parser("process", help="run the pipeline over a .tfl log")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True, help="input .tfl path")
    p.add_argument("--out", help="output JSONL path (default stdout)")
    p.add_argument("--min-gap", dest="min_gap", type=int, help="NoSplit floor (default 8)")

    p = sub.add_parser("trace", help="closed-loop trace; writes JSONL and SVG")
    _add_common(p)
    p.add_argument("--task", choices=("cloth_edge", "cloth_corner", "cable"), help="trace task")
    p.add_argument("--scene", help="builtin scene name or scene file path")
    p.add_argument("--out-dir", dest="out_dir", required=True, help="output directory")
    p.add_argument("--kp", type=float, help="proportional gain (default 0.5)")
    p.add_argument("--setpoint", type=float, help="target centroid height, mm (default: start height)")
    p.add_argument("--step-mm", dest="step_mm", type=float, help="advance per step (default 5)")
    p.add_argument("--max-steps", dest="max_steps", type=int, help="step limit (default 60)")

    p = sub.add_parser("render", help="render one frame as ascii or svg")
    _add_common(p)
    p.add_argument("--scene", help="render the first frame of this scene")
    p.add_argument("--in", dest="infile", help="take the frame from this .tfl log")
    p.add_argument("--index", type=int, default=0, help="frame index within the log")
    p.add_argument("--format", choices=("ascii", "svg"), help="output format (default ascii)")
    p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("sweep", help="mean value per material, full coverage")
    _add_common(p)
    p.add_argument("--materials", help="file of 'name tau' lines (default: builtin set)")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def cmd_simulate(args, config, client: ServiceClient) -> int:
    payload = {
        "frames": _resolve(args, config, "frames", 10, int),
        **_scene_payload(args, config),
        **_grid_payload(args, config),
        **_sensor_payload(args, config),
    }
    response = client.checked("POST", "/simulate", json=payload)
    _write_out(response.content, args.out)
    return EXIT_OK


def cmd_process(args, config, client: ServiceClient) -> int:
    try:
        body = Path(args.infile).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {args.infile}: {exc}") from exc
    params = {}
    min_gap = _resolve(args, config, "min_gap", None, int)
    if min_gap is not None:
        params["min_gap"] = min_gap
    response = client.checked(
        "POST",
        "/process",
        content=body,
        params=params,
        headers={"content-type": "application/octet-stream"},
    )
    _write_out(response.text, getattr(args, "out", None))
    return EXIT_OK


def cmd_trace(args, config, client: ServiceClient) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    task = _resolve(args, config, "task", None, str)
    if task is None:
        raise CliError("a task is required (--task)")
    controller = {
        "k_p": _resolve(args, config, "kp", 0.5, float),
        "step_mm": _resolve(args, config, "step_mm", 5.0, float),
        "max_steps": _resolve(args, config, "max_steps", 60, int),
    }
    setpoint = _resolve(args, config, "setpoint", None, float)
    if setpoint is not None:
        controller["setpoint_y"] = setpoint
    payload = {
        "task": task,
        "controller": controller,
        "include_svg": True,
        **_scene_payload(args, config),
        **_grid_payload(args, config),
        **_sensor_payload(args, config),
    }
    response = client.checked("POST", "/trace", json=payload)
    result = response.json()
    jsonl = "".join(json.dumps(step) + "\n" for step in result["steps"])
    (out_dir / "trace.jsonl").write_text(jsonl, "utf-8")
    (out_dir / "trace.svg").write_text(result["svg"] or "", "utf-8")
    events = result["events"]
    (out_dir / "events.json").write_text(json.dumps(events, indent=2) + "\n", "utf-8")
    terminal = events[-1]
    print(f"{terminal['kind']} at step {terminal['step']} ({len(result['steps'])} steps)")
    return EXIT_OK


def cmd_render(args, config, client: ServiceClient) -> int:
    fmt = _resolve(args, config, "format", "ascii", str)
    payload: dict = {
        "format": fmt,
        **_grid_payload(args, config),
        **_sensor_payload(args, config),
    }
    if args.infile:
        try:
            body = Path(args.infile).read_bytes()
        except OSError as exc:
            raise CliError(f"cannot read {args.infile}: {exc}") from exc
        from .frame_codec import FRAME_SIZE, TruncatedLog, complement, decode

        if len(body) % FRAME_SIZE:
            raise CliError(f"truncated log: {len(body)} octets")
        frames = [body[i : i + FRAME_SIZE] for i in range(0, len(body), FRAME_SIZE)]
        if not 0 <= args.index < len(frames):
            raise CliError(f"frame index {args.index} outside log of {len(frames)} frames")
        try:
            frame = complement(decode(frames[args.index]))
        except (TruncatedLog, ValueError) as exc:
            raise CliError(str(exc)) from exc
        payload["values"] = list(frame.values)
    else:
        payload.update(_scene_payload(args, config))
    response = client.checked("POST", "/render", json=payload)
    _write_out(response.text, getattr(args, "out", None))
    return EXIT_OK


def cmd_sweep(args, config, client: ServiceClient) -> int:
    payload: dict = {**_grid_payload(args, config), **_sensor_payload(args, config)}
    materials_path = _resolve(args, config, "materials", None, str)
    if materials_path is not None:
        rows = _read_kv_file(materials_path)
        try:
            payload["materials"] = [
                {"name": name, "tau": float(tau)} for name, tau in rows.items()
            ]
        except ValueError as exc:
            raise CliError(f"{materials_path}: {exc}") from exc
    response = client.checked("POST", "/sweep", json=payload)
    for entry in response.json()["materials"]:
        print(f"{entry['name']:<16s} {entry['mean_value']:7.2f}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.command == "serve":
        return cmd_serve(args)
    try:
        config = _read_kv_file(args.config) if args.config else {}
        client = ServiceClient(server=args.server)
        handler = {
            "simulate": cmd_simulate,
            "process": cmd_process,
            "trace": cmd_trace,
            "render": cmd_render,
            "sweep": cmd_sweep,
        }[args.command]
        return handler(args, config, client)
    except CliError as exc:
        print(f"tactiletrace: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
