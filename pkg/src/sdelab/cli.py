"""Command-line front end: a thin client of the experiment service.

Each subcommand builds a request model, posts it to the service and writes
the returned file artifacts into the output directory. By default the
service app runs in-process over an ASGI transport; --server (or
SDELAB_SERVER) points the same client at a remote instance. --workers is
passed as a query parameter and cannot change output bytes.

Exit codes: 0 ok, 2 usage error, 3 model-domain/estimation error,
4 resource guard, 1 anything else.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path
from typing import Optional

import httpx

EXIT_CODES = {"usage": 2, "model_domain": 3, "estimation": 3, "quadrature": 3,
              "resource": 4}

MODEL_PARAM_FLAGS = {
    "d": int, "r": float, "theta": float, "vol": float, "mu": float,
    "amp": float, "freq": float, "decay": float,
}


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = 2):
        super().__init__(message)
        self.exit_code = exit_code


def _parse_vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise CliError(f"bad vector literal '{text}': {exc}") from exc


def _parse_levels(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise CliError(f"bad level list '{text}': {exc}") from exc


def _parse_scalar_fn(spec: str) -> dict:
    """const:<v> | poly:<c0,c1,...> | table:<csv-path> | auto"""
    if spec == "auto":
        return {"kind": "auto"}
    head, sep, rest = spec.partition(":")
    if not sep:
        raise CliError(f"bad scalar function '{spec}' (use const:<v>, poly:<c0,..>, table:<path>, auto)")
    if head == "const":
        try:
            return {"kind": "const", "value": float(rest)}
        except ValueError as exc:
            raise CliError(f"bad const literal '{rest}': {exc}") from exc
    if head == "poly":
        return {"kind": "poly", "coeffs": _parse_vector(rest)}
    if head == "table":
        path = Path(rest)
        if not path.exists():
            raise CliError(f"table file not found: {path}")
        ts, values = [], []
        for line in path.read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                t, v = float(cells[0]), float(cells[1])
            except (ValueError, IndexError):
                continue  # header or malformed row
            ts.append(t)
            values.append(v)
        if len(ts) < 2:
            raise CliError(f"table file {path} needs at least two numeric rows")
        return {"kind": "table", "ts": ts, "values": values}
    raise CliError(f"unknown scalar function kind '{head}'")


def _model_spec(args) -> dict:
    if args.model_file:
        try:
            cfg = json.loads(Path(args.model_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read model file {args.model_file}: {exc}") from exc
        if not isinstance(cfg, dict) or "model" not in cfg:
            raise CliError(f"model file {args.model_file} must contain {{'model': name, 'params': ...}}")
        return {"name": cfg["model"], "params": cfg.get("params", {})}
    if not args.model:
        raise CliError("missing --model (or --model-file)")
    params = {}
    for flag in MODEL_PARAM_FLAGS:
        val = getattr(args, flag, None)
        if val is not None:
            params[flag] = val
    return {"name": args.model, "params": params}


def _control_spec(name: Optional[str], args) -> dict:
    params = {}
    if getattr(args, "slope", None) is not None:
        params["slope"] = args.slope
    if getattr(args, "ctrl_R", None) is not None:
        params["R"] = args.ctrl_R
    if getattr(args, "ctrl_c0", None) is not None:
        params["c0"] = args.ctrl_c0
    return {"name": name or "linear", "params": params}


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SDELAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise CliError(f"SDELAB_SEED must be an integer, got '{env}'") from exc
    return 0


async def _post_async(server: Optional[str], path: str, payload: dict, workers: int) -> dict:
    if server:
        transport = None
        base = server.rstrip("/")
    else:
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        base = "http://sdelab.internal"
    async with httpx.AsyncClient(transport=transport, base_url=base, timeout=None) as client:
        resp = await client.post(path, json=payload, params={"workers": workers})
        try:
            body = resp.json()
        except json.JSONDecodeError as exc:
            raise CliError(f"malformed service response ({resp.status_code})", 1) from exc
        if resp.status_code != 200:
            detail = body.get("detail", {})
            if isinstance(detail, dict):
                kind = detail.get("kind", "internal")
                message = detail.get("message", str(detail))
            else:
                kind, message = "usage", str(detail)
            raise CliError(f"{kind} error: {message}", EXIT_CODES.get(kind, 1))
        return body


def _run(args, path: str, payload: dict) -> int:
    body = asyncio.run(_post_async(args.server, path, payload, args.workers))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for f in body["files"]:
        target = out_dir / f["name"]
        target.write_text(f["content"])
        print(f"wrote {target}")
    for key, value in body.get("summary", {}).items():
        print(f"{key}: {value}")
    return 0


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="built-in model name")
    p.add_argument("--model-file", help="declarative model config (JSON)")
    for flag, typ in MODEL_PARAM_FLAGS.items():
        p.add_argument(f"--{flag}", type=typ, default=None,
                       help=f"model parameter {flag}")


def _add_run_flags(p: argparse.ArgumentParser, default_out: str) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (SDELAB_SEED when absent, else 0)")
    p.add_argument("--workers", type=int, default=1,
                   help="parallelism cap; never changes outputs")
    p.add_argument("--server", default=os.environ.get("SDELAB_SERVER"),
                   help="remote service URL (default: in-process)")
    p.add_argument("--out", default=default_out, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdelab",
        description="Simulation and numerical verification for SDEs with non-Lipschitz coefficients",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write Euler sample paths as CSV")
    _add_model_flags(p)
    _add_run_flags(p, "runs/simulate")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--x0", type=str, default=None, help="start vector (default: ones)")
    p.add_argument("--R-stop", dest="r_stop", type=float, default=1e6)
    p.add_argument("--stream-base", type=int, default=0)

    p = sub.add_parser("check", help="sample a sufficient condition")
    p.add_argument("condition", choices=["monotonicity", "coercivity", "moment",
                                         "confluence", "k-ratio"])
    _add_model_flags(p)
    _add_run_flags(p, "runs/check")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--R", type=float, default=10.0)
    p.add_argument("--c0", type=float, default=0.5)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--K-radius", dest="k_radius", type=float, default=1.0)
    p.add_argument("--r-max", dest="r_max", type=float, default=100.0)
    p.add_argument("--eta", default="log", help="eta control name")
    p.add_argument("--gamma", default="linear", help="gamma control name")
    p.add_argument("--gamma-r", dest="gamma_r", default="linear", help="gamma_R control name")
    p.add_argument("--slope", type=float, default=None, help="linear control slope")
    p.add_argument("--ctrl-R", dest="ctrl_R", type=float, default=None, help="log control R")
    p.add_argument("--g", default="const:1", help="g(t) spec")
    p.add_argument("--f", default="const:1", help="f(t) spec")

    p = sub.add_parser("moments", help="maximum-process moment estimate and bounds")
    _add_model_flags(p)
    _add_run_flags(p, "runs/moments")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--x0", type=str, default=None, help="start vector (default: ones)")
    p.add_argument("--R-stop", dest="r_stop", type=float, default=1e6)
    p.add_argument("--f", default="const:1", help="f(t) spec or 'auto'")
    p.add_argument("--bound", choices=["i", "ii", "both", "none"], default="both")

    p = sub.add_parser("confluence", help="coupled two-start meeting statistics")
    _add_model_flags(p)
    _add_run_flags(p, "runs/confluence")
    p.add_argument("--x0", type=str, required=True)
    p.add_argument("--y0", type=str, required=True)
    p.add_argument("--eps", type=str, default="1e-6")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--R-stop", dest="r_stop", type=float, default=1e6)

    p = sub.add_parser("monotone", help="1D stochastic monotonicity statistics")
    _add_model_flags(p)
    _add_run_flags(p, "runs/monotone")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--y0", type=float, required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--R-stop", dest="r_stop", type=float, default=1e6)

    p = sub.add_parser("converge", help="coupled-resolution Cauchy diagnostic")
    _add_model_flags(p)
    _add_run_flags(p, "runs/converge")
    p.add_argument("--levels", type=str, required=True)
    p.add_argument("--ref-level", dest="ref_level", type=int, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--x0", type=str, default=None, help="start vector (default: ones)")
    p.add_argument("--R-stop", dest="r_stop", type=float, default=1e6)
    p.add_argument("--format", choices=["csv", "json", "both"], default="both")

    p = sub.add_parser("strong-error", help="RMS endpoint error against the exact solution")
    _add_model_flags(p)
    _add_run_flags(p, "runs/strong_error")
    p.add_argument("--levels", type=str, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--x0", type=str, default=None, help="start vector (default: ones)")
    p.add_argument("--oracle-pad", dest="oracle_pad", type=int, default=4)
    p.add_argument("--R-stop", dest="r_stop", type=float, default=1e6)
    p.add_argument("--format", choices=["csv", "json", "both"], default="both")

    p = sub.add_parser("eval-test-fn", help="evaluate a diagnostic test function")
    _add_run_flags(p, "runs/test_fn")
    p.add_argument("--kind", choices=["phi_delta", "varphi", "Phi_delta"], required=True)
    p.add_argument("--control", default="linear")
    p.add_argument("--slope", type=float, default=None)
    p.add_argument("--ctrl-R", dest="ctrl_R", type=float, default=None)
    p.add_argument("--ctrl-c0", dest="ctrl_c0", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--c0", type=float, default=None)

    p = sub.add_parser("serve", help="run the experiment service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    if cmd == "eval-test-fn":
        payload = {
            "kind": args.kind,
            "control": _control_spec(args.control, args),
            "delta": args.delta,
            "x": args.x,
            "c0": args.c0,
        }
        return _run(args, "/v1/eval-test-fn", payload)

    seed = _resolve_seed(args)
    if cmd == "simulate":
        payload = {
            "model": _model_spec(args), "level": args.level, "T": args.T,
            "paths": args.paths, "seed": seed,
            "x0": _parse_vector(args.x0) if args.x0 is not None else None,
            "R_stop": args.r_stop, "stream_base": args.stream_base,
        }
        return _run(args, "/v1/simulate", payload)
    if cmd == "check":
        payload = {
            "condition": args.condition,
            "eta": _control_spec(args.eta, args),
            "gamma": _control_spec(args.gamma, args),
            "gamma_r": _control_spec(args.gamma_r, args),
            "g": _parse_scalar_fn(args.g),
            "f": _parse_scalar_fn(args.f),
            "R": args.R, "c0": args.c0, "K": args.K,
            "K_radius": args.k_radius, "r_max": args.r_max,
            "samples": args.samples, "seed": seed,
        }
        if args.model or args.model_file:
            payload["model"] = _model_spec(args)
        return _run(args, "/v1/check", payload)
    if cmd == "moments":
        payload = {
            "model": _model_spec(args), "p": args.p, "T": args.T,
            "level": args.level, "paths": args.paths, "seed": seed,
            "x0": _parse_vector(args.x0) if args.x0 is not None else None,
            "R_stop": args.r_stop,
            "f": _parse_scalar_fn(args.f), "bound": args.bound,
        }
        return _run(args, "/v1/moments", payload)
    if cmd == "confluence":
        payload = {
            "model": _model_spec(args), "x0": _parse_vector(args.x0),
            "y0": _parse_vector(args.y0), "eps": _parse_vector(args.eps),
            "T": args.T, "level": args.level, "paths": args.paths,
            "seed": seed, "R_stop": args.r_stop,
        }
        return _run(args, "/v1/confluence", payload)
    if cmd == "monotone":
        payload = {
            "model": _model_spec(args), "x0": args.x0, "y0": args.y0,
            "T": args.T, "level": args.level, "paths": args.paths,
            "seed": seed, "R_stop": args.r_stop,
        }
        return _run(args, "/v1/monotone", payload)
    if cmd == "converge":
        payload = {
            "model": _model_spec(args),
            "x0": _parse_vector(args.x0) if args.x0 is not None else None,
            "T": args.T, "levels": _parse_levels(args.levels),
            "ref_level": args.ref_level, "paths": args.paths, "seed": seed,
            "R_stop": args.r_stop, "format": args.format,
        }
        return _run(args, "/v1/converge", payload)
    if cmd == "strong-error":
        payload = {
            "model": _model_spec(args),
            "x0": _parse_vector(args.x0) if args.x0 is not None else None,
            "T": args.T, "levels": _parse_levels(args.levels),
            "paths": args.paths, "seed": seed, "oracle_pad": args.oracle_pad,
            "R_stop": args.r_stop, "format": args.format,
        }
        return _run(args, "/v1/strong-error", payload)
    raise CliError(f"unknown command {cmd}")


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except CliError as exc:
        print(f"sdelab: {exc}", file=sys.stderr)
        return exc.exit_code
    except httpx.HTTPError as exc:
        print(f"sdelab: transport error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
