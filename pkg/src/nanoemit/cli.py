"""Thin command-line client for the simulation service.

Subcommands run/sweep/compare parse a local config file, submit it to the
service (an in-process app by default, or a remote server via --server),
and write the returned tables and report under --out.  `serve` starts the
HTTP service itself.

Exit codes: 0 success, 2 config error, 3 solver/transport failure,
4 resource guard.
"""

import argparse
import json
import sys
from pathlib import Path

import httpx

from .config import load_config_file
from .errors import ConfigError
from .reports import RunOutcome, Table, write_outputs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_RESOURCE = 4


def parse_n_spec(spec):
    """Parse an N list like '4..9' or '4,5,7'."""
    out = []
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if ".." in chunk:
            lo, hi = chunk.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif chunk:
            out.append(int(chunk))
    if not out:
        raise ConfigError(f"could not parse any N values from {spec!r}")
    return out


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=3600.0)
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service.app import app

    return TestClient(app)


def _localize_paths(raw, config_path):
    couplings = raw.get("couplings", {})
    if couplings.get("source") == "tabulated":
        path = Path(couplings.get("path", ""))
        if not path.is_absolute():
            couplings["path"] = str((Path(config_path).parent / path).resolve())
    return raw


def _build_request(args):
    raw = load_config_file(args.config)
    raw = _localize_paths(raw, args.config)
    req = {"config": raw}
    if args.solver:
        req["solver"] = args.solver
    if args.tol_rel is not None:
        req["rtol"] = args.tol_rel
    if args.tol_abs is not None:
        req["atol"] = args.tol_abs
    return req


def _handle_response(resp, out_dir):
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail")
        except json.JSONDecodeError:
            detail = None
        if isinstance(detail, dict):
            category = detail.get("category", "solver")
            message = detail.get("message", "unknown failure")
        else:
            category = "config" if resp.status_code in (400, 422) else "solver"
            message = json.dumps(detail) if detail is not None else resp.text
        print(f"error ({category}): {message}", file=sys.stderr)
        if category == "config":
            return EXIT_CONFIG
        if category == "resource":
            return EXIT_RESOURCE
        return EXIT_SOLVER

    payload = resp.json()
    outcome = RunOutcome(
        report=payload["report"],
        tables={name: Table.from_payload(t) for name, t in payload["tables"].items()},
    )
    written = write_outputs(outcome, out_dir)
    for path in written:
        print(f"wrote {path}")
    report = outcome.report
    if report.get("pulse_metrics"):
        for key, m in report["pulse_metrics"].items():
            width = m["width_fs"]
            width_txt = f"{width:.2f} fs" if width is not None else "n/a"
            print(
                f"  {key}: i_max={m['i_max']:.4g} t_center={m['t_center_fs']:.4g} fs "
                f"width={width_txt} valid={m['valid']}"
            )
    if report.get("scaling_fit"):
        q = report["scaling_fit"]["i_max_fit"]
        w = report["scaling_fit"]["width_fit"]
        print(
            f"  fits: i_max = {q['a']:.4g} + {q['b']:.4g} N^2 (R2={q['r2']:.4f}); "
            f"width = {w['c']:.4g} + {w['d']:.4g}/N (R2={w['r2']:.4f})"
        )
    if report.get("fit_refusal"):
        print(f"  scaling fit not performed: {report['fit_refusal']}")
    if report.get("deviations"):
        for pair, table in report["deviations"].items():
            cells = ", ".join(f"{k}={v:.4g}" for k, v in table.items())
            print(f"  {pair}: {cells}")
    for warning in report.get("warnings", []):
        print(f"  warning: {warning}")
    return EXIT_OK


def _submit(args, endpoint, extra=None):
    try:
        req = _build_request(args)
    except ConfigError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if extra:
        req.update(extra)
    try:
        with _client(args.server) as client:
            resp = client.post(endpoint, json=req)
    except httpx.HTTPError as exc:
        print(f"error (transport): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return _handle_response(resp, args.out)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="nanoemit",
        description="Collective-emission simulations of coupled quantum emitters",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="TOML or JSON scenario config")
        p.add_argument("--out", default="nanoemit_out", help="output directory")
        p.add_argument("--solver", choices=["exact", "mf1", "mf2"], default=None)
        p.add_argument("--tol-abs", type=float, default=None, dest="tol_abs")
        p.add_argument("--tol-rel", type=float, default=None, dest="tol_rel")
        p.add_argument("--server", default=None, help="remote service URL (default: in-process)")

    p_run = sub.add_parser("run", help="run one scenario")
    add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario for several emitter numbers")
    add_common(p_sweep)
    p_sweep.add_argument("--n", required=True, help="N values, e.g. 4..9 or 4,6,8")

    p_cmp = sub.add_parser("compare", help="run exact, mf2 and mf1 and report deviations")
    add_common(p_cmp)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        uvicorn.run("nanoemit.service.app:app", host=args.host, port=args.port)
        return EXIT_OK

    if args.command == "run":
        return _submit(args, "/run")
    if args.command == "compare":
        return _submit(args, "/compare")
    # sweep
    try:
        n_values = parse_n_spec(args.n)
    except (ConfigError, ValueError) as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _submit(args, "/sweep", extra={"n_values": n_values})


if __name__ == "__main__":
    sys.exit(main())
