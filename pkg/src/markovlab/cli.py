"""`xlab` - command-line client for the markovlab service.

Every subcommand is a thin wrapper over one HTTP endpoint.  By default the
service runs in-process; pass ``--server URL`` to talk to a running instance
instead.  Either way the bytes written to disk are identical, because row
data arrives pre-formatted from the service.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .experiments import config_from_json, write_rows_csv

__all__ = ["main"]


class CliError(Exception):
    pass


class _Client:
    """Uniform .get/.post over an in-process app or a remote server."""

    def __init__(self, server: Optional[str] = None):
        if server:
            import httpx
            self._http = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings
            with warnings.catch_warnings():
                # some starlette builds warn about their httpx backend on import
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app
            self._http = TestClient(create_app())

    def get(self, path: str) -> dict:
        return self._check(self._http.get(path))

    def post(self, path: str, payload: dict) -> dict:
        return self._check(self._http.post(path, json=payload))

    @staticmethod
    def _check(response) -> dict:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise CliError(f"service error ({response.status_code}): {detail}")
        return response.json()


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _space_doc(path: str) -> dict:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise CliError(f"space file {path} is not valid JSON: {exc}") from exc


def _parse_powers(text: str) -> list:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise CliError(f"--powers expects comma-separated integers: {text!r}") from exc


def _prepare_out_dir(path: str, force: bool) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    if any(out.iterdir()) and not force:
        raise CliError(f"output directory {out} is not empty (pass --force to overwrite)")
    return out


def _cmd_list(args, client: _Client) -> int:
    for entry in client.get("/experiments")["experiments"]:
        print(f"{entry['name']:<24} {entry['description']}")
    return 0


def _cmd_run(args, client: _Client) -> int:
    try:
        cfg = config_from_json(_read_text(args.config))
    except Exception as exc:
        raise CliError(f"bad config {args.config}: {exc}") from exc
    out = _prepare_out_dir(args.out, args.force)
    resp = client.post("/experiments/run", {
        "experiment": cfg.experiment, "params": dict(cfg.params),
        "seed": cfg.seed, "oracle": args.oracle})
    csv_path = out / f"{resp['experiment']}.csv"
    write_rows_csv(csv_path, resp["header"], resp["rows"])
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps({
        "experiment": resp["experiment"],
        "seed": resp["seed"],
        "params": resp["params"],
        "assertions": resp["assertions"],
        "artifacts": [str(csv_path), str(summary_path)],
        "summary": resp["summary"],
    }, indent=2, sort_keys=True) + "\n")
    for a in resp["assertions"]:
        status = "pass" if a["pass"] else "FAIL"
        print(f"[{status}] {a['name']}: measured={a['measured']} "
              f"expected={a['expected']} tol={a['tol']} ({a['provenance']})")
    n_pass = sum(1 for a in resp["assertions"] if a["pass"])
    print(f"{resp['experiment']}: {n_pass}/{len(resp['assertions'])} assertions "
          f"passed; artifacts in {out}")
    return 0 if resp["all_passed"] else 1


def _cmd_density(args, client: _Client) -> int:
    resp = client.post("/density", {
        "graph": _read_text(args.graph), "space": _space_doc(args.space),
        "normalized": args.normalized, "bigraph": args.bigraph})
    if args.json:
        print(json.dumps({"t": resp["t"], "width": resp["width"],
                          "mode": resp["mode"]}))
    else:
        print(resp["t"])
    return 0


def _cmd_seq(args, client: _Client) -> int:
    resp = client.post("/seq", {
        "graph": _read_text(args.graph), "space": _space_doc(args.space),
        "orders": args.orders, "seed": args.seed})
    if args.report:
        write_rows_csv(Path(args.report), resp["header"], resp["rows"])
    print(f"orders_tested: {resp['orders_tested']}")
    print(f"max_deviation: {resp['max_deviation']!r}")
    return 0


def _cmd_sphere_k22(args, client: _Client) -> int:
    resp = client.post("/sphere-k22", {
        "d": args.d, "samples": args.samples, "seed": args.seed})
    write_rows_csv(Path(args.out), resp["header"], resp["rows"])
    print(f"mass_at_one: {resp['mass_at_one']!r}")
    print(f"ks_vs_uniform: {resp['ks_vs_uniform']!r}")
    return 0


def _cmd_spectrum(args, client: _Client) -> int:
    resp = client.post("/spectrum", {"space": _space_doc(args.space)})
    if args.json:
        print(json.dumps({"eigenvalues": resp["eigenvalues"],
                          "residual": resp["residual"]}))
    else:
        for value in resp["eigenvalues"]:
            print(repr(value))
    return 0


def _cmd_convolution(args, client: _Client) -> int:
    resp = client.post("/convolution", {
        "k_max": args.kmax, "powers": _parse_powers(args.powers)})
    write_rows_csv(Path(args.out), resp["header"], resp["rows"])
    checkpoints = ",".join(str(c) for c in resp["checkpoints"])
    for power in sorted(resp["partial_sums"], key=int):
        sums = " ".join(repr(v) for v in resp["partial_sums"][power])
        increasing = resp["strictly_increasing"][power]
        print(f"power={power} checkpoints={checkpoints} "
              f"strictly_increasing={increasing} sums: {sums}")
    return 0


def _cmd_serve(args, client: _Client) -> int:
    import uvicorn
    uvicorn.run("markovlab.service:app", host=args.host, port=args.port)
    return 0


def _add_space_graph(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, metavar="FILE",
                   help="pattern file (edge list, or bigraph JSON with --bigraph)")
    p.add_argument("--space", required=True, metavar="FILE",
                   help="space JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlab",
        description="densities, sequential measures and spectra on finite Markov spaces")
    parser.add_argument("--server", metavar="URL", default=None,
                        help="use a running service instead of in-process execution")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list available experiments")
    p.set_defaults(func=_cmd_list)

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("config", metavar="CONFIG.json")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--force", action="store_true",
                   help="allow writing into a non-empty directory")
    p.add_argument("--oracle", action="store_true",
                   help="regenerate pinned expected values before running")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("density", help="homomorphism density of a pattern in a space")
    _add_space_graph(p)
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--bigraph", action="store_true",
                   help="treat the pattern file as bigraph JSON")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("seq", help="order-independence report for the sequential measure")
    _add_space_graph(p)
    p.add_argument("--orders", required=True, type=int, metavar="K",
                   help="number of random insertion orders")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--report", metavar="CSV", help="write per-order deviations")
    p.set_defaults(func=_cmd_seq)

    p = sub.add_parser("sphere-k22", help="two-order K_{2,2} sampling on the sphere")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--samples", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True, metavar="CSV")
    p.set_defaults(func=_cmd_sphere_k22)

    p = sub.add_parser("spectrum", help="kernel eigenvalues of a space")
    p.add_argument("--space", required=True, metavar="FILE")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("convolution", help="cosine eigenvalues of the log-weight kernel")
    p.add_argument("--kmax", required=True, type=int)
    p.add_argument("--powers", default="2,4,8", metavar="P1,P2,...",
                   help="exponents for the partial power sums")
    p.add_argument("--out", required=True, metavar="CSV")
    p.set_defaults(func=_cmd_convolution)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        client = None if args.command == "serve" else _Client(args.server)
        return args.func(args, client)
    except CliError as exc:
        print(f"xlab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
