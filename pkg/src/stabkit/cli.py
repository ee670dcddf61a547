"""Command-line client for the stabkit service.

Every subcommand builds a request, posts it to the service, and writes
the response bytes to --out (default: standard output). By default the
service runs in-process, so no server is needed; --server targets a
running instance instead (start one with `uvicorn stabkit.service:app`).

Timing and the manifest digest go to standard error; output files carry
only deterministic bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

USAGE_EXIT = 2
RUNTIME_EXIT = 1


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _parse_box(text: str) -> list[list[float]]:
    lo_text, hi_text = text.split("..")
    lo, hi = _floats(lo_text), _floats(hi_text)
    if len(lo) != len(hi):
        raise ValueError("box bounds have different dimensions")
    return [[a, b] for a, b in zip(lo, hi)]


def _write_output(data: bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(data.decode("utf-8"))
        if not data.endswith(b"\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "wb") as fh:
            fh.write(data)


def _post(args, path: str, payload: dict, extract: str | None = None) -> int:
    started = time.monotonic()
    with _client(args.server) as client:
        response = client.post(path, json=payload)
    elapsed = time.monotonic() - started
    if response.status_code == 422:
        sys.stderr.write(f"error: invalid request: {response.text}\n")
        return USAGE_EXIT
    if response.status_code != 200:
        sys.stderr.write(f"error: {response.status_code}: {response.text}\n")
        return RUNTIME_EXIT
    body = response.content
    if extract is not None:
        doc = response.json()
        body = doc[extract].encode("utf-8")
        manifest = doc.get("manifest", {})
    else:
        try:
            manifest = response.json().get("manifest", {})
        except (ValueError, AttributeError):
            manifest = {}
    _write_output(body, args.out)
    digest = manifest.get("config_digest", "-")
    sys.stderr.write(f"stabkit {path} done in {elapsed:.3f}s (config {digest[:12]})\n")
    return 0


def _stat_doc(args, default_params: dict | None = None) -> dict:
    config = _load_json(args.config) if getattr(args, "config", None) else {}
    doc = dict(config.get("stat") or {})
    if getattr(args, "stat", None):
        doc["name"] = args.stat
    doc.setdefault("params", {})
    if default_params:
        doc["params"].update(default_params)
    doc.setdefault("scaling", "none")
    return doc


def _process_doc(args) -> dict:
    config = _load_json(args.config)
    process = config.get("process", config if "mode" in config else None)
    if process is None:
        raise ValueError("config file has no process section")
    process = dict(process)
    if getattr(args, "seed", None) is not None:
        process["seed"] = args.seed
    return process


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", help="URL of a running service (default: in-process)")
    common.add_argument("--out", help="output path (default: stdout)")
    parser = argparse.ArgumentParser(
        prog="stabkit",
        description="point-process statistics, cost diagnostics, and rate experiments",
        parents=[common],
    )
    parser.set_defaults(server=None, out=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add_parser("sample", help="draw one replication of a point process")
    p.add_argument("--config", required=True, help="JSON file with the process section")
    p.add_argument("--seed", type=int)
    p.add_argument("--offset", type=int, default=0, help="replication seed offset")

    p = add_parser("stat", help="evaluate a statistic on a cloud CSV")
    stat_sub = p.add_subparsers(dest="stat_name", required=True)

    q = stat_sub.add_parser("knn", parents=[common])
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--k", type=int, default=1)
    q.add_argument("--theta", type=float, default=1.0)
    q.add_argument("--graph", help="also export the neighbor graph CSV to this path")

    q = stat_sub.add_parser("entropy", parents=[common])
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--weights", default="kl", help="kl | auto | path to a weights JSON")

    q = stat_sub.add_parser("euler", parents=[common])
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--r", type=float, required=True)
    q.add_argument("--kind", choices=["vr", "cech"], default="vr")
    q.add_argument("--scale-n", type=float, dest="scale_n")
    q.add_argument("--budget", type=int, default=10**7)

    q = stat_sub.add_parser("mst", parents=[common])
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--box", help="restriction box, e.g. 0,0..1,1")
    q.add_argument("--window-alpha", type=float, dest="window_alpha")
    q.add_argument("--window-x", dest="window_x", help="window center, e.g. 0.5,0.5")
    q.add_argument("--edges", action="store_true", help="include tree edges in the output")

    p = add_parser("costs", help="evaluate a cost operator on a sampled cloud")
    p.add_argument("--stat", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--op", choices=["add", "marked", "second", "flex"], required=True)
    p.add_argument("--x", required=True, help="inserted point, e.g. 0.5,0.5")
    p.add_argument("--y", help="mark for the marked operator")
    p.add_argument("--x2", help="second point for the second-order operator")
    p.add_argument("--window", default="all",
                   help="flex window: all | empty | ball:R | box:lo..hi")
    p.add_argument("--seed", type=int)
    p.add_argument("--offset", type=int, default=0)

    p = add_parser("radius", help="empirical checks of the stabilization assumptions")
    p.add_argument("--stat", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--assumption", choices=["tail", "kexp", "moment"], default="tail")
    p.add_argument("--x", help="anchor point for the tail check")
    p.add_argument("--radii", help="comma separated radii")
    p.add_argument("--probes", type=int, default=8)
    p.add_argument("--region", default="full", help="full | half:AXIS:THRESHOLD")
    p.add_argument("--distances", help="comma separated distances to the region")
    p.add_argument("--p", type=float, help="moment order (> 4)")
    p.add_argument("--x-grid", dest="x_grid", help="semicolon separated points")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int)

    p = add_parser("weights", help="solve the entropy weight system")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)

    p = add_parser("clt", help="run a rate experiment over a size grid")
    p.add_argument("--stat", required=True)
    p.add_argument("--config", required=True,
                   help="JSON with process_template (and optional stat section)")
    p.add_argument("--grid", required=True, help="comma separated sizes")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = add_parser("bound", help="evaluate the normal-approximation bound terms")
    p.add_argument("--kind", choices=["theta", "gamma"], required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--stat")
    p.add_argument("--region", default="full")
    p.add_argument("--c2", type=float)
    p.add_argument("--c3", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--window", default="all", choices=["all", "empty", "ball", "cube"])
    p.add_argument("--window-radius", type=float, default=0.0, dest="window_radius")
    p.add_argument("--window-side", type=float, default=0.0, dest="window_side")
    p.add_argument("--triples", type=int, default=24)
    p.add_argument("--inner", type=int, default=48)
    p.add_argument("--var-reps", type=int, default=500, dest="var_reps")
    p.add_argument("--batches", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)

    p = add_parser("report", help="convert a harness report to per-size CSV rows")
    p.add_argument("--in", dest="infile", required=True)

    return parser


def _parse_region(text: str) -> dict:
    if text == "full":
        return {"kind": "full"}
    _, axis, threshold = text.split(":")
    return {"kind": "halfspace", "axis": int(axis), "threshold": float(threshold)}


def _parse_window(text: str) -> dict:
    if text in ("all", "empty"):
        return {"kind": text}
    kind, rest = text.split(":", 1)
    if kind == "ball":
        return {"kind": "ball", "radius": float(rest)}
    if kind == "box":
        return {"kind": "box", "box": _parse_box(rest)}
    raise ValueError(f"unknown window {text!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_EXIT if exc.code not in (0, None) else 0

    try:
        if args.command == "sample":
            payload = {"process": _process_doc(args), "seed_offset": args.offset}
            return _post(args, "/sample", payload, extract="csv")

        if args.command == "stat":
            csv = _read_text(args.infile)
            if args.stat_name == "knn":
                payload = {"cloud_csv": csv, "k": args.k, "theta": args.theta,
                           "include_graph": args.graph is not None}
                with _client(args.server) as client:
                    response = client.post("/stat/knn", json=payload)
                if response.status_code != 200:
                    sys.stderr.write(f"error: {response.status_code}: {response.text}\n")
                    return USAGE_EXIT if response.status_code == 422 else RUNTIME_EXIT
                if args.graph:
                    with open(args.graph, "w", encoding="utf-8") as fh:
                        fh.write(response.json().get("graph_csv") or "")
                _write_output(response.content, args.out)
                return 0
            if args.stat_name == "entropy":
                weights: str | list[float] = args.weights
                if weights not in ("kl", "auto"):
                    weights = _load_json(weights)["weights"]
                return _post(args, "/stat/entropy",
                             {"cloud_csv": csv, "k": args.k, "weights": weights})
            if args.stat_name == "euler":
                return _post(args, "/stat/euler",
                             {"cloud_csv": csv, "r": args.r, "kind": args.kind,
                              "scale_n": args.scale_n, "budget": args.budget})
            payload = {"cloud_csv": csv, "include_edges": args.edges}
            if args.box:
                payload["box"] = _parse_box(args.box)
            if args.window_alpha is not None:
                payload["window_alpha"] = args.window_alpha
                payload["window_x"] = _floats(args.window_x)
            return _post(args, "/stat/mst", payload)

        if args.command == "costs":
            payload = {
                "stat": _stat_doc(args),
                "process": _process_doc(args),
                "op": args.op,
                "x": _floats(args.x),
                "seed_offset": args.offset,
            }
            if args.y:
                payload["y"] = _floats(args.y)
            if args.x2:
                payload["x2"] = _floats(args.x2)
            if args.op == "flex":
                payload["window"] = _parse_window(args.window)
            return _post(args, "/costs", payload)

        if args.command == "radius":
            payload = {
                "stat": _stat_doc(args),
                "process": _process_doc(args),
                "assumption": args.assumption,
                "replications": args.reps,
                "probes": args.probes,
            }
            if args.x:
                payload["x"] = _floats(args.x)
            if args.radii:
                payload["radii"] = _floats(args.radii)
            if args.distances:
                payload["distances"] = _floats(args.distances)
            if args.assumption == "kexp":
                payload["region"] = _parse_region(args.region)
            if args.p is not None:
                payload["p"] = args.p
            if args.x_grid:
                payload["x_grid"] = [_floats(part) for part in args.x_grid.split(";")]
            return _post(args, "/radius", payload)

        if args.command == "weights":
            return _post(args, "/weights", {"k": args.k, "d": args.d})

        if args.command == "clt":
            config = _load_json(args.config)
            payload = {
                "stat": _stat_doc(args),
                "process_template": config["process_template"],
                "grid": _ints(args.grid),
                "replications": args.reps,
                "seed": args.seed,
                "workers": args.workers,
            }
            return _post(args, "/clt", payload)

        if args.command == "bound":
            config = _load_json(args.config)
            if args.kind == "theta":
                payload = {
                    "density": config["density"] if "density" in config
                    else config["process"]["density"],
                    "region": _parse_region(args.region),
                    "c2": args.c2, "c3": args.c3, "p": args.p, "s": args.s,
                    "seed": args.seed,
                }
                return _post(args, "/bound/theta", payload)
            payload = {
                "stat": _stat_doc(args),
                "process": _process_doc(args),
                "window": args.window,
                "window_radius": args.window_radius,
                "window_side": args.window_side,
                "triples": args.triples, "inner": args.inner,
                "var_reps": args.var_reps, "batches": args.batches,
                "seed": args.seed,
            }
            return _post(args, "/bound/gamma", payload)

        if args.command == "report":
            report = _load_json(args.infile)
            return _post(args, "/report/csv", {"report": report})

    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE_EXIT
    return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
