"""Resource-oriented HTTP API over the store.

Endpoints (JSON bodies, CORS enabled so the analyst UI can run anywhere):

    GET    /api/stations?dataset=ID
    GET    /api/datasets
    POST   /api/datasets                      {readings_csv, stations_csv}
    GET    /api/registry
    GET    /api/experiments
    POST   /api/experiments                   {config, dataset, stations?, pollutants?, seed?}
    GET    /api/experiments/{id}
    POST   /api/experiments/{id}/cancel
    GET    /api/experiments/{id}/result
    GET    /api/experiments/{id}/models
    GET    /api/experiments/{id}/signals?station=..&attribute=..
    GET    /api/series?dataset&station&attribute&from&to&resolution
    GET    /api/events?experiment|dataset&station&attribute&include_hidden
    POST   /api/events
    PATCH  /api/events/{id}
    DELETE /api/events/{id}
    POST   /api/events/{id}/annotations
    GET    /api/aggregates?dataset&station&attribute&level&anchor

Long-running experiments execute off the request path; poll GET
/api/experiments/{id} for per-model progress.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import pipeline
from .errors import AqError, IngestConflict, InvalidConfig, NotFound, UnknownDataset
from .store import Store

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


def registry_schema() -> dict:
    blocks = {}
    for name, spec in pipeline.BLOCK_REGISTRY.items():
        blocks[name] = {
            "kind": spec.kind,
            "inputs": spec.inputs,
            "outputs": spec.outputs,
            "hyperparameters": {
                key: {
                    "type": p.kind,
                    "default": p.default,
                    "min": p.lo,
                    "max": p.hi,
                    "choices": list(p.choices) if p.choices else None,
                }
                for key, p in spec.params.items()
            },
        }
    return {"blocks": blocks, "default_config": pipeline.default_config().to_dict()}


class ApiHandler(BaseHTTPRequestHandler):
    server_version = "aqdetect"
    store: Store = None
    ui_dir: Path | None = None

    # Quiet the default stderr access log.
    def log_message(self, fmt, *args):
        pass

    def _send(self, status: int, payload, content_type="application/json; charset=utf-8"):
        body = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PATCH, DELETE, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str):
        self._send(status, {"error": message})

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise AqError(f"request body is not valid JSON: {exc}") from None

    def _dispatch(self, method: str):
        parsed = urlparse(self.path)
        path = parsed.path.rstrip("/") or "/"
        query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
        try:
            handled = self._route(method, path, query)
            if not handled:
                self._error(404, f"no route for {method} {path}")
        except NotFound as exc:
            self._error(404, str(exc))
        except UnknownDataset as exc:
            self._error(404, str(exc))
        except IngestConflict as exc:
            self._error(409, str(exc))
        except InvalidConfig as exc:
            self._send(400, {"error": "invalid pipeline config", "violations": exc.violations})
        except AqError as exc:
            self._error(400, str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            self._error(500, f"{type(exc).__name__}: {exc}")

    def _route(self, method: str, path: str, q: dict) -> bool:
        store = self.store

        if method == "GET" and path == "/api/stations":
            ds = store.dataset(q.get("dataset", ""))
            lo, hi = ds.time_range()
            self._send(200, {
                "dataset_id": ds.id,
                "range": {"from": lo, "to": hi},
                "stations": [
                    {"station_id": sid, **meta, "attributes": ds.attributes(sid)}
                    for sid, meta in sorted(ds.stations.items())
                ],
            })
            return True

        if path == "/api/datasets":
            if method == "GET":
                self._send(200, {"datasets": [
                    {"dataset_id": ds.id, "stations": len(ds.stations), "rows": ds.row_count,
                     "provenance": ds.provenance}
                    for ds in store.datasets.values()
                ]})
                return True
            if method == "POST":
                body = self._body()
                out = store.ingest(body.get("readings_csv", ""), body.get("stations_csv", ""),
                                   provenance={"via": "api"})
                self._send(201, out)
                return True

        if method == "GET" and path == "/api/registry":
            self._send(200, registry_schema())
            return True

        if path == "/api/experiments":
            if method == "GET":
                self._send(200, {"experiments": [rec.public() for rec in
                                                 store.experiments.values()]})
                return True
            if method == "POST":
                body = self._body()
                config = body.get("config") or pipeline.default_config().to_dict()
                out = store.submit_experiment(
                    config, body.get("dataset", ""), stations=body.get("stations"),
                    pollutants=body.get("pollutants"), seed=int(body.get("seed", 0)),
                )
                self._send(202, out)
                return True

        m = re.fullmatch(r"/api/experiments/([^/]+)", path)
        if m and method == "GET":
            self._send(200, store.poll(m.group(1)))
            return True

        m = re.fullmatch(r"/api/experiments/([^/]+)/cancel", path)
        if m and method == "POST":
            self._send(200, store.cancel(m.group(1)))
            return True

        m = re.fullmatch(r"/api/experiments/([^/]+)/result", path)
        if m and method == "GET":
            self._send(200, store.result(m.group(1)))
            return True

        m = re.fullmatch(r"/api/experiments/([^/]+)/models", path)
        if m and method == "GET":
            self._send(200, {"models": store.result_model_summaries(m.group(1))})
            return True

        m = re.fullmatch(r"/api/experiments/([^/]+)/signals", path)
        if m and method == "GET":
            self._send(200, store.signals_view(m.group(1), q.get("station", ""),
                                               q.get("attribute", "")))
            return True

        if method == "GET" and path == "/api/series":
            self._send(200, store.series_view(
                q.get("dataset", ""), q.get("station", ""), q.get("attribute", ""),
                ts_from=q.get("from"), ts_to=q.get("to"),
                resolution=int(q.get("resolution", 0)),
            ))
            return True

        if path == "/api/events":
            if method == "GET":
                self._send(200, {"events": store.list_events(
                    experiment_id=q.get("experiment"), dataset_id=q.get("dataset"),
                    station_id=q.get("station"), attribute=q.get("attribute"),
                    include_hidden=q.get("include_hidden", "") in ("1", "true"),
                )})
                return True
            if method == "POST":
                body = self._body()
                author = body.pop("author", "analyst")
                self._send(201, store.create_event(body, author=author))
                return True

        m = re.fullmatch(r"/api/events/([^/]+)", path)
        if m:
            if method == "PATCH":
                body = self._body()
                author = body.pop("author", "analyst")
                self._send(200, store.modify_event(m.group(1), body, author=author))
                return True
            if method == "DELETE":
                self._send(200, store.delete_event(m.group(1)))
                return True
            if method == "GET":
                record = store.events.get(m.group(1))
                if record is None:
                    raise NotFound(f"no event '{m.group(1)}'")
                self._send(200, record)
                return True

        m = re.fullmatch(r"/api/events/([^/]+)/annotations", path)
        if m and method == "POST":
            body = self._body()
            self._send(201, store.annotate_event(
                m.group(1), body.get("text", ""), tags=body.get("tags"),
                author=body.get("author", "analyst"),
            ))
            return True

        if method == "GET" and path == "/api/aggregates":
            self._send(200, store.period_aggregate(
                q.get("dataset", ""), q.get("station", ""), q.get("attribute", ""),
                q.get("level", "year"), q.get("anchor", "1970-01-01T00:00:00Z"),
            ))
            return True

        if method == "GET" and not path.startswith("/api/"):
            return self._serve_static(path)
        return False

    def _serve_static(self, path: str) -> bool:
        if self.ui_dir is None:
            return False
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())):
            return False
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            target = self.ui_dir / "index.html"  # SPA fallback
            if not target.is_file():
                return False
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send(200, target.read_bytes(), content_type=ctype)
        return True

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PATCH(self):
        self._dispatch("PATCH")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def do_OPTIONS(self):
        self._send(204, b"")


def make_server(store: Store, port: int = 0, host: str = "127.0.0.1",
                ui_dir=None) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (ApiHandler,), {
        "store": store,
        "ui_dir": Path(ui_dir) if ui_dir else None,
    })
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(store: Store, port: int, host: str = "127.0.0.1", ui_dir=None) -> None:
    httpd = make_server(store, port=port, host=host, ui_dir=ui_dir)
    print(f"aqdetect API listening on http://{host}:{httpd.server_address[1]}")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.shutdown_called = True
        httpd.server_close()


def start_background(store: Store, port: int = 0, host: str = "127.0.0.1", ui_dir=None):
    """Start the server on a daemon thread; returns (server, base_url)."""
    httpd = make_server(store, port=port, host=host, ui_dir=ui_dir)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    return httpd, f"http://{host}:{httpd.server_address[1]}"
