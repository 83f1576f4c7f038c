"""HTTP front door: JSON API over the pipeline plus static console files.

Built on the stdlib threading server; all shared state lives in the
Pipeline, whose study registry and index are replaced wholesale rather
than mutated, so request threads never see partial updates.
"""

from __future__ import annotations

import json
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .errors import (
    GatewayError,
    UnknownStudyError,
    UnsupportedKindError,
    VizAgentError,
)
from .evaluation import (
    parse_scores_jsonl,
    scenario_table,
    summarize_scenario_means,
    table_to_dict,
)
from .gateway import MODES, BackendConfig
from .pipeline import Pipeline

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".svg": "image/svg+xml",
    ".json": "application/json",
    ".ico": "image/x-icon",
    ".map": "application/json",
}


def _study_summary(study) -> dict:
    return {
        "id": study.id,
        "title": study.title,
        "designs": len(study.designs),
        "variables": [v.name for v in study.variables],
        "objectives": [
            {"name": o.name, "direction": o.direction} for o in study.objectives
        ],
        "responses": list(study.responses),
        "constraints": [c.name for c in study.constraints],
    }


class ApiHandler(BaseHTTPRequestHandler):
    pipeline: Pipeline
    static_dir: Path | None = None
    server_version = "vizagent"

    def log_message(self, format, *args):  # noqa: A002 - base class signature
        pass  # keep test output quiet; httpd access logs add nothing here

    # -- plumbing -------------------------------------------------------

    def _send(self, code: int, body: bytes, content_type: str) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, code: int, payload: dict) -> None:
        self._send(
            code,
            json.dumps(payload, sort_keys=True).encode("utf-8"),
            "application/json",
        )

    def _send_error_json(self, code: int, message: str, kind: str = "error") -> None:
        self._send_json(code, {"error": message, "kind": kind})

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _read_json(self) -> dict:
        body = self._read_body()
        payload = json.loads(body.decode("utf-8"))
        if not isinstance(payload, dict):
            raise ValueError("request body must be a JSON object")
        return payload

    # -- routing --------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802 - base class contract
        try:
            path = self.path.split("?", 1)[0]
            if path == "/api/studies":
                studies = [
                    _study_summary(s)
                    for _, s in sorted(self.pipeline.studies.items())
                ]
                self._send_json(200, {"studies": studies})
            elif path.startswith("/api/results/") and path.endswith(".svg"):
                result_id = path[len("/api/results/"):-len(".svg")]
                self._serve_result_svg(result_id)
            elif path.startswith("/api/results/"):
                self._serve_result(path[len("/api/results/"):])
            elif path.startswith("/api/"):
                self._send_error_json(404, f"no such endpoint: {path}")
            else:
                self._serve_static(path)
        except BrokenPipeError:
            pass
        except Exception as exc:  # pragma: no cover - last-resort guard
            self._send_error_json(500, f"internal error: {exc}")

    def do_POST(self) -> None:  # noqa: N802 - base class contract
        try:
            path = self.path.split("?", 1)[0]
            if path == "/api/studies":
                self._handle_upload()
            elif path == "/api/generate":
                self._handle_generate()
            elif path == "/api/eval/aggregate":
                self._handle_eval()
            else:
                self._send_error_json(404, f"no such endpoint: {path}")
        except BrokenPipeError:
            pass
        except json.JSONDecodeError as exc:
            self._send_error_json(400, f"request body is not valid JSON: {exc.msg}")
        except ValueError as exc:
            self._send_error_json(400, str(exc))
        except Exception as exc:  # pragma: no cover - last-resort guard
            self._send_error_json(500, f"internal error: {exc}")

    # -- handlers -------------------------------------------------------

    def _handle_upload(self) -> None:
        document = self._read_body().decode("utf-8")
        try:
            study = self.pipeline.add_study_document(document)
        except VizAgentError as exc:
            self._send_error_json(400, str(exc), kind=type(exc).__name__)
            return
        self._send_json(201, {"study": _study_summary(study)})

    def _handle_generate(self) -> None:
        payload = self._read_json()
        study_id = payload.get("study_id")
        prompt = payload.get("prompt")
        if not isinstance(study_id, str) or not isinstance(prompt, str) or not prompt:
            self._send_error_json(400, "study_id and prompt are required strings")
            return
        backend = None
        if payload.get("backend") is not None:
            mode = payload["backend"]
            if not isinstance(mode, str) or mode not in MODES:
                self._send_error_json(400, f"unknown backend {mode!r}")
                return
            try:
                if mode == self.pipeline.backend.mode:
                    backend = self.pipeline.backend
                else:
                    backend = replace(BackendConfig.from_env(), mode=mode)
            except GatewayError as exc:
                self._send_error_json(400, str(exc), kind=type(exc).__name__)
                return
        try:
            result = self.pipeline.handle_generate(study_id, prompt, backend=backend)
        except UnknownStudyError as exc:
            self._send_error_json(404, str(exc), kind="UnknownStudyError")
            return
        except (GatewayError, UnsupportedKindError) as exc:
            stage = getattr(exc, "pipeline_stage", "complete")
            self._send_error_json(
                502, f"[stage {stage}] {exc}", kind=type(exc).__name__
            )
            return
        except VizAgentError as exc:
            self._send_error_json(400, str(exc), kind=type(exc).__name__)
            return
        self._send_json(200, result.to_dict())

    def _handle_eval(self) -> None:
        body = self._read_body().decode("utf-8")
        try:
            payload = json.loads(body)
            is_means = (
                isinstance(payload, dict)
                and "proposed" in payload
                and "baseline" in payload
            )
        except json.JSONDecodeError:
            is_means = False
        try:
            if is_means:
                summary = summarize_scenario_means(
                    payload["proposed"], payload["baseline"]
                )
                self._send_json(200, summary)
                return
            scores = parse_scores_jsonl(body)
            table = scenario_table(scores)
            self._send_json(200, table_to_dict(table))
        except VizAgentError as exc:
            self._send_error_json(400, str(exc), kind=type(exc).__name__)

    def _serve_result(self, result_id: str) -> None:
        try:
            payload = self.pipeline.load_result(result_id)
        except (OSError, json.JSONDecodeError):
            self._send_error_json(404, f"no result {result_id!r}")
            return
        self._send_json(200, payload)

    def _serve_result_svg(self, result_id: str) -> None:
        try:
            svg = self.pipeline.load_result_svg(result_id)
        except OSError:
            self._send_error_json(404, f"no rendered SVG for result {result_id!r}")
            return
        self._send(200, svg.encode("utf-8"), "image/svg+xml")

    def _serve_static(self, path: str) -> None:
        if self.static_dir is None:
            self._send_error_json(404, "no static bundle configured")
            return
        rel = path.lstrip("/") or "index.html"
        root = self.static_dir.resolve()
        target = (root / rel).resolve()
        if root not in target.parents and target != root:
            self._send_error_json(404, "not found")
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_error_json(404, f"no static file {rel!r}")
            return
        content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send(200, target.read_bytes(), content_type)


def create_server(
    pipeline: Pipeline,
    host: str = "127.0.0.1",
    port: int = 8765,
    static_dir=None,
) -> ThreadingHTTPServer:
    handler = type(
        "BoundApiHandler",
        (ApiHandler,),
        {
            "pipeline": pipeline,
            "static_dir": Path(static_dir) if static_dir else None,
        },
    )
    return ThreadingHTTPServer((host, port), handler)
