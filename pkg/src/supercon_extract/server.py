"""Minimal HTTP access to the pipeline.

``POST /process`` takes the text as ``text/plain`` or as JSON
``{"text": ...}`` and answers with the same JSON that ``extract`` prints.
``GET /health`` answers 200.
"""

from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .model import dumps
from .pipeline import PipelineConfig, load_resources, process_text

log = logging.getLogger(__name__)

MAX_BODY = 10 * 1024 * 1024


class BadRequest(ValueError):
    pass


def parse_body(body, content_type):
    """Extract the text to process from a request body."""
    if not body:
        raise BadRequest("empty body")
    try:
        raw = body.decode("utf-8")
    except UnicodeDecodeError:
        raise BadRequest("body is not UTF-8") from None
    if content_type.split(";")[0].strip().lower() == "application/json":
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BadRequest(f"invalid JSON: {exc.msg}") from None
        if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
            raise BadRequest('JSON body must be an object with a string "text"')
        raw = payload["text"]
    if not raw.strip():
        raise BadRequest("no text to process")
    return raw


def make_handler(config):
    class Handler(BaseHTTPRequestHandler):
        server_version = "supercon-extract"

        def _send(self, status, body, content_type="application/json; charset=utf-8"):
            data = body.encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _error(self, status, message):
            self._send(status, dumps({"error": message}))

        def do_GET(self):
            if self.path == "/health":
                self._send(200, dumps({"status": "ok"}))
            else:
                self._error(404, "not found")

        def do_POST(self):
            if self.path != "/process":
                self._error(404, "not found")
                return
            try:
                length = int(self.headers.get("Content-Length") or 0)
            except ValueError:
                self._error(400, "bad Content-Length")
                return
            if length > MAX_BODY:
                self._error(413, "body too large")
                return
            body = self.rfile.read(length) if length > 0 else b""
            try:
                text = parse_body(body, self.headers.get("Content-Type", "text/plain"))
            except BadRequest as exc:
                self._error(400, str(exc))
                return
            try:
                result = dumps(process_text(text, config).to_dict())
            except Exception:
                log.exception("processing failed")
                self._error(500, "internal error")
                return
            self._send(200, result)

        def log_message(self, fmt, *args):
            log.info("%s %s", self.address_string(), fmt % args)

    return Handler


def make_server(host="127.0.0.1", port=8080, config=None):
    config = config or PipelineConfig()
    load_resources(config)  # fail at startup, not on the first request
    return ThreadingHTTPServer((host, port), make_handler(config))


def serve(host="127.0.0.1", port=8080, config=None):
    server = make_server(host, port, config)
    log.info("listening on http://%s:%d", *server.server_address[:2])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
