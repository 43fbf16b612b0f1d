"""Controller: orchestrates the two debuggee runtimes and serves the UI API.

The controller is the only process the developer talks to. It drives the
working and failing debuggees over their wire clients, keeps the navigation
map produced by the last analysis, and exposes everything as a small JSON
API (documented in docs/controller-api.md). Mutating operations are
serialized by the single-threaded HTTP server.
"""

from __future__ import annotations

import json
import mimetypes
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

from . import wire
from .client import DebuggeeClient
from .debugger import DEFAULT_MAX_STEPS
from .divergence import (RemoteDriver, analyze_offline, go_to,
                         identities_equal, step_to_next_convergence,
                         step_to_next_divergence, NavigationMap)
from .errors import (DebuggeeError, ExecutionEndedError,
                     NonDeterministicExecutionError, StepBudgetExceededError,
                     TransportError, UnknownObjectError)

ERR_TRANSPORT = "transport"
ERR_NON_DETERMINISTIC = "non-deterministic"


class ControllerError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class ControllerSession:
    def __init__(self, working_endpoint: str, failing_endpoint: str,
                 step_budget: int = DEFAULT_MAX_STEPS,
                 timeout: float = 30.0, collect_timeout: float = 600.0):
        if working_endpoint == failing_endpoint:
            raise ValueError("working and failing endpoints must differ")
        if step_budget < 1:
            raise ValueError("step budget must be >= 1")
        self.working = DebuggeeClient(working_endpoint, timeout=timeout,
                                      collect_timeout=collect_timeout)
        self.failing = DebuggeeClient(failing_endpoint, timeout=timeout,
                                      collect_timeout=collect_timeout)
        self.step_budget = step_budget
        self.map: NavigationMap | None = None

    # wrappers that tag which runtime misbehaved

    def _call(self, which: str, fn):
        try:
            return fn()
        except TransportError as err:
            raise ControllerError(
                ERR_TRANSPORT, f"{which} runtime unreachable: {err}") from err
        except StepBudgetExceededError as err:
            raise ControllerError(wire.ERR_STEP_BUDGET,
                                  f"{which} runtime: {err}") from err
        except ExecutionEndedError as err:
            raise ControllerError(wire.ERR_EXECUTION_ENDED,
                                  f"{which} runtime: {err}") from err
        except UnknownObjectError as err:
            raise ControllerError(wire.ERR_UNKNOWN_OBJECT,
                                  f"{which} runtime: {err}") from err
        except DebuggeeError as err:
            raise ControllerError(err.code,
                                  f"{which} runtime: {err.message}") from err

    def _drivers(self):
        w = self._call("working",
                       lambda: RemoteDriver(self.working, self.step_budget))
        f = self._call("failing",
                       lambda: RemoteDriver(self.failing, self.step_budget))
        return w, f

    def _side_state(self, which: str, client: DebuggeeClient) -> dict:
        context = self._call(which, client.current_node)
        stack = self._call(which, client.stack_summary)
        return {
            "context": context,
            "stack": None if stack.get("ended") else stack["frames"],
        }

    def state(self) -> dict:
        w = self._side_state("working", self.working)
        f = self._side_state("failing", self.failing)
        convergent = None
        wc, fc = w["context"], f["context"]
        if not wc.get("ended") and not fc.get("ended"):
            w_ident = (wc["className"], wc["selector"], wc["nodeType"],
                       wc["sourceText"])
            f_ident = (fc["className"], fc["selector"], fc["nodeType"],
                       fc["sourceText"])
            convergent = w_ident == f_ident
        return {
            "working": w,
            "failing": f,
            "convergent": convergent,
            "mapAvailable": self.map is not None,
        }

    def inspect(self, which: str, object_id: int) -> dict:
        client = self.working if which == "working" else self.failing
        return self._call(which, lambda: client.inspect(object_id))

    # the six operations

    def step_both(self) -> dict:
        w_status = self._call("working", self.working.status)
        f_status = self._call("failing", self.failing.status)
        for which, doc in (("working", w_status), ("failing", f_status)):
            if doc["status"] not in ("Ready", "Running"):
                raise ControllerError(
                    wire.ERR_EXECUTION_ENDED,
                    f"{which} execution already ended "
                    f"({doc['status']}); restart to step again")
        self._call("working", self.working.step)
        self._call("failing", self.failing.step)
        return self.state()

    def step_to_divergence(self) -> dict:
        w, f = self._drivers()
        self._require_comparable(w, f, want_convergent=True)
        event, terminal = step_to_next_divergence(w, f)
        return {"event": event.to_json() if event else None,
                "terminal": terminal, "state": self.state()}

    def step_to_convergence(self) -> dict:
        w, f = self._drivers()
        self._require_comparable(w, f, want_convergent=False)
        event, terminal = step_to_next_convergence(w, f)
        return {"event": event.to_json() if event else None,
                "terminal": terminal, "state": self.state()}

    def _require_comparable(self, w, f, want_convergent: bool):
        if not (w.alive() and f.alive()):
            raise ControllerError(wire.ERR_PRECONDITION,
                                  "both executions must be running")
        equal = identities_equal(w.current_identity(), f.current_identity())
        if want_convergent and not equal:
            raise ControllerError(
                wire.ERR_PRECONDITION,
                "executions are divergent; step to the next convergence "
                "instead")
        if not want_convergent and equal:
            raise ControllerError(
                wire.ERR_PRECONDITION,
                "executions are convergent; step to the next divergence "
                "instead")

    def restart(self) -> dict:
        self._call("working", self.working.restart)
        self._call("failing", self.failing.restart)
        return self.state()

    def analyze(self) -> dict:
        """Collect full traces from both runtimes, map them, and restart."""
        self._call("working", self.working.restart)
        self._call("failing", self.failing.restart)
        trace_w = self._call("working", self.working.collect_trace)
        trace_f = self._call("failing", self.failing.collect_trace)
        self.map = analyze_offline(trace_w, trace_f)
        self._call("working", self.working.restart)
        self._call("failing", self.failing.restart)
        return self.map.to_json()

    def goto(self, event_index: int) -> dict:
        if self.map is None:
            raise ControllerError(wire.ERR_PRECONDITION,
                                  "run analyze before goto")
        if not 0 <= event_index < len(self.map.events):
            raise ControllerError(
                wire.ERR_BAD_REQUEST,
                f"eventIndex must be in [0, {len(self.map.events)})")
        w, f = self._drivers()
        try:
            go_to(w, f, self.map.events[event_index])
        except NonDeterministicExecutionError as err:
            raise ControllerError(ERR_NON_DETERMINISTIC, str(err)) from err
        return self.state()

    def map_json(self) -> dict:
        if self.map is None:
            return {"available": False, "map": None}
        return {"available": True, "map": self.map.to_json()}


_FALLBACK_PAGE = """<!doctype html>
<html><head><title>echodbg controller</title></head>
<body>
<h1>echodbg controller</h1>
<p>The web UI is not built. Build it with <code>npm run build</code> in the
frontend/ directory and pass <code>--ui-dir frontend/dist</code>, or drive
the JSON API directly (see docs/controller-api.md).</p>
</body></html>
"""


class ControllerHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def do_GET(self):
        session = self.server.controller_session
        path = self.path.split("?", 1)[0]
        try:
            if path == "/health":
                self._json(200, {"ok": True})
            elif path == "/state":
                self._json(200, {"ok": True, "result": session.state()})
            elif path == "/map":
                self._json(200, {"ok": True, "result": session.map_json()})
            elif path.startswith("/inspect/"):
                self._inspect(session, path)
            else:
                self._static(path)
        except ControllerError as err:
            self._json(200, {"ok": False, "error": {
                "code": err.code, "message": err.message}})

    def _inspect(self, session, path):
        parts = path.split("/")
        if len(parts) != 4 or parts[2] not in ("working", "failing") \
                or not parts[3].isdigit():
            self._json(404, {"ok": False, "error": {
                "code": wire.ERR_BAD_REQUEST,
                "message": "use /inspect/<working|failing>/<objectId>"}})
            return
        result = session.inspect(parts[2], int(parts[3]))
        self._json(200, {"ok": True, "result": result})

    def do_POST(self):
        session = self.server.controller_session
        path = self.path.split("?", 1)[0]
        ops = {
            "/op/step-both": lambda args: session.step_both(),
            "/op/step-to-divergence": lambda args: session.step_to_divergence(),
            "/op/step-to-convergence":
                lambda args: session.step_to_convergence(),
            "/op/restart": lambda args: session.restart(),
            "/op/analyze": lambda args: session.analyze(),
            "/op/goto": self._op_goto,
        }
        op = ops.get(path)
        if op is None:
            self._json(404, {"ok": False, "error": {
                "code": wire.ERR_BAD_REQUEST, "message": "unknown operation"}})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            args = json.loads(self.rfile.read(length).decode("utf-8")) \
                if length else {}
            if not isinstance(args, dict):
                raise ValueError("body must be a JSON object")
        except Exception:
            self._json(200, {"ok": False, "error": {
                "code": wire.ERR_BAD_REQUEST,
                "message": "request body must be a JSON object"}})
            return
        try:
            result = op(args)
        except ControllerError as err:
            self._json(200, {"ok": False, "error": {
                "code": err.code, "message": err.message}})
            return
        self._json(200, {"ok": True, "result": result})

    def _op_goto(self, args):
        index = args.get("eventIndex")
        if not isinstance(index, int) or isinstance(index, bool):
            raise ControllerError(wire.ERR_BAD_REQUEST,
                                  "eventIndex must be an integer")
        return self.server.controller_session.goto(index)

    # static UI assets

    def _static(self, path):
        ui_dir = self.server.ui_dir
        if path == "/":
            path = "/index.html"
        if ui_dir is not None:
            root = Path(ui_dir).resolve()
            target = (root / path.lstrip("/")).resolve()
            if target.is_file() and target.is_relative_to(root):
                ctype = mimetypes.guess_type(str(target))[0] or \
                    "application/octet-stream"
                self._body(200, ctype, target.read_bytes())
                return
        if path == "/index.html":
            self._body(200, "text/html; charset=utf-8",
                       _FALLBACK_PAGE.encode("utf-8"))
            return
        self._json(404, {"ok": False, "error": {
            "code": wire.ERR_BAD_REQUEST, "message": "not found"}})

    def _json(self, status: int, doc: dict):
        self._body(status, "application/json",
                   json.dumps(doc).encode("utf-8"))

    def _body(self, status: int, ctype: str, body: bytes):
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        # one connection per request: a kept-alive idle socket would starve
        # other clients of this single-threaded server
        self.send_header("Connection", "close")
        self.end_headers()
        self.wfile.write(body)


class ControllerServer(HTTPServer):
    allow_reuse_address = True

    def __init__(self, session: ControllerSession, port: int = 0,
                 host: str = "127.0.0.1", ui_dir: str | None = None):
        super().__init__((host, port), ControllerHandler)
        self.controller_session = session
        self.ui_dir = ui_dir

    @property
    def port(self) -> int:
        return self.server_address[1]


def start_controller(session: ControllerSession, port: int = 0,
                     host: str = "127.0.0.1",
                     ui_dir: str | None = None) -> ControllerServer:
    return ControllerServer(session, port=port, host=host, ui_dir=ui_dir)
