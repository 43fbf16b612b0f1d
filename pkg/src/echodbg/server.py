"""HTTP server exposing one debug session to a remote controller.

The server is single-threaded on purpose: requests are handled strictly one
at a time in arrival order, which serializes all access to the session.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, HTTPServer

from . import wire
from .debugger import DebugSession
from .errors import (ExecutionEndedError, StepBudgetExceededError,
                     UnknownObjectError)
from .interp import READY, RUNNING


class CommandError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _status_payload(session: DebugSession) -> dict:
    exec_ = session.exec
    payload = {
        "status": exec_.status,
        "stepCount": exec_.step_count,
        "stackDepth": len(exec_.frames),
    }
    if exec_.failure is not None:
        payload["failure"] = exec_.failure
    return payload


def _int_arg(args: dict, name: str, minimum: int) -> int:
    value = args.get(name)
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise CommandError(wire.ERR_BAD_REQUEST,
                           f"{name} must be an integer >= {minimum}")
    return value


class DebuggeeHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def do_GET(self):
        if self.path == "/health":
            self._respond(200, {"ok": True})
        else:
            self._respond(404, {"ok": False, "error": {
                "code": wire.ERR_BAD_REQUEST, "message": "unknown path"}})

    def do_POST(self):
        if self.path != "/rpc":
            self._respond(404, {"ok": False, "error": {
                "code": wire.ERR_BAD_REQUEST, "message": "unknown path"}})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            doc = json.loads(self.rfile.read(length).decode("utf-8"))
            command = doc["command"]
            args = doc.get("args") or {}
            if not isinstance(args, dict):
                raise CommandError(wire.ERR_BAD_REQUEST, "args must be a map")
        except CommandError as err:
            self._respond_error(err)
            return
        except Exception:
            self._respond_error(CommandError(
                wire.ERR_BAD_REQUEST, "request body must be JSON with a "
                "'command' field"))
            return
        try:
            payload = self._dispatch(command, args)
        except CommandError as err:
            self._respond_error(err)
            return
        self._respond(200, {"ok": True, "payload": payload})

    def _respond_error(self, err: CommandError):
        self._respond(200, {"ok": False, "error": {
            "code": err.code, "message": err.message}})

    def _respond(self, status: int, doc: dict):
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        # one connection per request: a kept-alive idle socket would starve
        # other clients of this single-threaded server
        self.send_header("Connection", "close")
        self.end_headers()
        self.wfile.write(body)

    # command handlers

    def _dispatch(self, command: str, args: dict) -> dict:
        session = self.server.session
        handler = _HANDLERS.get(command)
        if handler is None:
            raise CommandError(wire.ERR_UNKNOWN_COMMAND,
                               f"unknown command {command!r}")
        return handler(session, args)


def _cmd_status(session, args):
    return _status_payload(session)


def _wrap_step_errors(fn):
    try:
        return fn()
    except ExecutionEndedError as err:
        raise CommandError(wire.ERR_EXECUTION_ENDED, str(err)) from err
    except StepBudgetExceededError as err:
        raise CommandError(wire.ERR_STEP_BUDGET, str(err)) from err


def _cmd_step(session, args):
    _wrap_step_errors(session.step)
    return _status_payload(session)


def _cmd_step_n(session, args):
    count = _int_arg(args, "count", 0)
    _wrap_step_errors(lambda: session.step_n(count))
    return _status_payload(session)


def _cmd_restart(session, args):
    session.restart()
    return _status_payload(session)


def _cmd_current_node(session, args):
    exec_ = session.exec
    node = exec_.current_node()
    if node is None:
        return {"ended": True, "status": exec_.status,
                "stepCount": exec_.step_count}
    return {
        "ended": False,
        "className": node.owner_class,
        "selector": node.owner_selector,
        "nodeType": node.kind,
        "sourceText": node.source_text,
        "spanStart": node.span_start,
        "spanEnd": node.span_end,
        "stackDepth": len(exec_.frames),
        "stepCount": exec_.step_count,
        "status": exec_.status,
    }


def _cmd_stack_depth(session, args):
    exec_ = session.exec
    if exec_.status not in (READY, RUNNING):
        return {"ended": True}
    return {"ended": False, "stackDepth": len(exec_.frames)}


def _cmd_stack_summary(session, args):
    summary = session.exec.call_stack_summary()
    if summary is None:
        return {"ended": True}
    return {"ended": False, "frames": [
        {"className": cls, "selector": sel, "currentSource": src}
        for cls, sel, src in summary]}


def _cmd_inspect(session, args):
    object_id = _int_arg(args, "objectId", 0)
    exec_ = session.exec
    try:
        fields = exec_.inspect_object(object_id)
    except UnknownObjectError as err:
        raise CommandError(wire.ERR_UNKNOWN_OBJECT, str(err)) from err
    return {"objectId": object_id,
            "className": exec_.objects[object_id].class_name,
            "fields": fields}


def _cmd_step_until_depth_below(session, args):
    target = _int_arg(args, "targetDepth", 1)
    _wrap_step_errors(lambda: session.step_until_depth_below(target))
    return _status_payload(session)


def _cmd_collect_trace(session, args):
    if session.exec.step_count != 0:
        raise CommandError(wire.ERR_PRECONDITION,
                           "CollectTrace needs a freshly restarted session")
    trace = session.collect_full_trace()
    return wire.encode_trace_payload(trace)


_HANDLERS = {
    "Status": _cmd_status,
    "Step": _cmd_step,
    "StepN": _cmd_step_n,
    "Restart": _cmd_restart,
    "CurrentNode": _cmd_current_node,
    "StackDepth": _cmd_stack_depth,
    "StackSummary": _cmd_stack_summary,
    "Inspect": _cmd_inspect,
    "StepUntilDepthBelow": _cmd_step_until_depth_below,
    "CollectTrace": _cmd_collect_trace,
}


class DebuggeeServer(HTTPServer):
    allow_reuse_address = True

    def __init__(self, session: DebugSession, port: int = 0,
                 host: str = "127.0.0.1"):
        super().__init__((host, port), DebuggeeHandler)
        self.session = session

    @property
    def port(self) -> int:
        return self.server_address[1]


def start_server(session: DebugSession, port: int = 0,
                 host: str = "127.0.0.1") -> DebuggeeServer:
    """Bind a debuggee server; raises OSError if the port is taken."""
    return DebuggeeServer(session, port=port, host=host)
