"""HTTP client for a debuggee server.

Transport failures (refused connection, timeout, garbage response) raise
TransportError subclasses; errors the debuggee reports in-band are mapped
back to the same exception types the local debugger API uses, so callers
can treat local and remote sessions alike.
"""

from __future__ import annotations

import json
import socket
import urllib.error
import urllib.request

from . import wire
from .debugger import Trace
from .errors import (DebuggeeError, ExecutionEndedError,
                     StepBudgetExceededError, UnknownObjectError,
                     WireConnectionRefused, WireMalformedResponse,
                     WireTimeout)

DEFAULT_TIMEOUT = 30.0
COLLECT_TIMEOUT = 600.0

_ERROR_TYPES = {
    wire.ERR_EXECUTION_ENDED: ExecutionEndedError,
    wire.ERR_STEP_BUDGET: StepBudgetExceededError,
    wire.ERR_UNKNOWN_OBJECT: UnknownObjectError,
}


class DebuggeeClient:
    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT,
                 collect_timeout: float = COLLECT_TIMEOUT):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.collect_timeout = collect_timeout

    def _post(self, body: bytes, timeout: float) -> dict:
        request = urllib.request.Request(
            self.endpoint + "/rpc", data=body,
            headers={"Content-Type": "application/json"}, method="POST")
        raw = self._transfer(request, timeout)
        try:
            doc = json.loads(raw.decode("utf-8"))
            if not isinstance(doc, dict) or "ok" not in doc:
                raise ValueError("missing ok field")
        except (ValueError, UnicodeDecodeError) as err:
            raise WireMalformedResponse(
                f"{self.endpoint}: unparseable response: {err}") from err
        return doc

    def _transfer(self, request, timeout: float) -> bytes:
        try:
            with urllib.request.urlopen(request, timeout=timeout) as resp:
                return resp.read()
        except urllib.error.HTTPError as err:
            raise WireMalformedResponse(
                f"{self.endpoint}: unexpected HTTP status {err.code}") from err
        except urllib.error.URLError as err:
            reason = err.reason
            if isinstance(reason, ConnectionRefusedError):
                raise WireConnectionRefused(
                    f"{self.endpoint}: connection refused") from err
            if isinstance(reason, (socket.timeout, TimeoutError)):
                raise WireTimeout(f"{self.endpoint}: timed out") from err
            raise WireConnectionRefused(
                f"{self.endpoint}: {reason}") from err
        except (socket.timeout, TimeoutError) as err:
            raise WireTimeout(f"{self.endpoint}: timed out") from err

    def call(self, command: str, args: dict | None = None,
             timeout: float | None = None) -> dict:
        body = json.dumps({"command": command, "args": args or {}})
        doc = self._post(body.encode("utf-8"),
                         timeout if timeout is not None else self.timeout)
        if doc.get("ok"):
            payload = doc.get("payload")
            if not isinstance(payload, dict):
                raise WireMalformedResponse(
                    f"{self.endpoint}: ok response without payload")
            return payload
        error = doc.get("error") or {}
        code = error.get("code", "unknown")
        message = error.get("message", "")
        exc_type = _ERROR_TYPES.get(code)
        if exc_type is not None:
            raise exc_type(message)
        raise DebuggeeError(code, message)

    def health(self) -> bool:
        request = urllib.request.Request(self.endpoint + "/health")
        raw = self._transfer(request, self.timeout)
        try:
            return bool(json.loads(raw.decode("utf-8")).get("ok"))
        except (ValueError, UnicodeDecodeError, AttributeError) as err:
            raise WireMalformedResponse(
                f"{self.endpoint}: unparseable health response") from err

    # command wrappers

    def status(self) -> dict:
        return self.call("Status")

    def step(self) -> dict:
        return self.call("Step")

    def step_n(self, count: int) -> dict:
        return self.call("StepN", {"count": count})

    def restart(self) -> dict:
        return self.call("Restart")

    def current_node(self) -> dict:
        return self.call("CurrentNode")

    def stack_depth(self) -> dict:
        return self.call("StackDepth")

    def stack_summary(self) -> dict:
        return self.call("StackSummary")

    def inspect(self, object_id: int) -> dict:
        return self.call("Inspect", {"objectId": object_id})

    def step_until_depth_below(self, target_depth: int) -> dict:
        return self.call("StepUntilDepthBelow", {"targetDepth": target_depth})

    def collect_trace(self) -> Trace:
        payload = self.call("CollectTrace", timeout=self.collect_timeout)
        return wire.decode_trace_payload(payload)
