"""Wire-level contract shared by the debuggee server and its client.

Every command is an HTTP POST to /rpc with a JSON body
{"command": <name>, "args": {...}} and gets exactly one JSON response:
{"ok": true, "payload": {...}} or {"ok": false, "error": {"code", "message"}}.
Trace payloads are packed little-endian (u64 identity hash, u32 stack depth)
pairs, base64-encoded; 12 bytes per step keeps multi-million-step batches
in the tens of megabytes. docs/protocol.md spells out every field.
"""

from __future__ import annotations

import struct
from array import array
from base64 import b64decode, b64encode

from .debugger import Trace

COMMANDS = (
    "Status", "Step", "Restart", "CurrentNode", "StackDepth", "StackSummary",
    "Inspect", "StepUntilDepthBelow", "StepN", "CollectTrace",
)

ERR_UNKNOWN_COMMAND = "unknown-command"
ERR_BAD_REQUEST = "bad-request"
ERR_EXECUTION_ENDED = "execution-ended"
ERR_STEP_BUDGET = "step-budget-exceeded"
ERR_UNKNOWN_OBJECT = "unknown-object"
ERR_PRECONDITION = "precondition"

_PAIR = struct.Struct("<QI")
ENTRY_BYTES = _PAIR.size


def pack_trace(trace: Trace) -> bytes:
    out = bytearray(len(trace) * ENTRY_BYTES)
    pack_into = _PAIR.pack_into
    hashes = trace.hashes
    depths = trace.depths
    offset = 0
    for k in range(len(hashes)):
        pack_into(out, offset, hashes[k], depths[k])
        offset += ENTRY_BYTES
    return bytes(out)


def unpack_trace(data: bytes, truncated: bool = False) -> Trace:
    if len(data) % ENTRY_BYTES:
        raise ValueError("trace payload length is not a multiple of "
                         f"{ENTRY_BYTES}")
    hashes = array("Q")
    depths = array("I")
    for h, d in _PAIR.iter_unpack(data):
        hashes.append(h)
        depths.append(d)
    return Trace(hashes, depths, truncated)


def encode_trace_payload(trace: Trace) -> dict:
    return {
        "truncated": trace.truncated,
        "entries": b64encode(pack_trace(trace)).decode("ascii"),
    }


def decode_trace_payload(payload: dict) -> Trace:
    return unpack_trace(b64decode(payload["entries"]),
                        truncated=payload["truncated"])
