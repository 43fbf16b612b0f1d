from __future__ import annotations

import threading
from contextlib import contextmanager
from pathlib import Path

from echodbg.debugger import DEFAULT_MAX_STEPS, DebugSession
from echodbg.lang import parse, parse_entry
from echodbg.server import start_server

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"

# entry statement per fixture family
ENTRIES = {
    "pillar": "PCBTest.new().run()",
    "prim": "Math.new().run()",
    "calc": "Calc.new().run()",
    "crash": "Crash.new().run()",
    "rename": "Service.new().run()",
    "logging": "Worker.new().setup().run()",
    "loopcount": "Summer.new().run()",
    "branch": "Chooser.new().run()",
    "spin": "Spin.new().run()",
}

# the working/failing version pairs used across the suite
VERSION_PAIRS = ("pillar", "prim", "calc", "crash", "rename", "logging",
                 "loopcount", "branch")


def fixture_source(filename: str) -> str:
    return (FIXTURES / filename).read_text(encoding="utf-8")


def load_program(filename: str):
    return parse(fixture_source(filename))


def make_session(filename: str, entry: str,
                 max_steps: int = DEFAULT_MAX_STEPS) -> DebugSession:
    program = load_program(filename)
    return DebugSession(program, parse_entry(entry, program),
                        max_steps=max_steps)


def pair_sessions(family: str, max_steps: int = DEFAULT_MAX_STEPS):
    entry = ENTRIES[family]
    return (make_session(f"{family}_working.echo", entry, max_steps),
            make_session(f"{family}_failing.echo", entry, max_steps))


def events_tuple(nav_map):
    return [(e.kind, e.w_steps, e.f_steps) for e in nav_map.events]


@contextmanager
def running_server(session: DebugSession, port: int = 0):
    server = start_server(session, port=port)
    thread = threading.Thread(
        target=lambda: server.serve_forever(poll_interval=0.02), daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
