"""Command-line interface: serve a debuggee, analyze a pair, run a session.

Exit codes: 2 for source/entry parse failures, 3 for a busy port, 4 for an
unreachable debuggee endpoint.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
from pathlib import Path

from .client import DebuggeeClient
from .controller import ControllerSession, start_controller
from .debugger import DEFAULT_MAX_STEPS, DebugSession
from .divergence import (RemoteDriver, analyze_offline, analyze_online,
                         NavigationMap)
from .errors import (EmptyTraceError, ParseError, TransportError,
                     UnknownClassError)
from .lang import parse, parse_entry
from .server import start_server

EXIT_PARSE = 2
EXIT_PORT = 3
EXIT_ENDPOINT = 4


def _load_session(program_file: str, entry: str, budget: int) -> DebugSession:
    try:
        source = Path(program_file).read_text(encoding="utf-8")
    except OSError as err:
        print(f"error: cannot read {program_file}: {err}", file=sys.stderr)
        sys.exit(EXIT_PARSE)
    try:
        program = parse(source)
        entry_node = parse_entry(entry, program)
    except ParseError as err:
        print(f"error: syntax error in {program_file} or entry: {err}",
              file=sys.stderr)
        sys.exit(EXIT_PARSE)
    except UnknownClassError as err:
        print(f"error: {err}", file=sys.stderr)
        sys.exit(EXIT_PARSE)
    return DebugSession(program, entry_node, max_steps=budget)


def cmd_serve(args) -> int:
    session = _load_session(args.program, args.entry, args.budget)
    try:
        server = start_server(session, port=args.port, host=args.host)
    except OSError as err:
        print(f"error: cannot bind port {args.port}: {err}", file=sys.stderr)
        return EXIT_PORT
    print(f"listening on http://{args.host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def _check_endpoint(name: str, url: str) -> None:
    try:
        if not DebuggeeClient(url, timeout=5.0).health():
            raise TransportError("health check returned not-ok")
    except TransportError as err:
        print(f"error: {name} endpoint {url} is unreachable: {err}",
              file=sys.stderr)
        sys.exit(EXIT_ENDPOINT)


def _print_map(nav_map: NavigationMap) -> None:
    if not nav_map.events:
        print("no divergences: the executions never differ")
    else:
        print(f"{'event':<12} | {'working steps':>13} | {'failing steps':>13}")
        print(f"{'-' * 12}-+-{'-' * 13}-+-{'-' * 13}")
        for event in nav_map.events:
            print(f"{event.kind:<12} | {event.w_steps:>13} | "
                  f"{event.f_steps:>13}")
    print(f"terminal: {nav_map.terminal} "
          f"(working: {nav_map.w_total_steps} steps, "
          f"failing: {nav_map.f_total_steps} steps)")


def cmd_analyze(args) -> int:
    _check_endpoint("working", args.working)
    _check_endpoint("failing", args.failing)
    working = DebuggeeClient(args.working)
    failing = DebuggeeClient(args.failing)
    try:
        working.restart()
        failing.restart()
        if args.online:
            nav_map = analyze_online(RemoteDriver(working, args.budget),
                                     RemoteDriver(failing, args.budget))
        else:
            nav_map = analyze_offline(working.collect_trace(),
                                      failing.collect_trace())
        working.restart()
        failing.restart()
    except TransportError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ENDPOINT
    except EmptyTraceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    if nav_map.terminal == "budget":
        print("note: step budget exhausted; the map covers only a prefix "
              "of the executions", file=sys.stderr)
    _print_map(nav_map)
    if args.out:
        Path(args.out).write_text(json.dumps(nav_map.to_json(), indent=2)
                                  + "\n", encoding="utf-8")
        print(f"map written to {args.out}")
    return 0


def cmd_session(args) -> int:
    _check_endpoint("working", args.working)
    _check_endpoint("failing", args.failing)
    session = ControllerSession(args.working, args.failing,
                                step_budget=args.budget)
    try:
        server = start_controller(session, port=args.ui_port, host=args.host,
                                  ui_dir=args.ui_dir)
    except OSError as err:
        print(f"error: cannot bind port {args.ui_port}: {err}",
              file=sys.stderr)
        return EXIT_PORT
    print(f"controller on http://{args.host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def _spawn_debuggee(program: str, entry: str, budget: int) -> tuple:
    proc = subprocess.Popen(
        [sys.executable, "-m", "echodbg.cli", "serve", program,
         "--entry", entry, "--port", "0", "--budget", str(budget)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    line = proc.stdout.readline().strip()
    prefix = "listening on "
    if not line.startswith(prefix):
        proc.kill()
        err = proc.stderr.read()
        print(f"error: debuggee for {program} failed to start: {err}",
              file=sys.stderr)
        sys.exit(EXIT_PARSE)
    return proc, line[len(prefix):]


def cmd_demo(args) -> int:
    """Run all three runtimes locally: two debuggee processes plus this one."""
    procs = []
    try:
        proc_w, url_w = _spawn_debuggee(args.working_program, args.entry,
                                        args.budget)
        procs.append(proc_w)
        proc_f, url_f = _spawn_debuggee(args.failing_program, args.entry,
                                        args.budget)
        procs.append(proc_f)
        for url in (url_w, url_f):
            deadline = time.time() + 10
            while True:
                try:
                    if DebuggeeClient(url, timeout=2.0).health():
                        break
                except TransportError:
                    if time.time() > deadline:
                        print(f"error: {url} never became healthy",
                              file=sys.stderr)
                        return EXIT_ENDPOINT
                    time.sleep(0.05)
        print(f"working debuggee: {url_w}")
        print(f"failing debuggee: {url_f}")
        session = ControllerSession(url_w, url_f, step_budget=args.budget)
        server = start_controller(session, port=args.ui_port, host=args.host,
                                  ui_dir=args.ui_dir)
        print(f"controller on http://{args.host}:{server.port}", flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        return 0
    finally:
        for proc in procs:
            proc.terminate()
        for proc in procs:
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()


def _default_ui_dir() -> str | None:
    candidate = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    return str(candidate) if candidate.is_dir() else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echodbg",
        description="Debug two versions of a program side by side.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run one debuggee runtime")
    p_serve.add_argument("program", help=".echo program file")
    p_serve.add_argument("--entry", required=True,
                         help="statement to execute, e.g. 'PCBTest.new().run()'")
    p_serve.add_argument("--port", type=int, default=0)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--budget", type=int, default=DEFAULT_MAX_STEPS)
    p_serve.set_defaults(func=cmd_serve)

    p_analyze = sub.add_parser(
        "analyze", help="map divergences between two running debuggees")
    p_analyze.add_argument("--working", required=True, help="working endpoint")
    p_analyze.add_argument("--failing", required=True, help="failing endpoint")
    p_analyze.add_argument("--out", help="write the map as JSON to this file")
    p_analyze.add_argument("--budget", type=int, default=DEFAULT_MAX_STEPS)
    p_analyze.add_argument("--online", action="store_true",
                           help="drive both debuggees step by step instead "
                                "of collecting traces")
    p_analyze.set_defaults(func=cmd_analyze)

    p_session = sub.add_parser(
        "session", help="serve the interactive controller API and UI")
    p_session.add_argument("--working", required=True)
    p_session.add_argument("--failing", required=True)
    p_session.add_argument("--ui-port", type=int, default=0)
    p_session.add_argument("--host", default="127.0.0.1")
    p_session.add_argument("--budget", type=int, default=DEFAULT_MAX_STEPS)
    p_session.add_argument("--ui-dir", default=_default_ui_dir())
    p_session.set_defaults(func=cmd_session)

    p_demo = sub.add_parser(
        "demo", help="spawn both debuggees locally and open a session")
    p_demo.add_argument("working_program")
    p_demo.add_argument("failing_program")
    p_demo.add_argument("--entry", required=True)
    p_demo.add_argument("--ui-port", type=int, default=0)
    p_demo.add_argument("--host", default="127.0.0.1")
    p_demo.add_argument("--budget", type=int, default=DEFAULT_MAX_STEPS)
    p_demo.add_argument("--ui-dir", default=_default_ui_dir())
    p_demo.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
