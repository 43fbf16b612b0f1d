import json
import socket
import subprocess
import sys
import time
import urllib.request

from conftest import FIXTURES

PILLAR_ENTRY = "PCBTest.new().run()"


def run_cli(*args, timeout=60):
    return subprocess.run([sys.executable, "-m", "echodbg.cli", *args],
                          capture_output=True, text=True, timeout=timeout)


def spawn_serve(program, entry, extra=()):
    proc = subprocess.Popen(
        [sys.executable, "-m", "echodbg.cli", "serve", str(program),
         "--entry", entry, "--port", "0", *extra],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    line = proc.stdout.readline().strip()
    assert line.startswith("listening on "), line
    return proc, line.split("listening on ")[1]


def test_serve_rejects_bad_entry():
    result = run_cli("serve", str(FIXTURES / "pillar_working.echo"),
                     "--entry", "PCBTest.new(", "--port", "0")
    assert result.returncode == 2
    assert "syntax error" in result.stderr


def test_serve_rejects_bad_program(tmp_path):
    bad = tmp_path / "bad.echo"
    bad.write_text("class A { method m( { } }")
    result = run_cli("serve", str(bad), "--entry", "1", "--port", "0")
    assert result.returncode == 2
    assert "syntax error" in result.stderr


def test_serve_rejects_unknown_entry_class():
    result = run_cli("serve", str(FIXTURES / "pillar_working.echo"),
                     "--entry", "Nope.new()", "--port", "0")
    assert result.returncode == 2
    assert "unknown class" in result.stderr


def test_serve_port_collision():
    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        result = run_cli("serve", str(FIXTURES / "pillar_working.echo"),
                         "--entry", PILLAR_ENTRY, "--port", str(port))
        assert result.returncode == 3
        assert "cannot bind" in result.stderr
    finally:
        blocker.close()


def test_analyze_reports_unreachable_endpoint():
    result = run_cli("analyze", "--working", "http://127.0.0.1:1",
                     "--failing", "http://127.0.0.1:2")
    assert result.returncode == 4
    assert "working endpoint" in result.stderr
    assert "http://127.0.0.1:1" in result.stderr


def test_analyze_pillar_pair(tmp_path):
    out = tmp_path / "map.json"
    w_proc, w_url = spawn_serve(FIXTURES / "pillar_working.echo", PILLAR_ENTRY)
    f_proc, f_url = spawn_serve(FIXTURES / "pillar_failing.echo", PILLAR_ENTRY)
    try:
        result = run_cli("analyze", "--working", w_url, "--failing", f_url,
                         "--out", str(out))
        assert result.returncode == 0, result.stderr
        lines = [ln for ln in result.stdout.splitlines() if "|" in ln]
        assert lines[1].split("|")[0].strip() == "divergence"
        doc = json.loads(out.read_text())
        assert doc["events"][0] == {"kind": "divergence", "wSteps": 17,
                                    "fSteps": 17}
        assert doc["terminal"] == "both-completed"
        # --online agrees with the trace-based default
        online = run_cli("analyze", "--working", w_url, "--failing", f_url,
                         "--online")
        assert online.returncode == 0
        assert [ln for ln in online.stdout.splitlines() if "|" in ln] == \
            [ln for ln in result.stdout.splitlines() if "|" in ln]
    finally:
        w_proc.terminate()
        f_proc.terminate()


def test_analyze_identical_pair_says_no_divergences():
    w_proc, w_url = spawn_serve(FIXTURES / "pillar_working.echo", PILLAR_ENTRY)
    f_proc, f_url = spawn_serve(FIXTURES / "pillar_working.echo", PILLAR_ENTRY)
    try:
        result = run_cli("analyze", "--working", w_url, "--failing", f_url)
        assert result.returncode == 0
        assert "no divergences" in result.stdout
    finally:
        w_proc.terminate()
        f_proc.terminate()


def test_session_command_serves_controller_api(tmp_path):
    ui_dir = tmp_path / "ui"
    ui_dir.mkdir()
    (ui_dir / "index.html").write_text("<html><body>test ui</body></html>")
    w_proc, w_url = spawn_serve(FIXTURES / "pillar_working.echo", PILLAR_ENTRY)
    f_proc, f_url = spawn_serve(FIXTURES / "pillar_failing.echo", PILLAR_ENTRY)
    session = subprocess.Popen(
        [sys.executable, "-m", "echodbg.cli", "session",
         "--working", w_url, "--failing", f_url,
         "--ui-port", "0", "--ui-dir", str(ui_dir)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    try:
        line = session.stdout.readline().strip()
        assert line.startswith("controller on "), line
        base = line.split("controller on ")[1]
        with urllib.request.urlopen(base + "/state", timeout=10) as resp:
            doc = json.load(resp)
        assert doc["result"]["convergent"] is True
        with urllib.request.urlopen(base + "/", timeout=10) as resp:
            assert "test ui" in resp.read().decode()
    finally:
        session.terminate()
        w_proc.terminate()
        f_proc.terminate()


def test_session_reports_unreachable_endpoint():
    result = run_cli("session", "--working", "http://127.0.0.1:1",
                     "--failing", "http://127.0.0.1:2")
    assert result.returncode == 4
    assert "working endpoint" in result.stderr


def test_demo_spawns_three_processes():
    proc = subprocess.Popen(
        [sys.executable, "-m", "echodbg.cli", "demo",
         str(FIXTURES / "pillar_working.echo"),
         str(FIXTURES / "pillar_failing.echo"),
         "--entry", PILLAR_ENTRY, "--ui-port", "0"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    try:
        base = None
        deadline = time.time() + 20
        while time.time() < deadline:
            line = proc.stdout.readline().strip()
            if line.startswith("controller on "):
                base = line.split("controller on ")[1]
                break
        assert base, "demo never announced its controller"
        with urllib.request.urlopen(base + "/state", timeout=10) as resp:
            doc = json.load(resp)
        assert doc["ok"] is True
        assert doc["result"]["convergent"] is True
    finally:
        proc.terminate()
        proc.wait(timeout=10)
