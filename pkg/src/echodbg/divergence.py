"""Divergence/convergence mapping between two executions of one statement.

Both executions start on the same entry statement, so they begin convergent.
The map is built by alternating two searches until either execution is over:

* Divergence search: step both executions in lockstep, one step each, until
  the nodes they are about to execute have different identities.
* Convergence search: the executions were last doing the same thing in some
  caller, so let each finish its current call and compare again at the
  return site. Concretely: while the identities differ, unwind the deeper
  execution to the shallower one's depth if the depths differ, otherwise
  unwind both one level; when both sit at the root depth and still differ,
  fall back to stepping both in lockstep.

Each recorded event carries the number of steps each execution had taken
when the event was observed. Replaying to an event is then just restart +
step-exactly-N-times, which is sound because executions are deterministic.

The same algorithm exists twice on purpose: `analyze_online` drives two live
sessions (local or remote) and compares full identity quadruples, while
`analyze_offline` works purely over collected (hash, depth) traces. The two
must produce identical maps; the test suite holds them to that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .debugger import DebugSession, Trace
from .errors import (EmptyTraceError, ExecutionEndedError,
                     NonDeterministicExecutionError, StepBudgetExceededError)
from .identity import NodeIdentity, identities_equal, identity_hash
from .wire import pack_trace, unpack_trace

__all__ = [
    "NodeIdentity", "identities_equal", "identity_hash",
    "NavEvent", "NavigationMap",
    "DIVERGENCE", "CONVERGENCE",
    "BOTH_COMPLETED", "WORKING_ENDED", "FAILING_ENDED", "BUDGET",
    "LocalDriver", "RemoteDriver",
    "step_to_next_divergence", "step_to_next_convergence",
    "analyze_online", "analyze_offline", "go_to",
    "write_trace_file", "read_trace_file",
]

DIVERGENCE = "divergence"
CONVERGENCE = "convergence"

BOTH_COMPLETED = "both-completed"
WORKING_ENDED = "working-ended"
FAILING_ENDED = "failing-ended"
BUDGET = "budget"

TRACE_FILE_MAGIC = b"ECHOTRC1"


@dataclass(frozen=True)
class NavEvent:
    kind: str
    w_steps: int
    f_steps: int

    def to_json(self) -> dict:
        return {"kind": self.kind, "wSteps": self.w_steps,
                "fSteps": self.f_steps}

    @classmethod
    def from_json(cls, doc: dict) -> "NavEvent":
        return cls(doc["kind"], doc["wSteps"], doc["fSteps"])


@dataclass
class NavigationMap:
    events: list = field(default_factory=list)
    terminal: str = BOTH_COMPLETED
    w_total_steps: int = 0
    f_total_steps: int = 0

    def to_json(self) -> dict:
        return {
            "events": [ev.to_json() for ev in self.events],
            "terminal": self.terminal,
            "wTotalSteps": self.w_total_steps,
            "fTotalSteps": self.f_total_steps,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "NavigationMap":
        return cls([NavEvent.from_json(e) for e in doc["events"]],
                   doc["terminal"], doc["wTotalSteps"], doc["fTotalSteps"])


class LocalDriver:
    """Drives a DebugSession in this process.

    For analysis purposes an execution that hit its step budget counts as
    ended, which keeps live analysis aligned with what a truncated trace
    shows: nothing beyond the budget exists.
    """

    def __init__(self, session: DebugSession):
        self.session = session

    def restart(self):
        self.session.restart()

    def alive(self) -> bool:
        session = self.session
        return session.is_alive() and session.exec.step_count < session.max_steps

    def ended_by_budget(self) -> bool:
        session = self.session
        return session.is_alive() and session.exec.step_count >= session.max_steps

    def steps_taken(self) -> int:
        return self.session.exec.step_count

    def stack_depth(self) -> int:
        return self.session.exec.stack_depth()

    def step(self):
        self.session.step()

    def step_n(self, count: int):
        self.session.step_n(count)

    def step_until_depth_below(self, target: int):
        try:
            self.session.step_until_depth_below(target)
        except StepBudgetExceededError:
            pass  # alive() turns false; the engine records a budget terminal

    def current_identity(self) -> NodeIdentity | None:
        node = self.session.exec.current_node()
        return node.identity if node is not None else None

    current_key = current_identity


class RemoteDriver:
    """Drives a debuggee over its wire client; same contract as LocalDriver.

    `max_steps` should match the budget the debuggee server was started
    with; the driver also treats an in-band budget error as end-of-analysis
    in case the two disagree.
    """

    def __init__(self, client, max_steps: int = 10_000_000):
        self.client = client
        self.max_steps = max_steps
        self._budget_hit = False
        self._sync()

    def _sync(self):
        doc = self.client.status()
        self._status = doc["status"]
        self._steps = doc["stepCount"]
        self._depth = doc["stackDepth"]

    def _absorb(self, doc: dict):
        self._status = doc["status"]
        self._steps = doc["stepCount"]
        self._depth = doc["stackDepth"]

    def restart(self):
        self._budget_hit = False
        self._absorb(self.client.restart())

    def alive(self) -> bool:
        return (self._status in ("Ready", "Running")
                and self._steps < self.max_steps and not self._budget_hit)

    def ended_by_budget(self) -> bool:
        return (self._status in ("Ready", "Running")
                and (self._steps >= self.max_steps or self._budget_hit))

    def steps_taken(self) -> int:
        return self._steps

    def stack_depth(self) -> int:
        return self._depth

    def step(self):
        try:
            self._absorb(self.client.step())
        except StepBudgetExceededError:
            self._budget_hit = True

    def step_n(self, count: int):
        if count:
            self._absorb(self.client.step_n(count))

    def step_until_depth_below(self, target: int):
        try:
            self._absorb(self.client.step_until_depth_below(target))
        except StepBudgetExceededError:
            self._budget_hit = True
            self._sync()

    def current_identity(self) -> NodeIdentity | None:
        doc = self.client.current_node()
        if doc.get("ended"):
            return None
        return NodeIdentity(doc["className"], doc["selector"],
                            doc["nodeType"], doc["sourceText"])

    current_key = current_identity


def _terminal_for(w, f) -> str:
    if w.ended_by_budget() or f.ended_by_budget():
        return BUDGET
    w_over = not w.alive()
    f_over = not f.alive()
    if w_over and f_over:
        return BOTH_COMPLETED
    if w_over:
        return WORKING_ENDED
    return FAILING_ENDED


def step_to_next_divergence(w, f):
    """Lockstep both executions until their current identities differ.

    Returns (event, None) on a divergence, (None, terminal) if either
    execution is over first.
    """
    if w.alive() and f.alive() and w.current_key() != f.current_key():
        raise ValueError("executions are not convergent")
    while True:
        if not (w.alive() and f.alive()):
            return None, _terminal_for(w, f)
        w.step()
        f.step()
        if w.alive() and f.alive() and w.current_key() != f.current_key():
            return NavEvent(DIVERGENCE, w.steps_taken(), f.steps_taken()), None


def step_to_next_convergence(w, f):
    """Unwind divergent executions until their current identities match."""
    if w.alive() and f.alive() and w.current_key() == f.current_key():
        raise ValueError("executions are not divergent")
    while True:
        if not (w.alive() and f.alive()):
            return None, _terminal_for(w, f)
        dw = w.stack_depth()
        df = f.stack_depth()
        if dw > df:
            w.step_until_depth_below(df + 1)
        elif df > dw:
            f.step_until_depth_below(dw + 1)
        elif dw == 1:
            # Nothing to unwind at the root: compare step by step.
            w.step()
            f.step()
        else:
            w.step_until_depth_below(dw)
            f.step_until_depth_below(dw)
        if w.alive() and f.alive() and w.current_key() == f.current_key():
            return NavEvent(CONVERGENCE, w.steps_taken(), f.steps_taken()), None


def analyze_online(w, f) -> NavigationMap:
    """Run both executions to the end, recording every event on the way."""
    if w.steps_taken() != 0 or f.steps_taken() != 0:
        raise ValueError("analyze needs freshly restarted executions")
    events = []
    while True:
        event, terminal = step_to_next_divergence(w, f)
        if event is None:
            break
        events.append(event)
        event, terminal = step_to_next_convergence(w, f)
        if event is None:
            break
        events.append(event)
    return NavigationMap(events, terminal, w.steps_taken(), f.steps_taken())


_CHUNK = 4096


def _first_mismatch(hw, i0, hf, j0, count: int) -> int:
    """Relative index of the first differing pair, or -1 if none in range."""
    t = 0
    while t < count:
        size = min(_CHUNK, count - t)
        if hw[i0 + t:i0 + t + size] == hf[j0 + t:j0 + t + size]:
            t += size
            continue
        end = t + size
        while t < end and hw[i0 + t] == hf[j0 + t]:
            t += 1
        return t
    return -1


def _scan_depth_below(depths, i: int, n: int, target: int) -> int:
    while i < n and depths[i] >= target:
        i += 1
    return i


def analyze_offline(trace_w: Trace, trace_f: Trace) -> NavigationMap:
    """Same analysis as analyze_online, over collected traces.

    Position k in a trace is the state after k steps; entry k holds the
    identity hash and stack depth of the node the execution was about to
    run. Hash comparison stands in for quadruple comparison here.
    """
    nw, nf = len(trace_w), len(trace_f)
    if nw == 0 and nf == 0:
        return NavigationMap([], BOTH_COMPLETED, 0, 0)
    if nw == 0 or nf == 0:
        raise EmptyTraceError("one trace is empty and the other is not")
    hw, dw = trace_w.hashes, trace_w.depths
    hf, df = trace_f.hashes, trace_f.depths
    if hw[0] != hf[0]:
        raise ValueError("traces do not start convergent")

    def terminal_at(i, j):
        if (i >= nw and trace_w.truncated) or (j >= nf and trace_f.truncated):
            return BUDGET
        if i >= nw and j >= nf:
            return BOTH_COMPLETED
        if i >= nw:
            return WORKING_ENDED
        return FAILING_ENDED

    events = []
    i = j = 0
    while True:
        # divergence search: lockstep, compare after each step
        span = min(nw - i, nf - j)
        t = _first_mismatch(hw, i + 1, hf, j + 1, span - 1) if span > 1 else -1
        if t < 0:
            i += span
            j += span
            terminal = terminal_at(i, j)
            break
        i += 1 + t
        j += 1 + t
        events.append(NavEvent(DIVERGENCE, i, j))

        # convergence search
        converged = False
        while True:
            if i >= nw or j >= nf:
                terminal = terminal_at(i, j)
                break
            dwi = dw[i]
            dfj = df[j]
            if dwi > dfj:
                i = _scan_depth_below(dw, i, nw, dfj + 1)
            elif dfj > dwi:
                j = _scan_depth_below(df, j, nf, dwi + 1)
            elif dwi == 1:
                i += 1
                j += 1
            else:
                i = _scan_depth_below(dw, i, nw, dwi)
                j = _scan_depth_below(df, j, nf, dwi)
            if i < nw and j < nf and hw[i] == hf[j]:
                events.append(NavEvent(CONVERGENCE, i, j))
                converged = True
                break
        if not converged:
            break
    return NavigationMap(events, terminal, i, j)


def go_to(w, f, event: NavEvent):
    """Restart both executions and replay them to a recorded event.

    Verifies the event's defining property afterwards; a mismatch means the
    executions did not replay deterministically.
    """
    w.restart()
    f.restart()
    try:
        w.step_n(event.w_steps)
        f.step_n(event.f_steps)
    except (ExecutionEndedError, StepBudgetExceededError) as err:
        raise NonDeterministicExecutionError(
            f"replay ended early at a recorded event: {err}") from err
    iw = w.current_identity()
    iff = f.current_identity()
    if event.kind == DIVERGENCE:
        if iw is None or iff is None or identities_equal(iw, iff):
            raise NonDeterministicExecutionError(
                "replayed divergence event does not show differing nodes")
    else:
        if iw is None or iff is None or not identities_equal(iw, iff):
            raise NonDeterministicExecutionError(
                "replayed convergence event does not show equal nodes")
        if w.stack_depth() != f.stack_depth():
            raise NonDeterministicExecutionError(
                "replayed convergence event has unequal stack depths")


def write_trace_file(path, trace: Trace):
    with open(path, "wb") as fh:
        fh.write(TRACE_FILE_MAGIC)
        fh.write(pack_trace(trace))


def read_trace_file(path, truncated: bool = False) -> Trace:
    with open(path, "rb") as fh:
        magic = fh.read(len(TRACE_FILE_MAGIC))
        if magic != TRACE_FILE_MAGIC:
            raise ValueError(f"{path} is not a trace file")
        return unpack_trace(fh.read(), truncated=truncated)
