"""Scriptable, UI-less debugger on top of the interpreter.

A DebugSession owns one execution plus the recipe to rebuild it (program +
entry statement), so restart is always exact. Sessions carry a max-steps
budget so that runaway debuggee loops turn into a truncated result instead
of a hang.

The trace collector runs the whole execution locally and records, before
every step, the identity hash of the node about to execute and the stack
depth. That 12-bytes-per-step record is all the offline divergence analysis
needs, which is what makes shipping multi-million-step runs over the wire
practical.
"""

from __future__ import annotations

from array import array
from typing import NamedTuple

from .errors import StepBudgetExceededError
from .interp import Execution, READY, RUNNING
from .lang import AstNode, Program

DEFAULT_MAX_STEPS = 10_000_000


class TraceEntry(NamedTuple):
    identity_hash: int
    stack_depth: int


class Trace:
    """Per-step (identity hash, stack depth) records for one full run."""

    __slots__ = ("hashes", "depths", "truncated")

    def __init__(self, hashes=None, depths=None, truncated=False):
        self.hashes = hashes if hashes is not None else array("Q")
        self.depths = depths if depths is not None else array("I")
        self.truncated = truncated

    def __len__(self):
        return len(self.hashes)

    def __getitem__(self, index) -> TraceEntry:
        return TraceEntry(self.hashes[index], self.depths[index])

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (self.hashes == other.hashes and self.depths == other.depths
                and self.truncated == other.truncated)

    def append(self, identity_hash: int, stack_depth: int):
        self.hashes.append(identity_hash)
        self.depths.append(stack_depth)


class DebugSession:
    def __init__(self, program: Program, entry: AstNode,
                 max_steps: int = DEFAULT_MAX_STEPS):
        if max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        self.program = program
        self.entry = entry
        self.max_steps = max_steps
        self.exec = Execution(program, entry)

    def restart(self):
        self.exec = Execution(self.program, self.entry)
        return self

    def status(self) -> str:
        return self.exec.status

    def is_alive(self) -> bool:
        return self.exec.status in (READY, RUNNING)

    def step(self):
        if self.exec.step_count >= self.max_steps and self.is_alive():
            raise StepBudgetExceededError(
                f"step budget of {self.max_steps} exhausted")
        self.exec.step()

    def step_n(self, count: int):
        for _ in range(count):
            self.step()

    def step_until_depth_below(self, target_depth: int):
        """Step until the stack is shallower than target_depth.

        No-op when already below. Stops early if the execution ends; raises
        when the budget runs out first.
        """
        if target_depth < 1:
            raise ValueError("target_depth must be >= 1")
        exec_ = self.exec
        max_steps = self.max_steps
        while exec_.status in (READY, RUNNING) and len(exec_.frames) >= target_depth:
            if exec_.step_count >= max_steps:
                raise StepBudgetExceededError(
                    f"step budget of {max_steps} exhausted")
            exec_.step()

    def collect_full_trace(self) -> Trace:
        """Run to the end, recording one entry per step before it executes.

        Requires a fresh session (no steps taken). Returns a truncated trace
        instead of raising when the budget is hit, so callers can still map
        the prefix.
        """
        exec_ = self.exec
        if exec_.step_count != 0:
            raise ValueError("collect_full_trace needs a freshly restarted "
                             "session")
        trace = Trace()
        hashes = trace.hashes
        depths = trace.depths
        max_steps = self.max_steps
        frames = exec_.frames
        step = exec_.step
        while exec_.status in (READY, RUNNING):
            if exec_.step_count >= max_steps:
                trace.truncated = True
                break
            hashes.append(frames[-1].agenda[-1][1].identity_hash)
            depths.append(len(frames))
            step()
        return trace
