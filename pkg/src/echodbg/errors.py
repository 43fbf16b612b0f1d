"""Exception types shared across the package."""


class ParseError(Exception):
    """Source text violates the grammar. Carries a 1-based line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class DuplicateDefinitionError(ParseError):
    """A class, method, field, or parameter name is declared twice."""


class UnknownClassError(Exception):
    """An entry statement instantiates a class the program does not declare."""


class EchoRuntimeError(Exception):
    """A debuggee-level failure: bad message send, type error, overflow.

    Stepping code catches this and marks the execution Failed; it never
    escapes to the caller of step().
    """


class ExecutionEndedError(Exception):
    """Contract violation: stepping an execution that already ended."""


class UnknownObjectError(Exception):
    """inspect was asked about an object id that was never allocated."""


class StepBudgetExceededError(Exception):
    """The session's max-steps budget was hit before the operation finished."""


class NonDeterministicExecutionError(Exception):
    """Replaying to a recorded event did not reproduce the recorded state."""


class EmptyTraceError(Exception):
    """Offline analysis got an empty trace paired with a non-empty one."""


class DebuggeeError(Exception):
    """An in-band error reported by a debuggee server (ok=false response)."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class TransportError(Exception):
    """Base for client-side failures talking to a debuggee server."""


class WireTimeout(TransportError):
    pass


class WireConnectionRefused(TransportError):
    pass


class WireMalformedResponse(TransportError):
    pass
