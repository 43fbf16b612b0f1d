"""Deterministic tree-walking interpreter with node-granularity stepping.

One step executes exactly one AST node's effect, and between steps the
execution is always observed "about to execute" a node. Evaluation order:
a Send evaluates its receiver, then its arguments left to right, then the
send itself (which pushes a frame or runs a primitive); Seq children run in
order; If evaluates its condition, then the If node picks a branch; While
revisits its condition before every iteration; Assign evaluates the
right-hand side, then the assignment. Seq nodes are structural and never
count as steps.

Frames only ever pop during a Return step (methods that fall off the end
carry a synthetic Return, added at parse time), so the stack depth changes
by at most one per step. Everything is deterministic: object ids are handed
out in allocation order and no step consults time, randomness, or I/O.
"""

from __future__ import annotations

import json

from .errors import EchoRuntimeError, ExecutionEndedError, UnknownObjectError
from .lang import AstNode, EXPR_KINDS, ENTRY_OWNER, Program

READY = "Ready"
RUNNING = "Running"
COMPLETED = "Completed"
FAILED = "Failed"

# agenda task kinds
_EVAL = 0
_APPLY = 1
_DISCARD = 2

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class ObjectRef:
    __slots__ = ("object_id", "class_name", "fields", "class_decl")

    def __init__(self, object_id, class_decl):
        self.object_id = object_id
        self.class_name = class_decl.name
        self.class_decl = class_decl
        self.fields = {name: None for name in class_decl.field_names}


class DictValue:
    """Instance of the built-in Dict class."""

    __slots__ = ("object_id", "entries")

    class_name = "Dict"

    def __init__(self, object_id):
        self.object_id = object_id
        self.entries = {}


_HASHABLE_KEY_TYPES = (int, str, bool, type(None))


class Frame:
    __slots__ = ("receiver", "selector", "class_name", "locals", "agenda",
                 "stack", "return_target")

    def __init__(self, receiver, selector, class_name, locals_, body,
                 return_target=None):
        self.receiver = receiver
        self.selector = selector
        self.class_name = class_name
        self.locals = locals_
        self.agenda = [(_EVAL, body)]
        self.stack = []
        self.return_target = return_target


def render_value(value) -> str:
    if value is None:
        return "nil"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value)
    return f"{value.object_id}@{value.class_name}"


class Execution:
    """The full debugger-visible state of one running program."""

    __slots__ = ("program", "entry", "frames", "step_count", "status",
                 "failure", "objects", "_next_object_id")

    def __init__(self, program: Program, entry: AstNode):
        self.program = program
        self.entry = entry
        self.step_count = 0
        self.status = READY
        self.failure = None
        self.objects = {}
        self._next_object_id = 1
        root = Frame(None, ENTRY_OWNER, ENTRY_OWNER, {}, entry)
        self.frames = [root]
        self._normalize()

    # observers

    def current_node(self) -> AstNode | None:
        if self.status not in (READY, RUNNING):
            return None
        return self.frames[-1].agenda[-1][1]

    def stack_depth(self) -> int:
        return len(self.frames)

    def call_stack_summary(self):
        """Root-first list of (class, selector, current source text)."""
        if self.status not in (READY, RUNNING):
            return None
        out = []
        for idx, frame in enumerate(self.frames):
            if idx + 1 < len(self.frames):
                site = self.frames[idx + 1].return_target
                text = site.source_text if site is not None else ""
            else:
                text = frame.agenda[-1][1].source_text
            out.append((frame.class_name, frame.selector, text))
        return out

    def inspect_object(self, object_id: int) -> dict:
        obj = self.objects.get(object_id)
        if obj is None:
            raise UnknownObjectError(f"no object with id {object_id}")
        if isinstance(obj, DictValue):
            return {}
        return {name: render_value(v) for name, v in obj.fields.items()}

    # stepping

    def step(self):
        if self.status not in (READY, RUNNING):
            raise ExecutionEndedError(
                f"cannot step an execution with status {self.status}")
        frame = self.frames[-1]
        node = frame.agenda.pop()[1]
        self.step_count += 1
        self.status = RUNNING
        try:
            self._apply(frame, node)
        except EchoRuntimeError as err:
            self.status = FAILED
            self.failure = str(err)
            return
        self._normalize()

    def _normalize(self):
        """Expand bookkeeping tasks until an executable node is on top."""
        frames = self.frames
        while frames:
            frame = frames[-1]
            agenda = frame.agenda
            if not agenda:
                # Only the entry frame can drain without a Return step.
                frames.pop()
                if frames:
                    frames[-1].stack.append(None)
                    continue
                self.status = COMPLETED
                return
            kind, node = agenda[-1]
            if kind == _APPLY:
                return
            agenda.pop()
            if kind == _DISCARD:
                frame.stack.pop()
            else:
                self._expand(agenda, node)

    def _expand(self, agenda, node):
        k = node.kind
        if k == "Seq":
            for child in reversed(node.children):
                if child.kind in EXPR_KINDS:
                    agenda.append((_DISCARD, None))
                agenda.append((_EVAL, child))
        elif k == "Send":
            agenda.append((_APPLY, node))
            for child in reversed(node.children):
                agenda.append((_EVAL, child))
        elif k in ("Assign", "FieldAssign", "Return"):
            agenda.append((_APPLY, node))
            agenda.append((_EVAL, node.children[0]))
        elif k in ("If", "While"):
            agenda.append((_APPLY, node))
            agenda.append((_EVAL, node.children[0]))
        else:
            agenda.append((_APPLY, node))

    def _apply(self, frame, node):
        k = node.kind
        stack = frame.stack
        if k in ("IntLit", "StrLit", "BoolLit", "NilLit"):
            stack.append(node.value)
        elif k == "VarRead":
            try:
                stack.append(frame.locals[node.name])
            except KeyError:
                raise EchoRuntimeError(f"undefined variable {node.name}") from None
        elif k == "SelfRef":
            stack.append(frame.receiver)
        elif k == "FieldRead":
            receiver = frame.receiver
            if not isinstance(receiver, ObjectRef):
                raise EchoRuntimeError(
                    f"field read @{node.name} outside an object context")
            try:
                stack.append(receiver.fields[node.name])
            except KeyError:
                raise EchoRuntimeError(
                    f"{receiver.class_name} has no field {node.name}") from None
        elif k == "Send":
            self._apply_send(frame, node)
        elif k == "Assign":
            frame.locals[node.name] = stack.pop()
        elif k == "FieldAssign":
            receiver = frame.receiver
            if not isinstance(receiver, ObjectRef):
                raise EchoRuntimeError(
                    f"field write @{node.name} outside an object context")
            if node.name not in receiver.fields:
                raise EchoRuntimeError(
                    f"{receiver.class_name} has no field {node.name}")
            receiver.fields[node.name] = stack.pop()
        elif k == "New":
            stack.append(self._allocate(node.class_name))
        elif k == "If":
            cond = stack.pop()
            if cond is True:
                frame.agenda.append((_EVAL, node.children[1]))
            elif cond is False:
                if len(node.children) == 3:
                    frame.agenda.append((_EVAL, node.children[2]))
            else:
                raise EchoRuntimeError(
                    f"if condition must be a Bool, got {render_value(cond)}")
        elif k == "While":
            cond = stack.pop()
            if cond is True:
                agenda = frame.agenda
                agenda.append((_APPLY, node))
                agenda.append((_EVAL, node.children[0]))
                agenda.append((_EVAL, node.children[1]))
            elif cond is not False:
                raise EchoRuntimeError(
                    f"while condition must be a Bool, got {render_value(cond)}")
        elif k == "Return":
            value = stack.pop()
            self.frames.pop()
            if self.frames:
                self.frames[-1].stack.append(value)
            else:
                self.status = COMPLETED
        else:  # pragma: no cover - parser emits no other kinds
            raise EchoRuntimeError(f"cannot execute node kind {k}")

    def _allocate(self, class_name):
        if class_name == "Dict":
            obj = DictValue(self._next_object_id)
        else:
            cls = self.program.classes_by_name.get(class_name)
            if cls is None:
                raise EchoRuntimeError(f"unknown class {class_name}")
            obj = ObjectRef(self._next_object_id, cls)
        self.objects[obj.object_id] = obj
        self._next_object_id += 1
        return obj

    # message dispatch

    def _apply_send(self, frame, node):
        stack = frame.stack
        nargs = len(node.children) - 1
        if nargs:
            args = stack[-nargs:]
            del stack[-nargs:]
        else:
            args = []
        receiver = stack.pop()
        selector = node.selector

        if isinstance(receiver, ObjectRef):
            method = receiver.class_decl.methods_by_selector.get(selector)
            if method is not None and len(method.params) == nargs:
                if method.is_primitive:
                    stack.append(self._run_primitive(receiver, method, args))
                else:
                    self._push_frame(receiver, method, args, node)
                return
            if selector == "eq" and nargs == 1:
                stack.append(_universal_eq(receiver, args[0]))
                return
            missing = receiver.class_decl.methods_by_selector.get("methodMissing")
            if missing is not None and selector != "methodMissing":
                arg_dict = DictValue(self._next_object_id)
                self.objects[arg_dict.object_id] = arg_dict
                self._next_object_id += 1
                for idx, value in enumerate(args):
                    arg_dict.entries[idx] = value
                if missing.is_primitive:
                    stack.append(self._run_primitive(
                        receiver, missing, [selector, arg_dict]))
                else:
                    self._push_frame(receiver, missing, [selector, arg_dict],
                                     node)
                return
            raise EchoRuntimeError(
                f"{receiver.class_name} does not understand "
                f"{selector}/{nargs}")
        stack.append(_builtin_send(receiver, selector, args))

    def _push_frame(self, receiver, method, args, send_node):
        body = method.body
        owner = send_node  # the in-progress call site, for stack summaries
        callee = Frame(receiver, method.selector, receiver.class_name,
                       dict(zip(method.params, args)), body,
                       return_target=owner)
        self.frames.append(callee)

    def _run_primitive(self, receiver, method, args):
        """Big-step evaluation of a primitive method body: one atomic step."""
        env = dict(zip(method.params, args))
        result = [None]
        if self._eval_primitive_seq(method.body, receiver, env, result):
            return result[0]
        return None

    def _eval_primitive_seq(self, seq, receiver, env, result):
        for stmt in seq.children:
            k = stmt.kind
            if k == "Return":
                result[0] = self._eval_primitive_expr(
                    stmt.children[0], receiver, env)
                return True
            if k == "Assign":
                env[stmt.name] = self._eval_primitive_expr(
                    stmt.children[0], receiver, env)
            elif k == "FieldAssign":
                if stmt.name not in receiver.fields:
                    raise EchoRuntimeError(
                        f"{receiver.class_name} has no field {stmt.name}")
                receiver.fields[stmt.name] = self._eval_primitive_expr(
                    stmt.children[0], receiver, env)
            else:
                self._eval_primitive_expr(stmt, receiver, env)
        return False

    def _eval_primitive_expr(self, node, receiver, env):
        k = node.kind
        if k in ("IntLit", "StrLit", "BoolLit", "NilLit"):
            return node.value
        if k == "VarRead":
            try:
                return env[node.name]
            except KeyError:
                raise EchoRuntimeError(
                    f"undefined variable {node.name}") from None
        if k == "SelfRef":
            return receiver
        if k == "FieldRead":
            try:
                return receiver.fields[node.name]
            except KeyError:
                raise EchoRuntimeError(
                    f"{receiver.class_name} has no field {node.name}") from None
        if k == "Send":
            target = self._eval_primitive_expr(node.children[0], receiver, env)
            args = [self._eval_primitive_expr(c, receiver, env)
                    for c in node.children[1:]]
            if isinstance(target, ObjectRef):
                if node.selector == "eq" and len(args) == 1:
                    return _universal_eq(target, args[0])
                raise EchoRuntimeError(
                    "primitive methods may only send messages to "
                    "built-in values")
            return _builtin_send(target, node.selector, args)
        raise EchoRuntimeError(
            f"node kind {k} is not allowed in a primitive method")


def _universal_eq(a, b) -> bool:
    if isinstance(a, (ObjectRef, DictValue)) or isinstance(b, (ObjectRef, DictValue)):
        return a is b
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return a == b


def _check_int(value: int, op: str) -> int:
    if value < INT_MIN or value > INT_MAX:
        raise EchoRuntimeError(f"Int overflow in {op}")
    return value


def _require_arity(selector, args, n):
    if len(args) != n:
        raise EchoRuntimeError(
            f"{selector} expects {n} argument(s), got {len(args)}")


def _builtin_send(receiver, selector, args):
    if selector == "eq":
        _require_arity("eq", args, 1)
        return _universal_eq(receiver, args[0])
    if isinstance(receiver, bool) or receiver is None:
        pass  # only eq is understood
    elif isinstance(receiver, int):
        if selector == "add":
            _require_arity("add", args, 1)
            other = _require_int(args[0], "add")
            return _check_int(receiver + other, "add")
        if selector == "sub":
            _require_arity("sub", args, 1)
            other = _require_int(args[0], "sub")
            return _check_int(receiver - other, "sub")
        if selector == "lt":
            _require_arity("lt", args, 1)
            other = _require_int(args[0], "lt")
            return receiver < other
    elif isinstance(receiver, str):
        if selector == "add":
            _require_arity("add", args, 1)
            if not isinstance(args[0], str):
                raise EchoRuntimeError("Str add expects a Str argument")
            return receiver + args[0]
    elif isinstance(receiver, DictValue):
        if selector == "at":
            _require_arity("at", args, 1)
            key = _require_key(args[0])
            try:
                return receiver.entries[key]
            except KeyError:
                raise EchoRuntimeError(
                    f"Dict has no key {render_value(args[0])}") from None
        if selector == "atPut":
            _require_arity("atPut", args, 2)
            key = _require_key(args[0])
            receiver.entries[key] = args[1]
            return receiver
        if selector == "includesKey":
            _require_arity("includesKey", args, 1)
            return _require_key(args[0]) in receiver.entries
    raise EchoRuntimeError(
        f"{_type_name(receiver)} does not understand {selector}/{len(args)}")


def _require_int(value, op):
    if isinstance(value, bool) or not isinstance(value, int):
        raise EchoRuntimeError(f"Int {op} expects an Int argument")
    return value


def _require_key(value):
    if isinstance(value, _HASHABLE_KEY_TYPES):
        # bools hash like ints in Python; tag them so true != 1 as a key
        if isinstance(value, bool):
            return ("bool", value)
        return value
    raise EchoRuntimeError("Dict keys must be Int, Str, Bool, or nil")


def _type_name(value) -> str:
    if value is None:
        return "Nil"
    if isinstance(value, bool):
        return "Bool"
    if isinstance(value, int):
        return "Int"
    if isinstance(value, str):
        return "Str"
    return value.class_name


def new_execution(program: Program, entry: AstNode) -> Execution:
    return Execution(program, entry)
