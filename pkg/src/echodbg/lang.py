"""Parser and AST for Echolang, the class-based mini-language under debug.

Grammar (EBNF):

    program     := classDecl*
    classDecl   := "class" IDENT "{" ("field" IDENT ";")* methodDecl* "}"
    methodDecl  := ("primitive")? "method" IDENT "(" params? ")" block
    block       := "{" stmt* "}"
    stmt        := assign | fieldAssign | return | if | while | exprStmt
    assign      := IDENT "=" expr ";"
    fieldAssign := "@" IDENT "=" expr ";"
    return      := "return" expr ";"
    if          := "if" "(" expr ")" block ("else" block)?
    while       := "while" "(" expr ")" block
    exprStmt    := expr ";"
    expr        := primary ("." IDENT "(" args? ")")*
    primary     := INT | STRING | "true" | "false" | "nil" | "self"
                 | IDENT | "@" IDENT | IDENT ".new" "(" ")" | "(" expr ")"

`//` starts a line comment. `IDENT.new()` instantiates a class and takes no
arguments; `.new` chained onto any other expression is an ordinary message
send. There is no inheritance and no user-visible namespace beyond classes.

Every AST node carries its owning class/selector, its byte span into the
parsed source, and the whitespace-normalized text of that span, so nodes can
be identified across processes (see identity.py).
"""

from __future__ import annotations

import re

from .errors import DuplicateDefinitionError, ParseError, UnknownClassError
from .identity import NodeIdentity, identity_hash

NODE_TYPES = (
    "Seq", "IntLit", "StrLit", "BoolLit", "NilLit", "VarRead", "FieldRead",
    "Assign", "FieldAssign", "Send", "SelfRef", "New", "If", "While", "Return",
)

# Node kinds that produce a value when used as a statement (and therefore
# need their result dropped); the rest manage the operand stack themselves.
EXPR_KINDS = frozenset(
    {"IntLit", "StrLit", "BoolLit", "NilLit", "VarRead", "FieldRead",
     "Send", "SelfRef", "New"}
)

ENTRY_OWNER = "<entry>"

# Selectors implemented natively by the interpreter; the only sends a
# primitive method body may contain.
BUILTIN_SELECTORS = frozenset({"add", "sub", "lt", "eq", "at", "atPut", "includesKey"})

KEYWORDS = frozenset(
    {"class", "field", "method", "primitive", "return", "if", "else",
     "while", "true", "false", "nil", "self"}
)

_WS_RUN = re.compile(r"\s+")

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


def normalize_source(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return _WS_RUN.sub(" ", text).strip()


class AstNode:
    """One syntax node. `kind` is one of NODE_TYPES.

    Attribute usage by kind: `name` for VarRead/FieldRead/Assign/FieldAssign,
    `selector` for Send, `class_name` for New, `value` for literals. Spans
    are byte offsets into the source the node was parsed from.
    """

    __slots__ = (
        "kind", "children", "name", "selector", "class_name", "value",
        "span_start", "span_end", "source_text",
        "owner_class", "owner_selector", "identity", "identity_hash",
    )

    def __init__(self, kind, children=(), name=None, selector=None,
                 class_name=None, value=None, span=(0, 0), source_text=""):
        self.kind = kind
        self.children = list(children)
        self.name = name
        self.selector = selector
        self.class_name = class_name
        self.value = value
        self.span_start, self.span_end = span
        self.source_text = source_text
        self.owner_class = None
        self.owner_selector = None
        self.identity = None
        self.identity_hash = 0

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def __repr__(self):
        return f"AstNode({self.kind!r}, {self.source_text!r})"


class MethodDecl:
    __slots__ = ("selector", "params", "is_primitive", "body")

    def __init__(self, selector, params, is_primitive, body):
        self.selector = selector
        self.params = params
        self.is_primitive = is_primitive
        self.body = body


class ClassDecl:
    __slots__ = ("name", "field_names", "methods", "methods_by_selector")

    def __init__(self, name, field_names, methods):
        self.name = name
        self.field_names = field_names
        self.methods = methods
        self.methods_by_selector = {m.selector: m for m in methods}


class Program:
    __slots__ = ("classes", "classes_by_name", "source")

    def __init__(self, classes, source):
        self.classes = classes
        self.classes_by_name = {c.name: c for c in classes}
        self.source = source


class _Token:
    __slots__ = ("kind", "text", "line", "col", "start", "end")

    def __init__(self, kind, text, line, col, start, end):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col
        self.start = start  # char offsets; converted to bytes for spans
        self.end = end


def _lex(source: str):
    tokens = []
    i = 0
    n = len(source)
    line = 1
    line_start = 0
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        if ch.isspace():
            i += 1
            continue
        if ch == "/" and i + 1 < n and source[i + 1] == "/":
            while i < n and source[i] != "\n":
                i += 1
            continue
        col = i - line_start + 1
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = text if text in KEYWORDS else "IDENT"
            tokens.append(_Token(kind, text, line, col, i, j))
            i = j
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(_Token("INT", source[i:j], line, col, i, j))
            i = j
            continue
        if ch == '"':
            j = i + 1
            while j < n:
                if source[j] == "\\":
                    j += 2
                    continue
                if source[j] == '"':
                    break
                if source[j] == "\n":
                    raise ParseError("unterminated string literal", line, col)
                j += 1
            if j >= n:
                raise ParseError("unterminated string literal", line, col)
            tokens.append(_Token("STRING", source[i:j + 1], line, col, i, j + 1))
            i = j + 1
            continue
        if ch in "{}().,;=@":
            tokens.append(_Token(ch, ch, line, col, i, i + 1))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, n - line_start + 1, n, n))
    return tokens


_STRING_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def _decode_string(raw: str, line: int, col: int) -> str:
    out = []
    i = 1
    end = len(raw) - 1
    while i < end:
        ch = raw[i]
        if ch == "\\":
            i += 1
            if i >= end:
                raise ParseError("dangling escape in string literal", line, col)
            esc = raw[i]
            if esc not in _STRING_ESCAPES:
                raise ParseError(f"unknown escape \\{esc}", line, col)
            out.append(_STRING_ESCAPES[esc])
        else:
            out.append(ch)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.source_bytes = source.encode("utf-8")
        self.tokens = _lex(source)
        self.pos = 0
        # Cumulative UTF-8 byte offset for every char offset; spans are bytes.
        offsets = [0] * (len(source) + 1)
        total = 0
        for idx, ch in enumerate(source):
            total += len(ch.encode("utf-8"))
            offsets[idx + 1] = total
        self.byte_at = offsets

    # token plumbing

    def peek(self, ahead=0) -> _Token:
        idx = min(self.pos + ahead, len(self.tokens) - 1)
        return self.tokens[idx]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            want = what or f"'{kind}'"
            found = tok.text if tok.kind != "EOF" else "end of input"
            raise ParseError(f"expected {want}, found {found!r}", tok.line, tok.col)
        return self.advance()

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def node(self, kind, start_char, end_char, **attrs) -> AstNode:
        text = normalize_source(self.source[start_char:end_char])
        return AstNode(kind, span=(self.byte_at[start_char], self.byte_at[end_char]),
                       source_text=text, **attrs)

    # grammar

    def parse_program(self) -> Program:
        classes = []
        seen = set()
        while self.peek().kind != "EOF":
            tok = self.peek()
            if tok.kind != "class":
                self.error(f"expected 'class', found {tok.text!r}")
            decl = self.parse_class()
            if decl.name in seen:
                raise DuplicateDefinitionError(
                    f"class {decl.name} is defined twice", tok.line, tok.col)
            seen.add(decl.name)
            classes.append(decl)
        return Program(classes, self.source)

    def parse_class(self) -> ClassDecl:
        self.expect("class")
        name = self.expect("IDENT", "class name").text
        self.expect("{")
        field_names = []
        while self.peek().kind == "field":
            tok = self.advance()
            fname = self.expect("IDENT", "field name").text
            self.expect(";")
            if fname in field_names:
                raise DuplicateDefinitionError(
                    f"field {fname} is defined twice in class {name}",
                    tok.line, tok.col)
            field_names.append(fname)
        methods = []
        selectors = set()
        while self.peek().kind in ("method", "primitive"):
            tok = self.peek()
            decl = self.parse_method()
            if decl.selector in selectors:
                raise DuplicateDefinitionError(
                    f"method {decl.selector} is defined twice in class {name}",
                    tok.line, tok.col)
            selectors.add(decl.selector)
            methods.append(decl)
        self.expect("}")
        return ClassDecl(name, field_names, methods)

    def parse_method(self) -> MethodDecl:
        is_primitive = False
        if self.peek().kind == "primitive":
            self.advance()
            is_primitive = True
        self.expect("method")
        sel_tok = self.expect("IDENT", "method selector")
        self.expect("(")
        params = []
        if self.peek().kind != ")":
            while True:
                ptok = self.expect("IDENT", "parameter name")
                if ptok.text in params:
                    raise DuplicateDefinitionError(
                        f"parameter {ptok.text} is defined twice",
                        ptok.line, ptok.col)
                params.append(ptok.text)
                if self.peek().kind != ",":
                    break
                self.advance()
        self.expect(")")
        if sel_tok.text == "methodMissing" and len(params) != 2:
            self.error("methodMissing must take exactly 2 parameters "
                       "(selector, args)", sel_tok)
        body = self.parse_block()
        return MethodDecl(sel_tok.text, params, is_primitive, body)

    def parse_block(self) -> AstNode:
        open_tok = self.expect("{")
        stmts = []
        while self.peek().kind not in ("}", "EOF"):
            stmts.append(self.parse_stmt())
        close_tok = self.expect("}")
        return self.node("Seq", open_tok.start, close_tok.end, children=stmts)

    def parse_stmt(self) -> AstNode:
        tok = self.peek()
        if tok.kind == "return":
            self.advance()
            expr = self.parse_expr()
            self.expect(";")
            return self.node("Return", tok.start, expr_end(expr, self),
                             children=[expr])
        if tok.kind == "if":
            return self.parse_if()
        if tok.kind == "while":
            return self.parse_while()
        if tok.kind == "@":
            at_tok = self.advance()
            name_tok = self.expect("IDENT", "field name")
            if self.peek().kind == "=":
                self.advance()
                rhs = self.parse_expr()
                self.expect(";")
                return self.node("FieldAssign", at_tok.start, expr_end(rhs, self),
                                 children=[rhs], name=name_tok.text)
            # expression statement starting with a field read
            expr = self.parse_send_chain(
                self.node("FieldRead", at_tok.start, name_tok.end,
                          name=name_tok.text))
            self.expect(";")
            return expr
        if tok.kind == "IDENT" and self.peek(1).kind == "=":
            name_tok = self.advance()
            self.advance()  # '='
            rhs = self.parse_expr()
            self.expect(";")
            return self.node("Assign", name_tok.start, expr_end(rhs, self),
                             children=[rhs], name=name_tok.text)
        expr = self.parse_expr()
        self.expect(";")
        return expr

    def parse_if(self) -> AstNode:
        if_tok = self.expect("if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then_block = self.parse_block()
        children = [cond, then_block]
        end = then_block.span_end
        if self.peek().kind == "else":
            self.advance()
            else_block = self.parse_block()
            children.append(else_block)
            end = else_block.span_end
        node = AstNode("If", children=children)
        self._finish_span(node, if_tok.start, end)
        return node

    def parse_while(self) -> AstNode:
        while_tok = self.expect("while")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        body = self.parse_block()
        node = AstNode("While", children=[cond, body])
        self._finish_span(node, while_tok.start, body.span_end)
        return node

    def _finish_span(self, node: AstNode, start_char: int, end_byte: int):
        # Blocks already carry byte offsets; mixed char/byte helper for
        # statements whose end is an already-built block node.
        node.span_start = self.byte_at[start_char]
        node.span_end = end_byte
        raw = self.source_bytes[node.span_start:node.span_end]
        node.source_text = normalize_source(raw.decode("utf-8"))

    def parse_expr(self) -> AstNode:
        return self.parse_send_chain(self.parse_primary())

    def parse_send_chain(self, receiver: AstNode) -> AstNode:
        while self.peek().kind == ".":
            self.advance()
            sel_tok = self.expect("IDENT", "selector")
            self.expect("(")
            args = []
            if self.peek().kind != ")":
                while True:
                    args.append(self.parse_expr())
                    if self.peek().kind != ",":
                        break
                    self.advance()
            close = self.expect(")")
            start = receiver.span_start
            node = AstNode("Send", children=[receiver] + args,
                           selector=sel_tok.text)
            node.span_start = start
            node.span_end = self.byte_at[close.end]
            raw = self.source_bytes[start:node.span_end]
            node.source_text = normalize_source(raw.decode("utf-8"))
            receiver = node
        return receiver

    def parse_primary(self) -> AstNode:
        tok = self.peek()
        if tok.kind == "INT":
            self.advance()
            value = int(tok.text)
            if value > INT_MAX:
                self.error("integer literal out of 64-bit range", tok)
            return self.node("IntLit", tok.start, tok.end, value=value)
        if tok.kind == "STRING":
            self.advance()
            return self.node("StrLit", tok.start, tok.end,
                             value=_decode_string(tok.text, tok.line, tok.col))
        if tok.kind == "true":
            self.advance()
            return self.node("BoolLit", tok.start, tok.end, value=True)
        if tok.kind == "false":
            self.advance()
            return self.node("BoolLit", tok.start, tok.end, value=False)
        if tok.kind == "nil":
            self.advance()
            return self.node("NilLit", tok.start, tok.end, value=None)
        if tok.kind == "self":
            self.advance()
            return self.node("SelfRef", tok.start, tok.end)
        if tok.kind == "@":
            self.advance()
            name_tok = self.expect("IDENT", "field name")
            return self.node("FieldRead", tok.start, name_tok.end,
                             name=name_tok.text)
        if tok.kind == "IDENT":
            # IDENT.new() is instantiation; a lone IDENT is a variable read.
            if (self.peek(1).kind == "." and self.peek(2).kind == "IDENT"
                    and self.peek(2).text == "new" and self.peek(3).kind == "("):
                name_tok = self.advance()
                self.advance()  # '.'
                self.advance()  # 'new'
                self.advance()  # '('
                if self.peek().kind != ")":
                    self.error("new takes no arguments")
                close = self.advance()
                return self.node("New", name_tok.start, close.end,
                                 class_name=name_tok.text)
            self.advance()
            return self.node("VarRead", tok.start, tok.end, name=tok.text)
        if tok.kind == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        found = tok.text if tok.kind != "EOF" else "end of input"
        raise ParseError(f"expected an expression, found {found!r}",
                         tok.line, tok.col)


def expr_end(expr: AstNode, parser: _Parser) -> int:
    # Expressions store byte spans already; map back to the char offset the
    # statement-node helper expects. Byte and char offsets agree for ASCII;
    # for non-ASCII we locate the char index with the prefix table.
    target = expr.span_end
    byte_at = parser.byte_at
    # binary search over the monotone prefix table
    lo, hi = 0, len(byte_at) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if byte_at[mid] < target:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _append_implicit_return(body: AstNode):
    """Methods that fall off the end return nil via a synthetic Return step.

    The synthetic nodes sit at the body's closing brace with a zero-width
    span, so they normalize to empty source text and never collide with
    explicit returns.
    """
    if body.children and body.children[-1].kind == "Return":
        return
    at = body.span_end - 1 if body.span_end > body.span_start else body.span_end
    nil_node = AstNode("NilLit", value=None)
    nil_node.span_start = nil_node.span_end = at
    ret = AstNode("Return", children=[nil_node])
    ret.span_start = ret.span_end = at
    body.children.append(ret)


def _stamp_owner(root: AstNode, class_name: str, selector: str):
    for node in root.walk():
        node.owner_class = class_name
        node.owner_selector = selector
        ident = NodeIdentity(class_name, selector, node.kind, node.source_text)
        node.identity = ident
        node.identity_hash = identity_hash(ident)


def _check_primitive_body(body: AstNode, class_name: str, selector: str):
    allowed = frozenset(
        {"Seq", "IntLit", "StrLit", "BoolLit", "NilLit", "VarRead",
         "FieldRead", "Assign", "FieldAssign", "Return", "SelfRef", "Send"}
    )
    for node in body.walk():
        if node.kind not in allowed:
            raise ParseError(
                f"primitive method {class_name}.{selector} may not contain "
                f"{node.kind} nodes", 1, 1)
        if node.kind == "Send" and node.selector not in BUILTIN_SELECTORS:
            raise ParseError(
                f"primitive method {class_name}.{selector} may only send "
                f"built-in messages, not {node.selector}", 1, 1)


def parse(source: str) -> Program:
    """Parse a full Echolang program. Deterministic: same text, same AST."""
    try:
        program = _Parser(source).parse_program()
    except RecursionError:
        raise ParseError("source is too deeply nested", 1, 1) from None
    for cls in program.classes:
        for method in cls.methods:
            _append_implicit_return(method.body)
            _stamp_owner(method.body, cls.name, method.selector)
            if method.is_primitive:
                _check_primitive_body(method.body, cls.name, method.selector)
    return program


def parse_entry(statement_source: str, program: Program) -> AstNode:
    """Parse the statement both executions will run, as a Seq owned by <entry>.

    The trailing semicolon is optional. Instantiated classes must exist in
    the program (the built-in Dict always does).
    """
    parser = _Parser(statement_source)
    if parser.peek().kind == "EOF":
        parser.error("empty entry statement")
    try:
        stmt = _parse_entry_stmt(parser)
    except RecursionError:
        raise ParseError("entry statement is too deeply nested", 1, 1) from None
    parser.expect("EOF", "end of entry statement")
    seq = AstNode("Seq", children=[stmt])
    seq.span_start = 0
    seq.span_end = parser.byte_at[len(statement_source)]
    seq.source_text = normalize_source(statement_source)
    _stamp_owner(seq, ENTRY_OWNER, ENTRY_OWNER)
    for node in seq.walk():
        if node.kind == "New" and node.class_name != "Dict" \
                and node.class_name not in program.classes_by_name:
            raise UnknownClassError(
                f"entry statement instantiates unknown class {node.class_name}")
    return seq


def _parse_entry_stmt(parser: _Parser) -> AstNode:
    tok = parser.peek()
    if tok.kind in ("return", "if", "while") or tok.kind == "@" \
            or (tok.kind == "IDENT" and parser.peek(1).kind == "="):
        return parser.parse_stmt()
    expr = parser.parse_expr()
    if parser.peek().kind == ";":
        parser.advance()
    return expr


def dump_node(root: AstNode, depth: int = 0) -> str:
    """Canonical line-per-node dump used by golden tests."""
    lines = []
    _dump_into(root, depth, lines)
    return "".join(lines)


def _dump_into(node: AstNode, depth: int, lines: list):
    lines.append(
        f"{depth}\t{node.kind}\t{node.owner_class}\t{node.owner_selector}"
        f"\t{node.span_start}:{node.span_end}\t{node.source_text}\n")
    for child in node.children:
        _dump_into(child, depth + 1, lines)


def dump_program(program: Program) -> str:
    chunks = []
    for cls in program.classes:
        for method in cls.methods:
            chunks.append(dump_node(method.body))
    return "".join(chunks)
