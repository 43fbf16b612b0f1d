"""Cross-runtime node identity: the comparison quadruple and its stable hash.

Two executions run in separate processes, so AST nodes can never be compared
by reference. A node is instead identified by four strings: the class and
method selector that own it, its node type, and the normalized source text it
covers. Equal quadruples mean "the same place in the program", which is what
control-flow comparison needs.
"""

from __future__ import annotations

from typing import NamedTuple

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

# 0x1F (unit separator) cannot appear in identifiers or normalized source,
# so joining with it cannot make two distinct quadruples collide textually.
_SEP = "\x1f"


class NodeIdentity(NamedTuple):
    class_name: str
    method_selector: str
    node_type: str
    source_text: str


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def identity_hash(ident: NodeIdentity) -> int:
    joined = _SEP.join(ident)
    return fnv1a64(joined.encode("utf-8"))


def identities_equal(a: NodeIdentity, b: NodeIdentity) -> bool:
    return a == b
