import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN, fixture_source, load_program
from echodbg.errors import DuplicateDefinitionError, ParseError, UnknownClassError
from echodbg.lang import (dump_node, dump_program, normalize_source, parse,
                          parse_entry)


def test_minimal_program():
    program = parse("class A { method m() { return 1 ; } }")
    assert [c.name for c in program.classes] == ["A"]
    (method,) = program.classes[0].methods
    assert method.selector == "m"
    assert not method.is_primitive
    body = method.body
    assert body.kind == "Seq"
    # explicit return, so no synthetic one is appended
    assert [c.kind for c in body.children] == ["Return"]
    assert body.children[0].children[0].kind == "IntLit"
    assert body.children[0].children[0].value == 1


def test_malformed_method_header():
    with pytest.raises(ParseError) as err:
        parse("class A { method m( { } }")
    assert err.value.line == 1
    assert err.value.column == 21  # the stray '{'


@pytest.mark.parametrize("source", [
    "class A { } class A { }",
    "class A { method m() { } method m() { } }",
    "class A { field x; field x; }",
    "class A { method m(a, a) { } }",
])
def test_duplicate_definitions(source):
    with pytest.raises(DuplicateDefinitionError):
        parse(source)


def test_pillar_fixture_golden_dump():
    program = load_program("pillar_working.echo")
    assert [c.name for c in program.classes] == ["PCBDict", "PCBConfig",
                                                 "PCBTest"]
    expected = (GOLDEN / "pillar_working.ast").read_text()
    assert dump_program(program) == expected


def test_pillar_failing_golden_dump():
    program = load_program("pillar_failing.echo")
    expected = (GOLDEN / "pillar_failing.ast").read_text()
    assert dump_program(program) == expected


def test_parse_is_deterministic():
    source = fixture_source("pillar_working.echo")
    assert dump_program(parse(source)) == dump_program(parse(source))


def test_entry_golden_dump():
    program = load_program("pillar_working.echo")
    entry = parse_entry("PCBTest.new().run()", program)
    assert dump_node(entry) == (GOLDEN / "pillar_entry.ast").read_text()
    # Seq wrapping a Send whose receiver is the instantiation
    assert entry.kind == "Seq"
    send = entry.children[0]
    assert (send.kind, send.selector) == ("Send", "run")
    assert send.children[0].kind == "New"


def test_entry_empty_is_error():
    program = load_program("pillar_working.echo")
    with pytest.raises(ParseError):
        parse_entry("", program)


def test_entry_literal():
    program = parse("class A { }")
    entry = parse_entry("1", program)
    assert entry.kind == "Seq"
    assert entry.owner_class == "<entry>"
    assert entry.owner_selector == "<entry>"
    lit = entry.children[0]
    assert (lit.kind, lit.value) == ("IntLit", 1)
    assert lit.owner_class == "<entry>"


def test_entry_semicolon_optional():
    program = parse("class A { }")
    with_semi = parse_entry("1;", program)
    without = parse_entry("1", program)
    assert with_semi.children[0].kind == without.children[0].kind == "IntLit"


def test_entry_unknown_class():
    program = parse("class A { }")
    with pytest.raises(UnknownClassError):
        parse_entry("Missing.new()", program)
    # the built-in Dict is always available
    parse_entry("Dict.new()", program)


def test_entry_trailing_garbage():
    program = parse("class A { }")
    with pytest.raises(ParseError):
        parse_entry("1; 2", program)


def test_span_soundness_on_fixtures():
    for name in ("pillar_working.echo", "pillar_failing.echo",
                 "branch_working.echo", "count.echo"):
        source = fixture_source(name)
        raw = source.encode("utf-8")
        program = parse(source)
        for cls in program.classes:
            for method in cls.methods:
                for node in method.body.walk():
                    text = raw[node.span_start:node.span_end].decode("utf-8")
                    assert normalize_source(text) == node.source_text


def test_span_soundness_with_multibyte_text():
    source = 'class A { method m() { s = "café  à gô";'\
             ' return s; } }'
    raw = source.encode("utf-8")
    program = parse(source)
    for node in program.classes[0].methods[0].body.walk():
        text = raw[node.span_start:node.span_end].decode("utf-8")
        assert normalize_source(text) == node.source_text


def test_owner_stamped_everywhere():
    program = load_program("pillar_working.echo")
    for cls in program.classes:
        for method in cls.methods:
            for node in method.body.walk():
                assert node.owner_class == cls.name
                assert node.owner_selector == method.selector
                assert node.identity is not None
                assert node.identity_hash != 0


def test_synthetic_return_appended_when_body_falls_through():
    program = parse("class A { method m() { 1; } }")
    body = program.classes[0].methods[0].body
    assert [c.kind for c in body.children] == ["IntLit", "Return"]
    synthetic = body.children[1]
    assert synthetic.source_text == ""
    assert synthetic.span_start == synthetic.span_end
    assert synthetic.children[0].kind == "NilLit"


def test_string_literals_and_escapes():
    program = parse(r'class A { method m() { s = "a\"b\\c\nd"; return s; } }')
    assign = program.classes[0].methods[0].body.children[0]
    assert assign.children[0].value == 'a"b\\c\nd'
    with pytest.raises(ParseError):
        parse('class A { method m() { s = "unterminated; } }')


def test_whitespace_normalization():
    assert normalize_source("  a \n\t b  ") == "a b"
    assert normalize_source("") == ""
    one = parse("class A { method m() { return 1.add(2); } }")
    two = parse("class A { method m() { return 1.add( 2 )\n; } }")
    send_one = one.classes[0].methods[0].body.children[0].children[0]
    send_two = two.classes[0].methods[0].body.children[0].children[0]
    assert send_one.source_text == "1.add(2)"
    assert send_two.source_text == "1.add( 2 )"


def test_comments_are_skipped():
    program = parse("// header\nclass A { // trailing\n method m() { } }\n")
    assert program.classes[0].methods[0].selector == "m"


def test_new_takes_no_arguments():
    with pytest.raises(ParseError):
        parse("class A { method m() { x = A.new(1); } }")


def test_chained_new_send():
    program = parse("class A { method m() { x = A.new().m(); return x; } }")
    assign = program.classes[0].methods[0].body.children[0]
    send = assign.children[0]
    assert (send.kind, send.selector) == ("Send", "m")
    assert send.children[0].kind == "New"


def test_parenthesized_expression():
    program = parse("class A { method m() { return (1.add(2)).add(3); } }")
    outer = program.classes[0].methods[0].body.children[0].children[0]
    assert (outer.kind, outer.selector) == ("Send", "add")
    inner = outer.children[0]
    assert (inner.kind, inner.source_text) == ("Send", "1.add(2)")


def test_primitive_body_restrictions():
    parse("class A { field f; primitive method p(x) "
          "{ @f = x.add(1); return @f; } }")
    with pytest.raises(ParseError):
        parse("class A { primitive method p() { return self.helper(); } "
              "method helper() { } }")
    with pytest.raises(ParseError):
        parse("class A { primitive method p() "
              "{ if (true) { return 1; } } }")
    with pytest.raises(ParseError):
        parse("class A { primitive method p() { x = Dict.new(); } }")


def test_method_missing_arity_checked():
    with pytest.raises(ParseError):
        parse("class A { method methodMissing(s) { } }")
    parse("class A { method methodMissing(s, args) { } }")


def test_int_literal_range():
    parse("class A { method m() { x = 9223372036854775807; } }")
    with pytest.raises(ParseError):
        parse("class A { method m() { x = 9223372036854775808; } }")


def test_deep_nesting_is_a_parse_error():
    blown = "class A { method m() { x = " + "(" * 4000 + "1" \
        + ")" * 4000 + "; } }"
    with pytest.raises(ParseError):
        parse(blown)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=80))
def test_parse_total_on_arbitrary_text(source):
    try:
        parse(source)
    except ParseError:
        pass


@settings(max_examples=100, deadline=None)
@given(st.text(
    alphabet="classmethodfieldreturnifwhile(){};=@.\"0123456789abc \n",
    max_size=120))
def test_parse_total_on_grammar_like_soup(source):
    try:
        parse(source)
    except ParseError:
        pass
