"""Lexer and parser tests."""

import pytest

from minihls import source
from minihls.errors import LexError, MissingReturnError, ParseError


def toks(text):
    return [(t.kind, t.value) for t in source.tokenize(text)
            if t.kind not in ("newline", "eof")]


def test_tokenize_operators_longest_match():
    assert toks("a <= b == c != d") == [
        ("ident", "a"), ("<=", "<="), ("ident", "b"), ("==", "=="),
        ("ident", "c"), ("!=", "!="), ("ident", "d")]


def test_tokenize_numbers():
    assert toks("12 3.5 0.25 7.0") == [
        ("int", 12), ("float", 3.5), ("float", 0.25), ("float", 7.0)]


def test_tokenize_keywords_vs_idents():
    kinds = [k for k, _ in toks("if iffy while whiled true trueish")]
    assert kinds == ["if", "ident", "while", "ident", "true", "ident"]


def test_tokenize_comment_runs_to_end_of_line():
    assert toks("x = 1 # comment with symbols <= &&\ny = 2") == [
        ("ident", "x"), ("=", "="), ("int", 1),
        ("ident", "y"), ("=", "="), ("int", 2)]


def test_tokenize_positions():
    t = source.tokenize("ab\n  cd")
    ab = next(tok for tok in t if tok.value == "ab")
    cd = next(tok for tok in t if tok.value == "cd")
    assert (ab.pos.line, ab.pos.col) == (1, 1)
    assert (cd.pos.line, cd.pos.col) == (2, 3)


def test_tokenize_rejects_stray_character():
    with pytest.raises(LexError) as exc:
        source.tokenize("x = 1 $ 2")
    assert "$" in str(exc.value)


def test_parse_simple_function():
    prog = source.parse_source(
        "function add(a, b)\n  return a + b\nend\n")
    fn = prog.function("add")
    assert [p.name for p in fn.params] == ["a", "b"]
    assert isinstance(fn.body[0], source.Return)


def test_parse_precedence():
    prog = source.parse_source(
        "function f(a, b, c)\n  return a + b * c < a && true\nend\n")
    ret = prog.function("f").body[0]
    # && binds loosest, then <, then +, then *
    assert isinstance(ret.value, source.Binary) and ret.value.op == "&&"
    cmp = ret.value.left
    assert cmp.op == "<"
    assert cmp.left.op == "+"
    assert cmp.left.right.op == "*"


def test_parse_unary_binds_tighter_than_mul():
    prog = source.parse_source("function f(a)\n  return -a * a\nend\n")
    ret = prog.function("f").body[0]
    assert ret.value.op == "*"
    assert isinstance(ret.value.left, source.Unary)


def test_parse_if_elseif_else_chain():
    text = ("function f(a)\n"
            "  if a > 0\n    return 1\n"
            "  elseif a < 0\n    return -1\n"
            "  else\n    return 0\n  end\nend\n")
    stmt = source.parse_source(text).function("f").body[0]
    assert isinstance(stmt, source.If)
    assert len(stmt.elifs) == 1
    assert stmt.orelse is not None


def test_parse_annotations():
    prog = source.parse_source(
        "function f(a::Int64, b::Float64)\n  return b\nend\n")
    assert [p.annotation for p in prog.function("f").params] == \
        ["Int64", "Float64"]


def test_parse_missing_return_rejected():
    text = ("function f(a)\n"
            "  if a > 0\n    return 1\n  end\nend\n")
    with pytest.raises(MissingReturnError):
        source.parse_source(text)


def test_parse_return_on_all_paths_accepted():
    text = ("function f(a)\n"
            "  if a > 0\n    return 1\n"
            "  else\n    return 2\n  end\nend\n")
    source.parse_source(text)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as exc:
        source.parse_source("function f(a)\n  x = \nend\n")
    assert exc.value.pos is not None
    assert exc.value.pos.line == 2


def test_parse_rejects_duplicate_param():
    with pytest.raises(ParseError):
        source.parse_source("function f(a, a)\n  return a\nend\n")


def test_parse_rejects_statement_after_end_of_function():
    with pytest.raises(ParseError):
        source.parse_source("function f(a)\n  return a\nend\nreturn 1\n")


def test_int_literal_range():
    source.parse_source("function f()\n  return 9223372036854775807\nend\n")
    with pytest.raises(LexError):
        source.parse_source("function f()\n  return 9223372036854775808\nend\n")


def test_roundtrip_through_printer(program):
    from minihls import corpus
    text = corpus.load(program)
    prog = source.parse_source(text)
    printed = source.print_program(prog)
    reparsed = source.parse_source(printed)
    assert source.print_program(reparsed) == printed


def test_roundtrip_preserves_precedence_parens():
    text = "function f(a, b)\n  return (a + b) * a\nend\n"
    printed = source.print_program(source.parse_source(text))
    assert "(a + b) * a" in printed
