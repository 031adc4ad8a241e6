"""Circuit graph invariants, buffer insertion, serialization."""

import pytest

from minihls import cdfg as C
from minihls.build import build_cdfg
from minihls.cdfg import (
    CDFG, Port, buffer_free_cycle, check, component_stats, export_dot,
    from_json, insert_buffers, require_valid, to_json,
)
from minihls.errors import BuildError
from minihls.lattice import LatticeType
from minihls.lower import lower
from minihls.source import parse_source
from minihls import typecheck

I = LatticeType.INT64


def addpair_graph():
    func = lower(typecheck.infer(
        parse_source("function addpair(a, b)\n  return a + b\nend\n").functions[0],
        (I, I)))
    return build_cdfg(func)


def tiny_passthrough():
    """Entry feeding Exit through a Buffer; smallest editable valid graph."""
    g = CDFG("tiny")
    e = g.add_component(C.ENTRY, (), (64,), label="x")
    b = g.add_component(C.BUFFER, (64,), (64,))
    x = g.add_component(C.EXIT, (64,), ())
    g.add_channel(Port(e.id, 0), Port(b.id, 0), 64)
    g.add_channel(Port(b.id, 0), Port(x.id, 0), 64)
    return g


def test_addpair_is_exactly_six_components():
    g = addpair_graph()
    stats = component_stats(g)
    assert stats["total"] == 6
    # two data entries, the control entry (whose token drains to a sink),
    # the adder, and the exit
    assert stats == {"Entry": 3, "Exit": 1, "Const": 0, "Operator": 1,
                     "Fork": 0, "Branch": 0, "Merge": 0, "Mux": 0,
                     "Buffer": 0, "Source": 0, "Sink": 1, "total": 6}
    assert check(g) == []


def test_component_stats_deterministic():
    a = component_stats(addpair_graph())
    b = component_stats(addpair_graph())
    assert a == b
    assert list(a) == list(b)


def test_corpus_graphs_check_clean(program, compiled):
    res = compiled(program)
    assert check(res.cdfg) == []


def test_corpus_unoptimized_graphs_check_clean(program, compiled):
    res = compiled(program, opt=False)
    assert check(res.cdfg) == []


def test_mux_is_modeled_but_never_built(program, compiled):
    assert component_stats(compiled(program).cdfg)["Mux"] == 0


def test_loop_programs_get_buffers(compiled):
    assert compiled("power").n_buffers > 0
    assert compiled("newton_raphson").n_buffers > 0
    assert compiled("if_else").n_buffers == 0


def test_check_catches_dangling_port():
    g = tiny_passthrough()
    g.channels.pop()  # exit input and buffer output now dangle
    problems = check(g)
    assert any("drives 0 channels" in p for p in problems)
    assert any("fed by 0 channels" in p for p in problems)


def test_check_catches_double_driven_port():
    g = tiny_passthrough()
    g.add_channel(Port(0, 0), Port(2, 0), 64)
    problems = check(g)
    assert any("drives 2 channels" in p for p in problems)
    assert any("fed by 2 channels" in p for p in problems)


def test_check_catches_width_mismatch():
    g = tiny_passthrough()
    g.channels[0].width = 1
    assert any("width" in p for p in check(g))


def test_check_catches_bad_fork_arity():
    g = tiny_passthrough()
    g.components[1].kind = C.FORK  # 1-in 1-out is not a legal fork
    assert any("Fork" in p and ">=2" in p for p in check(g))


def test_check_catches_branch_condition_width():
    g = CDFG("b")
    g.add_component(C.BRANCH, (64, 64), (64, 64))
    assert any("condition input" in p for p in check(g))


def test_check_catches_missing_const_payload():
    g = CDFG("c")
    g.add_component(C.CONST, (0,), (64,))
    assert any("payload" in p for p in check(g))


def test_check_catches_bufferless_cycle():
    g = tiny_passthrough()
    # close a combinational loop around two operators
    a = g.add_component(C.OPERATOR, (64,), (64,), opcode="neg_i64")
    b = g.add_component(C.OPERATOR, (64,), (64,), opcode="neg_i64")
    g.add_channel(Port(a.id, 0), Port(b.id, 0), 64)
    g.add_channel(Port(b.id, 0), Port(a.id, 0), 64)
    assert buffer_free_cycle(g) is not None
    assert any("cycle" in p.lower() for p in check(g))


def test_insert_buffers_breaks_cycles():
    g = tiny_passthrough()
    a = g.add_component(C.OPERATOR, (64,), (64,), opcode="neg_i64")
    b = g.add_component(C.OPERATOR, (64,), (64,), opcode="neg_i64")
    g.add_channel(Port(a.id, 0), Port(b.id, 0), 64)
    g.add_channel(Port(b.id, 0), Port(a.id, 0), 64)
    n = insert_buffers(g)
    assert n == 1
    assert buffer_free_cycle(g) is None


def test_buffered_cycle_is_accepted():
    g = tiny_passthrough()
    a = g.add_component(C.OPERATOR, (64,), (64,), opcode="neg_i64")
    buf = g.add_component(C.BUFFER, (64,), (64,))
    g.add_channel(Port(a.id, 0), Port(buf.id, 0), 64)
    g.add_channel(Port(buf.id, 0), Port(a.id, 0), 64)
    assert buffer_free_cycle(g) is None


def test_require_valid_raises_with_all_violations():
    g = tiny_passthrough()
    g.channels.pop()
    with pytest.raises(BuildError):
        require_valid(g)


def test_json_roundtrip_is_exact(program, compiled):
    g = compiled(program).cdfg
    text = to_json(g)
    again = from_json(text)
    assert to_json(again) == text
    assert component_stats(again) == component_stats(g)
    assert check(again) == []


def test_dot_export_mentions_every_component(program, compiled):
    g = compiled(program).cdfg
    dot = export_dot(g)
    assert dot.startswith("digraph")
    for c in g.components:
        assert f"c{c.id} " in dot


def test_power_graph_strictly_larger_than_addpair(compiled):
    small = component_stats(addpair_graph())["total"]
    assert component_stats(compiled("power").cdfg)["total"] > small
