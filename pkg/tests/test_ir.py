"""SSA verifier and printer tests on hand-built functions."""

from minihls.ir import (
    Block, CondGoto, ConstOp, Goto, Instr, Ret, SSAFunction, SelectOp,
    dominators, print_function, verify,
)
from minihls.lattice import IMPL_BY_OPCODE, LatticeType

B, I, F = LatticeType.BOOL, LatticeType.INT64, LatticeType.FLOAT64

ADD = IMPL_BY_OPCODE["add_i64"]
GT = IMPL_BY_OPCODE["cmp_gt_i64"]


def straightline():
    """fn f(v0: i64) -> i64 { v1 = 1; v2 = v0 + v1; ret v2 }"""
    b0 = Block(0, (), [
        Instr(1, I, ConstOp(1)),
        Instr(2, I, ADD, (0, 1)),
    ], Ret(2))
    return SSAFunction("f", ((0, I),), I, [b0], next_value=3, next_block=1)


def diamond():
    """Branch on v0 > 0, arms pass different constants to a join param."""
    b0 = Block(0, (), [
        Instr(1, I, ConstOp(0)),
        Instr(2, B, GT, (0, 1)),
    ], CondGoto(2, 1, (), 2, ()))
    b1 = Block(1, (), [Instr(3, I, ConstOp(10))], Goto(3, (3,)))
    b2 = Block(2, (), [Instr(4, I, ConstOp(20))], Goto(3, (4,)))
    b3 = Block(3, ((5, I),), [], Ret(5))
    return SSAFunction("g", ((0, I),), I, [b0, b1, b2, b3],
                       next_value=6, next_block=4)


def test_straightline_verifies():
    assert verify(straightline()) == []


def test_diamond_verifies():
    assert verify(diamond()) == []


def test_print_straightline():
    assert print_function(straightline()) == (
        "fn f(v0: i64) -> i64\n"
        "b0:\n"
        "  v1 = const 1 : i64\n"
        "  v2 = add_i64 v0, v1 : i64\n"
        "  ret v2\n")


def test_print_diamond_shows_params_and_edges():
    text = print_function(diamond())
    assert "br v2, b1, b2\n" in text
    assert "b3(v5: i64):\n" in text
    assert "  goto b3(v3)\n" in text


def test_print_literals():
    b0 = Block(0, (), [
        Instr(0, F, ConstOp(2.5)),
        Instr(1, B, ConstOp(True)),
        Instr(2, B, ConstOp(False)),
        Instr(3, F, SelectOp(), (1, 0, 0)),
    ], Ret(3))
    f = SSAFunction("h", (), F, [b0], next_value=4, next_block=1)
    text = print_function(f)
    assert "v0 = const 2.5 : f64" in text
    assert "v1 = const true : i1" in text
    assert "v2 = const false : i1" in text
    assert "v3 = select v1, v0, v0 : f64" in text
    assert verify(f) == []


def assert_caught(func, fragment):
    problems = verify(func)
    assert problems, f"expected a violation mentioning {fragment!r}"
    assert any(fragment in p for p in problems), problems


def test_verify_catches_double_definition():
    f = straightline()
    f.entry.instrs.append(Instr(1, I, ConstOp(2)))
    f.entry.terminator = Ret(1)
    assert_caught(f, "defined more than once")


def test_verify_catches_undefined_use():
    f = straightline()
    f.entry.instrs[1] = Instr(2, I, ADD, (0, 99))
    assert_caught(f, "undefined")


def test_verify_catches_use_before_definition():
    f = straightline()
    f.entry.instrs.reverse()  # add now reads the const before it exists
    assert_caught(f, "before its definition")


def test_verify_catches_sibling_arm_use():
    f = diamond()
    # b2 reads v3, which is defined only along the b1 arm
    f.block(2).instrs[0] = Instr(4, I, ADD, (3, 3))
    assert_caught(f, "dominate")


def test_verify_catches_arg_count_mismatch():
    f = diamond()
    f.block(1).terminator = Goto(3, ())
    assert_caught(f, "declares 1 parameter")


def test_verify_catches_arg_type_mismatch():
    f = diamond()
    f.block(1).instrs[0] = Instr(3, F, ConstOp(1.0))
    assert_caught(f, "parameter")


def test_verify_catches_non_bool_condition():
    f = diamond()
    f.entry.terminator = CondGoto(1, 1, (), 2, ())  # v1 is i64
    assert_caught(f, "Bool")


def test_verify_catches_return_type_mismatch():
    f = straightline()
    f.entry.instrs.append(Instr(3, B, ConstOp(True)))
    f.entry.terminator = Ret(3)
    assert_caught(f, "return")


def test_verify_catches_unreachable_block():
    f = straightline()
    f.blocks.append(Block(1, (), [], Ret(2)))
    f.next_block = 2
    assert_caught(f, "unreachable")


def test_verify_catches_entry_with_params():
    f = straightline()
    f.blocks[0] = Block(0, ((9, I),), f.entry.instrs, f.entry.terminator)
    assert_caught(f, "entry")


def test_verify_catches_edge_into_entry():
    f = straightline()
    f.entry.terminator = Goto(0, ())
    assert_caught(f, "entry")


def test_verify_catches_missing_terminator():
    f = straightline()
    f.entry.terminator = None
    assert_caught(f, "terminator")


def test_verify_catches_const_value_kind_mismatch():
    f = straightline()
    f.entry.instrs[0] = Instr(1, I, ConstOp(True))  # bool payload, i64 type
    assert_caught(f, "const")
    f = straightline()
    f.entry.instrs[0] = Instr(1, I, ConstOp(1.0))
    assert_caught(f, "const")


def test_verify_catches_select_arm_mismatch():
    b0 = Block(0, (), [
        Instr(1, B, ConstOp(True)),
        Instr(2, F, ConstOp(1.0)),
        Instr(3, I, SelectOp(), (1, 0, 2)),  # f64 arm feeding i64 select
    ], Ret(3))
    f = SSAFunction("s", ((0, I),), I, [b0], next_value=4, next_block=1)
    assert_caught(f, "select")


def test_dominators_of_diamond():
    doms = dominators(diamond())
    assert doms[0] == {0}
    assert doms[1] == {0, 1}
    assert doms[2] == {0, 2}
    assert doms[3] == {0, 3}


def test_clone_is_independent():
    f = diamond()
    g = f.clone()
    g.block(1).instrs.clear()
    assert len(f.block(1).instrs) == 1
