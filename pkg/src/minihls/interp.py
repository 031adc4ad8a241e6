"""Reference semantics.

`eval_op` is the single arithmetic kernel: the source-level interpreter,
the SSA interpreter, and the circuit simulator all call it, so their
results are bit-identical by construction and differential runs compare
scheduling, not arithmetic.

Int64 wraps to 64-bit two's complement on every operation.  `mod` is
truncated toward zero and traps on a zero divisor.  Float64 is IEEE
double (Python's float); division by zero is mapped to signed
infinity/nan by hand because Python raises where hardware would not.

The source-level interpreter dispatches on runtime values, independent of
static inference, which makes it an oracle for the type checker as well:
on a type-stable program both must pick the same implementations.
"""

from __future__ import annotations

import math

from . import source as src
from .errors import DivByZeroError, EvalError, FuelExhaustedError, Pos
from .ir import ConstOp, Goto, Instr, Ret, SelectOp, SSAFunction
from .lattice import LatticeType, OperatorImpl, dispatch

DEFAULT_FUEL = 1_000_000

_U64 = 1 << 64
_I64_MAX = (1 << 63) - 1

Value = object  # bool, int in [-2^63, 2^63), or float


def wrap64(n: int) -> int:
    n &= _U64 - 1
    return n - _U64 if n > _I64_MAX else n


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _fdiv(a: float, b: float) -> float:
    if b != 0.0:
        return a / b
    if math.isnan(a) or a == 0.0:
        return math.nan
    return math.copysign(math.inf, a) * math.copysign(1.0, b)


def eval_op(opcode: str, args: tuple, pos: Pos = Pos(0, 0)) -> Value:
    a = args[0]
    b = args[1] if len(args) > 1 else None
    if opcode == "add_i64":
        return wrap64(a + b)
    if opcode == "sub_i64":
        return wrap64(a - b)
    if opcode == "mul_i64":
        return wrap64(a * b)
    if opcode == "mod_i64":
        if b == 0:
            raise DivByZeroError("integer mod by zero", pos)
        return wrap64(a - b * _trunc_div(a, b))
    if opcode == "neg_i64":
        return wrap64(-a)
    if opcode == "fadd_f64":
        return a + b
    if opcode == "fsub_f64":
        return a - b
    if opcode == "fmul_f64":
        return a * b
    if opcode == "fdiv_f64":
        return _fdiv(a, b)
    if opcode == "fneg_f64":
        return -a
    if opcode in ("cmp_lt_i64", "fcmp_lt_f64"):
        return a < b
    if opcode in ("cmp_le_i64", "fcmp_le_f64"):
        return a <= b
    if opcode in ("cmp_gt_i64", "fcmp_gt_f64"):
        return a > b
    if opcode in ("cmp_ge_i64", "fcmp_ge_f64"):
        return a >= b
    if opcode in ("cmp_eq_i64", "fcmp_eq_f64"):
        return a == b
    if opcode in ("cmp_ne_i64", "fcmp_ne_f64"):
        return a != b
    if opcode == "and_i1":
        return a and b
    if opcode == "or_i1":
        return a or b
    if opcode == "not_i1":
        return not a
    if opcode == "sitofp":
        return float(a)
    if opcode in ("select_i1", "select_i64", "select_f64"):
        return args[1] if args[0] else args[2]
    raise EvalError(f"unknown opcode {opcode!r}", pos)


def type_of_value(v: Value) -> LatticeType:
    if isinstance(v, bool):  # before int: bool is an int subclass
        return LatticeType.BOOL
    if isinstance(v, int):
        return LatticeType.INT64
    if isinstance(v, float):
        return LatticeType.FLOAT64
    raise EvalError(f"value {v!r} has no hardware type")


def coerce_args(sig: tuple[LatticeType, ...], raw: tuple) -> tuple:
    """Check and normalize entry arguments against a signature."""
    if len(sig) != len(raw):
        raise EvalError(f"expected {len(sig)} argument(s), got {len(raw)}")
    out = []
    for i, (ty, v) in enumerate(zip(sig, raw)):
        if ty == LatticeType.FLOAT64 and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        if type_of_value(v) != ty:
            raise EvalError(
                f"argument {i} must be {ty}, got {type_of_value(v).__class__.__name__}"
                f" {v!r}")
        if ty == LatticeType.INT64:
            v = wrap64(v)
        out.append(v)
    return tuple(out)


# ---------------------------------------------------------------------------
# Source-level interpreter (dynamic dispatch)
# ---------------------------------------------------------------------------


class _Fuel:
    def __init__(self, amount: int):
        self.left = amount

    def burn(self, pos: Pos) -> None:
        self.left -= 1
        if self.left < 0:
            raise FuelExhaustedError("evaluation fuel exhausted", pos)


_RETURN = object()  # sentinel key for the return slot


def run_source(func: src.FunctionDef, args: tuple,
               fuel: int = DEFAULT_FUEL) -> Value:
    if len(args) != len(func.params):
        raise EvalError(
            f"{func.name} takes {len(func.params)} argument(s), got {len(args)}",
            func.pos)
    env: dict = {p.name: v for p, v in zip(func.params, args)}
    gas = _Fuel(fuel)
    result = _exec_stmts(func.body, env, gas)
    if result is _RETURN:
        raise EvalError(f"{func.name} fell off the end", func.pos)
    return result


def _eval_expr(e: src.Expr, env: dict, gas: _Fuel) -> Value:
    gas.burn(e.pos)
    if isinstance(e, (src.IntLit, src.FloatLit, src.BoolLit)):
        return e.value
    if isinstance(e, src.Var):
        if e.name not in env:
            raise EvalError(f"undefined variable {e.name!r}", e.pos)
        return env[e.name]
    if isinstance(e, src.Unary):
        v = _eval_expr(e.operand, env, gas)
        return _apply(e.op, (v,), e.pos)
    if isinstance(e, src.Binary):
        left = _eval_expr(e.left, env, gas)
        right = _eval_expr(e.right, env, gas)  # && and || are strict
        return _apply(e.op, (left, right), e.pos)
    raise EvalError(f"unknown expression node {e!r}", e.pos)


def _apply(symbol: str, operands: tuple, pos: Pos) -> Value:
    d = dispatch(symbol, tuple(type_of_value(v) for v in operands), pos)
    converted = tuple(
        v if conv is None else eval_op(conv.opcode, (v,), pos)
        for v, conv in zip(operands, d.conversions))
    return eval_op(d.impl.opcode, converted, pos)


def _exec_stmts(stmts, env: dict, gas: _Fuel):
    """Returns the function result, or _RETURN if control falls through."""
    for s in stmts:
        gas.burn(s.pos)
        if isinstance(s, src.Assign):
            env[s.target] = _eval_expr(s.value, env, gas)
        elif isinstance(s, src.Return):
            return _eval_expr(s.value, env, gas)
        elif isinstance(s, src.If):
            r = _exec_if(s, env, gas)
            if r is not _RETURN:
                return r
        elif isinstance(s, src.While):
            while _truth(s.cond, env, gas):
                r = _exec_stmts(s.body, env, gas)
                if r is not _RETURN:
                    return r
        else:
            raise EvalError(f"unknown statement node {s!r}", s.pos)
    return _RETURN


def _truth(cond: src.Expr, env: dict, gas: _Fuel) -> bool:
    v = _eval_expr(cond, env, gas)
    if not isinstance(v, bool):
        raise EvalError(f"condition evaluated to non-Bool {v!r}", cond.pos)
    return v


def _exec_if(s: src.If, env: dict, gas: _Fuel):
    if _truth(s.cond, env, gas):
        return _exec_stmts(s.then, env, gas)
    for cond, body in s.elifs:
        if _truth(cond, env, gas):
            return _exec_stmts(body, env, gas)
    if s.orelse is not None:
        return _exec_stmts(s.orelse, env, gas)
    return _RETURN


# ---------------------------------------------------------------------------
# SSA interpreter
# ---------------------------------------------------------------------------


def _apply_instr(ins: Instr, env: dict) -> Value:
    if isinstance(ins.op, ConstOp):
        return ins.op.value
    args = tuple(env[a] for a in ins.args)
    if isinstance(ins.op, SelectOp):
        return args[1] if args[0] else args[2]
    if isinstance(ins.op, OperatorImpl):
        return eval_op(ins.op.opcode, args, ins.pos)
    raise EvalError(f"unknown instruction op {ins.op!r}", ins.pos)


def run_ssa(func: SSAFunction, args: tuple, fuel: int = DEFAULT_FUEL) -> Value:
    if len(args) != len(func.params):
        raise EvalError(
            f"{func.name} takes {len(func.params)} argument(s), got {len(args)}")
    env: dict = {vid: v for (vid, _), v in zip(func.params, args)}
    gas = _Fuel(fuel)
    block = func.entry
    by_id = {b.id: b for b in func.blocks}
    while True:
        for ins in block.instrs:
            gas.burn(ins.pos)
            env[ins.result] = _apply_instr(ins, env)
        t = block.terminator
        gas.burn(Pos(0, 0))
        if isinstance(t, Ret):
            return env[t.value]
        if isinstance(t, Goto):
            target, edge_args = t.target, t.args
        else:
            if env[t.cond]:
                target, edge_args = t.then_target, t.then_args
            else:
                target, edge_args = t.else_target, t.else_args
        nxt = by_id[target]
        env.update({pid: env[a] for (pid, _), a in zip(nxt.params, edge_args)})
        block = nxt
