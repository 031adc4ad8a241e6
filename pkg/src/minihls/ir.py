"""SSA intermediate representation.

A function is an ordered list of basic blocks.  Merged values are block
parameters rather than phi instructions: a terminator passes arguments to
its target's parameters, which keeps the verifier small and maps directly
onto the merge components of the elastic circuit.  Every value id is
defined exactly once (function param, block param, or instruction result)
and every use must be dominated by its definition.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import Pos
from .lattice import LatticeType, OperatorImpl

ValueId = int
BlockId = int


@dataclass(frozen=True)
class ConstOp:
    """Materialize a literal."""

    value: object  # bool, int, or float matching ty


@dataclass(frozen=True)
class SelectOp:
    """Strict select: consume cond and both arms, yield one of them."""


Op = Union[OperatorImpl, ConstOp, SelectOp]


@dataclass
class Instr:
    result: ValueId
    ty: LatticeType
    op: Op
    args: tuple[ValueId, ...] = ()
    pos: Pos = field(default=Pos(0, 0), compare=False)


@dataclass
class Goto:
    target: BlockId
    args: tuple[ValueId, ...] = ()


@dataclass
class CondGoto:
    cond: ValueId
    then_target: BlockId
    then_args: tuple[ValueId, ...]
    else_target: BlockId
    else_args: tuple[ValueId, ...]


@dataclass
class Ret:
    value: ValueId


Terminator = Union[Goto, CondGoto, Ret]


@dataclass
class Block:
    id: BlockId
    params: tuple[tuple[ValueId, LatticeType], ...]
    instrs: list[Instr]
    terminator: Terminator | None = None


@dataclass
class SSAFunction:
    name: str
    params: tuple[tuple[ValueId, LatticeType], ...]
    return_type: LatticeType
    blocks: list[Block]
    next_value: ValueId = 0
    next_block: BlockId = 0

    @property
    def entry(self) -> Block:
        return self.blocks[0]

    def block(self, bid: BlockId) -> Block:
        for b in self.blocks:
            if b.id == bid:
                return b
        raise KeyError(f"no block b{bid}")

    def fresh_value(self) -> ValueId:
        v = self.next_value
        self.next_value += 1
        return v

    def fresh_block(self) -> BlockId:
        b = self.next_block
        self.next_block += 1
        return b

    def clone(self) -> "SSAFunction":
        return copy.deepcopy(self)

    def value_types(self) -> dict[ValueId, LatticeType]:
        types = dict(self.params)
        for b in self.blocks:
            types.update(b.params)
            for ins in b.instrs:
                types[ins.result] = ins.ty
        return types


def successor_edges(term: Terminator) -> list[tuple[BlockId, tuple[ValueId, ...]]]:
    if isinstance(term, Goto):
        return [(term.target, term.args)]
    if isinstance(term, CondGoto):
        return [(term.then_target, term.then_args), (term.else_target, term.else_args)]
    return []


def predecessor_edges(func: SSAFunction) -> dict[BlockId, list[tuple[BlockId, int]]]:
    """Incoming edges per block as (pred block id, edge index within the
    pred's terminator).  A CondGoto contributes two edges and may target
    the same block twice."""
    preds: dict[BlockId, list[tuple[BlockId, int]]] = {b.id: [] for b in func.blocks}
    for b in func.blocks:
        for idx, (target, _) in enumerate(successor_edges(b.terminator)):
            preds[target].append((b.id, idx))
    return preds


def terminator_uses(term: Terminator) -> list[ValueId]:
    if isinstance(term, Goto):
        return list(term.args)
    if isinstance(term, CondGoto):
        return [term.cond, *term.then_args, *term.else_args]
    return [term.value]


def instr_uses(ins: Instr) -> list[ValueId]:
    return list(ins.args)


def reachable_blocks(func: SSAFunction) -> set[BlockId]:
    seen: set[BlockId] = set()
    stack = [func.entry.id]
    by_id = {b.id: b for b in func.blocks}
    while stack:
        bid = stack.pop()
        if bid in seen:
            continue
        seen.add(bid)
        blk = by_id.get(bid)
        if blk is not None and blk.terminator is not None:
            for target, _ in successor_edges(blk.terminator):
                if target in by_id:
                    stack.append(target)
    return seen


def dominators(func: SSAFunction) -> dict[BlockId, set[BlockId]]:
    """Iterative dominator sets; fine at the block counts this tool sees."""
    ids = [b.id for b in func.blocks]
    preds = predecessor_edges(func)
    entry = func.entry.id
    dom = {bid: set(ids) for bid in ids}
    dom[entry] = {entry}
    changed = True
    while changed:
        changed = False
        for bid in ids:
            if bid == entry:
                continue
            pred_ids = [p for p, _ in preds[bid]]
            if pred_ids:
                new = set.intersection(*(dom[p] for p in pred_ids)) | {bid}
            else:
                new = {bid}
            if new != dom[bid]:
                dom[bid] = new
                changed = True
    return dom


# ---------------------------------------------------------------------------
# Verifier
# ---------------------------------------------------------------------------


def verify(func: SSAFunction) -> list[str]:
    """Check every structural invariant; returns violations, never raises.

    Run after lowering and after every optimization pass.
    """
    violations: list[str] = []
    if not func.blocks:
        return ["function has no blocks"]

    ids = [b.id for b in func.blocks]
    if len(ids) != len(set(ids)):
        violations.append("duplicate block ids")
        return violations
    by_id = {b.id: b for b in func.blocks}

    if func.entry.params:
        violations.append("entry block must not declare parameters "
                          "(function parameters play that role)")

    # Single definition of every value.
    types: dict[ValueId, LatticeType] = {}
    def_site: dict[ValueId, tuple[BlockId, int]] = {}  # block, order index
    for vid, ty in func.params:
        if vid in types:
            violations.append(f"value v{vid} defined more than once")
        types[vid] = ty
        def_site[vid] = (func.entry.id, -1)
    for b in func.blocks:
        order = 0
        for vid, ty in b.params:
            if vid in types:
                violations.append(f"value v{vid} defined more than once")
            types[vid] = ty
            def_site[vid] = (b.id, -1)
        for ins in b.instrs:
            if ins.result in types:
                violations.append(f"value v{ins.result} defined more than once")
            types[ins.result] = ins.ty
            def_site[ins.result] = (b.id, order)
            order += 1

    # Terminators present and well-targeted.
    preds = {bid: [] for bid in ids}
    for b in func.blocks:
        if b.terminator is None:
            violations.append(f"b{b.id} has no terminator")
            continue
        for target, args in successor_edges(b.terminator):
            if target not in by_id:
                violations.append(f"b{b.id} targets unknown block b{target}")
                continue
            preds[target].append(b.id)
            tparams = by_id[target].params
            if len(args) != len(tparams):
                violations.append(
                    f"b{b.id} passes {len(args)} argument(s) to b{target} "
                    f"which declares {len(tparams)} parameter(s)")
            else:
                for arg, (pid, pty) in zip(args, tparams):
                    aty = types.get(arg)
                    if aty is not None and aty != pty:
                        violations.append(
                            f"b{b.id} passes v{arg}: {aty} to parameter "
                            f"v{pid}: {pty} of b{target}")
        if isinstance(b.terminator, CondGoto):
            cty = types.get(b.terminator.cond)
            if cty is not None and cty != LatticeType.BOOL:
                violations.append(
                    f"b{b.id} branches on v{b.terminator.cond}: {cty} (must be Bool)")
        if isinstance(b.terminator, Ret):
            rty = types.get(b.terminator.value)
            if rty is not None and rty != func.return_type:
                violations.append(
                    f"b{b.id} returns v{b.terminator.value}: {rty}, function "
                    f"declares {func.return_type}")

    if preds[func.entry.id]:
        violations.append("entry block has predecessors")

    reachable = reachable_blocks(func)
    for bid in ids:
        if bid not in reachable:
            violations.append(f"b{bid} is unreachable")

    # Operand typing.
    for b in func.blocks:
        for ins in b.instrs:
            if isinstance(ins.op, OperatorImpl):
                expect = ins.op.operand_types
                if len(ins.args) != len(expect):
                    violations.append(
                        f"v{ins.result}: {ins.op.opcode} expects {len(expect)} "
                        f"operand(s), got {len(ins.args)}")
                else:
                    for arg, ety in zip(ins.args, expect):
                        aty = types.get(arg)
                        if aty is not None and aty != ety:
                            violations.append(
                                f"v{ins.result}: operand v{arg}: {aty} does not "
                                f"match {ins.op.opcode} signature {ety}")
                if ins.ty != ins.op.result_type:
                    violations.append(
                        f"v{ins.result} typed {ins.ty} but {ins.op.opcode} "
                        f"yields {ins.op.result_type}")
            elif isinstance(ins.op, SelectOp):
                if len(ins.args) != 3:
                    violations.append(f"v{ins.result}: select takes 3 operands")
                else:
                    cty = types.get(ins.args[0])
                    if cty is not None and cty != LatticeType.BOOL:
                        violations.append(
                            f"v{ins.result}: select condition v{ins.args[0]} is "
                            f"{cty} (must be Bool)")
                    for arg in ins.args[1:]:
                        aty = types.get(arg)
                        if aty is not None and aty != ins.ty:
                            violations.append(
                                f"v{ins.result}: select arm v{arg}: {aty} does not "
                                f"match result type {ins.ty}")
            elif isinstance(ins.op, ConstOp):
                want = {LatticeType.BOOL: bool, LatticeType.INT64: int,
                        LatticeType.FLOAT64: float}.get(ins.ty)
                if want is None or type(ins.op.value) is not want:
                    violations.append(
                        f"v{ins.result}: const {ins.op.value!r} does not match {ins.ty}")
            else:
                violations.append(f"v{ins.result}: unknown op {ins.op!r}")

    # Dominance of uses.  Params carry order -1 so they precede every instr.
    dom = dominators(func)

    def check_use(vid: ValueId, use_block: BlockId, use_order: int, what: str) -> None:
        if vid not in def_site:
            violations.append(f"{what} uses undefined value v{vid}")
            return
        db, dorder = def_site[vid]
        if db == use_block:
            if dorder >= use_order:
                violations.append(f"{what} uses v{vid} before its definition")
        elif use_block in reachable and db not in dom.get(use_block, set()):
            violations.append(f"{what} uses v{vid} whose definition in b{db} "
                              f"does not dominate b{use_block}")

    for b in func.blocks:
        for order, ins in enumerate(b.instrs):
            for vid in instr_uses(ins):
                check_use(vid, b.id, order, f"b{b.id}: v{ins.result}")
        if b.terminator is not None:
            for vid in terminator_uses(b.terminator):
                check_use(vid, b.id, len(b.instrs), f"b{b.id} terminator")

    return violations


# ---------------------------------------------------------------------------
# Textual form (golden tests, --dump-ir)
# ---------------------------------------------------------------------------


def _format_const(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def _format_edge(target: BlockId, args: tuple[ValueId, ...]) -> str:
    if not args:
        return f"b{target}"
    return f"b{target}({', '.join(f'v{a}' for a in args)})"


def print_function(func: SSAFunction) -> str:
    lines = []
    params = ", ".join(f"v{vid}: {ty.short}" for vid, ty in func.params)
    lines.append(f"fn {func.name}({params}) -> {func.return_type.short}")
    for b in func.blocks:
        if b.params:
            plist = ", ".join(f"v{vid}: {ty.short}" for vid, ty in b.params)
            lines.append(f"b{b.id}({plist}):")
        else:
            lines.append(f"b{b.id}:")
        for ins in b.instrs:
            if isinstance(ins.op, ConstOp):
                rhs = f"const {_format_const(ins.op.value)}"
            elif isinstance(ins.op, SelectOp):
                rhs = f"select {', '.join(f'v{a}' for a in ins.args)}"
            else:
                rhs = f"{ins.op.opcode} {', '.join(f'v{a}' for a in ins.args)}"
            lines.append(f"  v{ins.result} = {rhs.rstrip()} : {ins.ty.short}")
        t = b.terminator
        if isinstance(t, Goto):
            lines.append(f"  goto {_format_edge(t.target, t.args)}")
        elif isinstance(t, CondGoto):
            lines.append(f"  br v{t.cond}, {_format_edge(t.then_target, t.then_args)}, "
                         f"{_format_edge(t.else_target, t.else_args)}")
        elif isinstance(t, Ret):
            lines.append(f"  ret v{t.value}")
        else:
            lines.append("  <no terminator>")
    return "\n".join(lines) + "\n"


def iter_instrs(func: SSAFunction) -> Iterator[tuple[Block, Instr]]:
    for b in func.blocks:
        for ins in b.instrs:
            yield b, ins
