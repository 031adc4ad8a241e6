"""End-to-end compilation driver.

Gathers the stages (parse, infer, lower, optimize, build, buffer) into a
single call and carries every intermediate result, which is what the
command line and the test suite both want: each stage's artifact stays
inspectable.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import source as src
from .build import build_cdfg, resolve_latencies
from .cdfg import CDFG, insert_buffers, require_valid
from .errors import CliError
from .interp import coerce_args
from .ir import SSAFunction, verify
from .lattice import ANNOTATION_TO_TYPE, LatticeType
from .lower import lower
from .passes import PassError, optimize
from .typecheck import TypedFunction, infer


@dataclass
class CompileResult:
    program: src.SourceProgram
    func: src.FunctionDef
    sig: tuple[LatticeType, ...]
    typed: TypedFunction
    ssa_unopt: SSAFunction
    ssa: SSAFunction
    cdfg: CDFG
    n_buffers: int


SIG_NAMES = {"i64": LatticeType.INT64, "f64": LatticeType.FLOAT64,
             "i1": LatticeType.BOOL, "bool": LatticeType.BOOL,
             "int64": LatticeType.INT64, "float64": LatticeType.FLOAT64}


def parse_sig(text: str) -> tuple[LatticeType, ...]:
    """Comma-separated signature, e.g. 'i64,i64' or 'f64'."""
    text = text.strip()
    if not text:
        return ()
    out = []
    for part in text.split(","):
        key = part.strip().lower()
        if key not in SIG_NAMES:
            raise CliError(f"unknown signature type {part.strip()!r} "
                           f"(use i64, f64, or bool)")
        out.append(SIG_NAMES[key])
    return tuple(out)


def infer_sig(func: src.FunctionDef) -> tuple[LatticeType, ...]:
    """Signature from parameter annotations; every parameter must carry one."""
    types = []
    for p in func.params:
        if p.annotation is None:
            raise CliError(
                f"parameter {p.name!r} of {func.name!r} has no type annotation; "
                f"pass --sig to supply the entry signature")
        types.append(ANNOTATION_TO_TYPE[p.annotation])
    return tuple(types)


def compile_source(text: str, sig: tuple[LatticeType, ...] | None = None,
                   function: str | None = None, strict: bool = True,
                   opt: bool = True,
                   latencies: dict[str, int] | None = None) -> CompileResult:
    program = src.parse_source(text)
    func = (program.function(function) if function is not None
            else program.functions[0])
    if sig is None:
        sig = infer_sig(func)
    typed = infer(func, sig, strict=strict)
    ssa_unopt = lower(typed)
    violations = verify(ssa_unopt)
    if violations:
        raise PassError("lowering produced invalid IR: " + "; ".join(violations))
    ssa = optimize(ssa_unopt) if opt else ssa_unopt
    cdfg = build_cdfg(ssa, resolve_latencies(latencies))
    n_buffers = insert_buffers(cdfg)
    require_valid(cdfg)
    return CompileResult(program, func, sig, typed, ssa_unopt, ssa,
                         cdfg, n_buffers)


def parse_args_for(result: CompileResult, raw: list[str]) -> tuple:
    """Parse CLI argument strings against the compiled signature."""
    if len(raw) != len(result.sig):
        raise CliError(f"{result.func.name} expects {len(result.sig)} "
                       f"argument(s), got {len(raw)}")
    values = []
    for text, ty in zip(raw, result.sig):
        try:
            if ty == LatticeType.BOOL:
                if text not in ("true", "false"):
                    raise ValueError(text)
                values.append(text == "true")
            elif ty == LatticeType.INT64:
                values.append(int(text, 0))
            else:
                values.append(float(text))
        except ValueError:
            raise CliError(f"cannot parse {text!r} as {ty}") from None
    return coerce_args(result.sig, tuple(values))
