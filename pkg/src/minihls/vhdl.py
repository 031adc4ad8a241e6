"""VHDL netlist emission and a lint pass over its own conventions.

The emitter produces three artifacts: a component library with one
specialized entity per (kind, width, arity, latency) combination that the
circuit actually uses, a structural top-level that instantiates every
component and wires the channels, and a manifest describing both.

Conventions (the lint checks the emitted text against exactly these):
* every entity takes clk and rst, and every instance connects them
* channel k becomes signals ch_<k>_valid / ch_<k>_ready, plus ch_<k>_data
  when the width is nonzero; width-0 control channels carry no data
* component i of kind K is instantiated as cmp_<i>_<k> with a full,
  named port map

Output is deterministic: identical circuits emit byte-identical files.
"""

from __future__ import annotations

import json
import re
import struct

from .cdfg import (BRANCH, BUFFER, CDFG, CONST, ENTRY, EXIT, FORK, MERGE, MUX,
                   OPERATOR, SINK, SOURCE, Component, Port, component_stats)
from .errors import EmitError

_HEADER = """library ieee;
use ieee.std_logic_1164.all;
use ieee.numeric_std.all;
use ieee.float_pkg.all;
"""


def _slv(width: int) -> str:
    return f"std_logic_vector({width - 1} downto 0)"


def entity_name(c: Component) -> str:
    if c.kind == ENTRY:
        return f"entry_w{c.out_widths[0]}"
    if c.kind == EXIT:
        return f"exit_w{c.in_widths[0]}"
    if c.kind == CONST:
        return f"const_w{c.out_widths[0]}"
    if c.kind == OPERATOR:
        return f"op_{c.opcode}_l{c.latency}"
    if c.kind == FORK:
        return f"fork_w{c.in_widths[0]}_n{len(c.out_widths)}"
    if c.kind == BRANCH:
        return f"branch_w{c.in_widths[0]}"
    if c.kind == MERGE:
        return f"merge_w{c.out_widths[0]}_n{len(c.in_widths)}"
    if c.kind == MUX:
        return f"mux_w{c.out_widths[0]}_n{len(c.in_widths) - 1}"
    if c.kind == BUFFER:
        return f"buffer_w{c.in_widths[0]}"
    if c.kind == SOURCE:
        return f"source_w{c.out_widths[0]}"
    if c.kind == SINK:
        return f"sink_w{c.in_widths[0]}"
    raise EmitError(f"cannot name an entity for kind {c.kind!r}")


def _entity_ports(c: Component) -> list[tuple[str, str, int]]:
    """(name, direction, width) with width 0 meaning std_logic."""
    ports = [("clk", "in", 0), ("rst", "in", 0)]
    ins = list(c.in_widths)
    outs = list(c.out_widths)
    # Entry and Exit are pass-throughs: the side the model does not show
    # faces the top-level pins.
    if c.kind == ENTRY:
        ins = [c.out_widths[0]]
    if c.kind == EXIT:
        outs = [c.in_widths[0]]
    for i, w in enumerate(ins):
        if w:
            ports.append((f"in{i}_data", "in", w))
        ports.append((f"in{i}_valid", "in", 0))
        ports.append((f"in{i}_ready", "out", 0))
    for i, w in enumerate(outs):
        if w:
            ports.append((f"out{i}_data", "out", w))
        ports.append((f"out{i}_valid", "out", 0))
        ports.append((f"out{i}_ready", "in", 0))
    return ports


# ---------------------------------------------------------------------------
# Architectures
# ---------------------------------------------------------------------------


_INT_EXPR = {
    "add_i64": "std_logic_vector(signed(in0_data) + signed(in1_data))",
    "sub_i64": "std_logic_vector(signed(in0_data) - signed(in1_data))",
    "mul_i64": "std_logic_vector(resize(signed(in0_data) * signed(in1_data), 64))",
    "mod_i64": "std_logic_vector(signed(in0_data) rem signed(in1_data))",
    "neg_i64": "std_logic_vector(-signed(in0_data))",
    "fadd_f64": "to_slv(to_float64(in0_data) + to_float64(in1_data))",
    "fsub_f64": "to_slv(to_float64(in0_data) - to_float64(in1_data))",
    "fmul_f64": "to_slv(to_float64(in0_data) * to_float64(in1_data))",
    "fdiv_f64": "to_slv(to_float64(in0_data) / to_float64(in1_data))",
    "fneg_f64": "to_slv(-to_float64(in0_data))",
    "sitofp": "to_slv(to_float(signed(in0_data), 11, 52))",
    "select_i1": "in1_data when in0_data(0) = '1' else in2_data",
    "select_i64": "in1_data when in0_data(0) = '1' else in2_data",
    "select_f64": "in1_data when in0_data(0) = '1' else in2_data",
}

_CMP_EXPR = {
    "cmp_lt_i64": "signed(in0_data) < signed(in1_data)",
    "cmp_le_i64": "signed(in0_data) <= signed(in1_data)",
    "cmp_gt_i64": "signed(in0_data) > signed(in1_data)",
    "cmp_ge_i64": "signed(in0_data) >= signed(in1_data)",
    "cmp_eq_i64": "signed(in0_data) = signed(in1_data)",
    "cmp_ne_i64": "signed(in0_data) /= signed(in1_data)",
    "fcmp_lt_f64": "to_float64(in0_data) < to_float64(in1_data)",
    "fcmp_le_f64": "to_float64(in0_data) <= to_float64(in1_data)",
    "fcmp_gt_f64": "to_float64(in0_data) > to_float64(in1_data)",
    "fcmp_ge_f64": "to_float64(in0_data) >= to_float64(in1_data)",
    "fcmp_eq_f64": "to_float64(in0_data) = to_float64(in1_data)",
    "fcmp_ne_f64": "to_float64(in0_data) /= to_float64(in1_data)",
    "and_i1": "(in0_data(0) and in1_data(0)) = '1'",
    "or_i1": "(in0_data(0) or in1_data(0)) = '1'",
    "not_i1": "in0_data(0) = '0'",
}


def _result_lines(c: Component) -> list[str]:
    if c.opcode in _INT_EXPR:
        return [f"  result <= {_INT_EXPR[c.opcode]};"]
    if c.opcode in _CMP_EXPR:
        return [f"  result(0) <= '1' when {_CMP_EXPR[c.opcode]} else '0';"]
    raise EmitError(f"no VHDL template for opcode {c.opcode!r}")


def _arch_operator(c: Component) -> list[str]:
    n = len(c.in_widths)
    valids = " and ".join(f"in{i}_valid" for i in range(n))
    decls = [f"  signal result : {_slv(c.out_widths[0])};"]
    body = _result_lines(c)
    if c.latency == 0:
        decls.append("  signal fire : std_logic;")
        body += [f"  fire <= {valids} and out0_ready;"]
        body += [f"  in{i}_ready <= fire;" for i in range(n)]
        body += [f"  out0_valid <= {valids};",
                 "  out0_data <= result;"]
        return decls + ["begin"] + body
    depth = c.latency
    decls += [
        f"  type pipe_t is array (0 to {depth - 1}) of {_slv(c.out_widths[0])};",
        "  signal data_pipe : pipe_t;",
        f"  signal valid_pipe : std_logic_vector(0 to {depth - 1});",
        "  signal accept : std_logic;",
        "  signal advance : std_logic;",
    ]
    body += [
        f"  accept <= {valids} and advance;",
        f"  advance <= out0_ready or not valid_pipe({depth - 1});",
    ]
    body += [f"  in{i}_ready <= accept;" for i in range(n)]
    body += [
        f"  out0_valid <= valid_pipe({depth - 1});",
        f"  out0_data <= data_pipe({depth - 1});",
        "  process (clk)",
        "  begin",
        "    if rising_edge(clk) then",
        "      if rst = '1' then",
        "        valid_pipe <= (others => '0');",
        "      elsif advance = '1' then",
        "        data_pipe(0) <= result;",
        "        valid_pipe(0) <= accept;",
    ]
    for i in range(1, depth):
        body += [f"        data_pipe({i}) <= data_pipe({i - 1});",
                 f"        valid_pipe({i}) <= valid_pipe({i - 1});"]
    body += [
        "      end if;",
        "    end if;",
        "  end process;",
    ]
    return decls + ["begin"] + body


def _arch_simple(c: Component) -> list[str]:
    w_in = c.in_widths[0] if c.in_widths else 0
    w_out = c.out_widths[0] if c.out_widths else 0
    if c.kind in (ENTRY, EXIT):
        w = w_out if c.kind == ENTRY else w_in
        lines = ["begin",
                 "  out0_valid <= in0_valid;",
                 "  in0_ready <= out0_ready;"]
        if w:
            lines.append("  out0_data <= in0_data;")
        return lines
    if c.kind == SINK:
        return ["begin", "  in0_ready <= '1';"]
    if c.kind == SOURCE:
        lines = ["begin", "  out0_valid <= '1';"]
        if w_out:
            lines.append("  out0_data <= (others => '0');")
        return lines
    if c.kind == CONST:
        lines = ["begin",
                 "  out0_valid <= in0_valid;",
                 "  in0_ready <= out0_ready;",
                 "  out0_data <= g_value;"]
        return lines
    if c.kind == FORK:
        n = len(c.out_widths)
        ready = " and ".join(f"out{i}_ready" for i in range(n))
        lines = ["  signal all_ready : std_logic;", "begin",
                 f"  all_ready <= {ready};",
                 "  in0_ready <= all_ready;"]
        for i in range(n):
            lines.append(f"  out{i}_valid <= in0_valid;")
            if w_in:
                lines.append(f"  out{i}_data <= in0_data;")
        return lines
    if c.kind == BRANCH:
        lines = ["  signal taken : std_logic;", "begin",
                 "  taken <= in0_valid and in1_valid;",
                 "  out0_valid <= taken and in1_data(0);",
                 "  out1_valid <= taken and not in1_data(0);",
                 "  in0_ready <= taken and "
                 "((in1_data(0) and out0_ready) or (not in1_data(0) and out1_ready));",
                 "  in1_ready <= taken and "
                 "((in1_data(0) and out0_ready) or (not in1_data(0) and out1_ready));"]
        if w_in:
            lines += ["  out0_data <= in0_data;", "  out1_data <= in0_data;"]
        return lines
    if c.kind == MERGE:
        n = len(c.in_widths)
        valids = " or ".join(f"in{i}_valid" for i in range(n))
        lines = ["begin", f"  out0_valid <= {valids};"]
        # inputs are mutually exclusive by construction, so per-input
        # ready needs no arbitration
        for i in range(n):
            lines.append(f"  in{i}_ready <= in{i}_valid and out0_ready;")
        if w_out:
            expr = f"in{n - 1}_data"
            for i in range(n - 2, -1, -1):
                expr = f"in{i}_data when in{i}_valid = '1' else " + expr
            lines.append(f"  out0_data <= {expr};")
        return lines
    if c.kind == MUX:
        n = len(c.in_widths) - 1
        lines = ["  signal pick : std_logic;", "begin",
                 "  pick <= in0_data(0);"]
        sel_valid = ("(pick = '1' and in1_valid = '1') or "
                     "(pick = '0' and in2_valid = '1')")
        lines += [
            f"  out0_valid <= in0_valid when {sel_valid} else '0';",
            "  in0_ready <= out0_valid and out0_ready;",
            "  in1_ready <= in0_valid and pick and out0_ready;",
            "  in2_ready <= in0_valid and not pick and out0_ready;",
            "  out0_data <= in1_data when pick = '1' else in2_data;",
        ]
        del n
        return lines
    if c.kind == BUFFER:
        lines = ["  signal full : std_logic;"]
        if w_in:
            lines.append(f"  signal data_reg : {_slv(w_in)};")
        lines += ["begin",
                  "  in0_ready <= not full;",
                  "  out0_valid <= full;"]
        if w_in:
            lines.append("  out0_data <= data_reg;")
        lines += [
            "  process (clk)",
            "  begin",
            "    if rising_edge(clk) then",
            "      if rst = '1' then",
            "        full <= '0';",
            "      elsif full = '0' and in0_valid = '1' then",
            "        full <= '1';"]
        if w_in:
            lines.append("        data_reg <= in0_data;")
        lines += [
            "      elsif full = '1' and out0_ready = '1' then",
            "        full <= '0';",
            "      end if;",
            "    end if;",
            "  end process;"]
        return lines
    raise EmitError(f"no architecture template for kind {c.kind!r}")


def _format_entity(c: Component) -> str:
    name = entity_name(c)
    lines = [f"entity {name} is"]
    if c.kind == CONST:
        lines += ["  generic (",
                  f"    g_value : {_slv(c.out_widths[0])}",
                  "  );"]
    lines.append("  port (")
    plines = []
    for pname, direction, width in _entity_ports(c):
        ptype = _slv(width) if width else "std_logic"
        plines.append(f"    {pname} : {direction} {ptype}")
    lines.append(";\n".join(plines))
    lines += ["  );", "end entity;", ""]
    lines.append(f"architecture behav of {name} is")
    if c.kind == OPERATOR:
        lines += _arch_operator(c)
    else:
        lines += _arch_simple(c)
    lines += ["end architecture;"]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Top level
# ---------------------------------------------------------------------------


def _const_bits(c: Component) -> str:
    w = c.out_widths[0]
    v = c.value
    if w == 1:
        return '"1"' if v else '"0"'
    if isinstance(v, bool):
        raise EmitError("bool constant with width > 1")
    if isinstance(v, int):
        return f'x"{v & ((1 << 64) - 1):016x}"'
    if isinstance(v, float):
        return f'x"{struct.unpack(">Q", struct.pack(">d", v))[0]:016x}"'
    raise EmitError(f"cannot encode constant {v!r}")


def _top_ports(g: CDFG) -> tuple[list[tuple[str, str, int]], dict[Port, str]]:
    """Top-level pins plus the mapping from entry/exit model ports to
    pin name prefixes."""
    ports = [("clk", "in", 0), ("rst", "in", 0)]
    pin_of: dict[Port, str] = {}
    arg_idx = 0
    for c in g.components:
        if c.kind == ENTRY:
            w = c.out_widths[0]
            if w:
                pin = f"arg{arg_idx}"
                arg_idx += 1
                ports.append((f"{pin}_data", "in", w))
            else:
                pin = "start"
            ports.append((f"{pin}_valid", "in", 0))
            ports.append((f"{pin}_ready", "out", 0))
            pin_of[Port(c.id, -1)] = pin
        elif c.kind == EXIT:
            w = c.in_widths[0]
            pin = "result"
            if w:
                ports.append((f"{pin}_data", "out", w))
            ports.append((f"{pin}_valid", "out", 0))
            ports.append((f"{pin}_ready", "in", 0))
            pin_of[Port(c.id, -1)] = pin
    return ports, pin_of


def _top_text(g: CDFG, top_name: str) -> str:
    ports, pin_of = _top_ports(g)
    lines = [_HEADER, f"entity {top_name} is", "  port ("]
    plines = [f"    {n} : {d} {_slv(w) if w else 'std_logic'}"
              for n, d, w in ports]
    lines.append(";\n".join(plines))
    lines += ["  );", "end entity;", "",
              f"architecture structural of {top_name} is"]
    for ch in g.channels:
        if ch.width:
            lines.append(f"  signal ch_{ch.id}_data : {_slv(ch.width)};")
        lines.append(f"  signal ch_{ch.id}_valid : std_logic;")
        lines.append(f"  signal ch_{ch.id}_ready : std_logic;")
    lines.append("begin")

    in_ch = {ch.dst: ch for ch in g.channels}
    out_ch = {ch.src: ch for ch in g.channels}
    for c in g.components:
        label = f"cmp_{c.id}_{c.kind.lower()}"
        lines.append(f"  {label} : entity work.{entity_name(c)}")
        if c.kind == CONST:
            lines += ["    generic map (",
                      f"      g_value => {_const_bits(c)}",
                      "    )"]
        maps = ["clk => clk", "rst => rst"]

        def channel_map(prefix: str, ch) -> None:
            if ch.width:
                maps.append(f"{prefix}_data => ch_{ch.id}_data")
            maps.append(f"{prefix}_valid => ch_{ch.id}_valid")
            maps.append(f"{prefix}_ready => ch_{ch.id}_ready")

        def pin_map(prefix: str, pin: str, width: int) -> None:
            if width:
                maps.append(f"{prefix}_data => {pin}_data")
            maps.append(f"{prefix}_valid => {pin}_valid")
            maps.append(f"{prefix}_ready => {pin}_ready")

        if c.kind == ENTRY:
            pin_map("in0", pin_of[Port(c.id, -1)], c.out_widths[0])
            channel_map("out0", out_ch[Port(c.id, 0)])
        elif c.kind == EXIT:
            channel_map("in0", in_ch[Port(c.id, 0)])
            pin_map("out0", pin_of[Port(c.id, -1)], c.in_widths[0])
        else:
            for i in range(len(c.in_widths)):
                channel_map(f"in{i}", in_ch[Port(c.id, i)])
            for i in range(len(c.out_widths)):
                channel_map(f"out{i}", out_ch[Port(c.id, i)])
        lines.append("    port map (")
        lines.append(",\n".join(f"      {m}" for m in maps))
        lines += ["    );"]
    lines += ["end architecture;"]
    return "\n".join(lines) + "\n"


def emit_vhdl(g: CDFG) -> dict[str, str]:
    """Returns {filename: content}; writing them is the caller's job."""
    entities: dict[str, str] = {}
    for c in g.components:
        name = entity_name(c)
        if name not in entities:
            entities[name] = _format_entity(c)
    lib = _HEADER + "\n" + "\n\n".join(
        entities[name] for name in sorted(entities)) + "\n"
    top_name = f"{g.name}_top"
    top = _top_text(g, top_name)
    lib_file = "minihls_components.vhd"
    top_file = f"{g.name}_top.vhd"
    manifest = json.dumps({
        "top": top_name,
        "files": [lib_file, top_file],
        "entities": sorted(entities),
        "components": component_stats(g),
        "channels": len(g.channels),
    }, indent=2, sort_keys=True) + "\n"
    return {lib_file: lib, top_file: top, "manifest.json": manifest}


# ---------------------------------------------------------------------------
# Lint
# ---------------------------------------------------------------------------


_ENTITY_RE = re.compile(
    r"entity (\w+) is\n(?:  generic \(\n.*?\n  \);\n)?  port \(\n(.*?)\n  \);\n"
    r"end entity;", re.DOTALL)
_PORT_RE = re.compile(r"^\s*(\w+) : (in|out) ")
_SIGNAL_RE = re.compile(r"^  signal (\w+) : ", re.MULTILINE)
_INSTANCE_RE = re.compile(
    r"^  (\w+) : entity work\.(\w+)\n(?:    generic map \(\n.*?\n    \)\n)?"
    r"    port map \(\n(.*?)\n    \);", re.DOTALL | re.MULTILINE)
_MAP_RE = re.compile(r"^\s*(\w+) => (\w+),?$")


def lint_netlist(files: dict[str, str]) -> list[str]:
    """Check the emitted netlist against the emitter's own conventions."""
    bad: list[str] = []
    entities: dict[str, dict[str, str]] = {}  # name -> port -> direction
    for text in files.values():
        if not text.endswith("\n") or "\r" in text:
            bad.append("file must use bare LF endings and end with a newline")
        for m in _ENTITY_RE.finditer(text):
            name, ports_text = m.group(1), m.group(2)
            ports = {}
            for line in ports_text.split(";\n"):
                pm = _PORT_RE.match(line)
                if pm is None:
                    bad.append(f"entity {name}: unparsable port line {line.strip()!r}")
                    continue
                ports[pm.group(1)] = pm.group(2)
            entities[name] = ports

    top_files = [t for n, t in sorted(files.items())
                 if n.endswith(".vhd") and "architecture structural" in t]
    if len(top_files) != 1:
        bad.append(f"expected exactly 1 structural top file, found {len(top_files)}")
        return bad
    top = top_files[0]

    top_m = _ENTITY_RE.search(top)
    top_ports: dict[str, str] = {}
    if top_m is None:
        bad.append("top entity declaration not found")
    else:
        for line in top_m.group(2).split(";\n"):
            pm = _PORT_RE.match(line)
            if pm:
                top_ports[pm.group(1)] = pm.group(2)

    signals = set(_SIGNAL_RE.findall(top))
    drivers: dict[str, int] = {s: 0 for s in signals}
    readers: dict[str, int] = {s: 0 for s in signals}
    # a top-level input pin drives a net; an output pin reads one
    for pname, direction in top_ports.items():
        drivers.setdefault(pname, 0)
        readers.setdefault(pname, 0)
        if direction == "in":
            drivers[pname] += 1
        else:
            readers[pname] += 1

    n_instances = 0
    for m in _INSTANCE_RE.finditer(top):
        label, ename, maps_text = m.group(1), m.group(2), m.group(3)
        n_instances += 1
        if ename not in entities:
            bad.append(f"instance {label}: entity {ename} is not defined")
            continue
        ports = entities[ename]
        seen = {}
        for line in maps_text.split("\n"):
            mm = _MAP_RE.match(line)
            if mm is None:
                bad.append(f"instance {label}: unparsable map line {line.strip()!r}")
                continue
            formal, actual = mm.group(1), mm.group(2)
            if formal not in ports:
                bad.append(f"instance {label}: {ename} has no port {formal}")
                continue
            seen[formal] = actual
            if actual not in drivers:
                bad.append(f"instance {label}: actual {actual} is not a "
                           f"declared signal or top-level port")
                continue
            if ports[formal] == "out":
                drivers[actual] += 1
            else:
                readers[actual] += 1
        missing = set(ports) - set(seen)
        if missing:
            bad.append(f"instance {label}: unmapped ports "
                       + ", ".join(sorted(missing)))
        for pin in ("clk", "rst"):
            if seen.get(pin) != pin:
                bad.append(f"instance {label}: {pin} must be mapped to {pin}")

    for net in sorted(drivers):
        if net in ("clk", "rst"):
            continue
        if drivers[net] != 1:
            bad.append(f"net {net}: has {drivers[net]} drivers, must be 1")
        if readers.get(net, 0) < 1:
            bad.append(f"net {net}: is never read")
    return bad


def instance_count(files: dict[str, str]) -> int:
    tops = [t for t in files.values() if "architecture structural" in t]
    return sum(len(_INSTANCE_RE.findall(t)) for t in tops)
