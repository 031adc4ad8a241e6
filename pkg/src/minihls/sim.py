"""Cycle-accurate token-flow simulator.

Every cycle has two phases.  First, each component decides from the
start-of-cycle state whether it fires: all required input channels must
hold a token and the output channels it writes must be free.  Then all
decisions commit at once, so components never observe a token that was
produced in the same cycle.  Every channel hop therefore costs one cycle,
which is the registered view of an elastic circuit.

Operators with latency L hold accepted tokens in a little pipeline and
release them L cycles later; a Buffer behaves like a latency-1 identity
operator.  A Merge with more than one valid input is a hard error, not
an arbitration: the builder only emits merges whose inputs are mutually
exclusive, so a conflict means the circuit (or the builder) is wrong.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cdfg import (BRANCH, BUFFER, CDFG, CONST, ENTRY, EXIT, FORK, MERGE, MUX,
                   OPERATOR, SINK, SOURCE, Component, Port, require_valid)
from .errors import DeadlockError, MaxCyclesError, MergeConflictError, SimError
from .interp import eval_op

DEFAULT_MAX_CYCLES = 100_000

_ABSENT = object()


@dataclass
class SimReport:
    output: object = None
    exit_cycle: int | None = None
    total_cycles: int = 0
    max_occupancy: int = 0
    leftover: int = 0
    events: list[tuple[int, int, str]] | None = None


@dataclass
class _Pipe:
    """In-flight tokens of one operator: (value, cycles to go)."""

    capacity: int
    slots: list[list] = field(default_factory=list)


class Simulator:
    def __init__(self, g: CDFG, args: tuple, trace: bool = False):
        require_valid(g)
        self.g = g
        self.chan: dict[int, object] = {ch.id: _ABSENT for ch in g.channels}
        # per component: input/output channel ids by port index
        in_ch = {ch.dst: ch.id for ch in g.channels}
        out_ch = {ch.src: ch.id for ch in g.channels}
        self.cin: dict[int, list[int]] = {
            c.id: [in_ch[Port(c.id, i)] for i in range(len(c.in_widths))]
            for c in g.components}
        self.cout: dict[int, list[int]] = {
            c.id: [out_ch[Port(c.id, i)] for i in range(len(c.out_widths))]
            for c in g.components}
        self.pipes: dict[int, _Pipe] = {}
        self.entry_tokens: dict[int, list] = {}
        self.outputs: dict[int, object] = {}
        self.events: list[tuple[int, int, str]] | None = [] if trace else None
        self.cycle = 0
        self.max_occupancy = 0

        data_entries = [c for c in g.components
                        if c.kind == ENTRY and c.out_widths[0] != 0]
        if len(args) != len(data_entries):
            raise SimError(f"circuit has {len(data_entries)} data entries, "
                           f"got {len(args)} argument(s)")
        for c, v in zip(data_entries, args):
            self.entry_tokens[c.id] = [v]
        for c in g.components:
            if c.kind == ENTRY and c.out_widths[0] == 0:
                self.entry_tokens[c.id] = [None]
            elif c.kind == OPERATOR and c.latency > 0:
                self.pipes[c.id] = _Pipe(c.latency)
            elif c.kind == BUFFER:
                self.pipes[c.id] = _Pipe(1)

    # -- helpers ------------------------------------------------------------

    def occupancy(self) -> int:
        n = sum(1 for v in self.chan.values() if v is not _ABSENT)
        n += sum(len(p.slots) for p in self.pipes.values())
        n += sum(len(q) for q in self.entry_tokens.values())
        return n

    def _log(self, comp: int, what: str) -> None:
        if self.events is not None:
            self.events.append((self.cycle, comp, what))

    # -- one cycle ----------------------------------------------------------

    def step(self) -> bool:
        chan = self.chan
        consume: list[int] = []       # channel ids to clear
        produce: list[tuple[int, object]] = []
        pushes: list[tuple[int, object, int]] = []
        pops: list[int] = []
        fired: list[tuple[int, str]] = []

        for c in self.g.components:
            cin = self.cin[c.id]
            cout = self.cout[c.id]
            ins = [chan[i] for i in cin]
            have = [v is not _ABSENT for v in ins]

            if c.kind == ENTRY or c.kind == SOURCE:
                queue = self.entry_tokens.get(c.id)
                feed = queue if c.kind == ENTRY else [None]
                if feed and chan[cout[0]] is _ABSENT:
                    produce.append((cout[0], feed[0]))
                    if c.kind == ENTRY:
                        queue.pop(0)
                    fired.append((c.id, "emit"))
            elif c.kind == EXIT:
                if have[0]:
                    consume.append(cin[0])
                    self.outputs[c.id] = ins[0]
                    fired.append((c.id, "exit"))
            elif c.kind == SINK:
                if have[0]:
                    consume.append(cin[0])
                    fired.append((c.id, "sink"))
            elif c.kind == CONST:
                if have[0] and chan[cout[0]] is _ABSENT:
                    consume.append(cin[0])
                    produce.append((cout[0], c.value))
                    fired.append((c.id, "fire"))
            elif c.kind == FORK:
                if have[0] and all(chan[o] is _ABSENT for o in cout):
                    consume.append(cin[0])
                    for o in cout:
                        produce.append((o, ins[0]))
                    fired.append((c.id, "fire"))
            elif c.kind == BRANCH:
                if have[0] and have[1]:
                    side = 0 if ins[1] else 1
                    if chan[cout[side]] is _ABSENT:
                        consume.extend(cin)
                        produce.append((cout[side], ins[0]))
                        fired.append((c.id, "fire"))
            elif c.kind == MERGE:
                valid = [i for i, h in enumerate(have) if h]
                if len(valid) > 1:
                    raise MergeConflictError(
                        f"merge {c.id} ({c.label}) has {len(valid)} valid "
                        f"inputs in cycle {self.cycle}")
                if valid and chan[cout[0]] is _ABSENT:
                    consume.append(cin[valid[0]])
                    produce.append((cout[0], ins[valid[0]]))
                    fired.append((c.id, "fire"))
            elif c.kind == MUX:
                if have[0]:
                    side = 1 if ins[0] else 2
                    if have[side] and chan[cout[0]] is _ABSENT:
                        consume.append(cin[0])
                        consume.append(cin[side])
                        produce.append((cout[0], ins[side]))
                        fired.append((c.id, "fire"))
            elif c.kind == BUFFER:
                pipe = self.pipes[c.id]
                if (pipe.slots and pipe.slots[0][1] == 0
                        and chan[cout[0]] is _ABSENT):
                    produce.append((cout[0], pipe.slots[0][0]))
                    pops.append(c.id)
                    fired.append((c.id, "emit"))
                if have[0] and len(pipe.slots) < pipe.capacity:
                    consume.append(cin[0])
                    pushes.append((c.id, ins[0], 1))
                    fired.append((c.id, "accept"))
            elif c.kind == OPERATOR:
                if c.latency == 0:
                    if all(have) and chan[cout[0]] is _ABSENT:
                        consume.extend(cin)
                        produce.append((cout[0], eval_op(c.opcode, tuple(ins))))
                        fired.append((c.id, "fire"))
                else:
                    pipe = self.pipes[c.id]
                    if (pipe.slots and pipe.slots[0][1] == 0
                            and chan[cout[0]] is _ABSENT):
                        produce.append((cout[0], pipe.slots[0][0]))
                        pops.append(c.id)
                        fired.append((c.id, "emit"))
                    if all(have) and len(pipe.slots) < pipe.capacity:
                        consume.extend(cin)
                        pushes.append((c.id, eval_op(c.opcode, tuple(ins)),
                                       c.latency))
                        fired.append((c.id, "accept"))
            else:
                raise SimError(f"component {c.id} has unknown kind {c.kind!r}")

        # Commit.  Consumptions before productions: a channel is never
        # consumed and refilled in the same cycle because the producer saw
        # it occupied in the snapshot.
        for ch_id in consume:
            chan[ch_id] = _ABSENT
        for ch_id, value in produce:
            if chan[ch_id] is not _ABSENT:
                raise SimError(f"channel {ch_id} driven while occupied")
            chan[ch_id] = value
        for comp_id in pops:
            self.pipes[comp_id].slots.pop(0)
        for comp_id, value, latency in pushes:
            self.pipes[comp_id].slots.append([value, latency])

        advanced = False
        for pipe in self.pipes.values():
            for slot in pipe.slots:
                if slot[1] > 0:
                    slot[1] -= 1
                    advanced = True

        for comp_id, what in fired:
            self._log(comp_id, what)
        self.max_occupancy = max(self.max_occupancy, self.occupancy())
        return bool(fired) or advanced

    # -- full run -----------------------------------------------------------

    def run(self, max_cycles: int = DEFAULT_MAX_CYCLES) -> SimReport:
        exit_cycle = None
        while True:
            if self.cycle >= max_cycles:
                raise MaxCyclesError(
                    f"no quiescence after {max_cycles} cycles",
                    report=self._report(exit_cycle))
            active = self.step()
            if exit_cycle is None and self.outputs:
                exit_cycle = self.cycle
            self.cycle += 1
            if not active:
                break
        if not self.outputs:
            raise DeadlockError(
                f"deadlock in cycle {self.cycle}: no component can fire and "
                f"the exit never received a token",
                report=self._report(exit_cycle))
        return self._report(exit_cycle)

    def _report(self, exit_cycle) -> SimReport:
        out = next(iter(self.outputs.values())) if self.outputs else None
        return SimReport(output=out, exit_cycle=exit_cycle,
                         total_cycles=self.cycle,
                         max_occupancy=self.max_occupancy,
                         leftover=self.occupancy(), events=self.events)


def simulate(g: CDFG, args: tuple, max_cycles: int = DEFAULT_MAX_CYCLES,
             trace: bool = False) -> SimReport:
    return Simulator(g, args, trace=trace).run(max_cycles)
