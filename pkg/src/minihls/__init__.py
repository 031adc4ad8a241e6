"""minihls: a miniature high-level synthesis flow.

Compiles a small Julia-flavoured imperative language into a dynamically
scheduled elastic dataflow circuit, with a token-flow simulator and a
reference interpreter for differential testing, and a VHDL netlist
emitter at the back.
"""

__version__ = "0.1.0"
