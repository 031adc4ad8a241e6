"""Bundled example programs with their entry signatures."""

from __future__ import annotations

from importlib import resources

from ..lattice import LatticeType

PROGRAMS = ("if_else", "power", "newton_raphson")

SIGNATURES: dict[str, tuple[LatticeType, ...]] = {
    "if_else": (LatticeType.INT64, LatticeType.INT64),
    "power": (LatticeType.INT64, LatticeType.INT64),
    "newton_raphson": (LatticeType.FLOAT64,),
}


def load(name: str) -> str:
    if name not in PROGRAMS:
        raise KeyError(f"unknown corpus program {name!r}")
    return (resources.files(__package__) / f"{name}.mjl").read_text()
