"""Shared fixtures: cached corpus compiles and the standard input sweeps."""

import pytest

from minihls import corpus
from minihls.pipeline import compile_source

# Input grids used for differential checks throughout the suite.
SWEEPS = {
    "if_else": [(a, b) for a in range(-5, 6) for b in range(-5, 6)],
    "power": [(b, e) for b in range(-3, 4) for e in range(13)],
    "newton_raphson": [(x0,) for x0 in (0.5, 1.0, 2.0, 4.0)],
}

_cache = {}


def corpus_compile(name, opt=True, latencies=None):
    key = (name, opt, tuple(sorted(latencies.items())) if latencies else None)
    if key not in _cache:
        _cache[key] = compile_source(
            corpus.load(name), corpus.SIGNATURES[name],
            opt=opt, latencies=latencies)
    return _cache[key]


@pytest.fixture(params=corpus.PROGRAMS)
def program(request):
    return request.param


@pytest.fixture
def compiled():
    return corpus_compile


@pytest.fixture
def sweeps():
    return SWEEPS
