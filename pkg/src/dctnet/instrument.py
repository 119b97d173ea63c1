"""Lightweight global counters for code-path instrumentation.

Two users: the no-IDCT guarantee of the partial decoder (`idct_blocks` must
stay zero across a decode) and the counter/engine agreement check of the
complexity analyzer (`conv_macs` / `linear_macs` accumulated by the actual
kernels are compared against the analytic counts).
"""

from contextlib import contextmanager

counters = {
    "idct_blocks": 0,
    "conv_macs": 0,
    "linear_macs": 0,
}

_mac_counting = False


def bump(name, amount=1):
    counters[name] = counters[name] + amount


def bump_macs(name, amount):
    if _mac_counting:
        counters[name] = counters[name] + amount


def reset(*names):
    for name in names or list(counters):
        counters[name] = 0


@contextmanager
def count_macs():
    """Enable MAC accounting inside conv/linear kernels for the duration."""
    global _mac_counting
    prev = _mac_counting
    _mac_counting = True
    try:
        yield counters
    finally:
        _mac_counting = prev
