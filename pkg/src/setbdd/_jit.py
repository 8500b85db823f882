"""Compilation settings shared by the numba kernels."""
from numba import njit


def kernel(fn=None, *, inline="never"):
    """njit for kernels that never allocate.

    Reference counting is switched off: with it on, every array handed to an
    inlined helper costs a pair of atomic updates, which dominated the
    per-node cost of graph traversal.
    """
    deco = njit(cache=True, _nrt=False, inline=inline)
    return deco if fn is None else deco(fn)
