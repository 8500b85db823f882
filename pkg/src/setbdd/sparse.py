"""Backtrackable sparse sets of node ids.

Two variants share one layout.  STD inserts by writing at the end of the
dense part and checks membership through both arrays; MOD swaps entries on
insert so that dense[sparse[v]] == v always holds and membership needs only
one comparison.  Several sets can live in one pair of arrays at different
offsets; ``members`` is then an array indexed by set.
"""
import numpy as np

from ._jit import kernel

STD = 0
MOD = 1


@kernel(inline="always")
def sparse_insert(sparse, dense, off, members, k, n, variant):
    m = members[k]
    if variant == STD:
        dense[off + m] = n
        sparse[off + n] = m
    else:
        a = sparse[off + n]
        b = dense[off + m]
        dense[off + a] = b
        sparse[off + b] = a
        dense[off + m] = n
        sparse[off + n] = m
    members[k] = m + 1


@kernel(inline="always")
def sparse_member(sparse, dense, off, members, k, n, variant):
    s = sparse[off + n]
    if variant == STD:
        return s < members[k] and dense[off + s] == n
    return s < members[k]


@kernel
def _insert1(sparse, dense, members, n, variant):
    sparse_insert(sparse, dense, 0, members, 0, n, variant)


@kernel
def _member1(sparse, dense, members, n, variant):
    return sparse_member(sparse, dense, 0, members, 0, n, variant)


class SparseSet:
    """A single sparse set over 0..size-1 (used directly by tests and tools)."""

    def __init__(self, size, variant=MOD):
        if variant not in (STD, MOD):
            raise ValueError("variant must be STD or MOD")
        self.variant = variant
        self.sparse = np.arange(size, dtype=np.int32)
        self.dense = np.arange(size, dtype=np.int32)
        self._members = np.zeros(1, dtype=np.int32)

    @classmethod
    def from_arrays(cls, sparse, dense, members, variant):
        s = cls(len(sparse), variant)
        s.sparse[:] = sparse
        s.dense[:] = dense
        s._members[0] = members
        return s

    @property
    def members(self):
        return int(self._members[0])

    def __len__(self):
        return self.members

    def insert(self, n):
        assert not self.member(n), f"{n} inserted twice"
        _insert1(self.sparse, self.dense, self._members, n, self.variant)

    def member(self, n):
        return bool(_member1(self.sparse, self.dense, self._members, n, self.variant))

    __contains__ = member

    def mark(self):
        return self.members

    def restore(self, checkpoint):
        if checkpoint > self.members or checkpoint < 0:
            raise ValueError(f"cannot restore to {checkpoint} with {self.members} members")
        self._members[0] = checkpoint

    def elements(self):
        if self.variant == MOD:
            return set(self.dense[:self.members].tolist())
        return {int(v) for v in self.dense[:self.members] if self.member(int(v))}
