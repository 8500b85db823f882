"""Reduced ordered BDDs with hash-consing, plus a frozen array form.

Variables are plain non-negative integers; a smaller integer comes earlier
in the order.  Node ids 0 and 1 are the FALSE and TRUE terminals.
"""
from dataclasses import dataclass
import itertools

import numpy as np

FALSE = 0
TRUE = 1

AND = "and"
OR = "or"

# Terminals sort after every real variable.
_TERM_VAR = 1 << 62


class BDDError(Exception):
    pass


class OrderError(BDDError, ValueError):
    """mk was asked for a node whose children do not come later in the order."""


class ResourceError(BDDError, MemoryError):
    """The node arena reached its configured limit."""


class BDD:
    """Append-only node arena with a unique table and an apply cache."""

    def __init__(self, max_nodes=None):
        self._var = [_TERM_VAR, _TERM_VAR]
        self._lo = [FALSE, TRUE]
        self._hi = [FALSE, TRUE]
        self._unique = {}
        self._apply_cache = {}
        self._neg_cache = {}
        self.max_nodes = max_nodes

    def __len__(self):
        return len(self._var)

    # node accessors
    def var_of(self, n):
        return self._var[n]

    def low(self, n):
        return self._lo[n]

    def high(self, n):
        return self._hi[n]

    def is_terminal(self, n):
        return n < 2

    def mk(self, v, f, t):
        if f == t:
            return f
        if v < 0 or v >= _TERM_VAR:
            raise OrderError(f"bad variable {v}")
        if not (v < self._var[f] and v < self._var[t]):
            raise OrderError(
                f"variable {v} must precede its children "
                f"({self._var[f]}, {self._var[t]})")
        key = (v, f, t)
        n = self._unique.get(key)
        if n is not None:
            return n
        if self.max_nodes is not None and len(self._var) >= self.max_nodes:
            raise ResourceError(f"BDD arena exhausted ({self.max_nodes} nodes)")
        n = len(self._var)
        self._var.append(v)
        self._lo.append(f)
        self._hi.append(t)
        self._unique[key] = n
        return n

    def var(self, v):
        return self.mk(v, FALSE, TRUE)

    def nvar(self, v):
        return self.mk(v, TRUE, FALSE)

    def literal(self, v, value):
        return self.var(v) if value else self.nvar(v)

    def cube(self, assignment):
        """Conjunction of literals given as a mapping var -> bool."""
        node = TRUE
        for v in sorted(assignment, reverse=True):
            if assignment[v]:
                node = self.mk(v, FALSE, node)
            else:
                node = self.mk(v, node, FALSE)
        return node

    def negate(self, a):
        cache = self._neg_cache
        out = {FALSE: TRUE, TRUE: FALSE}
        stack = [a]
        while stack:
            n = stack[-1]
            if n in out:
                stack.pop()
                continue
            if n in cache:
                out[n] = cache[n]
                stack.pop()
                continue
            lo, hi = self._lo[n], self._hi[n]
            if lo in out and hi in out:
                stack.pop()
                r = self.mk(self._var[n], out[lo], out[hi])
                cache[n] = r
                out[n] = r
            else:
                if hi not in out:
                    stack.append(hi)
                if lo not in out:
                    stack.append(lo)
        return out[a]

    def apply(self, op, a, b):
        if op not in (AND, OR):
            raise ValueError(f"unknown operation {op!r}")
        return self._apply(op, a, b)

    def _terminal_case(self, op, a, b):
        if op == AND:
            if a == FALSE or b == FALSE:
                return FALSE
            if a == TRUE:
                return b
            if b == TRUE or a == b:
                return a
        else:
            if a == TRUE or b == TRUE:
                return TRUE
            if a == FALSE:
                return b
            if b == FALSE or a == b:
                return a
        return None

    def _apply(self, op, a, b):
        # Explicit stack so deep orders do not hit the recursion limit.
        cache = self._apply_cache
        var, lo, hi = self._var, self._lo, self._hi

        def key(x, y):
            return (op, x, y) if x <= y else (op, y, x)

        r = self._terminal_case(op, a, b)
        if r is not None:
            return r
        stack = [(a, b)]
        while stack:
            x, y = stack[-1]
            k = key(x, y)
            if k in cache:
                stack.pop()
                continue
            vx, vy = var[x], var[y]
            v = min(vx, vy)
            xl, xh = (lo[x], hi[x]) if vx == v else (x, x)
            yl, yh = (lo[y], hi[y]) if vy == v else (y, y)
            pending = False
            res = []
            for p, q in ((xl, yl), (xh, yh)):
                t = self._terminal_case(op, p, q)
                if t is None:
                    t = cache.get(key(p, q))
                if t is None:
                    if not pending:
                        pending = True
                    stack.append((p, q))
                res.append(t)
            if pending:
                continue
            stack.pop()
            cache[k] = self.mk(v, res[0], res[1])
        return cache[key(a, b)]

    def conjoin(self, nodes):
        r = TRUE
        for n in nodes:
            r = self.apply(AND, r, n)
            if r == FALSE:
                break
        return r

    def exists(self, a, variables):
        qvars = frozenset(variables)
        if not qvars or a < 2:
            return a
        memo = {FALSE: FALSE, TRUE: TRUE}
        stack = [a]
        while stack:
            n = stack[-1]
            if n in memo:
                stack.pop()
                continue
            lo, hi = self._lo[n], self._hi[n]
            if lo in memo and hi in memo:
                stack.pop()
                v = self._var[n]
                if v in qvars:
                    memo[n] = self.apply(OR, memo[lo], memo[hi])
                else:
                    memo[n] = self.mk(v, memo[lo], memo[hi])
            else:
                if hi not in memo:
                    stack.append(hi)
                if lo not in memo:
                    stack.append(lo)
        return memo[a]

    def nodes(self, a):
        """Internal nodes reachable from a."""
        seen = set()
        stack = [a]
        while stack:
            n = stack.pop()
            if n < 2 or n in seen:
                continue
            seen.add(n)
            stack.append(self._lo[n])
            stack.append(self._hi[n])
        return seen

    def size(self, a):
        return len(self.nodes(a))

    def support(self, a):
        return sorted({self._var[n] for n in self.nodes(a)})

    def evaluate(self, a, assignment):
        n = a
        while n >= 2:
            n = self._hi[n] if assignment[self._var[n]] else self._lo[n]
        return n == TRUE

    def count(self, a, variables):
        """Number of models of a over the given variables (a superset of its support)."""
        order = sorted(variables)
        pos = {v: i for i, v in enumerate(order)}
        nv = len(order)
        memo = {}

        def level(n):
            return nv if n < 2 else pos[self._var[n]]

        def rec(n):
            if n == FALSE:
                return 0
            if n == TRUE:
                return 1
            if n in memo:
                return memo[n]
            lv = level(n)
            lo, hi = self._lo[n], self._hi[n]
            c = (rec(lo) << (level(lo) - lv - 1)) + (rec(hi) << (level(hi) - lv - 1))
            memo[n] = c
            return c

        return rec(a) << level(a)

    def fixed_vars(self, a):
        """Variables taking the same value in every model of a, as var -> bool.

        One pass over the nodes: v is fixed iff no arc towards TRUE skips
        over v, and every node labelled v has the same dead child.
        """
        if a == FALSE:
            raise BDDError("fixed_vars of FALSE: no models")
        if a == TRUE:
            return {}
        nodes = self.nodes(a)
        order = sorted({self._var[n] for n in nodes})
        rank = {v: i for i, v in enumerate(order)}
        nv = len(order)
        # skipped[r] > 0 when some live arc jumps over rank r
        diff = [0] * (nv + 1)

        def top(n):
            return nv if n < 2 else rank[self._var[n]]

        dead_lo = [0] * nv
        dead_hi = [0] * nv
        count = [0] * nv
        for n in nodes:
            r = rank[self._var[n]]
            count[r] += 1
            for c in (self._lo[n], self._hi[n]):
                if c == FALSE:
                    continue
                tc = top(c)
                if tc > r + 1:
                    diff[r + 1] += 1
                    diff[tc] -= 1
            if self._lo[n] == FALSE:
                dead_lo[r] += 1
            if self._hi[n] == FALSE:
                dead_hi[r] += 1
        # arcs into the root from "above" skip ranks before the root's rank
        rt = top(a)
        if rt > 0:
            diff[0] += 1
            diff[rt] -= 1
        out = {}
        running = 0
        for r in range(nv):
            running += diff[r]
            if running:
                continue
            if dead_hi[r] == count[r]:
                out[order[r]] = False
            elif dead_lo[r] == count[r]:
                out[order[r]] = True
        return out

    def freeze(self, a):
        return StaticGraph.from_bdd(self, a)


@dataclass(frozen=True, eq=False)
class StaticGraph:
    """Immutable array form of one BDD.

    Ids 0/1 are the terminals; internal nodes follow, sorted so that deeper
    variables get smaller ids (children always precede parents).  ``var``
    holds the rank of a node's variable within ``varset``; terminals carry
    rank ``len(varset)``.  Nodes of rank r occupy ids
    ``rank_lo[r] .. rank_hi[r] - 1``.
    """

    var: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    root: int
    varset: tuple
    rank_lo: np.ndarray
    rank_hi: np.ndarray

    @property
    def node_count(self):
        return len(self.var) - 2

    @property
    def nvars(self):
        return len(self.varset)

    @classmethod
    def from_bdd(cls, bdd, a):
        if a == FALSE:
            raise BDDError("cannot freeze FALSE")
        nodes = bdd.nodes(a)
        varset = tuple(sorted({bdd.var_of(n) for n in nodes}))
        rank = {v: i for i, v in enumerate(varset)}
        nv = len(varset)
        ordered = sorted(nodes, key=lambda n: (-rank[bdd.var_of(n)], n))
        ids = {FALSE: FALSE, TRUE: TRUE}
        for i, n in enumerate(ordered):
            ids[n] = i + 2
        size = len(ordered) + 2
        var = np.full(size, nv, dtype=np.int32)
        lo = np.array([0, 1] + [0] * len(ordered), dtype=np.int32)
        hi = np.array([0, 1] + [0] * len(ordered), dtype=np.int32)
        rank_lo = np.zeros(nv, dtype=np.int32)
        rank_hi = np.zeros(nv, dtype=np.int32)
        for n in ordered:
            i = ids[n]
            r = rank[bdd.var_of(n)]
            var[i] = r
            lo[i] = ids[bdd.low(n)]
            hi[i] = ids[bdd.high(n)]
        for r, group in itertools.groupby(range(2, size), key=lambda i: int(var[i])):
            group = list(group)
            rank_lo[r] = group[0]
            rank_hi[r] = group[-1] + 1
        for arr in (var, lo, hi, rank_lo, rank_hi):
            arr.setflags(write=False)
        return cls(var, lo, hi, ids[a], varset, rank_lo, rank_hi)

    def top(self, n):
        return int(self.var[n])

    def evaluate(self, values):
        """values: sequence of 0/1 indexed by rank."""
        n = self.root
        while n >= 2:
            n = int(self.hi[n]) if values[self.var[n]] else int(self.lo[n])
        return n == TRUE

    def models(self):
        """All satisfying assignments over the varset, as tuples of 0/1 by rank."""
        out = []
        nv = self.nvars

        def walk(n, rank, prefix):
            if n == FALSE:
                return
            target = nv if n == TRUE else int(self.var[n])
            free = target - rank
            for bits in itertools.product((0, 1), repeat=free):
                p = prefix + bits
                if n == TRUE:
                    out.append(p)
                else:
                    walk(int(self.lo[n]), target + 1, p + (0,))
                    walk(int(self.hi[n]), target + 1, p + (1,))

        walk(self.root, 0, ())
        return out

    def model_count(self):
        nv = self.nvars
        cnt = [0] * len(self.var)
        cnt[TRUE] = 1
        for n in range(2, len(self.var)):
            r = int(self.var[n])
            lo, hi = int(self.lo[n]), int(self.hi[n])
            cnt[n] = (cnt[lo] << (int(self.var[lo]) - r - 1)) + \
                (cnt[hi] << (int(self.var[hi]) - r - 1))
        return cnt[self.root] << int(self.var[self.root])

    def dump(self):
        lines = []
        for n in range(len(self.var) - 1, 1, -1):
            lines.append(f"node {n} var={self.varset[self.var[n]]} "
                         f"f={int(self.lo[n])} t={int(self.hi[n])}")
        return "\n".join(lines)
