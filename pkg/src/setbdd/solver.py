"""Conflict-driven clause learning with BDD set-bounds propagators.

The search loop (unit propagation, propagator scheduling, explanation,
1UIP analysis, decisions, clause-database reduction) runs inside numba.
Python drives restarts and time limits by calling ``_search`` with
conflict and decision budgets; all state lives in arrays between calls.
Clauses sit in one flat literal arena with per-literal watch blocks.  The
kernel never allocates: when the arenas run short, or the learnt clauses
need pruning, it returns to Python, which compacts and regrows them.

Literals are ints: 2 * var for "var is true", 2 * var + 1 for its negation.
"""
from collections import namedtuple
from dataclasses import dataclass, field, asdict, replace
import math
import time

import numpy as np

from ._jit import kernel
from .constraints import TemplateCache, UnsatisfiableConstraint, instantiate
from .explain import construct_reason, bdd_to_cnf, to_dimacs
from .propagate import (
    build_store, run_propagator, update_flags, restore_fsets,
    BASE, MEMO, SHORTCUT, N_COUNTERS, C_UNDO, C_BDDPROPS, C_VISITS, C_FSET_HITS, C_SHORTCUT,
)
from .sparse import STD, MOD

SAT = "SAT"
UNSAT = "UNSAT"
TIMEOUT = "TIMEOUT"

# reason kinds
R_NONE = 0
R_CLAUSE = 1
R_PROP = 2

# clause flags
F_LEARNT = 1

# integer scalars
S_TRAIL = 0
S_QHEAD = 1
S_BHEAD = 2
S_DLEVEL = 3
S_QFRONT = 4
S_QLEN = 5
S_NLEARNT = 6
S_CONFLICTS = 7
S_DECISIONS = 8
S_PROPS = 9
S_REASONS = 10
S_LEARNTS = 11
S_HEAP = 12
S_EPOCH = 13
S_MAXLEARNT = 14
S_INFER = 15
S_NB = 16
S_NI = 17
S_REDUCE = 18
S_CATOP = 19      # next free slot in the literal arena
S_NCLS = 20       # clause ids handed out so far
S_NFREE = 21      # ids on the free stack
S_WATOP = 22      # next free slot in the watch arena
S_NLIVE = 23      # clauses with two or more literals
N_SCALARS = 24

# float scalars
F_VARINC = 0
F_CLAINC = 1
F_VARDECAY = 2
F_CLADECAY = 3

# configuration slots
CF_MODE = 0
CF_SPARSE = 1
CF_LITERAL = 2
CF_FILTER = 3
CF_STATIC = 4
CF_EAGER = 5
CF_POLARITY = 6
CF_MINIMIZE = 7
N_CFG = 8

# search results
RES_BUDGET = 0
RES_ROOM = 1      # arenas need compacting or growing
RES_REDUCE = 2    # learnt clauses need pruning
RES_SAT = 10
RES_UNSAT = 20

SatState = namedtuple("SatState", [
    "dom", "level", "tpos", "rkind", "rref", "origin",
    "trail", "trail_lim", "undo_lim", "level_epoch",
    "seen", "activity", "heap", "heap_idx", "static_order",
    "learnt", "stack", "toclear", "queue", "in_queue", "lits",
    "sc", "fp", "cfg",
])

# clause ci holds ca[cstart[ci]:cstart[ci] + clen[ci]] (clen 0 when free);
# the clauses watching literal l are wa[wstart[l]:wstart[l] + wsize[l]]
ClauseDB = namedtuple("ClauseDB", [
    "ca", "cstart", "clen", "cact", "cflag", "cfree",
    "wa", "wstart", "wsize", "wcap",
])


# ---------------------------------------------------------------------------
# basic trail operations

@kernel(inline="always")
def _value(S, lit):
    d = S.dom[lit >> 1]
    if d == 3:
        return 0
    return 1 if d == 2 - (lit & 1) else -1


@kernel
def _enqueue(S, lit, kind, ref):
    v = lit >> 1
    S.dom[v] = 2 - (lit & 1)
    S.level[v] = S.sc[S_DLEVEL]
    pos = S.sc[S_TRAIL]
    S.tpos[v] = pos
    S.trail[pos] = lit
    S.sc[S_TRAIL] = pos + 1
    S.rkind[v] = kind
    S.rref[v] = ref


@kernel
def _watch(S, C, lit, ci):
    k = C.wsize[lit]
    if k == C.wcap[lit]:
        top = S.sc[S_WATOP]
        cap = max(4, 2 * k)
        if top + cap > len(C.wa):
            raise RuntimeError("watch arena exhausted")
        old = C.wstart[lit]
        for m in range(k):
            C.wa[top + m] = C.wa[old + m]
        C.wstart[lit] = top
        C.wcap[lit] = cap
        S.sc[S_WATOP] = top + cap
    C.wa[C.wstart[lit] + k] = ci
    C.wsize[lit] = k + 1


@kernel
def _new_clause(S, C, lits, n, learnt):
    if S.sc[S_NFREE] > 0:
        S.sc[S_NFREE] -= 1
        ci = C.cfree[S.sc[S_NFREE]]
    else:
        ci = S.sc[S_NCLS]
        if ci >= len(C.clen):
            raise RuntimeError("clause table exhausted")
        S.sc[S_NCLS] = ci + 1
    top = S.sc[S_CATOP]
    if top + n > len(C.ca):
        raise RuntimeError("literal arena exhausted")
    for k in range(n):
        C.ca[top + k] = lits[k]
    S.sc[S_CATOP] = top + n
    C.cstart[ci] = top
    C.clen[ci] = n
    C.cact[ci] = 0.0
    C.cflag[ci] = F_LEARNT if learnt else 0
    if n >= 2:
        _watch(S, C, lits[0], ci)
        _watch(S, C, lits[1], ci)
        S.sc[S_NLIVE] += 1
    if learnt:
        S.sc[S_NLEARNT] += 1
    return ci


@kernel
def _room(S, C, reserve_lits, reserve_ids):
    """Whether the arenas can absorb one more search step."""
    ids = len(C.clen) - S.sc[S_NCLS] + S.sc[S_NFREE]
    if ids < reserve_ids:
        return False
    if len(C.ca) - S.sc[S_CATOP] < reserve_lits:
        return False
    # watch blocks at most quadruple over one step
    need = 8 * (S.sc[S_NLIVE] + reserve_ids) + 64
    return len(C.wa) - S.sc[S_WATOP] >= need


# ---------------------------------------------------------------------------
# activity heap (max-heap on variable activity)

@kernel
def _heap_up(S, k):
    heap = S.heap
    idx = S.heap_idx
    act = S.activity
    v = heap[k]
    while k > 0:
        p = (k - 1) >> 1
        if act[heap[p]] >= act[v]:
            break
        heap[k] = heap[p]
        idx[heap[k]] = k
        k = p
    heap[k] = v
    idx[v] = k


@kernel
def _heap_down(S, k):
    heap = S.heap
    idx = S.heap_idx
    act = S.activity
    n = S.sc[S_HEAP]
    v = heap[k]
    while True:
        c = 2 * k + 1
        if c >= n:
            break
        if c + 1 < n and act[heap[c + 1]] > act[heap[c]]:
            c += 1
        if act[heap[c]] <= act[v]:
            break
        heap[k] = heap[c]
        idx[heap[k]] = k
        k = c
    heap[k] = v
    idx[v] = k


@kernel
def _heap_insert(S, v):
    if S.heap_idx[v] >= 0:
        return
    n = S.sc[S_HEAP]
    S.heap[n] = v
    S.heap_idx[v] = n
    S.sc[S_HEAP] = n + 1
    _heap_up(S, n)


@kernel
def _heap_pop(S):
    n = S.sc[S_HEAP]
    v = S.heap[0]
    S.heap_idx[v] = -1
    n -= 1
    S.sc[S_HEAP] = n
    if n > 0:
        S.heap[0] = S.heap[n]
        S.heap_idx[S.heap[0]] = 0
        _heap_down(S, 0)
    return v


@kernel
def _bump_var(S, v):
    S.activity[v] += S.fp[F_VARINC]
    if S.activity[v] > 1e100:
        for k in range(len(S.activity)):
            S.activity[k] *= 1e-100
        S.fp[F_VARINC] *= 1e-100
    if S.heap_idx[v] >= 0:
        _heap_up(S, S.heap_idx[v])


@kernel
def _bump_clause(S, C, ci):
    C.cact[ci] += S.fp[F_CLAINC]
    if C.cact[ci] > 1e20:
        for k in range(S.sc[S_NCLS]):
            C.cact[k] *= 1e-20
        S.fp[F_CLAINC] *= 1e-20


# ---------------------------------------------------------------------------
# backtracking

@kernel
def _new_level(S, I, ctr):
    lv = S.sc[S_DLEVEL] + 1
    S.sc[S_DLEVEL] = lv
    S.trail_lim[lv] = S.sc[S_TRAIL]
    S.undo_lim[lv] = ctr[C_UNDO]
    S.sc[S_EPOCH] += 1
    S.level_epoch[lv] = S.sc[S_EPOCH]


@kernel
def _cancel_until(S, I, ctr, level):
    if S.sc[S_DLEVEL] <= level:
        return
    lim = S.trail_lim[level + 1]
    for k in range(S.sc[S_TRAIL] - 1, lim - 1, -1):
        v = S.trail[k] >> 1
        S.dom[v] = 3
        S.rkind[v] = R_NONE
        S.origin[v] = -1
        if S.cfg[CF_STATIC] == 0:
            _heap_insert(S, v)
    S.sc[S_TRAIL] = lim
    S.sc[S_QHEAD] = lim
    if S.sc[S_BHEAD] > lim:
        S.sc[S_BHEAD] = lim
    restore_fsets(I, ctr, S.undo_lim[level + 1])
    # drop pending propagator runs; everything at `level` was at fixpoint
    while S.sc[S_QLEN] > 0:
        i = S.queue[S.sc[S_QFRONT]]
        S.in_queue[i] = 0
        S.sc[S_QFRONT] = (S.sc[S_QFRONT] + 1) % len(S.queue)
        S.sc[S_QLEN] -= 1
    S.sc[S_DLEVEL] = level


# ---------------------------------------------------------------------------
# unit propagation

@kernel
def _propagate_units(S, C):
    ca = C.ca
    wa = C.wa
    while S.sc[S_QHEAD] < S.sc[S_TRAIL]:
        p = S.trail[S.sc[S_QHEAD]]
        S.sc[S_QHEAD] += 1
        S.sc[S_PROPS] += 1
        fl = p ^ 1
        w0 = C.wstart[fl]
        n = C.wsize[fl]
        i = 0
        j = 0
        while i < n:
            ci = wa[w0 + i]
            i += 1
            cs = C.cstart[ci]
            if ca[cs] == fl:
                ca[cs] = ca[cs + 1]
                ca[cs + 1] = fl
            first = ca[cs]
            if _value(S, first) == 1:
                wa[w0 + j] = ci
                j += 1
                continue
            found = False
            for k in range(cs + 2, cs + C.clen[ci]):
                if _value(S, ca[k]) != -1:
                    ca[cs + 1] = ca[k]
                    ca[k] = fl
                    _watch(S, C, ca[cs + 1], ci)
                    found = True
                    break
            if found:
                continue
            wa[w0 + j] = ci
            j += 1
            if _value(S, first) == -1:
                while i < n:
                    wa[w0 + j] = wa[w0 + i]
                    j += 1
                    i += 1
                C.wsize[fl] = j
                S.sc[S_QHEAD] = S.sc[S_TRAIL]
                return ci
            _enqueue(S, first, R_CLAUSE, ci)
        C.wsize[fl] = j
    return -1


# ---------------------------------------------------------------------------
# propagators

@kernel
def _queue_push(S, i):
    S.in_queue[i] = 1
    q = len(S.queue)
    S.queue[(S.sc[S_QFRONT] + S.sc[S_QLEN]) % q] = i
    S.sc[S_QLEN] += 1


@kernel
def _schedule(S, I):
    filt = S.cfg[CF_FILTER]
    dl = S.sc[S_DLEVEL]
    while S.sc[S_BHEAD] < S.sc[S_TRAIL]:
        lit = S.trail[S.sc[S_BHEAD]]
        S.sc[S_BHEAD] += 1
        v = lit >> 1
        neg = lit & 1
        for k in range(I.occ_start[v], I.occ_start[v + 1]):
            i = I.occ_inst[k]
            if S.in_queue[i] or S.origin[v] == i:
                continue
            if filt:
                rl = I.runlevel[i]
                if rl >= 0 and rl <= dl and S.level_epoch[rl] == I.runepoch[i]:
                    if not I.flags[2 * (I.voff[i] + I.occ_rank[k]) + neg]:
                        continue
            _queue_push(S, i)


@kernel
def _explain(S, G, I, W, i, D, xrank, sign):
    """Minimal antecedent ranks of instance i into W.ante; returns the count."""
    t = I.tmpl[i]
    nv = G.t_nv[t]
    ro = G.t_roff[t]
    cnt = construct_reason(G.var, G.lo, G.hi, G.rank_lo[ro:ro + nv], G.rank_hi[ro:ro + nv],
                           G.t_root[t], nv, D, xrank, sign, W.reach, W.fixed, W.reached, W.ante)
    if cnt < 0:
        raise RuntimeError("explanation requested for a non-inference")
    return cnt


@kernel
def _reason_clause(S, C, G, I, W, i, D, xrank, sign, lit):
    """Add the clause lit \\/ (negated antecedents) as a learnt clause."""
    cnt = _explain(S, G, I, W, i, D, xrank, sign)
    off = I.voff[i]
    lits = S.lits
    lits[0] = lit
    best = 1
    for k in range(cnt):
        r = W.ante[k]
        b = I.bools[off + r]
        lits[k + 1] = 2 * b + (1 if D[r] == 2 else 0)
        if k > 0 and S.level[b] > S.level[lits[best] >> 1]:
            best = k + 1
    if cnt > 1:
        tmp = lits[1]
        lits[1] = lits[best]
        lits[best] = tmp
    S.sc[S_REASONS] += 1
    return _new_clause(S, C, lits, cnt + 1, True)


@kernel
def _failure_clause(S, C, G, I, W, i):
    """Nogood for a failed run of instance i (domain in W.E)."""
    D = W.E
    cnt = _explain(S, G, I, W, i, D, -1, 0)
    off = I.voff[i]
    lits = S.lits
    for k in range(cnt):
        r = W.ante[k]
        b = I.bools[off + r]
        lits[k] = 2 * b + (1 if D[r] == 2 else 0)
    # watch the two deepest literals
    for pos in range(min(2, cnt)):
        best = pos
        for k in range(pos + 1, cnt):
            if S.level[lits[k] >> 1] > S.level[lits[best] >> 1]:
                best = k
        tmp = lits[pos]
        lits[pos] = lits[best]
        lits[best] = tmp
    S.sc[S_REASONS] += 1
    return _new_clause(S, C, lits, cnt, True)


@kernel
def _run_instance(S, C, G, I, W, ctr, i):
    """Run one propagator and push its inferences; returns a conflict clause or -1."""
    cfg = S.cfg
    dl = S.sc[S_DLEVEL]
    epoch = S.level_epoch[dl]
    ok = run_propagator(G, I, W, ctr, i, S.dom, cfg[CF_MODE], cfg[CF_LITERAL] != 0,
                        cfg[CF_SPARSE], epoch)
    I.runlevel[i] = dl
    I.runepoch[i] = epoch
    if not ok:
        return _failure_clause(S, C, G, I, W, i)
    if cfg[CF_FILTER]:
        update_flags(G, I, W, ctr, i, cfg[CF_LITERAL] != 0)
    t = I.tmpl[i]
    nv = G.t_nv[t]
    off = I.voff[i]
    eager = cfg[CF_EAGER] != 0 and dl > 0
    for r in range(nv):
        e2 = W.E2[r]
        if e2 != W.E[r]:
            b = I.bools[off + r]
            val = 1 if e2 == 2 else 0
            lit = 2 * b + (1 - val)
            S.sc[S_INFER] += 1
            if eager:
                ci = _reason_clause(S, C, G, I, W, i, W.E, r, val, lit)
                _enqueue(S, lit, R_CLAUSE, ci)
            else:
                _enqueue(S, lit, R_PROP, i)
            S.origin[b] = i
    return -1


@kernel
def _propagate(S, C, G, I, W, ctr):
    """Unit propagation first; propagators run only at unit fixpoint."""
    while True:
        confl = _propagate_units(S, C)
        if confl >= 0:
            return confl
        _schedule(S, I)
        if S.sc[S_QLEN] == 0:
            return -1
        i = S.queue[S.sc[S_QFRONT]]
        S.sc[S_QFRONT] = (S.sc[S_QFRONT] + 1) % len(S.queue)
        S.sc[S_QLEN] -= 1
        S.in_queue[i] = 0
        confl = _run_instance(S, C, G, I, W, ctr, i)
        if confl >= 0:
            return confl


@kernel
def _lazy_reason(S, C, G, I, W, v):
    """Clause explaining a propagator-fixed variable, built on demand."""
    i = S.rref[v]
    t = I.tmpl[i]
    nv = G.t_nv[t]
    off = I.voff[i]
    pos = S.tpos[v]
    D = W.D
    xr = -1
    for r in range(nv):
        b = I.bools[off + r]
        if b == v:
            xr = r
        d = S.dom[b]
        D[r] = d if (d != 3 and S.tpos[b] < pos) else 3
    if xr < 0:
        raise RuntimeError("literal not attributed to this propagator")
    val = 1 if S.dom[v] == 2 else 0
    lit = 2 * v + (1 - val)
    ci = _reason_clause(S, C, G, I, W, i, D, xr, val, lit)
    S.rkind[v] = R_CLAUSE
    S.rref[v] = ci
    return ci


@kernel
def _reason_of(S, C, G, I, W, v):
    if S.rkind[v] == R_PROP:
        return _lazy_reason(S, C, G, I, W, v)
    return S.rref[v]


# ---------------------------------------------------------------------------
# conflict analysis

@kernel(inline="always")
def _abstract(S, v):
    return 1 << (S.level[v] & 31)


@kernel
def _redundant(S, C, G, I, W, p, abstract, nclear):
    """Can literal p be dropped from the learnt clause?  Returns the new
    toclear length, or -1 when p must stay."""
    stack = S.stack
    sp = 1
    stack[0] = p
    top = nclear
    while sp > 0:
        sp -= 1
        q = stack[sp]
        ci = _reason_of(S, C, G, I, W, q >> 1)
        cs = C.cstart[ci]
        for k in range(cs + 1, cs + C.clen[ci]):
            l = C.ca[k]
            v = l >> 1
            if not S.seen[v] and S.level[v] > 0:
                if S.rkind[v] != R_NONE and (_abstract(S, v) & abstract) != 0:
                    S.seen[v] = 1
                    stack[sp] = l
                    sp += 1
                    S.toclear[nclear] = l
                    nclear += 1
                else:
                    for m in range(top, nclear):
                        S.seen[S.toclear[m] >> 1] = 0
                    return -1
    return nclear


@kernel
def _analyze(S, C, G, I, W, confl):
    """First-UIP learning.  Learnt literals go to S.learnt; returns
    (length, backjump level)."""
    learnt = S.learnt
    dl = S.sc[S_DLEVEL]
    path = 0
    p = -1
    out = 1
    idx = S.sc[S_TRAIL] - 1
    while True:
        if C.cflag[confl] & F_LEARNT:
            _bump_clause(S, C, confl)
        cs = C.cstart[confl]
        start = cs if p == -1 else cs + 1
        for k in range(start, cs + C.clen[confl]):
            q = C.ca[k]
            v = q >> 1
            if not S.seen[v] and S.level[v] > 0:
                _bump_var(S, v)
                S.seen[v] = 1
                if S.level[v] >= dl:
                    path += 1
                else:
                    learnt[out] = q
                    out += 1
        while not S.seen[S.trail[idx] >> 1]:
            idx -= 1
        p = S.trail[idx]
        idx -= 1
        v = p >> 1
        S.seen[v] = 0
        path -= 1
        if path <= 0:
            break
        confl = _reason_of(S, C, G, I, W, v)
    learnt[0] = p ^ 1

    nclear = 0
    for k in range(1, out):
        S.toclear[nclear] = learnt[k]
        nclear += 1
    if S.cfg[CF_MINIMIZE]:
        abstract = 0
        for k in range(1, out):
            abstract |= _abstract(S, learnt[k] >> 1)
        j = 1
        for k in range(1, out):
            v = learnt[k] >> 1
            keep = True
            if S.rkind[v] != R_NONE:
                res = _redundant(S, C, G, I, W, learnt[k], abstract, nclear)
                if res >= 0:
                    nclear = res
                    keep = False
            if keep:
                learnt[j] = learnt[k]
                j += 1
        out = j
    for k in range(nclear):
        S.seen[S.toclear[k] >> 1] = 0

    bt = 0
    if out > 1:
        best = 1
        for k in range(2, out):
            if S.level[learnt[k] >> 1] > S.level[learnt[best] >> 1]:
                best = k
        tmp = learnt[1]
        learnt[1] = learnt[best]
        learnt[best] = tmp
        bt = S.level[learnt[1] >> 1]
    return out, bt


# ---------------------------------------------------------------------------
# decisions and clause-database reduction

@kernel
def _pick(S):
    if S.cfg[CF_STATIC]:
        order = S.static_order
        for k in range(len(order)):
            v = order[k]
            if S.dom[v] == 3:
                return 2 * v
        return -1
    while S.sc[S_HEAP] > 0:
        v = _heap_pop(S)
        if S.dom[v] == 3:
            return 2 * v + (0 if S.cfg[CF_POLARITY] else 1)
    return -1


# ---------------------------------------------------------------------------
# main loop

@kernel
def _search(S, C, G, I, W, ctr, max_conflicts, max_decisions, reserve_lits, reserve_ids):
    conflicts = 0
    decisions = 0
    while True:
        if not _room(S, C, reserve_lits, reserve_ids):
            return RES_ROOM
        confl = _propagate(S, C, G, I, W, ctr)
        if confl >= 0:
            S.sc[S_CONFLICTS] += 1
            conflicts += 1
            if S.sc[S_DLEVEL] == 0:
                return RES_UNSAT
            cs = C.cstart[confl]
            top = 0
            for k in range(cs, cs + C.clen[confl]):
                lv = S.level[C.ca[k] >> 1]
                if lv > top:
                    top = lv
            if top == 0:
                return RES_UNSAT
            if top < S.sc[S_DLEVEL]:
                _cancel_until(S, I, ctr, top)
            out, bt = _analyze(S, C, G, I, W, confl)
            _cancel_until(S, I, ctr, bt)
            S.sc[S_LEARNTS] += 1
            if out == 1:
                _enqueue(S, S.learnt[0], R_NONE, -1)
            else:
                ci = _new_clause(S, C, S.learnt, out, True)
                _bump_clause(S, C, ci)
                _enqueue(S, S.learnt[0], R_CLAUSE, ci)
            S.fp[F_VARINC] /= S.fp[F_VARDECAY]
            S.fp[F_CLAINC] /= S.fp[F_CLADECAY]
        else:
            if max_conflicts >= 0 and conflicts >= max_conflicts:
                return RES_BUDGET
            if decisions >= max_decisions:
                return RES_BUDGET
            if S.sc[S_NLEARNT] - S.sc[S_TRAIL] >= S.sc[S_MAXLEARNT]:
                return RES_REDUCE
            lit = _pick(S)
            if lit < 0:
                return RES_SAT
            _new_level(S, I, ctr)
            S.sc[S_DECISIONS] += 1
            decisions += 1
            _enqueue(S, lit, R_NONE, -1)


@kernel
def _add_problem_clauses(S, C, flat, starts):
    """Add clauses at level 0, simplifying against the current assignment.
    Returns False when an empty clause arises."""
    buf = S.lits
    for c in range(len(starts) - 1):
        n = 0
        sat = False
        for k in range(starts[c], starts[c + 1]):
            l = flat[k]
            val = _value(S, l)
            if val == 1:
                sat = True
                break
            if val == 0:
                dup = False
                for m in range(n):
                    if buf[m] == l:
                        dup = True
                    elif buf[m] == l ^ 1:
                        sat = True
                if not dup:
                    buf[n] = l
                    n += 1
            if sat:
                break
        if sat:
            continue
        if n == 0:
            return False
        if n == 1:
            _enqueue(S, buf[0], R_NONE, -1)
            if _propagate_units(S, C) >= 0:
                return False
        else:
            _new_clause(S, C, buf, n, False)
    return True


@kernel
def _assert_literal(S, lit):
    """Fix a literal at level 0; False if it contradicts the current value."""
    val = _value(S, lit)
    if val == 1:
        return True
    if val == -1:
        return False
    _enqueue(S, lit, R_NONE, -1)
    return True


@kernel
def _step_instance(S, C, G, I, W, ctr, i):
    """Run one propagator (no unit propagation); returns a conflict clause or -1."""
    return _run_instance(S, C, G, I, W, ctr, i)


@kernel
def _init_heap(S):
    for v in range(len(S.dom)):
        _heap_insert(S, v)


@kernel
def _cancel(S, I, ctr, level):
    _cancel_until(S, I, ctr, level)


@kernel
def _queue_all(S, I, G):
    for i in range(len(I.tmpl)):
        if G.t_nv[I.tmpl[i]] > 0 and not S.in_queue[i]:
            _queue_push(S, i)


# ---------------------------------------------------------------------------
# Python side

VARIANTS = {
    "base": dict(filter=False, memoize=False, shortcut=False, sparse="std"),
    "+f": dict(filter=True, memoize=False, shortcut=False, sparse="std"),
    "+s": dict(filter=False, memoize=True, shortcut=True, sparse="std"),
    "+i": dict(filter=False, memoize=True, shortcut=True, sparse="mod"),
    "+fs": dict(filter=True, memoize=True, shortcut=True, sparse="std"),
    "+fi": dict(filter=True, memoize=True, shortcut=True, sparse="mod"),
}


@dataclass
class SolverConfig:
    search: str = "vsids"
    reasons: str = "lazy"
    filter: bool = True
    memoize: bool = True
    shortcut: bool = True
    sparse: str = "mod"
    matters: str = "var"
    tseitin: bool = False
    seed: int = 0
    timeout: float = None
    polarity: bool = False
    restarts: bool = None
    restart_first: int = 100
    restart_inc: float = 1.5
    var_decay: float = 0.95
    clause_decay: float = 0.999
    minimize: bool = True

    def __post_init__(self):
        if self.search not in ("vsids", "static"):
            raise ValueError(f"search must be vsids or static, not {self.search!r}")
        if self.reasons not in ("lazy", "eager"):
            raise ValueError(f"reasons must be lazy or eager, not {self.reasons!r}")
        if self.sparse not in ("std", "mod"):
            raise ValueError(f"sparse must be std or mod, not {self.sparse!r}")
        if self.matters not in ("var", "literal"):
            raise ValueError(f"matters must be var or literal, not {self.matters!r}")
        if self.shortcut and not self.memoize:
            raise ValueError("shortcutting needs memoization")

    @classmethod
    def variant(cls, name, **kw):
        if name not in VARIANTS:
            raise ValueError(f"unknown variant {name!r}; choose from {', '.join(VARIANTS)}")
        return cls(**{**VARIANTS[name], **kw})

    @property
    def mode(self):
        if self.shortcut:
            return SHORTCUT
        return MEMO if self.memoize else BASE

    @property
    def use_restarts(self):
        return self.search == "vsids" if self.restarts is None else self.restarts


@dataclass
class Stats:
    decisions: int = 0
    conflicts: int = 0
    propagations: int = 0
    bdd_propagations: int = 0
    reasons: int = 0
    learnts: int = 0
    restarts: int = 0
    time_ms: int = 0
    inferences: int = 0
    node_visits: int = 0
    fset_hits: int = 0
    shortcut_entries: int = 0

    STABLE = ("decisions", "conflicts", "propagations", "bdd_propagations", "reasons",
              "learnts", "restarts", "time_ms")

    def line(self):
        return "stats " + " ".join(f"{k}={getattr(self, k)}" for k in self.STABLE)

    def as_dict(self):
        return {k: v for k, v in asdict(self).items()}


@dataclass
class Result:
    status: str
    assignment: dict = None
    stats: Stats = field(default_factory=Stats)

    def __bool__(self):
        return self.status == SAT


def _empty_clause_db(nbools, ids, lits, watch):
    return ClauseDB(
        ca=np.zeros(lits, np.int32), cstart=np.zeros(ids, np.int64),
        clen=np.zeros(ids, np.int32), cact=np.zeros(ids, np.float64),
        cflag=np.zeros(ids, np.int8), cfree=np.zeros(ids, np.int32),
        wa=np.zeros(watch, np.int32), wstart=np.zeros(2 * nbools, np.int64),
        wsize=np.zeros(2 * nbools, np.int32), wcap=np.zeros(2 * nbools, np.int32),
    )


class Solver:
    """One solver for one model.  Not thread-safe; create one per thread."""

    def __init__(self, model, config=None, cache=None):
        self.model = model
        self.config = config or SolverConfig()
        self.cache = cache or TemplateCache()
        self.trivially_unsat = False
        self.restarts = 0
        self.instances = []
        self.instance_specs = []
        self._compile()

    # -- compilation --------------------------------------------------------

    def _compile(self):
        model = self.model
        cfg = self.config
        for spec, names in model.constraints:
            actuals = [model.var(nm) for nm in names]
            n = actuals[0].n if actuals else model.n
            try:
                tpl = self.cache.get(spec, n)
            except UnsatisfiableConstraint:
                self.trivially_unsat = True
                continue
            if tpl.is_true:
                continue
            self.instances.append(instantiate(tpl, actuals))
            self.instance_specs.append((spec, tuple(names)))

        nb = model.nbools
        extra_clauses = []
        if cfg.tseitin:
            nb, extra_clauses = self._tseitin_clauses(nb)
            prop_instances = []
        else:
            prop_instances = self.instances
        self.nbools = nb
        self.prop_instances = prop_instances
        self.G, self.I, self.W, self.templates = build_store(prop_instances, nb)
        self.ctr = np.zeros(N_COUNTERS, np.int64)
        ni = len(prop_instances)
        maxlits = max(nb, int(self.G.t_nv.max(initial=0))) + 2
        static_order = self._static_order(nb)
        self.S = SatState(
            dom=np.full(nb, 3, np.int8), level=np.zeros(nb, np.int32),
            tpos=np.zeros(nb, np.int32), rkind=np.zeros(nb, np.int8),
            rref=np.full(nb, -1, np.int32), origin=np.full(nb, -1, np.int32),
            trail=np.zeros(nb + 1, np.int32), trail_lim=np.zeros(nb + 2, np.int32),
            undo_lim=np.zeros(nb + 2, np.int64), level_epoch=np.zeros(nb + 2, np.int64),
            seen=np.zeros(nb, np.int8), activity=np.zeros(nb, np.float64),
            heap=np.zeros(nb + 1, np.int32), heap_idx=np.full(nb, -1, np.int32),
            static_order=static_order,
            learnt=np.zeros(maxlits, np.int32), stack=np.zeros(maxlits, np.int32),
            toclear=np.zeros(maxlits, np.int32), queue=np.zeros(max(ni, 1), np.int32),
            in_queue=np.zeros(max(ni, 1), np.int8), lits=np.zeros(maxlits, np.int32),
            sc=np.zeros(N_SCALARS, np.int64),
            fp=np.array([1.0, 1.0, cfg.var_decay, cfg.clause_decay]),
            cfg=np.zeros(N_CFG, np.int64),
        )
        S = self.S
        S.cfg[CF_MODE] = cfg.mode
        S.cfg[CF_SPARSE] = MOD if cfg.sparse == "mod" else STD
        S.cfg[CF_LITERAL] = cfg.matters == "literal"
        S.cfg[CF_FILTER] = cfg.filter
        S.cfg[CF_STATIC] = cfg.search == "static"
        S.cfg[CF_EAGER] = cfg.reasons == "eager"
        S.cfg[CF_POLARITY] = cfg.polarity
        S.cfg[CF_MINIMIZE] = cfg.minimize
        S.sc[S_NB] = nb
        S.sc[S_NI] = ni
        S.sc[S_MAXLEARNT] = max(2000, 2 * nb)
        nvmax = int(self.G.t_nv.max(initial=0))
        # worst case for one search step: a reason for every Boolean plus a learnt clause
        self.reserve_ids = 2 * nb + 2
        self.reserve_lits = (nb + 2) * (nvmax + 2) + maxlits
        self.C = _empty_clause_db(nb, 0, 0, 0)
        ncnf = len(extra_clauses[1]) if extra_clauses else 0
        ncnf_lits = len(extra_clauses[0]) if extra_clauses else 0
        self._maintain(extra_ids=ncnf, extra_lits=ncnf_lits)
        if cfg.seed and nb:
            rng = np.random.default_rng(cfg.seed)
            S.activity[:] = rng.random(nb) * 1e-5
        if cfg.search == "vsids":
            _init_heap(S)
        self._fixed_ok = True
        for name, elem, value in model.fixed:
            b = model.var(name).boolean(elem)
            if not _assert_literal(S, 2 * b + (0 if value else 1)):
                self._fixed_ok = False
        if extra_clauses and self._fixed_ok:
            flat, starts = extra_clauses
            if not _add_problem_clauses(S, self.C, flat, starts):
                self._fixed_ok = False
        _queue_all(S, self.I, self.G)

    def _static_order(self, nb):
        order = []
        seen = set()
        for name in self.model.search_vars:
            for b in self.model.var(name).bools:
                if b not in seen:
                    seen.add(b)
                    order.append(b)
        order.extend(b for b in range(nb) if b not in seen)
        return np.array(order, dtype=np.int32)

    def _tseitin_clauses(self, nb):
        """CNF for every instance; auxiliary variables are numbered after nb."""
        enc_cache = {}
        chunks = []
        lens = []
        next_var = nb
        for inst in self.instances:
            key = id(inst.template)
            if key not in enc_cache:
                enc = bdd_to_cnf(inst.template.graph)
                enc_cache[key] = enc
            enc = enc_cache[key]
            nv = enc.nvars
            naux = len(enc.aux)
            # DIMACS var k (1-based) -> problem Boolean
            mapping = np.empty(nv + naux + 1, np.int64)
            mapping[1:nv + 1] = inst.bools
            mapping[nv + 1:] = np.arange(next_var, next_var + naux)
            next_var += naux
            for cl in enc.clauses:
                arr = np.array(cl, dtype=np.int64)
                chunks.append(2 * mapping[np.abs(arr)] + (arr < 0))
                lens.append(len(cl))
            if enc.root is not None:
                chunks.append(np.array([2 * mapping[enc.root]], np.int64))
                lens.append(1)
        self.cnf_vars = next_var
        if not chunks:
            self.cnf = (np.zeros(0, np.int32), np.zeros(1, np.int64))
            return nb, None
        flat = np.concatenate(chunks).astype(np.int32)
        starts = np.zeros(len(lens) + 1, np.int64)
        starts[1:] = np.cumsum(lens)
        self.cnf = (flat, starts)
        return next_var, (flat, starts)

    # -- solving ------------------------------------------------------------

    def solve(self, timeout=None):
        timeout = self.config.timeout if timeout is None else timeout
        start = time.perf_counter()
        if self.trivially_unsat or not self._fixed_ok:
            return Result(UNSAT, None, self._stats(start))
        cfg = self.config
        S = self.S
        deadline = None if timeout is None else start + timeout
        chunk_decisions = 20000
        status = RES_BUDGET
        while status == RES_BUDGET:
            if cfg.use_restarts:
                budget = int(cfg.restart_first * cfg.restart_inc ** self.restarts)
            else:
                budget = -1
            used = 0
            while True:
                step = 256 if budget < 0 else min(256, budget - used)
                before = int(S.sc[S_CONFLICTS])
                status = _search(S, self.C, self.G, self.I, self.W, self.ctr,
                                 step, chunk_decisions, self.reserve_lits, self.reserve_ids)
                used += int(S.sc[S_CONFLICTS]) - before
                if status in (RES_ROOM, RES_REDUCE):
                    if status == RES_ROOM:
                        self._maintain()
                    else:
                        self._reduce_learnts()
                        # locked clauses may survive; never ask again at once
                        live = int(S.sc[S_NLEARNT] - S.sc[S_TRAIL])
                        if live >= S.sc[S_MAXLEARNT]:
                            S.sc[S_MAXLEARNT] = live + live // 10 + 1
                    status = RES_BUDGET
                elif status != RES_BUDGET:
                    break
                if deadline is not None and time.perf_counter() > deadline:
                    return Result(TIMEOUT, None, self._stats(start))
                if budget >= 0 and used >= budget:
                    break
            if status == RES_BUDGET:
                _cancel(S, self.I, self.ctr, 0)
                self.restarts += 1
                S.sc[S_MAXLEARNT] = int(S.sc[S_MAXLEARNT] * 1.1)
        if status == RES_UNSAT:
            return Result(UNSAT, None, self._stats(start))
        return Result(SAT, self.assignment(), self._stats(start))

    # -- clause storage -------------------------------------------------------

    def _reduce_learnts(self):
        """Drop the less active half of the learnt clauses.

        Clauses that are the reason for a current assignment, and binary
        clauses, are kept.
        """
        S, C = self.S, self.C
        S.sc[S_REDUCE] += 1
        ncls = int(S.sc[S_NCLS])
        clen = C.clen[:ncls]
        learnt = np.nonzero((clen > 0) & (C.cflag[:ncls] & F_LEARNT).astype(bool))[0]
        if len(learnt) == 0:
            return
        locked = np.zeros(ncls, bool)
        held = (S.dom != 3) & (S.rkind == R_CLAUSE)
        locked[S.rref[held]] = True
        order = learnt[np.argsort(C.cact[learnt], kind="stable")]
        acts = C.cact[order]
        extra = S.fp[F_CLAINC] / len(order)
        rank = np.arange(len(order))
        drop = ((clen[order] > 2) & ~locked[order]
                & ((rank < len(order) // 2) | (acts < extra)))
        gone = order[drop]
        C.clen[gone] = 0
        C.cflag[gone] = 0
        C.cact[gone] = 0.0
        S.sc[S_NLEARNT] -= len(gone)
        self._maintain()

    def _maintain(self, extra_ids=0, extra_lits=0):
        """Compact the literal arena, rebuild watch blocks, and make room for
        at least one more search step (plus ``extra_*`` for bulk loads)."""
        S, C = self.S, self.C
        nb = self.nbools
        ncls = int(S.sc[S_NCLS])
        clen = C.clen[:ncls]
        live = np.nonzero(clen > 0)[0]
        lens = clen[live].astype(np.int64)
        total = int(lens.sum())
        offs = np.zeros(len(live), np.int64)
        if len(live):
            offs[1:] = np.cumsum(lens)[:-1]
        gather = np.repeat(C.cstart[live] - offs, lens) + np.arange(total)

        need_lits = total + self.reserve_lits + extra_lits
        ca = np.zeros(max(2 * need_lits, 1024), np.int32)
        ca[:total] = C.ca[gather]
        need_ids = len(live) + self.reserve_ids + extra_ids
        cap = max(2 * need_ids, 256, ncls)
        cstart = np.zeros(cap, np.int64)
        cstart[live] = offs
        newlen = np.zeros(cap, np.int32)
        newlen[:ncls] = clen
        cact = np.zeros(cap, np.float64)
        cact[:ncls] = C.cact[:ncls]
        cflag = np.zeros(cap, np.int8)
        cflag[:ncls] = C.cflag[:ncls]
        # free ids, popped from the end: lowest id first
        holes = np.nonzero(newlen[:ncls] == 0)[0][::-1]
        cfree = np.zeros(cap, np.int32)
        cfree[:len(holes)] = holes

        watched = live[lens >= 2]
        first = ca[offs[lens >= 2]]
        second = ca[offs[lens >= 2] + 1]
        wl = np.concatenate([first, second]).astype(np.int64)
        wc = np.concatenate([watched, watched]).astype(np.int32)
        order = np.argsort(wl, kind="stable")
        wl, wc = wl[order], wc[order]
        counts = np.bincount(wl, minlength=2 * nb).astype(np.int64)
        wcap = np.maximum(4, 2 * counts)
        wstart = np.zeros(2 * nb, np.int64)
        if nb:
            wstart[1:] = np.cumsum(wcap)[:-1]
        used = int(wcap.sum())
        nlive = len(watched)
        reserve = 8 * (nlive + need_ids) + 64 + 4 * (extra_ids + 1)
        wa = np.zeros(max(2 * (used + reserve), 1024), np.int32)
        first_of = np.zeros(2 * nb + 1, np.int64)
        first_of[1:] = np.cumsum(counts)
        rank = np.arange(len(wl)) - first_of[wl]
        wa[wstart[wl] + rank] = wc

        self.C = ClauseDB(ca, cstart, newlen, cact, cflag, cfree, wa, wstart,
                          counts.astype(np.int32), wcap.astype(np.int32))
        S.sc[S_CATOP] = total
        S.sc[S_NFREE] = len(holes)
        S.sc[S_WATOP] = used
        S.sc[S_NLIVE] = nlive

    def clauses(self):
        """Live clauses as (literals, learnt) pairs, for inspection and tests."""
        S, C = self.S, self.C
        out = []
        for ci in range(int(S.sc[S_NCLS])):
            n = C.clen[ci]
            if n:
                lits = [int(l) for l in C.ca[C.cstart[ci]:C.cstart[ci] + n]]
                out.append((lits, bool(C.cflag[ci] & F_LEARNT)))
        return out

    def dimacs(self):
        """The Tseitin CNF (tseitin mode only) plus fixed literals, in DIMACS."""
        if not self.config.tseitin:
            raise ValueError("CNF is only built in tseitin mode")
        if self.trivially_unsat:
            return to_dimacs([()], self.model.nbools)
        flat, starts = self.cnf
        cls = [[(l >> 1) + 1 if not l & 1 else -((l >> 1) + 1)
                for l in flat[starts[c]:starts[c + 1]].tolist()]
               for c in range(len(starts) - 1)]
        for nm, elem, val in self.model.fixed:
            b = self.model.var(nm).boolean(elem) + 1
            cls.append([b if val else -b])
        return to_dimacs(cls, self.cnf_vars)

    def assignment(self):
        dom = self.S.dom
        return {v.name: frozenset(i + 1 for i, b in enumerate(v.bools) if dom[b] == 2)
                for v in self.model.setvars}

    def _stats(self, start):
        sc = self.S.sc
        c = self.ctr
        return Stats(
            decisions=int(sc[S_DECISIONS]), conflicts=int(sc[S_CONFLICTS]),
            propagations=int(sc[S_PROPS]), bdd_propagations=int(c[C_BDDPROPS]),
            reasons=int(sc[S_REASONS]), learnts=int(sc[S_LEARNTS]), restarts=self.restarts,
            time_ms=int(round((time.perf_counter() - start) * 1000)),
            inferences=int(sc[S_INFER]), node_visits=int(c[C_VISITS]),
            fset_hits=int(c[C_FSET_HITS]), shortcut_entries=int(c[C_SHORTCUT]),
        )

    # -- stepping interface (level 0 only) ------------------------------------

    def assert_literal(self, name, elem, value):
        b = self.model.var(name).boolean(elem)
        return bool(_assert_literal(self.S, 2 * b + (0 if value else 1)))

    def run_instance(self, i):
        """Run propagator i once at the current level; True unless it fails."""
        if not _room(self.S, self.C, self.reserve_lits, self.reserve_ids):
            self._maintain()
        return _step_instance(self.S, self.C, self.G, self.I, self.W, self.ctr, i) < 0

    def bounds(self, name):
        """Current set bounds of a variable as (lower, upper)."""
        dom = self.S.dom
        v = self.model.var(name)
        lower = frozenset(i + 1 for i, b in enumerate(v.bools) if dom[b] == 2)
        upper = frozenset(i + 1 for i, b in enumerate(v.bools) if dom[b] & 2)
        return lower, upper


def solve(model, config=None):
    return Solver(model, config).solve()
