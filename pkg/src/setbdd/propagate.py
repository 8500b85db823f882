"""Set-bounds propagation over frozen BDD templates.

All templates and instances of one solver are packed into flat arrays
(``Graphs``, ``Insts``, ``Work``) so that the traversal kernels run under
numba.  Domains use a 2-bit code per Boolean: bit 0 set when the value 0 is
allowed, bit 1 when the value 1 is allowed (3 = free, 1 = false, 2 = true).

Per-template memo arrays (visit/save/matters) are shared by every instance
of that template; a global time stamp distinguishes runs.  Failure sets and
wake flags are per instance.
"""
from collections import namedtuple

import numpy as np

from ._jit import kernel
from .sparse import sparse_insert, sparse_member, STD, MOD

# propagation modes
BASE = 0       # plain traversal
MEMO = 1       # with dead-subgraph memoization
SHORTCUT = 2   # memoization plus shortcutting

# counter slots
C_TIME = 0
C_BDDPROPS = 1
C_VISITS = 2
C_FSET_HITS = 3
C_SHORTCUT = 4
C_UNDO = 5
N_COUNTERS = 8

Graphs = namedtuple("Graphs", [
    "var", "lo", "hi",          # per global node id
    "visit", "save",            # per global node id
    "rank_lo", "rank_hi",       # per template rank (offset t_roff)
    "matters",                  # 2 slots per template rank
    "t_root", "t_nv", "t_base", "t_nn", "t_roff",
])

Insts = namedtuple("Insts", [
    "tmpl", "voff", "bools",    # bools[voff[i] + r] = actual Boolean of rank r
    "foff", "sparse", "dense", "members",
    "hwater", "flags",          # flags[2 * (voff[i] + r) + polarity]
    "runlevel", "runepoch", "fepoch",
    "occ_start", "occ_inst", "occ_rank",
    "undo_inst", "undo_mem",
])

Work = namedtuple("Work", [
    "E", "E2", "D",
    "st_node", "st_ph", "st_acc", "st_max",
    "reach", "fixed", "reached", "ante",
])


def build_store(instances, nbools):
    """Pack instances (and their distinct templates) into flat arrays."""
    templates = []
    tindex = {}
    for inst in instances:
        key = id(inst.template)
        if key not in tindex:
            tindex[key] = len(templates)
            templates.append(inst.template)
    nt = len(templates)
    t_root = np.zeros(nt, np.int32)
    t_nv = np.zeros(nt, np.int32)
    t_base = np.zeros(nt, np.int32)
    t_nn = np.zeros(nt, np.int32)
    t_roff = np.zeros(nt, np.int32)
    total = 2
    roff = 0
    for t, tpl in enumerate(templates):
        g = tpl.graph
        t_nn[t] = g.node_count
        t_nv[t] = g.nvars
        t_base[t] = total - 2
        t_roff[t] = roff
        total += g.node_count
        roff += g.nvars
    var = np.zeros(total, np.int32)
    lo = np.zeros(total, np.int32)
    hi = np.zeros(total, np.int32)
    lo[1] = hi[1] = 1
    rank_lo = np.zeros(max(roff, 1), np.int32)
    rank_hi = np.zeros(max(roff, 1), np.int32)
    for t, tpl in enumerate(templates):
        g = tpl.graph
        b = t_base[t]
        m = g.node_count
        if m:
            var[b + 2:b + 2 + m] = g.var[2:]
            glo = g.lo[2:].astype(np.int32)
            ghi = g.hi[2:].astype(np.int32)
            lo[b + 2:b + 2 + m] = np.where(glo >= 2, glo + b, glo)
            hi[b + 2:b + 2 + m] = np.where(ghi >= 2, ghi + b, ghi)
            rank_lo[t_roff[t]:t_roff[t] + g.nvars] = g.rank_lo + b
            rank_hi[t_roff[t]:t_roff[t] + g.nvars] = g.rank_hi + b
        t_root[t] = g.root + b if g.root >= 2 else g.root
    graphs = Graphs(var, lo, hi, np.zeros(total, np.int64), np.zeros(total, np.int8),
                    rank_lo, rank_hi, np.zeros(2 * max(roff, 1), np.int64),
                    t_root, t_nv, t_base, t_nn, t_roff)

    ni = len(instances)
    tmpl = np.zeros(ni, np.int32)
    voff = np.zeros(ni + 1, np.int32)
    foff = np.zeros(ni + 1, np.int32)
    for i, inst in enumerate(instances):
        t = tindex[id(inst.template)]
        tmpl[i] = t
        voff[i + 1] = voff[i] + t_nv[t]
        foff[i + 1] = foff[i] + t_nn[t] + 2
    bools = np.zeros(max(voff[-1], 1), np.int32)
    for i, inst in enumerate(instances):
        bools[voff[i]:voff[i + 1]] = inst.bools
    nf = max(foff[-1], 1)
    sparse = np.zeros(nf, np.int32)
    for i in range(ni):
        sparse[foff[i]:foff[i + 1]] = np.arange(foff[i + 1] - foff[i])
    dense = sparse.copy()
    # occurrence lists: Boolean -> (instance, rank)
    counts = np.zeros(nbools + 1, np.int32)
    for i in range(ni):
        for b in bools[voff[i]:voff[i + 1]]:
            counts[b + 1] += 1
    occ_start = np.cumsum(counts).astype(np.int32)
    fill = occ_start[:-1].copy()
    occ_inst = np.zeros(max(occ_start[-1], 1), np.int32)
    occ_rank = np.zeros(max(occ_start[-1], 1), np.int32)
    for i in range(ni):
        for r in range(voff[i + 1] - voff[i]):
            b = bools[voff[i] + r]
            occ_inst[fill[b]] = i
            occ_rank[fill[b]] = r
            fill[b] += 1
    undo_cap = ni * (nbools + 2) + 1
    insts = Insts(tmpl, voff, bools, foff, sparse, dense, np.zeros(max(ni, 1), np.int32),
                  np.zeros(max(ni, 1), np.int32), np.ones(2 * max(voff[-1], 1), np.int8),
                  np.full(max(ni, 1), -1, np.int32), np.zeros(max(ni, 1), np.int64),
                  np.full(max(ni, 1), -1, np.int64),
                  occ_start, occ_inst, occ_rank,
                  np.zeros(undo_cap, np.int32), np.zeros(undo_cap, np.int32))
    maxv = int(max(t_nv.max(initial=0), 1)) + 1
    work = Work(np.zeros(maxv, np.int8), np.zeros(maxv, np.int8), np.zeros(maxv, np.int8),
                np.zeros(total + 1, np.int32), np.zeros(total + 1, np.int8),
                np.zeros(total + 1, np.int8), np.zeros(total + 1, np.int32),
                np.zeros(total, np.int8), np.zeros(total, np.int8), np.zeros(total, np.int8),
                np.zeros(maxv, np.int32))
    return graphs, insts, work, templates


# ---------------------------------------------------------------------------
# kernels

@kernel(inline="always")
def _top(G, c, nv):
    return nv if c < 2 else G.var[c]


@kernel
def _fset_insert(I, ctr, i, local, variant, epoch):
    if epoch > 0 and I.fepoch[i] != epoch:
        k = ctr[C_UNDO]
        I.undo_inst[k] = i
        I.undo_mem[k] = I.members[i]
        ctr[C_UNDO] = k + 1
        I.fepoch[i] = epoch
    sparse_insert(I.sparse, I.dense, I.foff[i], I.members, i, local, variant)


@kernel(inline="always")
def _quick(visit, save, sparse, dense, members, foff, ctr, i, c, base, memo, variant, time):
    """Result of a child without entering it, or -1 if it must be explored."""
    if c == 0:
        return 1
    if c == 1:
        return 2
    if memo and sparse_member(sparse, dense, foff, members, i, c - base, variant):
        ctr[C_FSET_HITS] += 1
        return 1
    if visit[c] >= time:
        return save[c]
    return -1


@kernel
def _bddp(G, I, W, ctr, t, i, memo, literal, variant, epoch, time):
    """Full traversal; returns reachf | reacht << 1 for the root."""
    visit = G.visit
    save = G.save
    matters = G.matters
    sparse = I.sparse
    dense = I.dense
    members = I.members
    foff = I.foff[i]
    nv = G.t_nv[t]
    base = G.t_base[t]
    moff = 2 * G.t_roff[t]
    var = G.var
    lo = G.lo
    hi = G.hi
    E = W.E
    E2 = W.E2
    st_node = W.st_node
    st_ph = W.st_ph
    st_acc = W.st_acc
    root = G.t_root[t]
    q = _quick(visit, save, sparse, dense, members, foff, ctr, i, root, base, memo, variant, time)
    if q >= 0:
        return q
    st_node[0] = root
    st_ph[0] = 0
    sp = 1
    res = 0
    while sp > 0:
        n = st_node[sp - 1]
        ph = st_ph[sp - 1]
        v = var[n]
        if ph == 0:
            ctr[C_VISITS] += 1
            res = 0
            if E[v] & 1:
                q = _quick(visit, save, sparse, dense, members, foff, ctr, i, lo[n], base, memo, variant, time)
                if q < 0:
                    st_ph[sp - 1] = 1
                    st_node[sp] = lo[n]
                    st_ph[sp] = 0
                    sp += 1
                    continue
                res = q
            ph = 1
        if ph == 1:
            acc = 0
            if E[v] & 1:
                acc = res | (res << 2)
                if res & 2:
                    tc = _top(G, lo[n], nv)
                    for v2 in range(v + 1, tc):
                        E2[v2] = E[v2]
                    E2[v] |= 1
            st_acc[sp - 1] = acc
            res = 0
            if E[v] & 2:
                q = _quick(visit, save, sparse, dense, members, foff, ctr, i, hi[n], base, memo, variant, time)
                if q < 0:
                    st_ph[sp - 1] = 2
                    st_node[sp] = hi[n]
                    st_ph[sp] = 0
                    sp += 1
                    continue
                res = q
        # both branches done; res holds the t-branch result (0 if unexplored)
        acc = st_acc[sp - 1]
        if E[v] & 2:
            if res & 2:
                tc = _top(G, hi[n], nv)
                for v2 in range(v + 1, tc):
                    E2[v2] = E[v2]
                E2[v] |= 2
            acc |= res & 3
        rf = acc & 1
        rt = (acc >> 1) & 1
        mi = moff + 2 * v
        if literal:
            if (acc >> 3) & 1 and res & 1:
                matters[mi] = time
            if res & 2 and (acc >> 2) & 1:
                matters[mi + 1] = time
        elif rf and rt:
            matters[mi] = time
        r = rf | (rt << 1)
        save[n] = r
        if memo and not rt:
            _fset_insert(I, ctr, i, n - base, variant, epoch)
        visit[n] = time
        res = r
        sp -= 1
    return res


@kernel
def _shortcut(G, I, W, ctr, t, i, n0, sp0, literal, variant, epoch, time):
    """Only establish whether n0 reaches TRUE, stopping at the first path."""
    visit = G.visit
    save = G.save
    matters = G.matters
    sparse = I.sparse
    dense = I.dense
    members = I.members
    foff = I.foff[i]
    base = G.t_base[t]
    moff = 2 * G.t_roff[t]
    var = G.var
    lo = G.lo
    hi = G.hi
    E = W.E
    st_node = W.st_node
    st_ph = W.st_ph
    st_acc = W.st_acc
    st_node[sp0] = n0
    st_ph[sp0] = 0
    sp = sp0 + 1
    res = 0
    while sp > sp0:
        n = st_node[sp - 1]
        ph = st_ph[sp - 1]
        v = var[n]
        mi = moff + 2 * v
        if ph == 0:
            ctr[C_VISITS] += 1
            ctr[C_SHORTCUT] += 1
            st_acc[sp - 1] = 0
            if E[v] & 1:
                q = _quick(visit, save, sparse, dense, members, foff, ctr, i, lo[n], base, True, variant, time)
                if q < 0:
                    st_ph[sp - 1] = 1
                    st_node[sp] = lo[n]
                    st_ph[sp] = 0
                    sp += 1
                    continue
                res = q
                ph = 1
            else:
                ph = 3
        if ph == 1:
            if res & 2:
                r = res & 3
                if E[v] & 2:
                    matters[mi] = time
                    if literal:
                        matters[mi + 1] = time
                    r = 3
                visit[n] = time
                save[n] = r
                res = r
                sp -= 1
                continue
            st_acc[sp - 1] = res & 1
            ph = 3
        if ph == 3:
            if E[v] & 2:
                q = _quick(visit, save, sparse, dense, members, foff, ctr, i, hi[n], base, True, variant, time)
                if q < 0:
                    st_ph[sp - 1] = 2
                    st_node[sp] = hi[n]
                    st_ph[sp] = 0
                    sp += 1
                    continue
                res = q
            else:
                res = 1
        # ph == 2 or fallthrough: res is the t-branch result
        if res & 2:
            r = res & 3
            if st_acc[sp - 1]:
                matters[mi] = time
                if literal:
                    matters[mi + 1] = time
                r = 3
            visit[n] = time
            save[n] = r
            res = r
        else:
            _fset_insert(I, ctr, i, n - base, variant, epoch)
            res = 1
        sp -= 1
    return res


@kernel
def _imp_bddp(G, I, W, ctr, t, i, literal, variant, epoch, time):
    """Traversal with dead-subgraph memoization and shortcutting."""
    visit = G.visit
    save = G.save
    matters = G.matters
    sparse = I.sparse
    dense = I.dense
    members = I.members
    foff = I.foff[i]
    nv = G.t_nv[t]
    base = G.t_base[t]
    moff = 2 * G.t_roff[t]
    var = G.var
    lo = G.lo
    hi = G.hi
    E = W.E
    E2 = W.E2
    st_node = W.st_node
    st_ph = W.st_ph
    st_acc = W.st_acc
    st_max = W.st_max
    hwater = nv
    root = G.t_root[t]
    q = _quick(visit, save, sparse, dense, members, foff, ctr, i, root, base, True, variant, time)
    if q >= 0:
        I.hwater[i] = hwater
        return q
    st_node[0] = root
    st_ph[0] = 0
    sp = 1
    res = 0
    while sp > 0:
        n = st_node[sp - 1]
        ph = st_ph[sp - 1]
        v = var[n]
        if ph == 0:
            if v >= hwater:
                res = _shortcut(G, I, W, ctr, t, i, n, sp, literal, variant, epoch, time)
                sp -= 1
                continue
            ctr[C_VISITS] += 1
            res = 0
            if E[v] & 1:
                q = _quick(visit, save, sparse, dense, members, foff, ctr, i, lo[n], base, True, variant, time)
                if q < 0:
                    st_ph[sp - 1] = 1
                    st_node[sp] = lo[n]
                    st_ph[sp] = 0
                    sp += 1
                    continue
                res = q
            ph = 1
        if ph == 1:
            acc = 0
            maxvar = v
            if E[v] & 1:
                acc = res | (res << 2)
                if res & 2:
                    tc = _top(G, lo[n], nv)
                    maxvar = tc
                    E2[v] |= 1
                    if hwater <= tc:
                        if E2[v] == E[v]:
                            hwater = v
                            # remaining support is settled; skip the t-branch
                            acc |= 1 | 16
                            ph = 3
                        elif v + 1 < hwater:
                            # ranks skipped by the arc get full support at cleanup
                            hwater = v + 1
            st_acc[sp - 1] = acc
            st_max[sp - 1] = maxvar
            if ph == 1:
                res = 0
                if E[v] & 2:
                    q = _quick(visit, save, sparse, dense, members, foff, ctr, i, hi[n], base, True, variant, time)
                    if q < 0:
                        st_ph[sp - 1] = 2
                        st_node[sp] = hi[n]
                        st_ph[sp] = 0
                        sp += 1
                        continue
                    res = q
                ph = 2
        acc = st_acc[sp - 1]
        maxvar = st_max[sp - 1]
        if ph != 3:
            # t-branch finished
            if E[v] & 2:
                acc |= res & 3
                if res & 2:
                    tc = _top(G, hi[n], nv)
                    if tc > maxvar:
                        maxvar = tc
                    E2[v] |= 2
                    if hwater <= tc:
                        if E2[v] == E[v]:
                            hwater = v
                        elif v + 1 < hwater:
                            hwater = v + 1
            if not (acc & 2):
                _fset_insert(I, ctr, i, n - base, variant, epoch)
        # cleanup
        for v2 in range(v + 1, maxvar):
            E2[v2] = E[v2]
        rf = acc & 1
        rt = (acc >> 1) & 1
        mi = moff + 2 * v
        if literal:
            if acc & 16:
                if E[v] == 3:
                    matters[mi] = time
                    matters[mi + 1] = time
            else:
                rf1 = res & 1 if E[v] & 2 else 0
                rt1 = (res >> 1) & 1 if E[v] & 2 else 0
                if (acc >> 3) & 1 and rf1:
                    matters[mi] = time
                if rt1 and (acc >> 2) & 1:
                    matters[mi + 1] = time
        elif rf and rt:
            matters[mi] = time
        r = rf | (rt << 1)
        save[n] = r
        visit[n] = time
        res = r
        sp -= 1
    I.hwater[i] = hwater
    return res


@kernel
def load_domain(G, I, W, i, dom):
    t = I.tmpl[i]
    nv = G.t_nv[t]
    off = I.voff[i]
    for r in range(nv):
        W.E[r] = dom[I.bools[off + r]]
        W.E2[r] = 0
    return nv


@kernel
def run_propagator(G, I, W, ctr, i, dom, mode, literal, variant, epoch):
    """Propagate instance i on dom.  W.E gets the input, W.E2 the result.

    Returns False on failure.  dom itself is not modified.
    """
    t = I.tmpl[i]
    load_domain(G, I, W, i, dom)
    ctr[C_TIME] += 1
    ctr[C_BDDPROPS] += 1
    time = ctr[C_TIME]
    if mode == SHORTCUT:
        res = _imp_bddp(G, I, W, ctr, t, i, literal, variant, epoch, time)
    else:
        res = _bddp(G, I, W, ctr, t, i, mode == MEMO, literal, variant, epoch, time)
    return (res >> 1) & 1 == 1


@kernel
def update_flags(G, I, W, ctr, i, literal):
    """Record which literals should wake instance i after a successful run."""
    t = I.tmpl[i]
    nv = G.t_nv[t]
    off = I.voff[i]
    moff = 2 * G.t_roff[t]
    time = ctr[C_TIME]
    for r in range(nv):
        f = 2 * (off + r)
        if W.E2[r] != 3:
            I.flags[f] = 0
            I.flags[f + 1] = 0
        elif literal:
            I.flags[f] = G.matters[moff + 2 * r] >= time
            I.flags[f + 1] = G.matters[moff + 2 * r + 1] >= time
        else:
            m = G.matters[moff + 2 * r] >= time
            I.flags[f] = m
            I.flags[f + 1] = m


@kernel
def restore_fsets(I, ctr, upto):
    k = ctr[C_UNDO]
    while k > upto:
        k -= 1
        I.members[I.undo_inst[k]] = I.undo_mem[k]
    ctr[C_UNDO] = upto


# ---------------------------------------------------------------------------
# Python-level facade, mainly for tests and tooling

class PropagationStore:
    """Propagators for a list of instances over ``nbools`` Booleans.

    Levels emulate the solver's decision levels so that failure sets can be
    rolled back.  ``mode`` picks BASE, MEMO or SHORTCUT traversal.
    """

    def __init__(self, instances, nbools, mode=SHORTCUT, sparse=MOD, literal=False):
        if mode not in (BASE, MEMO, SHORTCUT):
            raise ValueError("bad mode")
        self.instances = list(instances)
        self.nbools = nbools
        self.mode = mode
        self.sparse = sparse
        self.literal = literal
        self.G, self.I, self.W, self.templates = build_store(self.instances, nbools)
        self.ctr = np.zeros(N_COUNTERS, np.int64)
        self._levels = []      # (epoch, undo mark) per open level
        self._epoch_counter = 0

    @property
    def level(self):
        return len(self._levels)

    def _epoch(self):
        return self._levels[-1][0] if self._levels else 0

    def push_level(self):
        self._epoch_counter += 1
        self._levels.append((self._epoch_counter, int(self.ctr[C_UNDO])))

    def backtrack(self, level):
        """Undo failure-set insertions of levels above ``level``."""
        if level < len(self._levels):
            mark = self._levels[level][1]
            del self._levels[level:]
            restore_fsets(self.I, self.ctr, mark)

    def propagate(self, i, dom, mode=None):
        """Run instance i on dom (int8 array over Booleans), updating dom.

        Returns (failed, changed Booleans).
        """
        mode = self.mode if mode is None else mode
        ok = run_propagator(self.G, self.I, self.W, self.ctr, i, dom, mode,
                            self.literal, self.sparse, self._epoch())
        self.I.runlevel[i] = self.level
        if not ok:
            return True, []
        update_flags(self.G, self.I, self.W, self.ctr, i, self.literal)
        nv = self.instances[i].bools.shape[0]
        changed = []
        for r in range(nv):
            if self.W.E2[r] != self.W.E[r]:
                b = int(self.instances[i].bools[r])
                dom[b] = self.W.E2[r]
                changed.append(b)
        return False, changed

    def vars(self, i):
        """Booleans that (variable-level) matter to instance i after its last run."""
        off = self.I.voff[i]
        inst = self.instances[i]
        return {int(inst.bools[r]) for r in range(len(inst.bools))
                if self.I.flags[2 * (off + r)] or self.I.flags[2 * (off + r) + 1]}

    def should_wake(self, i, boolean, value):
        """Would fixing ``boolean`` to ``value`` wake instance i?"""
        if self.I.runlevel[i] < 0:
            return True
        inst = self.instances[i]
        hits = np.nonzero(inst.bools == boolean)[0]
        if not len(hits):
            return False
        r = int(hits[0])
        return bool(self.I.flags[2 * (self.I.voff[i] + r) + (0 if value else 1)])

    def fset(self, i):
        """Local node ids (graph ids) currently in instance i's failure set."""
        off = self.I.foff[i]
        m = int(self.I.members[i])
        size = int(self.I.foff[i + 1] - off)
        sp = self.I.sparse[off:off + size]
        dn = self.I.dense[off:off + size]
        if self.sparse == MOD:
            return set(dn[:m].tolist())
        return {n for n in range(size) if sp[n] < m and dn[sp[n]] == n}

    def counters(self):
        c = self.ctr
        return {"propagations": int(c[C_BDDPROPS]), "node_visits": int(c[C_VISITS]),
                "fset_hits": int(c[C_FSET_HITS]), "shortcut_entries": int(c[C_SHORTCUT])}
