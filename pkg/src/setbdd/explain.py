"""Clausal explanations for BDD propagation.

``construct_reason`` finds a minimal set of fixed variables that, together
with the constraint, forces an inferred literal (or a failure).  It makes
one bottom-up pass recording which nodes can still reach TRUE, then one
top-down pass over variable ranks, relaxing every variable whose reached
nodes would not open a path to TRUE.

Also here: the Tseitin encoding of a graph into CNF and DIMACS output.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import kernel
from .bdd import FALSE, TRUE


class ExplainError(RuntimeError):
    pass


@kernel
def construct_reason(var, lo, hi, rank_lo, rank_hi, root, nv, D, xvar, sign,
                     reach, fixed, reached, out):
    """Minimal antecedents for ``rank xvar = sign`` (or for failure when xvar < 0).

    ``D`` holds 2-bit domains by rank and is restored before returning.
    ``rank_lo``/``rank_hi`` are this graph's per-rank id ranges.  Writes
    antecedent ranks into ``out`` and returns how many, or -1 when TRUE is
    still reachable (nothing to explain).
    """
    old = 0
    if xvar >= 0:
        old = D[xvar]
        D[xvar] = 1 << (1 - sign)
    reach[0] = 0
    reach[1] = 1
    for r in range(nv - 1, -1, -1):
        d = D[r]
        for n in range(rank_lo[r], rank_hi[r]):
            rl = reach[lo[n]]
            rh = reach[hi[n]]
            rt = 0
            fx = 0
            if d & 1:
                rt |= rl
            else:
                fx |= rl
            if d & 2:
                rt |= rh
            else:
                fx |= rh
            reach[n] = rt
            fixed[n] = fx
            reached[n] = 0
    if reach[root]:
        if xvar >= 0:
            D[xvar] = old
        return -1
    cnt = 0
    if root >= 2:
        reached[root] = 1
        for r in range(nv):
            d = D[r]
            fixedvar = False
            for n in range(rank_lo[r], rank_hi[r]):
                if reached[n] and fixed[n]:
                    fixedvar = True
                    break
            if fixedvar and r != xvar:
                out[cnt] = r
                cnt += 1
            for n in range(rank_lo[r], rank_hi[r]):
                if reached[n]:
                    if not fixedvar or d & 2:
                        reached[hi[n]] = 1
                    if not fixedvar or d & 1:
                        reached[lo[n]] = 1
    if xvar >= 0:
        D[xvar] = old
    return cnt


@dataclass(frozen=True)
class ReasonClause:
    """``inferred`` (a (var, value) pair, or None for a failure) is implied by
    the conjunction of ``antecedents`` (var, value) pairs."""

    inferred: tuple
    antecedents: tuple

    @property
    def clause(self):
        """Literals as (var, positive) pairs; the inferred literal comes first."""
        lits = []
        if self.inferred is not None:
            v, val = self.inferred
            lits.append((v, bool(val)))
        lits.extend((v, not val) for v, val in self.antecedents)
        return lits

    def __len__(self):
        return len(self.antecedents) + (self.inferred is not None)


def _scratch(graph):
    size = len(graph.var)
    return (np.zeros(size, np.int8), np.zeros(size, np.int8), np.zeros(size, np.int8),
            np.zeros(max(graph.nvars, 1), np.int32))


def _domain_array(graph, D):
    d = np.asarray(D, dtype=np.int8).copy()
    if len(d) != graph.nvars:
        raise ValueError(f"domain has {len(d)} entries, graph has {graph.nvars} variables")
    if np.any(d == 0):
        raise ValueError("empty domain")
    return d


def _reason(graph, D, xvar, sign):
    d = _domain_array(graph, D)
    reach, fixed, reached, out = _scratch(graph)
    cnt = construct_reason(graph.var, graph.lo, graph.hi, graph.rank_lo, graph.rank_hi,
                           graph.root, graph.nvars, d, xvar, sign, reach, fixed, reached, out)
    if cnt < 0:
        what = "failure" if xvar < 0 else f"rank {xvar} = {sign}"
        raise ExplainError(f"{what} is not implied by the domain")
    ante = tuple((int(r), 1 if d[r] == 2 else 0) for r in out[:cnt])
    return ante


def explain_inference(graph, D, var, sign):
    """Minimal reason for graph rank ``var`` being forced to ``sign`` under D.

    D is a sequence of 2-bit domains indexed by rank (D[var] may be fixed
    already or free; it is overridden during the computation).
    """
    ante = _reason(graph, D, var, int(sign))
    return ReasonClause((var, int(sign)), ante)


def explain_failure(graph, D):
    """Minimal nogood: a subset of the fixed variables with no model."""
    return ReasonClause(None, _reason(graph, D, -1, 0))


def explain_lazily(graph, D, fix_time, var, sign):
    """Explain an inference made in the past.

    ``fix_time[r]`` orders the fixings; the domain at inference time is
    recovered by freeing every rank fixed no earlier than ``var``.
    """
    past = [d if (d != 3 and fix_time[r] < fix_time[var]) else 3 for r, d in enumerate(D)]
    return explain_inference(graph, past, var, sign)


def naive_reason(D, var, sign):
    """All fixed variables other than var, as the antecedent set."""
    ante = tuple((r, 1 if d == 2 else 0) for r, d in enumerate(D) if d != 3 and r != var)
    return ReasonClause((var, int(sign)), ante)


# ---------------------------------------------------------------------------
# Tseitin encoding

@dataclass(frozen=True)
class CnfEncoding:
    """CNF over DIMACS variables: rank r of the graph is variable r + 1,
    then one auxiliary variable per internal node.  ``root`` is the literal
    that must hold for the constraint (None when the graph is TRUE)."""

    nvars: int
    clauses: tuple
    root: int
    aux: dict
    emitted: int

    @property
    def num_vars(self):
        return self.nvars + len(self.aux)


def bdd_to_cnf(graph):
    if graph.root == FALSE:
        raise ExplainError("graph is FALSE")
    nv = graph.nvars
    lit = {FALSE: False, TRUE: True}
    aux = {}
    clauses = []
    emitted = 0
    # ids increase from the bottom, so children are encoded first
    for n in range(2, len(graph.var)):
        a = nv + 1 + len(aux)
        aux[n] = a
        lit[n] = a
        x = int(graph.var[n]) + 1
        f = lit[int(graph.lo[n])]
        t = lit[int(graph.hi[n])]
        templates = [
            (-x, _neg(t), a), (x, _neg(f), a), (-x, t, -a),
            (x, f, -a), (_neg(t), _neg(f), a), (t, f, -a),
        ]
        emitted += len(templates)
        for cl in templates:
            simplified = _simplify(cl)
            if simplified is not None:
                clauses.append(simplified)
    root = None if graph.root == TRUE else lit[graph.root]
    return CnfEncoding(nv, tuple(clauses), root, aux, emitted)


def _neg(l):
    if l is True:
        return False
    if l is False:
        return True
    return -l


def _simplify(clause):
    out = []
    for l in clause:
        if l is True:
            return None
        if l is False:
            continue
        if -l in out:
            return None
        if l not in out:
            out.append(l)
    return tuple(out)


def to_dimacs(clauses, num_vars):
    lines = [f"p cnf {num_vars} {len(clauses)}"]
    for cl in clauses:
        lines.append(" ".join(str(l) for l in cl) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text):
    num_vars = 0
    clauses = []
    cur = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            num_vars = int(line.split()[2])
            continue
        for tok in line.split():
            v = int(tok)
            if v == 0:
                clauses.append(tuple(cur))
                cur = []
            else:
                cur.append(v)
    return clauses, num_vars
