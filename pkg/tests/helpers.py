"""Shared fixtures for propagation tests: templates bound to identity Booleans."""
import itertools
import random

import numpy as np

from setbdd.constraints import (ConstraintSpec, SetVarDecl, UnsatisfiableConstraint,
                                build_template, formal_index, instantiate)
from setbdd.explain import explain_failure, explain_inference
from setbdd.propagate import PropagationStore
from setbdd.sparse import MOD, SparseSet

import oracle

# (kind, params, arity) with params scaled to the universe by param_for
KINDS = [
    ("member", 1), ("eq", 2), ("subset", 2), ("union", 3), ("inter", 3),
    ("card_eq", 1), ("card_le", 1), ("lex_lt", 2), ("lex_le", 2),
    ("inter_card_le", 2), ("symdiff_card_ge", 2), ("partition_lex", 2),
    ("partition_lex", 3), ("cover", 2), ("cover", 3),
]


def params_for(kind, n, rng):
    if kind == "member":
        return (rng.randint(1, n),)
    if kind in ("card_eq", "card_le", "inter_card_le"):
        return (rng.randint(0, n),)
    if kind == "symdiff_card_ge":
        return (rng.randint(0, n),)
    return ()


def identity_vars(n, arity):
    return [SetVarDecl(f"y{j}", n, tuple(formal_index(i, j, arity) for i in range(1, n + 1)))
            for j in range(arity)]


def enumerate_spec(kind, params, arity, n):
    """Oracle constraint over all n*arity formal Booleans, from set semantics."""
    nb = n * arity

    def pred(bits):
        sets = [frozenset(i for i in range(1, n + 1) if bits[formal_index(i, j, arity)])
                for j in range(arity)]
        return oracle.holds(kind, params, sets, n)

    return oracle.EnumeratedConstraint.from_predicate(pred, nb)


def random_domain(nb, rng, pfree=None):
    pfree = rng.choice([0.3, 0.6, 0.85]) if pfree is None else pfree
    return np.array([3 if rng.random() < pfree else rng.choice([1, 2]) for _ in range(nb)],
                    dtype=np.int8)


def single_store(spec, n, **kw):
    t = build_template(spec, n)
    inst = instantiate(t, identity_vars(n, t.arity))
    return PropagationStore([inst], n * t.arity, **kw), t


def store_or_none(spec, n, **kw):
    """single_store, or None when the constraint has no solutions at all."""
    try:
        return single_store(spec, n, **kw)[0]
    except UnsatisfiableConstraint:
        return None


# ---------------------------------------------------------------------------
# explanations

def rank_enum(template, kind, params):
    """Models of the constraint over graph ranks, from set semantics."""
    full = enumerate_spec(kind, params, template.arity, template.n)
    vs = template.graph.varset
    models = {tuple(m[v] for v in vs) for m in full.models}
    return oracle.EnumeratedConstraint(sorted(models), len(vs))


def random_case(rng, max_n=3):
    while True:
        kind, arity = rng.choice(KINDS)
        n = rng.randint(1, max_n)
        params = params_for(kind, n, rng)
        try:
            t = build_template(ConstraintSpec(kind, params, arity), n)
        except UnsatisfiableConstraint:
            continue
        if t.graph.nvars:
            return kind, params, t


def entailed(enum, ante, lit):
    return oracle.oracle_entails(enum, list(ante), lit)


def check_minimal_inference(enum, ante, lit):
    for k in range(len(ante)):
        rest = ante[:k] + ante[k + 1:]
        assert not entailed(enum, rest, lit), (ante, k)


def check_minimal_failure(enum, ante):
    for k in range(len(ante)):
        assert not oracle.oracle_unsat(enum, ante[:k] + ante[k + 1:]), (ante, k)


def explained_inferences(rng, count):
    """Yield (enum, domain, rank, value, reason) for oracle-confirmed inferences."""
    made = 0
    while made < count:
        kind, params, t = random_case(rng)
        g = t.graph
        enum = rank_enum(t, kind, params)
        dom = random_domain(g.nvars, rng).tolist()
        res = oracle.oracle_sb(enum, dom)
        if res is None:
            yield enum, dom, None, None, explain_failure(g, dom)
            made += 1
            continue
        for r in range(g.nvars):
            if dom[r] == 3 and res[r] != 3:
                val = res[r] >> 1
                yield enum, dom, r, val, explain_inference(g, dom, r, val)
                made += 1


def tseitin_models(cnf, nvars):
    """Projected models of CNF and root over the first nvars variables.

    Auxiliaries are functionally defined, so unit propagation from a full
    input assignment settles them; anything left open is branched on.
    """
    out = set()
    clauses = list(cnf.clauses) + ([(cnf.root,)] if cnf.root is not None else [])
    total = cnf.num_vars
    for bits in itertools.product((0, 1), repeat=nvars):
        val = {i + 1: bool(b) for i, b in enumerate(bits)}
        if satisfiable(clauses, val, total):
            out.add(bits)
    return out


def satisfiable(clauses, val, total):
    val = dict(val)
    changed = True
    while changed:
        changed = False
        for cl in clauses:
            open_lits = []
            sat = False
            for l in cl:
                v = val.get(abs(l))
                if v is None:
                    open_lits.append(l)
                elif v == (l > 0):
                    sat = True
                    break
            if sat:
                continue
            if not open_lits:
                return False
            if len(open_lits) == 1:
                l = open_lits[0]
                val[abs(l)] = l > 0
                changed = True
    free = [v for v in range(1, total + 1) if v not in val]
    if not free:
        return True
    for b in (False, True):
        if satisfiable(clauses, {**val, free[0]: b}, total):
            return True
    return False


# ---------------------------------------------------------------------------
# sparse sets

def run_differential(variant, ops, seed, size=24):
    rng = random.Random(seed)
    s = SparseSet(size, variant)
    ref = set()
    undo = []  # stack of (checkpoint, snapshot of reference)
    for _ in range(ops):
        r = rng.random()
        if r < 0.4:
            n = rng.randrange(size)
            if n not in ref:
                s.insert(n)
                ref.add(n)
        elif r < 0.75:
            n = rng.randrange(size)
            assert s.member(n) == (n in ref)
        elif r < 0.88:
            undo.append((s.mark(), set(ref)))
        elif undo:
            cp, snap = undo.pop()
            s.restore(cp)
            ref = snap
        if variant == MOD:
            assert np.array_equal(s.dense[s.sparse], np.arange(size))
    assert s.elements() == ref
