"""Acceptance suite.

Each test checks one acceptance criterion and prints a single line
``criterion N: PASS|FAIL - detail`` to the terminal, whatever the outcome.
"""
import random
import time
from functools import lru_cache

import numpy as np
import pytest

from setbdd import ConstraintSpec, Solver, SolverConfig, check_solution
from setbdd.constraints import build_template
from setbdd.explain import bdd_to_cnf, explain_inference
from setbdd.models import (gen_hamming, gen_social_golfers, gen_steiner, maximal_hamming,
                           steiner_blocks)
from setbdd.propagate import BASE, MEMO, SHORTCUT
from setbdd.solver import SAT, UNSAT, VARIANTS
from setbdd.sparse import MOD, STD

import oracle
from helpers import (KINDS, entailed, enumerate_spec, explained_inferences, params_for,
                     random_domain, rank_enum, run_differential, single_store, store_or_none,
                     tseitin_models)
from test_solver import example1_unfixed

GOLFERS_SAT = [(2, 5, 4), (2, 6, 4), (2, 7, 4), (2, 8, 5), (3, 5, 4), (3, 6, 4), (3, 7, 4),
              (4, 5, 4), (4, 6, 5), (4, 7, 4), (4, 9, 4), (5, 5, 4), (5, 7, 4), (5, 8, 3),
              (6, 5, 3), (6, 6, 3), (7, 5, 3)]
GOLFERS_UNSAT = [(5, 4, 3), (6, 4, 3), (7, 5, 5)]
GOLFERS = sorted(GOLFERS_SAT + GOLFERS_UNSAT)
STEINER = [(2, 3, 7), (2, 3, 9), (2, 3, 13)]
HAMMING = [(4, 2, 2, 6), (4, 2, 2, 7), (8, 4, 3, 8), (8, 4, 3, 9), (10, 6, 5, 6), (10, 6, 5, 7)]
INSTANCE_TIMEOUT = 60


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


@lru_cache(maxsize=None)
def golfers_default(w, g, s):
    model = gen_social_golfers(w, g, s)
    res = Solver(model).solve(timeout=INSTANCE_TIMEOUT)
    checked = res.status != SAT or bool(check_solution(model, res.assignment))
    return res.status, checked, res.stats.time_ms


# -- 1 ----------------------------------------------------------------------

IMPROVED = [dict(mode=MEMO, sparse=STD), dict(mode=MEMO, sparse=MOD),
            dict(mode=SHORTCUT, sparse=STD), dict(mode=SHORTCUT, sparse=MOD),
            dict(mode=SHORTCUT, literal=True), dict(mode=MEMO, literal=True)]


def test_criterion_1_oracle_equivalence(capsys):
    start = time.perf_counter()
    rng = random.Random(1)
    bad = []
    per_kind = {}
    for kind, arity in KINDS:
        count = 0
        while count < 1000:
            n = rng.randint(1, 5)
            params = params_for(kind, n, rng)
            spec = ConstraintSpec(kind, params, arity)
            enum = enumerate_spec(kind, params, arity, n)
            base = store_or_none(spec, n, mode=BASE)
            if base is None:
                if enum.models:
                    bad.append((kind, params, n, "template FALSE but solutions exist"))
                continue
            others = [single_store(spec, n, **kw)[0] for kw in IMPROVED]
            for _ in range(50):
                dom = random_domain(n * arity, rng)
                want = oracle.oracle_sb(enum, dom.tolist())
                d = dom.copy()
                failed, _ = base.propagate(0, d)
                if failed != (want is None) or (not failed and d.tolist() != want):
                    bad.append((kind, params, n, dom.tolist()))
                for s in others:
                    s.push_level()
                    d2 = dom.copy()
                    f2, _ = s.propagate(0, d2)
                    if f2 != failed or (not failed and d2.tolist() != d.tolist()):
                        bad.append((kind, params, n, dom.tolist(), "improved"))
                    s.backtrack(0)
                count += 1
        per_kind[(kind, arity)] = count
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 120 and min(per_kind.values()) >= 1000
    report(capsys, 1, ok, f"{len(per_kind)} kind/arity pairs x >= {min(per_kind.values())} "
                          f"domains, {len(bad)} mismatches, {elapsed:.1f}s")


# -- 2 ----------------------------------------------------------------------

def test_criterion_2_worked_examples(capsys):
    problems = []
    # nine-row propagation table
    s = Solver(example1_unfixed())
    inter, card_x, card_y, card_z = range(4)
    full = {1, 2, 3, 4}
    steps = [
        (None, (set(), full), (set(), full), (set(), full)),
        (("z", 3, False), (set(), full), (set(), full), (set(), {1, 2, 4})),
        (("z", 1, True), (set(), full), (set(), full), ({1}, {1, 2, 4})),
        (inter, ({1}, full), ({1}, full), ({1}, {1, 2, 4})),
        (("y", 2, False), ({1}, full), ({1}, {1, 3, 4}), ({1}, {1, 2, 4})),
        (card_y, ({1}, full), ({1, 3, 4}, {1, 3, 4}), ({1}, {1, 2, 4})),
        (inter, ({1}, {1, 2, 4}), ({1, 3, 4}, {1, 3, 4}), ({1}, {1, 4})),
        (card_z, ({1}, {1, 2, 4}), ({1, 3, 4}, {1, 3, 4}), ({1, 4}, {1, 4})),
        (card_x, ({1, 2, 4}, {1, 2, 4}), ({1, 3, 4}, {1, 3, 4}), ({1, 4}, {1, 4})),
    ]
    for k, (action, x, y, z) in enumerate(steps):
        if isinstance(action, tuple):
            s.assert_literal(*action)
        elif action is not None:
            s.run_instance(action)
        got = [s.bounds(nm) for nm in "xyz"]
        want = [(frozenset(a), frozenset(b)) for a, b in (x, y, z)]
        if got != want:
            problems.append(f"table row {k}")
    # x = y | z with 1 in y and 2 in z
    store, t = single_store(ConstraintSpec("union"), 2, mode=BASE)
    dom = np.full(6, 3, np.int8)
    dom[1] = dom[5] = 2
    failed, changed = store.propagate(0, dom)
    if failed or sorted(changed) != [0, 3] or store.vars(0) != set():
        problems.append("union outcome")
    # minimal reason for 2 in x
    g = t.graph
    rank = {t.formal_of_rank(r): r for r in range(g.nvars)}
    d = [3] * g.nvars
    d[rank[(1, 1)]] = d[rank[(2, 2)]] = 2
    reason = explain_inference(g, d, rank[(0, 2)], 1)
    if reason.clause != [(rank[(0, 2)], True), (rank[(2, 2)], False)]:
        problems.append("minimal reason")
    report(capsys, 2, not problems,
           "table rows, union outcome and minimal reason x2 | -z2 reproduced" if not problems
           else f"mismatch in {', '.join(problems)}")


# -- 3 ----------------------------------------------------------------------

def test_criterion_3_golfers_statuses(capsys):
    wrong = []
    slowest = 0
    for inst in GOLFERS:
        status, checked, ms = golfers_default(*inst)
        want = UNSAT if inst in GOLFERS_UNSAT else SAT
        slowest = max(slowest, ms)
        if status != want or not checked:
            wrong.append(f"{inst} {status}")
    report(capsys, 3, not wrong,
           f"{len(GOLFERS) - len(wrong)}/{len(GOLFERS)} instances correct within "
           f"{INSTANCE_TIMEOUT}s (slowest {slowest / 1000:.1f}s)"
           + (f"; wrong: {'; '.join(wrong)}" if wrong else ""))


# -- 4 ----------------------------------------------------------------------

def test_criterion_4_steiner(capsys):
    start = time.perf_counter()
    problems = []
    for (t, k, n), m in zip(STEINER, (7, 12, 26)):
        if steiner_blocks(t, k, n) != m:
            problems.append(f"m for N={n}")
        model = gen_steiner(t, k, n, dual=True)
        res = Solver(model).solve(timeout=120)
        if res.status != SAT or not check_solution(model, res.assignment):
            problems.append(f"S({t},{k},{n}) {res.status}")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 120
    report(capsys, 4, ok, f"S(2,3,7/9/13) with m = 7/12/26, {elapsed:.1f}s"
                          + (f"; {', '.join(problems)}" if problems else ""))


# -- 5 ----------------------------------------------------------------------

def test_criterion_5_hamming(capsys):
    start = time.perf_counter()
    small = maximal_hamming(4, 2, 2)
    big = maximal_hamming(10, 6, 5)
    clique = oracle.oracle_clique_max(10, 6, 5)
    elapsed = time.perf_counter() - start
    ok = small == 6 and big == clique and elapsed < 300
    report(capsys, 5, ok, f"max(4,2,2) = {small}, max(10,6,5) = {big} "
                          f"(clique oracle {clique}), {elapsed:.1f}s")


# -- 6 ----------------------------------------------------------------------

def suite():
    for inst in GOLFERS:
        yield f"golfers {inst}", gen_social_golfers(*inst), inst in GOLFERS_UNSAT
    for inst in STEINER:
        yield f"steiner {inst}", gen_steiner(*inst, dual=True), False
    for inst in HAMMING:
        yield f"hamming {inst}", gen_hamming(*inst), False


def test_criterion_6_variant_equivalence(capsys):
    configs = [SolverConfig.variant(v, search=s, reasons=r)
               for v in VARIANTS for s in ("static", "vsids") for r in ("lazy", "eager")]
    disagree, undecided = [], []
    runs = 0
    for name, model, hard in suite():
        # the two instances no configuration has refuted get a short budget
        limit = 5 if hard and name != "golfers (6, 4, 3)" else INSTANCE_TIMEOUT
        statuses = set()
        for cfg in configs:
            res = Solver(model, cfg).solve(timeout=limit)
            runs += 1
            if res.status == SAT and not check_solution(model, res.assignment):
                disagree.append(f"{name} bad solution")
            statuses.add(res.status)
        decided = statuses & {SAT, UNSAT}
        if len(decided) > 1:
            disagree.append(name)
        if statuses - {SAT, UNSAT}:
            undecided.append(name)
    ok = not disagree and not undecided
    detail = f"{runs} runs over {len(configs)} configurations, {len(disagree)} disagreements"
    if undecided:
        detail += f"; no status within budget for {', '.join(undecided)}"
    report(capsys, 6, ok, detail)


# -- 7 ----------------------------------------------------------------------

def test_criterion_7_reasons(capsys):
    rng = random.Random(7)
    unsound = nonminimal = total = sampled = 0
    for enum, dom, r, val, reason in explained_inferences(rng, 10000):
        ante = list(reason.antecedents)
        if r is None:
            good = oracle.oracle_unsat(enum, ante)
        else:
            good = entailed(enum, ante, (r, val))
        unsound += not good
        total += 1
        if total % 10 == 0 and sampled < 1000:
            sampled += 1
            for k in range(len(ante)):
                rest = ante[:k] + ante[k + 1:]
                if (oracle.oracle_unsat(enum, rest) if r is None else entailed(enum, rest, (r, val))):
                    nonminimal += 1
                    break
    ok = total >= 10000 and sampled >= 1000 and not unsound and not nonminimal
    report(capsys, 7, ok, f"{total} explanations, {unsound} not entailed; "
                          f"{sampled} minimality checks, {nonminimal} not minimal")


# -- 8 ----------------------------------------------------------------------

def test_criterion_8_tseitin(capsys):
    rng = random.Random(8)
    templates = mismatched = 0
    while templates < 100:
        kind, arity = rng.choice(KINDS)
        n = rng.randint(1, 4)
        if n * arity > 12:
            continue
        params = params_for(kind, n, rng)
        try:
            t = build_template(ConstraintSpec(kind, params, arity), n)
        except ValueError:
            continue
        enum = rank_enum(t, kind, params)
        if tseitin_models(bdd_to_cnf(t.graph), t.graph.nvars) != set(enum.models):
            mismatched += 1
        templates += 1
    finished = disagree = 0
    for inst in GOLFERS:
        res = Solver(gen_social_golfers(*inst), SolverConfig(tseitin=True)).solve(timeout=30)
        if res.status in (SAT, UNSAT):
            finished += 1
            hybrid = golfers_default(*inst)[0]
            if hybrid in (SAT, UNSAT) and hybrid != res.status:
                disagree += 1
    ok = not mismatched and not disagree
    report(capsys, 8, ok, f"{templates} templates, {mismatched} model-set mismatches; "
                          f"CNF solved {finished}/{len(GOLFERS)} golfers instances in 30s, "
                          f"{disagree} status disagreements")


# -- 9 ----------------------------------------------------------------------

def test_criterion_9_sparse_sets(capsys):
    sequences = 0
    failures = 0
    for variant in (STD, MOD):
        for seed in range(100000):
            try:
                run_differential(variant, 12, seed, size=8)
            except AssertionError:
                failures += 1
            sequences += 1
    ok = sequences >= 200000 and not failures
    report(capsys, 9, ok, f"{sequences} op sequences, 100000 per variant, {failures} failures")


# -- 10 ---------------------------------------------------------------------

def test_criterion_10_visits(capsys):
    rng = random.Random(10)
    over = calls = 0
    for kind, arity in KINDS:
        n = 5 if arity < 3 else 4
        spec = ConstraintSpec(kind, params_for(kind, n, rng), arity)
        store = store_or_none(spec, n, mode=BASE)
        if store is None:
            continue
        nodes = build_template(spec, n).graph.node_count
        for _ in range(100):
            before = store.counters()["node_visits"]
            store.propagate(0, random_domain(n * arity, rng))
            calls += 1
            over += store.counters()["node_visits"] - before > nodes
    visits = {}
    for mode in (BASE, SHORTCUT):
        store, _ = single_store(ConstraintSpec("inter_card_le", (1,)), 3, mode=mode)
        store.propagate(0, np.full(6, 3, np.int8))
        visits[mode] = store.counters()["node_visits"]
    ok = not over and visits[SHORTCUT] < visits[BASE]
    report(capsys, 10, ok, f"{calls} base calls, {over} over the node count; "
                           f"|x & y| <= 1 example visits {visits[SHORTCUT]} with shortcutting, "
                           f"{visits[BASE]} without")
