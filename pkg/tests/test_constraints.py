import itertools

import pytest

from setbdd.bdd import BDD
from setbdd.constraints import (
    ConstraintSpec, Conjunction, ConstraintError, Kind, SetVarDecl,
    UnsatisfiableConstraint, TemplateCache, build_template, conjoin_templates,
    encode_valuation, formal_index, instantiate, pointwise_index,
)

import oracle


def setvar(name, n, start):
    return SetVarDecl(name, n, tuple(range(start, start + n)))


def decode(template, model):
    """Turn a model over graph ranks into a tuple of sets (free Booleans enumerated)."""
    sets = [set() for _ in range(template.arity)]
    for r, bit in enumerate(model):
        j, e = template.formal_of_rank(r)
        if bit:
            sets[j].add(e)
    return sets


def template_solutions(template):
    """Expand the graph's models to full valuations of every formal Boolean."""
    n, a = template.n, template.arity
    varset = template.graph.varset
    free = [idx for idx in range(n * a) if idx not in set(varset)]
    out = set()
    for m in template.graph.models():
        base = decode(template, m)
        for bits in itertools.product((0, 1), repeat=len(free)):
            sets = [set(s) for s in base]
            for idx, b in zip(free, bits):
                e, j = divmod(idx, a)
                if b:
                    sets[j].add(e + 1)
            out.add(tuple(frozenset(s) for s in sets))
    return out


SPECS = [
    ("member", (2,), 1), ("eq", (), 2), ("subset", (), 2), ("union", (), 3),
    ("inter", (), 3), ("card_eq", (2,), 1), ("card_le", (2,), 1), ("lex_lt", (), 2),
    ("lex_le", (), 2), ("inter_card_le", (1,), 2), ("symdiff_card_ge", (2,), 2),
    ("partition_lex", (), 2), ("partition_lex", (), 3), ("cover", (), 1), ("cover", (), 3),
]


@pytest.mark.parametrize("kind,params,arity", SPECS)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_template_models_equal_set_semantics(kind, params, arity, n):
    if kind == "member" and params[0] > n:
        params = (n,)
    if kind in ("card_eq", "card_le") and params[0] > n:
        params = (n,)
    spec = ConstraintSpec(kind, params, arity)
    expect = set(oracle.solutions([(kind, params, tuple(range(arity)))], arity, n))
    try:
        t = build_template(spec, n)
    except UnsatisfiableConstraint:
        assert not expect
        return
    assert template_solutions(t) == expect


@pytest.mark.parametrize("n", [4])
@pytest.mark.parametrize("g", [2, 3])
def test_partition_lex_exhaustive(g, n):
    t = build_template(ConstraintSpec("partition_lex", (), g), n)
    expect = set(oracle.solutions([("partition_lex", (), tuple(range(g)))], g, n))
    assert template_solutions(t) == expect


def test_pointwise_index():
    u, v, w = setvar("u", 2, 0), setvar("v", 2, 2), setvar("w", 2, 4)
    assert pointwise_index([u, v, w]) == [("u", 1), ("v", 1), ("w", 1),
                                          ("u", 2), ("v", 2), ("w", 2)]
    assert pointwise_index([setvar("v", 4, 0)]) == [("v", i) for i in range(1, 5)]
    a, b = setvar("u", 3, 0), setvar("v", 3, 3)
    assert pointwise_index([a, b]) == [("u", 1), ("v", 1), ("u", 2), ("v", 2),
                                       ("u", 3), ("v", 3)]
    with pytest.raises(ConstraintError):
        pointwise_index([setvar("u", 3, 0), setvar("v", 2, 3)])


def test_encode_valuation_example():
    b = BDD()
    theta = {"x": {1, 2, 4}, "y": {1, 3, 4}, "z": {1, 4}}
    node = encode_valuation(b, theta, 4)
    lits = {}
    for j, name in enumerate(theta):
        for i in range(1, 5):
            lits[formal_index(i, j, 3)] = i in theta[name]
    assert node == b.cube(lits)
    assert b.size(node) == 12
    assert b.fixed_vars(node) == lits
    assert b.fixed_vars(encode_valuation(b, {"v": set()}, 2)) == {0: False, 1: False}
    assert b.fixed_vars(encode_valuation(b, {"v": {1, 2, 3}}, 3)) == {0: True, 1: True, 2: True}
    with pytest.raises(ConstraintError):
        encode_valuation(b, {"v": {5}}, 3)


def test_card_le_five():
    t = build_template(ConstraintSpec("card_le", (2,)), 5)
    assert t.graph.model_count() == 16
    assert t.graph.node_count == 9


def test_union_two():
    t = build_template(ConstraintSpec("union"), 2)
    assert t.graph.model_count() == 16
    # y and z free, x determined
    assert len(template_solutions(t)) == 16


def test_member():
    t = build_template(ConstraintSpec("member", (3,)), 4)
    assert t.graph.node_count == 1
    assert t.graph.varset == (2,)


def test_conjoin():
    with pytest.raises(UnsatisfiableConstraint):
        conjoin_templates([ConstraintSpec("card_eq", (3,)), ConstraintSpec("card_le", (2,))], 3)
    t = conjoin_templates([ConstraintSpec("inter_card_le", (0,)), ConstraintSpec("lex_lt")], 3)
    expect = oracle.solutions([("inter_card_le", (0,), (0, 1)), ("lex_lt", (), (0, 1))], 2, 3)
    assert template_solutions(t) == set(expect)
    single = conjoin_templates([ConstraintSpec("card_eq", (2,))], 4)
    assert template_solutions(single) == template_solutions(
        build_template(ConstraintSpec("card_eq", (2,)), 4))


def test_merged_hamming_form():
    spec = Conjunction((
        (ConstraintSpec("symdiff_card_ge", (2,)), (0, 1)),
        (ConstraintSpec("lex_lt"), (0, 1)),
        (ConstraintSpec("card_eq", (2,)), (0,)),
        (ConstraintSpec("card_eq", (2,)), (1,)),
    ), 2)
    t = build_template(spec, 4)
    expect = oracle.solutions([("symdiff_card_ge", (2,), (0, 1)), ("lex_lt", (), (0, 1)),
                               ("card_eq", (2,), (0,)), ("card_eq", (2,), (1,))], 2, 4)
    assert template_solutions(t) == set(expect)
    assert len(expect) == 15


# Node counts recorded from this implementation; a change means the
# construction changed shape, which deserves a look.
LINEAR_COUNTS = {
    ("card_le", (2,), 1): lambda n: 3 * n - 6,
    ("eq", (), 2): lambda n: 3 * n,
    ("union", (), 3): lambda n: 5 * n,
    ("inter_card_le", (1,), 2): lambda n: 4 * n - 4,
}


@pytest.mark.parametrize("key", list(LINEAR_COUNTS))
def test_primitive_sizes_linear(key):
    kind, params, arity = key
    for n in range(2, 12):
        t = build_template(ConstraintSpec(kind, params, arity), n)
        assert t.graph.node_count <= 6 * n
        assert t.graph.node_count == LINEAR_COUNTS[key](n), (key, n)


def test_spec_validation():
    with pytest.raises(ConstraintError):
        ConstraintSpec("union", (), 2)
    with pytest.raises(ConstraintError):
        ConstraintSpec("card_eq", ())
    with pytest.raises(ConstraintError):
        ConstraintSpec("partition_lex")
    with pytest.raises(ValueError):
        ConstraintSpec("nonsense")
    with pytest.raises(ConstraintError):
        build_template(ConstraintSpec("member", (5,)), 4)
    assert ConstraintSpec(Kind.CARD_EQ, (1,)) == ConstraintSpec("card_eq", (1,))


def test_cache_shares_graphs():
    cache = TemplateCache()
    a = cache.get(ConstraintSpec("inter_card_le", (1,)), 6)
    b = cache.get(ConstraintSpec("inter_card_le", (1,)), 6)
    assert a is b and cache.hits == 1 and len(cache) == 1


def test_instantiate():
    t = build_template(ConstraintSpec("union"), 2)
    x, y, z = setvar("x", 2, 10), setvar("y", 2, 20), setvar("z", 2, 30)
    inst = instantiate(t, [x, y, z])
    for r in range(t.graph.nvars):
        j, e = t.formal_of_rank(r)
        assert inst.bools[r] == [x, y, z][j].bools[e - 1]
    with pytest.raises(ConstraintError):
        instantiate(t, [x, y])
    with pytest.raises(ConstraintError):
        instantiate(t, [x, y, setvar("w", 3, 40)])
    with pytest.raises(ConstraintError):
        instantiate(t, [x, y, y])
