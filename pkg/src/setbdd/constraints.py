"""Set variables as Boolean blocks, and BDD templates for set constraints.

A template is built over *formal* set variables y^0..y^(a-1) using the
pointwise order: the Boolean for element i (1-based) of formal j gets index
(i - 1) * a + j.  Templates are then bound to actual set variables.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bdd import BDD, FALSE, TRUE, AND, StaticGraph


class Kind(str, Enum):
    MEMBER = "member"
    EQ = "eq"
    SUBSET = "subset"
    UNION = "union"
    INTER = "inter"
    CARD_EQ = "card_eq"
    CARD_LE = "card_le"
    LEX_LT = "lex_lt"
    LEX_LE = "lex_le"
    INTER_CARD_LE = "inter_card_le"
    SYMDIFF_CARD_GE = "symdiff_card_ge"
    PARTITION_LEX = "partition_lex"
    COVER = "cover"


# kind -> (arity or None when variadic, number of integer parameters)
SIGNATURES = {
    Kind.MEMBER: (1, 1),
    Kind.EQ: (2, 0),
    Kind.SUBSET: (2, 0),
    Kind.UNION: (3, 0),
    Kind.INTER: (3, 0),
    Kind.CARD_EQ: (1, 1),
    Kind.CARD_LE: (1, 1),
    Kind.LEX_LT: (2, 0),
    Kind.LEX_LE: (2, 0),
    Kind.INTER_CARD_LE: (2, 1),
    Kind.SYMDIFF_CARD_GE: (2, 1),
    Kind.PARTITION_LEX: (None, 0),
    Kind.COVER: (None, 0),
}


class ConstraintError(ValueError):
    pass


class UnsatisfiableConstraint(ConstraintError):
    """A constraint (or conjunction) has no solutions at all."""


@dataclass(frozen=True)
class SetVarDecl:
    """A set variable over {1..n}; ``bools[i-1]`` is the Boolean for i in v."""

    name: str
    n: int
    bools: tuple = ()

    def __post_init__(self):
        if len(self.bools) != self.n:
            raise ConstraintError(
                f"set variable {self.name}: {len(self.bools)} Booleans for universe {self.n}")

    def boolean(self, elem):
        if not 1 <= elem <= self.n:
            raise ConstraintError(f"element {elem} outside 1..{self.n} for {self.name}")
        return self.bools[elem - 1]


@dataclass(frozen=True)
class ConstraintSpec:
    kind: Kind
    params: tuple = ()
    arity: int = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(int(p) for p in self.params))
        fixed_arity, nparams = SIGNATURES[kind]
        if self.arity is None:
            if fixed_arity is None:
                raise ConstraintError(f"{kind.value} needs an explicit arity")
            object.__setattr__(self, "arity", fixed_arity)
        elif fixed_arity is not None and self.arity != fixed_arity:
            raise ConstraintError(f"{kind.value} has arity {fixed_arity}, not {self.arity}")
        if self.arity < 1:
            raise ConstraintError("arity must be positive")
        if len(self.params) != nparams:
            raise ConstraintError(
                f"{kind.value} takes {nparams} parameter(s), got {len(self.params)}")
        if any(p < 0 for p in self.params):
            raise ConstraintError(f"{kind.value}: negative parameter")

    def validate(self, n):
        for p in self.params:
            if p > n and self.kind != Kind.SYMDIFF_CARD_GE:
                raise ConstraintError(f"{self.kind.value}: parameter {p} outside 0..{n}")
        if self.kind == Kind.MEMBER and not 1 <= self.params[0] <= n:
            raise ConstraintError(f"member: element {self.params[0]} outside 1..{n}")


@dataclass(frozen=True)
class Conjunction:
    """Several specs over shared formals, compiled into one template.

    ``parts`` holds (spec, positions) pairs; positions[j] is the formal
    variable that argument j of that spec refers to.
    """

    parts: tuple
    arity: int

    def __post_init__(self):
        parts = []
        for part in self.parts:
            if isinstance(part, ConstraintSpec):
                part = (part, tuple(range(part.arity)))
            spec, pos = part
            pos = tuple(pos)
            if len(pos) != spec.arity or any(not 0 <= p < self.arity for p in pos):
                raise ConstraintError(f"bad positions {pos} for {spec.kind.value}")
            parts.append((spec, pos))
        object.__setattr__(self, "parts", tuple(parts))


def formal_index(elem, j, arity):
    return (elem - 1) * arity + j


def pointwise_index(variables):
    """Boolean order for a list of set variables: [(name, elem), ...]."""
    variables = list(variables)
    if not variables:
        return []
    n = variables[0].n
    for v in variables:
        if v.n != n:
            raise ConstraintError(
                f"pointwise order needs one universe; {v.name} has {v.n}, expected {n}")
    return [(v.name, i) for i in range(1, n + 1) for v in variables]


def encode_valuation(bdd, theta, n):
    """Conjunction of literals describing the valuation theta: name -> set.

    Booleans are numbered in pointwise order over theta's variables (in
    the mapping's iteration order).
    """
    names = list(theta)
    arity = len(names)
    lits = {}
    for j, name in enumerate(names):
        members = set(theta[name])
        for e in members:
            if not 1 <= e <= n:
                raise ConstraintError(f"element {e} outside 1..{n} in {name}")
        for i in range(1, n + 1):
            lits[formal_index(i, j, arity)] = i in members
    return bdd.cube(lits)


# ---------------------------------------------------------------------------
# Automaton builders.  Each returns (start, step, accept) over one spec's own
# formals; step(state, elem, j, bit) -> new state or None to reject.

def _machine(spec, n):
    k = spec.kind
    p = spec.params

    if k == Kind.MEMBER:
        target = p[0]
        return 0, (lambda s, i, j, b: None if i == target and not b else s), \
            (lambda s: True)

    if k in (Kind.EQ, Kind.SUBSET):
        def step(s, i, j, b):
            if j == 0:
                return b
            if k == Kind.EQ:
                return None if b != s else 0
            return None if (s and not b) else 0
        return 0, step, lambda s: True

    if k in (Kind.UNION, Kind.INTER):
        # state carries the bits of u and v for the current element
        def step(s, i, j, b):
            if j == 0:
                return (b,)
            if j == 1:
                return s + (b,)
            u, v = s
            want = (v | b) if k == Kind.UNION else (v & b)
            return () if u == want else None
        return (), step, lambda s: True

    if k in (Kind.CARD_EQ, Kind.CARD_LE):
        bound = p[0]

        def step(s, i, j, b):
            c = s + b
            if c > bound:
                return None
            if k == Kind.CARD_EQ and c + (n - i) < bound:
                return None
            return c
        return 0, step, (lambda s: s == bound) if k == Kind.CARD_EQ else (lambda s: s <= bound)

    if k in (Kind.LEX_LT, Kind.LEX_LE):
        # state: (decided_less, pending u bit)
        def step(s, i, j, b):
            less, ub = s
            if j == 0:
                return (less, b)
            if less:
                return (True, 0)
            if ub < b:
                return (True, 0)
            if ub > b:
                return None
            return (False, 0)
        strict = k == Kind.LEX_LT
        return (False, 0), step, (lambda s: s[0]) if strict else (lambda s: True)

    if k == Kind.INTER_CARD_LE:
        bound = p[0]

        def step(s, i, j, b):
            c, ub = s
            if j == 0:
                return (c, b)
            c += ub & b
            return None if c > bound else (c, 0)
        return (0, 0), step, lambda s: True

    if k == Kind.SYMDIFF_CARD_GE:
        bound = p[0]

        def step(s, i, j, b):
            c, ub = s
            if j == 0:
                return (c, b)
            c = min(bound, c + (ub ^ b))
            if c + (n - i) < bound:
                return None
            return (c, 0)
        return (0, 0), step, lambda s: s[0] >= bound

    if k == Kind.PARTITION_LEX:
        g = spec.arity

        # state: (lex-decided flags per adjacent pair, previous block's bit,
        # element already taken)
        def step(s, i, j, b):
            decided, prev, taken = s
            if taken and b:
                return None
            if j > 0 and not decided[j - 1]:
                if prev > b:
                    return None
                if prev < b:
                    decided = decided[:j - 1] + (True,) + decided[j:]
            taken = taken or bool(b)
            if j == g - 1:
                return (decided, 0, False)
            return (decided, b, taken)
        return ((False,) * (g - 1), 0, False), step, lambda s: all(s[0])

    if k == Kind.COVER:
        g = spec.arity

        # state: element seen in some block so far
        def step(s, i, j, b):
            s = s or bool(b)
            if j == g - 1:
                return False if s else None
            return s
        return False, step, lambda s: True

    raise ConstraintError(f"no builder for {k}")


def _build_part(bdd, spec, positions, arity, n):
    """BDD of one spec placed on the given formals of an arity-wide block."""
    start, step, accept = _machine(spec, n)
    local = {p: j for j, p in enumerate(positions)}
    total = n * arity
    layers = [{start}]
    for pos in range(total):
        i, j = divmod(pos, arity)
        nxt = set()
        for s in layers[-1]:
            if j in local:
                for b in (0, 1):
                    t = step(s, i + 1, local[j], b)
                    if t is not None:
                        nxt.add(t)
            else:
                nxt.add(s)
        layers.append(nxt)
    below = {s: (TRUE if accept(s) else FALSE) for s in layers[-1]}
    for pos in range(total - 1, -1, -1):
        i, j = divmod(pos, arity)
        here = {}
        for s in layers[pos]:
            if j in local:
                kids = []
                for b in (0, 1):
                    t = step(s, i + 1, local[j], b)
                    kids.append(FALSE if t is None else below[t])
                here[s] = bdd.mk(pos, kids[0], kids[1])
            else:
                here[s] = below[s]
        below = here
    return below[start]


@dataclass(frozen=True, eq=False)
class ConstraintTemplate:
    """A frozen graph over formal Booleans, reusable for many instances."""

    graph: StaticGraph
    arity: int
    n: int
    formal_blocks: tuple
    spec: object = None

    @property
    def is_true(self):
        return self.graph.root == TRUE

    def formal_of_rank(self, r):
        """(formal variable, element) for a graph rank."""
        idx = self.graph.varset[r]
        e, j = divmod(idx, self.arity)
        return j, e + 1


def _as_conjunction(spec):
    if isinstance(spec, Conjunction):
        return spec
    return Conjunction(((spec, tuple(range(spec.arity))),), spec.arity)


def _compile(spec, n, bdd=None):
    conj = _as_conjunction(spec)
    if n < 0:
        raise ConstraintError("universe size must be >= 0")
    bdd = bdd or BDD()
    root = TRUE
    for part, pos in conj.parts:
        part.validate(n)
        root = bdd.apply(AND, root, _build_part(bdd, part, pos, conj.arity, n))
        if root == FALSE:
            raise UnsatisfiableConstraint(f"constraint {spec} has no solutions for N={n}")
    blocks = tuple(tuple(formal_index(i, j, conj.arity) for i in range(1, n + 1))
                   for j in range(conj.arity))
    return ConstraintTemplate(StaticGraph.from_bdd(bdd, root), conj.arity, n, blocks, spec)


def build_template(spec, n):
    return _compile(spec, n)


def conjoin_templates(specs, n):
    """One template for the conjunction of several specs.

    Plain specs act on formals 0..arity-1; (spec, positions) pairs place a
    spec on chosen formals.
    """
    specs = list(specs)
    if not specs:
        raise ConstraintError("nothing to conjoin")
    parts = []
    arity = 0
    for s in specs:
        if isinstance(s, ConstraintSpec):
            s = (s, tuple(range(s.arity)))
        parts.append(s)
        arity = max(arity, max(s[1]) + 1)
    return _compile(Conjunction(tuple(parts), arity), n)


class TemplateCache:
    """Templates keyed by (spec, N) so equal constraints share one graph."""

    def __init__(self):
        self._cache = {}
        self.hits = 0

    def get(self, spec, n):
        key = (spec, n)
        t = self._cache.get(key)
        if t is None:
            t = self._cache[key] = _compile(spec, n)
        else:
            self.hits += 1
        return t

    def __len__(self):
        return len(self._cache)


@dataclass(eq=False)
class PropagatorInstance:
    """A template bound to actual set variables.

    ``bools[r]`` is the actual Boolean for graph rank r.
    """

    template: ConstraintTemplate
    actuals: tuple
    bools: np.ndarray = field(repr=False)


def instantiate(template, actuals):
    actuals = tuple(actuals)
    if len(actuals) != template.arity:
        raise ConstraintError(
            f"template has arity {template.arity}, got {len(actuals)} arguments")
    for a in actuals:
        if a.n != template.n:
            raise ConstraintError(
                f"{a.name} has universe {a.n}, template expects {template.n}")
    bools = np.empty(template.graph.nvars, dtype=np.int32)
    for r in range(template.graph.nvars):
        j, e = template.formal_of_rank(r)
        bools[r] = actuals[j].bools[e - 1]
    if len(set(bools.tolist())) != len(bools):
        raise ConstraintError("an instance may not bind one Boolean to two formals")
    return PropagatorInstance(template, actuals, bools)
