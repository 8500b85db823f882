"""Problem models: set variables plus constraints over one universe.

Also the three benchmark families (social golfers, Steiner systems,
constant-weight codes), an independent solution checker, and the loop that
finds the largest code.
"""
from dataclasses import dataclass
from itertools import combinations
from math import comb

from .constraints import ConstraintSpec, Conjunction, ConstraintError, Kind, SetVarDecl


class ModelError(ValueError):
    pass


class ProblemModel:
    """Set variables over {1..n}, constraints on them, and fixed memberships.

    Each set variable owns a block of Booleans; a view variable may reuse
    Booleans of other variables (see ``add_view``).
    """

    def __init__(self, n, name="model"):
        if n < 0:
            raise ModelError("universe size must be >= 0")
        self.n = n
        self.name = name
        self.setvars = []
        self.constraints = []
        self.fixed = []
        self.search_vars = []
        self.nbools = 0
        self.coverage = None
        self._by_name = {}

    def add_setvar(self, name, search=True):
        if name in self._by_name:
            raise ModelError(f"set variable {name} declared twice")
        decl = SetVarDecl(name, self.n, tuple(range(self.nbools, self.nbools + self.n)))
        self.nbools += self.n
        self._register(decl, search)
        return decl

    def add_view(self, name, bools, search=False):
        """A set variable over {1..len(bools)} made of existing Booleans."""
        if name in self._by_name:
            raise ModelError(f"set variable {name} declared twice")
        bools = tuple(int(b) for b in bools)
        if any(not 0 <= b < self.nbools for b in bools):
            raise ModelError(f"view {name} refers to an unknown Boolean")
        decl = SetVarDecl(name, len(bools), bools)
        self._register(decl, search)
        return decl

    def _register(self, decl, search):
        self.setvars.append(decl)
        self._by_name[decl.name] = decl
        if search:
            self.search_vars.append(decl.name)

    def var(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise ModelError(f"undeclared set variable {name}") from None

    def add_constraint(self, spec, *names):
        arity = spec.arity
        if len(names) != arity:
            raise ModelError(f"{_label(spec)} takes {arity} set variables, got {len(names)}")
        decls = [self.var(nm) for nm in names]
        if len({d.n for d in decls}) > 1:
            raise ModelError(f"{_label(spec)}: arguments have different universes")
        self.constraints.append((spec, tuple(names)))

    def fix(self, name, elem, value):
        self.var(name).boolean(elem)
        self.fixed.append((name, int(elem), bool(value)))

    def __repr__(self):
        return (f"ProblemModel({self.name!r}, n={self.n}, vars={len(self.setvars)}, "
                f"constraints={len(self.constraints)})")


def _label(spec):
    if isinstance(spec, Conjunction):
        return "+".join(p.kind.value for p, _ in spec.parts)
    return spec.kind.value


# ---------------------------------------------------------------------------
# solution checking (plain set semantics, no BDDs)

def _lex(a, b, n):
    """-1, 0 or 1 comparing characteristic vectors, element 1 most significant."""
    for i in range(1, n + 1):
        x, y = i in a, i in b
        if x != y:
            return 1 if x else -1
    return 0


def spec_holds(spec, sets, n):
    if isinstance(spec, Conjunction):
        return all(spec_holds(p, [sets[j] for j in pos], n) for p, pos in spec.parts)
    k = spec.kind
    p = spec.params
    if k == Kind.MEMBER:
        return p[0] in sets[0]
    if k == Kind.EQ:
        return sets[0] == sets[1]
    if k == Kind.SUBSET:
        return sets[0] <= sets[1]
    if k == Kind.UNION:
        return sets[0] == sets[1] | sets[2]
    if k == Kind.INTER:
        return sets[0] == sets[1] & sets[2]
    if k == Kind.CARD_EQ:
        return len(sets[0]) == p[0]
    if k == Kind.CARD_LE:
        return len(sets[0]) <= p[0]
    if k == Kind.LEX_LT:
        return _lex(sets[0], sets[1], n) < 0
    if k == Kind.LEX_LE:
        return _lex(sets[0], sets[1], n) <= 0
    if k == Kind.INTER_CARD_LE:
        return len(sets[0] & sets[1]) <= p[0]
    if k == Kind.SYMDIFF_CARD_GE:
        return len(sets[0] ^ sets[1]) >= p[0]
    if k == Kind.PARTITION_LEX:
        if any(a & b for a, b in combinations(sets, 2)):
            return False
        return all(_lex(sets[i], sets[i + 1], n) < 0 for i in range(len(sets) - 1))
    if k == Kind.COVER:
        return frozenset().union(*sets) == frozenset(range(1, n + 1))
    raise ModelError(f"unknown kind {k}")


@dataclass(frozen=True)
class Verdict:
    passed: bool
    violation: str = None

    def __bool__(self):
        return self.passed


def check_solution(model, assignment):
    """Check an assignment (name -> set of elements) against every constraint.

    View variables are recomputed from the Booleans they share, so a view
    that disagrees with its base variables is reported too.
    """
    values = {}
    for decl in model.setvars:
        if decl.name not in assignment:
            return Verdict(False, f"no value for {decl.name}")
        s = frozenset(assignment[decl.name])
        if any(not 1 <= e <= decl.n for e in s):
            return Verdict(False, f"{decl.name} has elements outside 1..{decl.n}")
        values[decl.name] = s
    truth = {}
    for decl in model.setvars:
        for i, b in enumerate(decl.bools):
            bit = (i + 1) in values[decl.name]
            if truth.setdefault(b, bit) != bit:
                return Verdict(False, f"{decl.name} disagrees with a variable sharing element {i + 1}")
    for name, elem, val in model.fixed:
        if (elem in values[name]) != val:
            word = "in" if val else "out of"
            return Verdict(False, f"{elem} must be {word} {name}")
    for spec, names in model.constraints:
        n = model.var(names[0]).n if names else model.n
        if not spec_holds(spec, [values[nm] for nm in names], n):
            return Verdict(False, f"{_label(spec)}({', '.join(names)}) violated")
    if model.coverage is not None:
        t, blocks = model.coverage
        count = {}
        for nm in blocks:
            for sub in combinations(sorted(values[nm]), t):
                count[sub] = count.get(sub, 0) + 1
        for sub in combinations(range(1, model.n + 1), t):
            if count.get(sub, 0) != 1:
                return Verdict(False, f"{set(sub)} covered {count.get(sub, 0)} times")
    return Verdict(True)


# ---------------------------------------------------------------------------
# social golfers

def golfer_name(week, group):
    return f"v{week}_{group}"


def gen_social_golfers(w, g, s, fix_prefix=False):
    """w weeks of g groups of s golfers; no two golfers meet twice.

    The groups of a week partition the golfers and are ordered by their
    least member, so group 1 always holds golfer 1.  First groups are
    ordered across weeks.  With ``fix_prefix`` the first week and the first
    group of the second week are fixed instead of ordering weeks.
    """
    if min(w, g, s) < 1:
        raise ModelError("golfers needs w, g, s >= 1")
    n = g * s
    m = ProblemModel(n, f"golfers-{w}-{g}-{s}")
    for i in range(1, w + 1):
        for j in range(1, g + 1):
            m.add_setvar(golfer_name(i, j))
    size = ConstraintSpec(Kind.CARD_EQ, (s,))
    # a set holding a smaller element is lex-larger, hence the reversed weeks
    week_spec = Conjunction((
        ConstraintSpec(Kind.PARTITION_LEX, (), arity=g),
        ConstraintSpec(Kind.COVER, (), arity=g),
    ), g)
    for i in range(1, w + 1):
        week = [golfer_name(i, j) for j in range(g, 0, -1)]
        m.add_constraint(week_spec, *week)
        for nm in week:
            m.add_constraint(size, nm)
    if s > 1:
        meet = ConstraintSpec(Kind.INTER_CARD_LE, (1,))
        for i1, i2 in combinations(range(1, w + 1), 2):
            for j1 in range(1, g + 1):
                for j2 in range(1, g + 1):
                    m.add_constraint(meet, golfer_name(i1, j1), golfer_name(i2, j2))
    if fix_prefix:
        for j in range(1, g + 1):
            block = set(range((j - 1) * s + 1, j * s + 1))
            for e in range(1, n + 1):
                m.fix(golfer_name(1, j), e, e in block)
        if w > 1:
            spread = {1 + k * s for k in range(min(s, g))}
            for e in range(1, n + 1):
                if e in spread or s <= g:
                    m.fix(golfer_name(2, 1), e, e in spread)
    else:
        order = ConstraintSpec(Kind.LEX_LE)
        for i1, i2 in combinations(range(1, w + 1), 2):
            m.add_constraint(order, golfer_name(i2, 1), golfer_name(i1, 1))
    return m


# ---------------------------------------------------------------------------
# Steiner systems

def steiner_blocks(t, k, n):
    """Number of blocks m = C(n, t) / C(k, t), or ModelError if fractional."""
    if not 1 <= t <= k <= n:
        raise ModelError("Steiner system needs 1 <= t <= k <= N")
    m, rem = divmod(comb(n, t), comb(k, t))
    if rem:
        raise ModelError(f"C({n},{t}) is not divisible by C({k},{t}); no S({t},{k},{n})")
    return m


def gen_steiner(t, k, n, dual=False):
    """m blocks of size k over {1..n}; pairs of blocks share < t points.

    Blocks are ordered like golfer weeks: a block holding smaller points
    comes first, which is the lex-larger set.  With ``dual`` each point j
    gets a view d_j = {i : j in s_i} whose size is m*k/n, and the views are
    branched on before the blocks.
    """
    m = steiner_blocks(t, k, n)
    model = ProblemModel(n, f"steiner-{t}-{k}-{n}")
    names = [f"s{i}" for i in range(1, m + 1)]
    for nm in names:
        model.add_setvar(nm)
    size = ConstraintSpec(Kind.CARD_EQ, (k,))
    if m == 1:
        model.add_constraint(size, names[0])
    else:
        pair = Conjunction((
            (ConstraintSpec(Kind.INTER_CARD_LE, (t - 1,)), (0, 1)),
            (ConstraintSpec(Kind.LEX_LT), (0, 1)),
            (size, (0,)),
            (size, (1,)),
        ), 2)
        for a, b in combinations(names, 2):
            model.add_constraint(pair, b, a)
    if dual:
        r, rem = divmod(m * k, n)
        if rem:
            raise ModelError(f"m*k = {m * k} is not divisible by N = {n}")
        degree = ConstraintSpec(Kind.CARD_EQ, (r,))
        views = []
        for j in range(1, n + 1):
            view = f"d{j}"
            model.add_view(view, [model.var(nm).boolean(j) for nm in names], search=True)
            model.add_constraint(degree, view)
            views.append(view)
        model.search_vars = views + names
    model.coverage = (t, tuple(names))
    return model


# ---------------------------------------------------------------------------
# constant-weight codes

def hamming_prefix(l, d, w):
    """The first two codewords fixed for symmetry breaking: {1..w}, and the
    word after it sharing as many of its points as distance d allows.
    Returns None for the second when no such word exists."""
    first = frozenset(range(1, w + 1))
    share = w - max(1, (d + 1) // 2)
    if share < 0 or 2 * w - share > l:
        return first, None
    second = frozenset(range(1, share + 1)) | frozenset(range(w + 1, 2 * w - share + 1))
    return first, second


def gen_hamming(l, d, w, m, fix_prefix=False):
    """m codewords of length l and weight w, pairwise at distance >= d.

    Codewords are ordered like Steiner blocks, the lex-larger one first.
    """
    if not 0 <= w <= l or d < 0 or m < 1:
        raise ModelError("hamming needs 0 <= w <= l, d >= 0, m >= 1")
    model = ProblemModel(l, f"hamming-{l}-{d}-{w}-{m}")
    names = [f"c{i}" for i in range(1, m + 1)]
    for nm in names:
        model.add_setvar(nm)
    weight = ConstraintSpec(Kind.CARD_EQ, (w,))
    if m == 1:
        model.add_constraint(weight, names[0])
    else:
        pair = Conjunction((
            (ConstraintSpec(Kind.SYMDIFF_CARD_GE, (d,)), (0, 1)),
            (ConstraintSpec(Kind.LEX_LT), (0, 1)),
            (weight, (0,)),
            (weight, (1,)),
        ), 2)
        for a, b in combinations(names, 2):
            model.add_constraint(pair, b, a)
    if fix_prefix:
        first, second = hamming_prefix(l, d, w)
        fixed = [first] if m == 1 or second is None else [first, second]
        for nm, word in zip(names, fixed):
            for e in range(1, l + 1):
                model.fix(nm, e, e in word)
    return model


def maximal_hamming(l, d, w, config=None, max_words=None, on_step=None):
    """Largest m for which gen_hamming(l, d, w, m) is satisfiable.

    Raises TimeoutError if some step times out.
    """
    from .solver import Solver, SAT, UNSAT
    best = 0
    m = 1
    while max_words is None or m <= max_words:
        result = Solver(gen_hamming(l, d, w, m), config).solve()
        if on_step is not None:
            on_step(m, result)
        if result.status == UNSAT:
            return best
        if result.status != SAT:
            raise TimeoutError(f"hamming {l},{d},{w} with {m} words: {result.status}")
        best = m
        m += 1
    return best
