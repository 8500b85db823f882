"""Text format for set constraint models.

One directive per line, ``#`` starts a comment::

    universe 4
    setvar x
    fix_in x 1
    fix_out x 3
    constraint inter z x y      # z = x & y
    constraint card_eq z 2

In a ``constraint`` line integer tokens are the constraint parameters and
identifiers are set variables, each kept in the order written.
"""
import re

from .constraints import ConstraintError, ConstraintSpec, Kind, SIGNATURES
from .models import ModelError, ProblemModel

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.\[\],']*\Z")
_INT = re.compile(r"-?[0-9]+\Z")


class ParseError(ValueError):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


def _tokens(text):
    """(token, column) pairs of one line, comments stripped; columns are 1-based."""
    text = text.split("#", 1)[0]
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", text)]


def _int(tok, col, lineno, what):
    if not _INT.match(tok):
        raise ParseError(f"expected {what}, got {tok!r}", lineno, col)
    return int(tok)


def _name(tok, col, lineno):
    if not _NAME.match(tok):
        raise ParseError(f"bad set variable name {tok!r}", lineno, col)
    return tok


def parse_model(text, name="model"):
    model = None
    for lineno, line in enumerate(text.splitlines(), 1):
        toks = _tokens(line)
        if not toks:
            continue
        (head, hcol), args = toks[0], toks[1:]
        end = len(line.split("#", 1)[0].rstrip()) + 1

        def need(k):
            if len(args) != k:
                col = args[k][1] if len(args) > k else end
                raise ParseError(f"{head} takes {k} argument(s), got {len(args)}", lineno, col)

        if head == "universe":
            if model is not None:
                raise ParseError("universe declared twice", lineno, hcol)
            need(1)
            n = _int(*args[0], lineno, "universe size")
            if n < 0:
                raise ParseError("universe size must be >= 0", lineno, args[0][1])
            model = ProblemModel(n, name)
            continue
        if model is None:
            raise ParseError("first directive must be 'universe N'", lineno, hcol)
        try:
            if head == "setvar":
                need(1)
                model.add_setvar(_name(*args[0], lineno))
            elif head in ("fix_in", "fix_out"):
                need(2)
                var = _name(*args[0], lineno)
                elem = _int(*args[1], lineno, "element")
                if not 1 <= elem <= model.n:
                    raise ParseError(f"element {elem} outside 1..{model.n}", lineno, args[1][1])
                model.fix(var, elem, head == "fix_in")
            elif head == "constraint":
                _constraint(model, args, lineno, end)
            else:
                raise ParseError(f"unknown directive {head!r}", lineno, hcol)
        except (ModelError, ConstraintError) as e:
            raise ParseError(str(e), lineno, args[0][1] if args else hcol) from None
    if model is None:
        raise ParseError("missing 'universe N'", 1, 1)
    return model


def _constraint(model, args, lineno, end):
    if not args:
        raise ParseError("constraint needs a kind", lineno, end)
    ktok, kcol = args[0]
    try:
        kind = Kind(ktok)
    except ValueError:
        known = ", ".join(k.value for k in Kind)
        raise ParseError(f"unknown constraint kind {ktok!r} (known: {known})", lineno, kcol) from None
    params, names = [], []
    for tok, col in args[1:]:
        if _INT.match(tok):
            params.append((int(tok), col))
        else:
            names.append((_name(tok, col, lineno), col))
    arity, nparams = SIGNATURES[kind]
    if arity is None:
        arity = len(names)
        if arity < 1:
            raise ParseError(f"{kind.value} needs at least one set variable", lineno, end)
    if len(names) != arity:
        raise ParseError(f"{kind.value} takes {arity} set variable(s), got {len(names)}",
                         lineno, names[arity][1] if len(names) > arity else end)
    if len(params) != nparams:
        raise ParseError(f"{kind.value} takes {nparams} integer parameter(s), got {len(params)}",
                         lineno, params[nparams][1] if len(params) > nparams else end)
    for nm, col in names:
        try:
            model.var(nm)
        except ModelError as e:
            raise ParseError(str(e), lineno, col) from None
    try:
        spec = ConstraintSpec(kind, tuple(p for p, _ in params), arity=arity)
        spec.validate(model.n)
    except ConstraintError as e:
        raise ParseError(str(e), lineno, params[0][1] if params else kcol) from None
    model.add_constraint(spec, *(nm for nm, _ in names))


def parse_file(path):
    with open(path, encoding="utf-8") as f:
        return parse_model(f.read(), name=str(path))


def format_model(model):
    """Inverse of ``parse_model`` for models made only of plain set variables."""
    lines = [f"universe {model.n}"]
    lines += [f"setvar {d.name}" for d in model.setvars]
    for nm, elem, val in model.fixed:
        lines.append(f"{'fix_in' if val else 'fix_out'} {nm} {elem}")
    for spec, names in model.constraints:
        if not isinstance(spec, ConstraintSpec):
            raise ValueError("conjunctions have no text form")
        lines.append(" ".join(["constraint", spec.kind.value, *names, *map(str, spec.params)]))
    return "\n".join(lines) + "\n"
