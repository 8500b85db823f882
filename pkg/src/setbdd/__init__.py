"""Set constraint solving with BDD propagators inside a CDCL SAT solver."""
from .bdd import BDD, BDDError, StaticGraph
from .constraints import (ConstraintSpec, Conjunction, Kind, SetVarDecl, TemplateCache,
                          build_template, instantiate)
from .explain import (ReasonClause, bdd_to_cnf, explain_failure, explain_inference,
                      explain_lazily)
from .models import (ModelError, ProblemModel, check_solution, gen_hamming,
                     gen_social_golfers, gen_steiner, maximal_hamming)
from .parser import ParseError, parse_model
from .propagate import PropagationStore
from .solver import SAT, TIMEOUT, UNSAT, Result, Solver, SolverConfig, Stats, solve
from .sparse import SparseSet

__all__ = [
    "BDD", "BDDError", "StaticGraph", "ConstraintSpec", "Conjunction", "Kind", "SetVarDecl",
    "TemplateCache", "build_template", "instantiate", "ReasonClause", "bdd_to_cnf",
    "explain_failure", "explain_inference", "explain_lazily", "ModelError", "ProblemModel",
    "check_solution", "gen_hamming", "gen_social_golfers", "gen_steiner", "maximal_hamming",
    "ParseError", "parse_model", "PropagationStore", "SAT", "TIMEOUT", "UNSAT", "Result",
    "Solver", "SolverConfig", "Stats", "solve", "SparseSet",
]
