"""Derive equational axiomatizations of bisimilarity from structural operational rules with predicates."""
from .axiomgen import GeneratedAxioms, axiomatize
from .bisim import Outcome, Verdict, bisimilar, n_bisimilar
from .core import (
    App, Equation, OperationSym, PredicateSym, Term, Var, choice, delta, format_term, hourglass, kappa, prefix,
    proj, restrict,
)
from .ftp import canonical_tree, eliminate_restriction, ftp_axioms, ftp_system, trees_equal
from .rewrite import NonTermination, ProofTrace, Rewriter, normalize, prove_equal
from .semantics import LTS, BudgetExceeded, StepBudget, build_lts, outgoing, predicates_of
from .spec import PregRule, PregSystem, SpecError, load_spec, parse_spec, print_spec, validate_preg
from .syntax import ParseError, parse_term
from .transform import distinctify, positivize, smoothen

__version__ = "0.1.0"

__all__ = [
    "App", "BudgetExceeded", "Equation", "GeneratedAxioms", "LTS", "NonTermination", "OperationSym", "Outcome",
    "ParseError", "PredicateSym", "PregRule", "PregSystem", "ProofTrace", "Rewriter", "SpecError", "StepBudget",
    "Term", "Var", "Verdict", "axiomatize", "bisimilar", "build_lts", "canonical_tree", "choice", "delta",
    "distinctify", "eliminate_restriction", "format_term", "ftp_axioms", "ftp_system", "hourglass", "kappa",
    "load_spec", "n_bisimilar", "normalize", "outgoing", "parse_spec", "parse_term", "positivize",
    "predicates_of", "prefix", "print_spec", "proj", "prove_equal", "restrict", "smoothen", "trees_equal",
    "validate_preg",
]
