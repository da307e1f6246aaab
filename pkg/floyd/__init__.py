"""Operator-precedence grammars and Floyd automata."""

from .automaton import FloydAutomaton, accepts, determinize, parse_automaton, trace
from .convert import automaton_to_grammar, grammar_to_automaton
from .errors import FloydError
from .grammar import Grammar, cf_membership, compute_opm, normalize, parse_grammar
from .omega import LassoWord, omega_accepts
from .opm import PrecedenceAlphabet, PrecRel, eq_cycle_check, parse_chain

__all__ = [
    "FloydAutomaton",
    "FloydError",
    "Grammar",
    "LassoWord",
    "PrecRel",
    "PrecedenceAlphabet",
    "accepts",
    "automaton_to_grammar",
    "cf_membership",
    "compute_opm",
    "determinize",
    "eq_cycle_check",
    "grammar_to_automaton",
    "normalize",
    "omega_accepts",
    "parse_automaton",
    "parse_chain",
    "parse_grammar",
    "trace",
]
