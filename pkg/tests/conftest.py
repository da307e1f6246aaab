"""
Pytest configuration and fixtures for floyd tests.
"""

from pathlib import Path

import pytest

from floyd.automaton import FloydAutomaton, parse_automaton
from floyd.grammar import Grammar, parse_grammar

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def expr_grammar() -> Grammar:
    """The arithmetic expression grammar over n, + and x."""
    return parse_grammar((FIXTURES / "expr.g").read_text())


@pytest.fixture
def expr_a_grammar() -> Grammar:
    """The expression grammar with operand a."""
    return parse_grammar((FIXTURES / "expr_a.g").read_text())


@pytest.fixture
def dyck() -> FloydAutomaton:
    """Two-state automaton for balanced a/ra, b/rb brackets."""
    return parse_automaton((FIXTURES / "dyck.fa").read_text())


@pytest.fixture
def exceptions() -> FloydAutomaton:
    """Calls, returns and nested exception handlers."""
    return parse_automaton((FIXTURES / "exceptions.fa").read_text())


@pytest.fixture
def dyck_trace_text() -> str:
    return (FIXTURES / "dyck_trace.txt").read_text()


@pytest.fixture
def branching() -> FloydAutomaton:
    """Nondeterministic calls and returns; only one branch is accepting."""
    return parse_automaton((FIXTURES / "branching.fa").read_text())
