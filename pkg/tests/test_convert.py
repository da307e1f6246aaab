"""
Tests for the grammar-to-automaton and automaton-to-grammar constructions.
"""

import pytest

from floyd.automaton import accepts, trace
from floyd.convert import (
    A2G_AXIOM,
    ExtendedNonterminal,
    PushTriple,
    automaton_to_grammar,
    enumerate_push_triples,
    grammar_to_automaton,
    simple_chain_supports,
)
from floyd.errors import ConflictError, FischerShapeError
from floyd.grammar import (
    cf_membership,
    compute_opm,
    format_grammar,
    is_reduced,
    normalize,
    parse_grammar,
)
from floyd.opm import eq_cycle_check, parse_chain
from floyd.oracle import enumerate_words, language_agree, random_automaton, random_grammar


def x(base: str, index: int) -> ExtendedNonterminal:
    return ExtendedNonterminal(base=base, rule_index=index)


class TestPushTriples:
    """Tests for the push triples read off the grammar."""

    def test_leftmost_terminal_climbs_to_axiom(self, expr_a_grammar):
        """Test that x in E -> T x a is pushed from the axiom context after T."""
        triples = enumerate_push_triples(expr_a_grammar)
        assert PushTriple(terminal="x", parent=x("E", 2), context=x("S", 1), rightmost=False, left=x("T", 2)) in triples

    def test_inner_terminal_stays_in_its_rule(self, expr_a_grammar):
        """Test that a terminal after the leftmost one uses its own rule as context."""
        triples = enumerate_push_triples(expr_a_grammar)
        assert PushTriple(terminal="a", parent=x("E", 2), context=x("E", 2), rightmost=True) in triples

    def test_single_rule(self):
        """Test the two triples of S -> a b."""
        triples = enumerate_push_triples(parse_grammar("start: S\nS -> a b\n"))
        assert triples == {
            PushTriple(terminal="a", parent=x("S", 1), context=x("S", 1), rightmost=False),
            PushTriple(terminal="b", parent=x("S", 1), context=x("S", 1), rightmost=True),
        }

    def test_names(self):
        """Test the printed names of extended nonterminals."""
        assert x("T", 2).name == "T2"
        assert x("A1", 2).name == "A1.2"


class TestGrammarToAutomaton:
    """Tests for building automata from grammars."""

    def test_expression_transitions(self, expr_a_grammar):
        """Test the transitions used by the derivation of a x a + a."""
        a = grammar_to_automaton(expr_a_grammar)
        assert "(T2,T2)" in a.push_targets("(S1,_)", "a")
        assert "(E2,_)" in a.push_targets("(S1,T2)", "x")
        assert "(E1,_)" in a.push_targets("(S1,E2)", "+")
        assert "(E2,E2)" in a.push_targets("(E2,_)", "a")
        assert "(T2,T2)" in a.push_targets("(E1,_)", "a")

        assert "(E1,T2)" in a.flush_targets("(T2,T2)", "(E1,_)")
        assert "(S1,T2)" in a.flush_targets("(T2,T2)", "(S1,_)")
        assert "(S1,E2)" in a.flush_targets("(E2,E2)", "(S1,T2)")
        assert "(S1,E1)" in a.flush_targets("(E1,T2)", "(S1,E2)")

    def test_initial_and_final(self, expr_a_grammar):
        """Test the initial and final states."""
        a = grammar_to_automaton(expr_a_grammar)
        assert a.initial == ("(S1,_)",)
        assert a.final == ("(S1,E1)", "(S1,E2)", "(S1,E3)")

    def test_expression_moves(self, expr_a_grammar):
        """Test the move sequence on a x a + a."""
        a = grammar_to_automaton(expr_a_grammar)
        t = trace(a, "a x a + a".split())
        assert [m.value for m in t.moves] == [
            "mark", "flush", "mark", "push", "flush", "mark", "mark", "flush", "flush",
        ]

    def test_agrees_with_grammar(self, expr_grammar):
        """Test agreement with the membership oracle on all 3280 words up to length 7."""
        a = grammar_to_automaton(expr_grammar)
        report = language_agree(
            lambda w: cf_membership(expr_grammar, w), lambda w: accepts(a, w), expr_grammar.terminals, 7,
        )
        assert report.tested == 3280
        assert report.agree

    def test_single_terminal(self):
        """Test that S -> a, once normalized, gives an automaton for {a}."""
        g = normalize(parse_grammar("start: S\nS -> a\n"))
        a = grammar_to_automaton(g)
        accepted = [w for w in enumerate_words(["a"], 4) if accepts(a, w)]
        assert accepted == [("a",)]

    def test_empty_word(self):
        """Test that an axiom ε-rule makes the automaton accept ε."""
        g = normalize(parse_grammar("start: S\nS -> a S b | _\n"))
        a = grammar_to_automaton(g)
        assert accepts(a, [])
        assert accepts(a, "a a b b".split())
        assert not accepts(a, "a b b".split())

    def test_shape_is_required(self):
        """Test that grammars outside the normal shape are refused."""
        with pytest.raises(FischerShapeError):
            grammar_to_automaton(parse_grammar("start: S\nS -> S a | a\n"))

    def test_random_grammars(self):
        """Test agreement with the oracle on generated grammars, most of which must be usable."""
        checked, conflicting, cyclic = 0, 0, 0
        for seed in range(80):
            g = random_grammar(seed)
            try:
                a = grammar_to_automaton(normalize(g))
            except ConflictError:
                conflicting += 1
                continue
            if not eq_cycle_check(a.alphabet).ok:
                cyclic += 1
                continue
            report = language_agree(lambda w: cf_membership(g, w), lambda w: accepts(a, w), g.terminals, 5)
            assert report.agree, (format_grammar(g), report.disagreements[:3])
            checked += 1
        assert checked + conflicting + cyclic == 80
        assert checked >= 20, (checked, conflicting, cyclic)


class TestAutomatonToGrammar:
    """Tests for building grammars from automata."""

    def test_dyck_words(self, dyck):
        """Test a few words against the produced grammar."""
        g = automaton_to_grammar(dyck)
        assert g.axiom == A2G_AXIOM
        assert cf_membership(g, "a ra".split())
        assert cf_membership(g, "a b rb ra".split())
        assert cf_membership(g, [])
        assert not cf_membership(g, "a b".split())

    def test_agrees_with_automaton(self, dyck):
        """Test agreement with the automaton on all words up to length 8."""
        g = automaton_to_grammar(dyck)
        report = language_agree(lambda w: accepts(dyck, w), lambda w: cf_membership(g, w), dyck.alphabet.terminals, 8)
        assert report.agree

    def test_rule_length_bound(self, dyck):
        """Test that right-hand sides stay within 2c + 1."""
        g = automaton_to_grammar(dyck)
        bound = eq_cycle_check(dyck.alphabet).rhs_bound
        assert all(len(rule.rhs) <= bound for rule in g.rules)

    def test_result_is_reduced(self, dyck):
        """Test that useless quads are trimmed away."""
        assert is_reduced(automaton_to_grammar(dyck))

    def test_matrix_is_not_invented(self, dyck):
        """Test that the produced grammar only uses relations of the original matrix."""
        derived = compute_opm(automaton_to_grammar(dyck))
        for pair, rel in derived.entries.items():
            assert dyck.alphabet.entries.get(pair) is rel

    def test_output_parses_back(self, dyck):
        """Test that the printed grammar is a valid grammar file."""
        g = automaton_to_grammar(dyck)
        assert parse_grammar(format_grammar(g)) == g

    def test_round_trip(self, dyck):
        """Test that converting back to an automaton keeps the language."""
        back = grammar_to_automaton(automaton_to_grammar(dyck))
        report = language_agree(lambda w: accepts(dyck, w), lambda w: accepts(back, w), dyck.alphabet.terminals, 6)
        assert report.agree

    def test_no_final_states(self, dyck):
        """Test that an automaton without final states gives the empty grammar."""
        g = automaton_to_grammar(dyck.with_final([]))
        assert g.rules == ()
        assert not cf_membership(g, [])

    def test_random_automata(self):
        """Test agreement on generated automata."""
        for seed in range(40):
            terminals = ["a", "b", "c"][: 1 + seed % 3]
            a = random_automaton(seed, max_states=4, terminals=terminals)
            g = automaton_to_grammar(a)
            report = language_agree(lambda w: accepts(a, w), lambda w: cf_membership(g, w), terminals, 5)
            assert report.agree, (seed, report.disagreements[:3])


class TestSimpleChainSupports:
    """Tests for enumerating supports of simple chains."""

    def test_dyck_pair(self, dyck):
        """Test the two supports of #[a ra]#."""
        chain = parse_chain(dyck.alphabet, "#", ["a", "ra"], "#")
        labels = {s.state_labels for s in simple_chain_supports(dyck, chain)}
        assert labels == {("q0", "q1", "q1", "q0"), ("q1", "q1", "q1", "q1")}

    def test_composed_chain_is_refused(self, dyck):
        """Test that nested chains are not enumerated directly."""
        chain = parse_chain(dyck.alphabet, "#", ["a", "b", "rb", "ra"], "#")
        with pytest.raises(ValueError):
            simple_chain_supports(dyck, chain)
