"""
Tests for precedence alphabets, the ≐-cycle check, chains and the matrix format.
"""

import random

import pytest

from floyd.automaton import accepts, determinize, trace
from floyd.errors import AutomatonFormatError, ConflictError, UnknownToken
from floyd.opm import (
    BORDER,
    ChainTree,
    MoveKind,
    NotAChain,
    PrecRel,
    StructuralRun,
    build_alphabet,
    eq_cycle_check,
    format_matrix,
    parse_chain,
    parse_matrix,
    relation,
    structural_moves,
)
from floyd.oracle import enumerate_words, random_alphabet, random_words


class TestBuildAlphabet:
    """Tests for assembling and validating matrices."""

    def test_entries_are_looked_up(self):
        """Test that a stored cell is returned and an empty one is None."""
        alphabet = build_alphabet(["a", "b"], [("a", "b", "<"), ("#", "a", PrecRel.YIELDS)])
        assert relation(alphabet, "a", "b") is PrecRel.YIELDS
        assert relation(alphabet, "#", "a") is PrecRel.YIELDS
        assert relation(alphabet, "b", "a") is None

    def test_repeated_identical_entry_is_not_a_conflict(self):
        """Test that the same relation twice on a pair is accepted."""
        alphabet = build_alphabet(["a"], [("a", "a", "="), ("a", "a", "=")])
        assert alphabet.filled_cells() == 1

    def test_all_conflicts_are_reported(self):
        """Test that every conflicting pair is listed, not just the first."""
        with pytest.raises(ConflictError) as info:
            build_alphabet(["a", "b"], [("a", "b", "<"), ("a", "b", ">"), ("b", "a", "="), ("b", "a", "<")])
        pairs = {(c.a, c.b) for c in info.value.conflicts}
        assert pairs == {("a", "b"), ("b", "a")}
        assert "(a, b)" in str(info.value)

    def test_unknown_token_in_entry(self):
        """Test that entries over undeclared tokens are rejected."""
        with pytest.raises(UnknownToken):
            build_alphabet(["a"], [("a", "z", "<")])

    def test_border_cannot_be_a_terminal(self):
        """Test that # is reserved."""
        with pytest.raises(UnknownToken):
            build_alphabet(["a", BORDER], [])

    def test_relation_rejects_unknown_symbol(self, dyck):
        """Test that the checked lookup raises on tokens outside the alphabet."""
        with pytest.raises(UnknownToken):
            relation(dyck.alphabet, "a", "zz")

    def test_dyck_matrix_cells(self, dyck):
        """Test the filled cells of the bracket matrix."""
        alphabet = dyck.alphabet
        assert alphabet.filled_cells() == 19
        assert alphabet.rel("a", "ra") is PrecRel.EQUALS
        assert alphabet.rel("ra", "#") is PrecRel.TAKES
        assert alphabet.rel("#", "#") is PrecRel.EQUALS
        assert alphabet.rel("#", "ra") is None


class TestEqCycleCheck:
    """Tests for ≐-cycle detection and the longest ≐-chain."""

    def test_dyck_is_acyclic(self, dyck):
        """Test that # ≐ # does not count as a cycle."""
        result = eq_cycle_check(dyck.alphabet)
        assert result.ok
        assert result.max_chain == 2
        assert result.rhs_bound == 5

    def test_exceptions_is_acyclic(self, exceptions):
        """Test the call/return/handler matrix."""
        assert eq_cycle_check(exceptions.alphabet).ok

    def test_cycle_witness(self):
        """Test that a ≐-cycle is found and reported."""
        alphabet = build_alphabet(["a", "b", "c"], [("a", "b", "="), ("b", "c", "="), ("c", "a", "=")])
        result = eq_cycle_check(alphabet)
        assert not result.ok
        assert set(result.witness) == {"a", "b", "c"}
        assert result.rhs_bound is None

    def test_self_loop_is_a_cycle(self):
        """Test that a ≐ a is a cycle of length one."""
        result = eq_cycle_check(build_alphabet(["a"], [("a", "a", "=")]))
        assert not result.ok
        assert result.witness == ("a",)

    def test_no_equals_gives_chain_of_one(self):
        """Test that isolated terminals give a longest chain of one."""
        result = eq_cycle_check(build_alphabet(["a", "b"], [("a", "b", "<")]))
        assert result.ok
        assert result.max_chain == 1

    def test_matches_independent_search(self):
        """Test against a plain depth-first cycle search on small matrices."""

        def has_cycle(alphabet) -> bool:
            edges = {}
            for (a, b), rel in alphabet.entries.items():
                if rel is PrecRel.EQUALS and BORDER not in (a, b):
                    edges.setdefault(a, []).append(b)
            state = {}

            def visit(node) -> bool:
                state[node] = "open"
                for succ in edges.get(node, []):
                    if state.get(succ) == "open" or (succ not in state and visit(succ)):
                        return True
                state[node] = "done"
                return False

            return any(visit(node) for node in list(edges) if node not in state)

        rng = random.Random(7)
        for _ in range(50):
            entries = [
                (a, b, rng.choice(list(PrecRel)))
                for a in "abc" for b in "abc" if rng.random() < 0.5
            ]
            alphabet = build_alphabet("abc", entries)
            assert eq_cycle_check(alphabet).ok == (not has_cycle(alphabet))
        # The generator itself never returns a cyclic matrix.
        assert eq_cycle_check(random_alphabet(rng, ["a", "b", "c"])).ok


class TestParseChain:
    """Tests for decomposing words into chains."""

    def test_simple_chain(self, dyck):
        """Test a chain without nested children."""
        tree = parse_chain(dyck.alphabet, "#", ["a", "ra"], "#")
        assert isinstance(tree, ChainTree)
        assert tree.spine == ("a", "ra")
        assert tree.is_simple
        assert tree.render() == "#[a ra]#"

    def test_composed_chain(self, dyck):
        """Test a chain with one nested chain between the spine symbols."""
        tree = parse_chain(dyck.alphabet, "#", ["a", "b", "rb", "ra"], "#")
        assert isinstance(tree, ChainTree)
        assert tree.spine == ("a", "ra")
        assert tree.children[0] is None
        inner = tree.children[1]
        assert inner.border == ("a", "ra")
        assert inner.spine == ("b", "rb")
        assert tree.render() == "#[a [b rb] ra]#"
        assert tree.frontier() == ("a", "b", "rb", "ra")

    def test_trailing_child(self, dyck):
        """Test that a chain after the last spine symbol becomes the last child."""
        tree = parse_chain(dyck.alphabet, "#", ["a", "ra", "a", "ra"], "#")
        assert isinstance(tree, ChainTree)
        assert tree.spine == ("a", "ra")
        assert tree.children[0] is None
        assert tree.children[2].border == ("ra", "#")
        assert tree.render() == "#[a ra [a ra]]#"

    def test_no_relation_with_border(self, dyck):
        """Test that # followed by ra breaks at position 1."""
        result = parse_chain(dyck.alphabet, "#", ["ra"], "#")
        assert isinstance(result, NotAChain)
        assert result.position == 1

    def test_unfinished_chain(self, dyck):
        """Test that a word left on the stack is reported at the right border."""
        result = parse_chain(dyck.alphabet, "#", ["a"], "#")
        assert isinstance(result, NotAChain)
        assert result.position == 2

    def test_empty_word(self, dyck):
        """Test that ε is never a chain."""
        result = parse_chain(dyck.alphabet, "#", [], "#")
        assert isinstance(result, NotAChain)
        assert result.position == 0

    def test_unknown_token(self, dyck):
        """Test that tokens outside the alphabet raise."""
        with pytest.raises(UnknownToken):
            parse_chain(dyck.alphabet, "#", ["x"], "#")

    def test_inner_borders(self, dyck):
        """Test a chain between two spine symbols of an enclosing chain."""
        tree = parse_chain(dyck.alphabet, "a", ["b", "rb"], "ra")
        assert isinstance(tree, ChainTree)
        assert tree.border == ("a", "ra")
        assert tree.render() == "a[b rb]ra"


class TestStructuralRun:
    """Tests for the state-free run."""

    def test_dyck_moves(self, dyck):
        """Test the move sequence on the bracket word."""
        moves = structural_moves(dyck.alphabet, "a b a ra rb ra a ra".split())
        assert [m.value for m in moves] == [
            "mark", "mark", "mark", "push", "flush", "push",
            "flush", "push", "mark", "push", "flush", "flush",
        ]

    def test_dead_run(self, dyck):
        """Test that a missing relation ends the run."""
        assert structural_moves(dyck.alphabet, ["a"]) is None
        run = StructuralRun(dyck.alphabet)
        assert not run.feed("ra")
        assert run.dead_at == 1
        assert not run.alive

    def test_returns_to_bottom(self, exceptions):
        """Test that returns are recorded before the token that follows a completed chain."""
        run = StructuralRun(exceptions.alphabet)
        for token in ["call_a", "ret_a", "call_a", "ret_a", "call_a"]:
            assert run.feed(token)
        assert run.returns == [2, 4]
        assert run.height == 2

    def test_chains_are_exactly_completed_runs(self):
        """Test that parse_chain succeeds iff the state-free run returns to [#], and spells the word back."""
        rng = random.Random(23)
        chains = 0
        for _ in range(100):
            alphabet = random_alphabet(rng, ["a", "b", "c"])
            for word in random_words(rng, ["a", "b", "c"], 20, 12):
                if not word:
                    continue
                result = parse_chain(alphabet, BORDER, word, BORDER)
                completed = structural_moves(alphabet, word) is not None
                assert isinstance(result, ChainTree) == completed, (format_matrix(alphabet), word)
                if completed:
                    assert result.frontier() == word
                    chains += 1
        assert chains > 0

    def test_moves_match_automata_with_different_states(self, dyck):
        """Test that accepting runs of two automata over one matrix make the state-free moves."""
        other = determinize(dyck)
        assert other.alphabet == dyck.alphabet
        assert set(other.states).isdisjoint(dyck.states)
        accepted = 0
        for word in enumerate_words(dyck.alphabet.terminals, 6):
            if not accepts(dyck, word):
                continue
            expected = structural_moves(dyck.alphabet, word)
            assert trace(dyck, word).moves == expected
            assert trace(other, word).moves == expected
            accepted += 1
        assert accepted > 10
        assert structural_moves(dyck.alphabet, "a b rb ra".split())[0] is MoveKind.MARK


class TestMatrixFormat:
    """Tests for the line format of matrices."""

    def test_format_order(self, expr_grammar):
        """Test rows and columns in declaration order with # last."""
        from floyd.grammar import compute_opm

        text = format_matrix(compute_opm(expr_grammar))
        assert text.splitlines() == [
            "+ > +",
            "+ < x",
            "+ < n",
            "+ > #",
            "x = n",
            "n > +",
            "n > x",
            "n > #",
            "# < +",
            "# < x",
            "# < n",
            "# = #",
        ]

    def test_round_trip(self, dyck):
        """Test that parsing the printed matrix gives the same alphabet."""
        text = format_matrix(dyck.alphabet)
        assert parse_matrix(text, dyck.alphabet.terminals) == dyck.alphabet

    def test_comments_and_blank_lines(self):
        """Test that // comments and blank lines are skipped."""
        alphabet = parse_matrix("// header\n\na < b   // yields\n")
        assert alphabet.terminals == ("a", "b")
        assert alphabet.rel("a", "b") is PrecRel.YIELDS

    def test_bad_line(self):
        """Test that a malformed line reports its number."""
        with pytest.raises(AutomatonFormatError) as info:
            parse_matrix("a < b\na ? b\n")
        assert info.value.line_number == 2
