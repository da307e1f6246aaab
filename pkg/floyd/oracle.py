"""
Brute-force harnesses: exhaustive word enumeration, acceptor agreement and seeded generators.
"""

import logging
import random
from itertools import product
from typing import Callable, Iterator, Sequence

from pydantic import BaseModel, ConfigDict, Field

from .automaton import FloydAutomaton
from .grammar import Grammar, Rule, drop_dangling, make_grammar, trim
from .opm import BORDER, PrecedenceAlphabet, PrecRel, build_alphabet, eq_cycle_check

logger = logging.getLogger(__name__)

Acceptor = Callable[[Sequence[str]], bool]


class Disagreement(BaseModel):
    model_config = ConfigDict(frozen=True)

    word: tuple[str, ...]
    left: bool
    right: bool

    def render(self) -> str:
        word = " ".join(self.word) or "ε"
        return f"{word} left={str(self.left).lower()} right={str(self.right).lower()}"


class AgreementReport(BaseModel):
    """Outcome of comparing two acceptors on every word up to max_len."""
    model_config = ConfigDict(frozen=True)

    max_len: int
    tested: int
    disagreements: list[Disagreement] = Field(default_factory=list)

    @property
    def agree(self) -> bool:
        return not self.disagreements


def iter_words(terminals: Sequence[str], max_len: int) -> Iterator[tuple[str, ...]]:
    for length in range(max_len + 1):
        yield from product(terminals, repeat=length)


def enumerate_words(terminals: Sequence[str], max_len: int) -> list[tuple[str, ...]]:
    """All words of length 0..max_len, by length then lexicographically in declaration order."""
    if max_len < 0:
        raise ValueError("max_len must be non-negative")
    return list(iter_words(list(dict.fromkeys(terminals)), max_len))


def language_agree(
    accept_left: Acceptor,
    accept_right: Acceptor,
    terminals: Sequence[str],
    max_len: int,
    stop_at_first: bool = False,
) -> AgreementReport:
    tested = 0
    disagreements: list[Disagreement] = []
    for word in iter_words(list(dict.fromkeys(terminals)), max_len):
        tested += 1
        left, right = accept_left(word), accept_right(word)
        if left != right:
            disagreements.append(Disagreement(word=word, left=left, right=right))
            if stop_at_first:
                break
    logger.info(f"Compared {tested} words up to length {max_len}: {len(disagreements)} disagreement(s)")
    return AgreementReport(max_len=max_len, tested=tested, disagreements=disagreements)


def format_report(report: AgreementReport) -> str:
    return "".join(d.render() + "\n" for d in report.disagreements)


def random_alphabet(rng: random.Random, terminals: Sequence[str], density: float = 0.7) -> PrecedenceAlphabet:
    """A random conflict-free matrix; ≐-cycles are rejected by resampling."""
    while True:
        entries: list[tuple[str, str, PrecRel]] = [(BORDER, BORDER, PrecRel.EQUALS)]
        for a in terminals:
            if rng.random() < density:
                entries.append((BORDER, a, PrecRel.YIELDS))
            if rng.random() < density:
                entries.append((a, BORDER, PrecRel.TAKES))
            for b in terminals:
                if rng.random() < density:
                    entries.append((a, b, rng.choice(list(PrecRel))))
        alphabet = build_alphabet(terminals, entries)
        if eq_cycle_check(alphabet).ok:
            return alphabet


def _subset(rng: random.Random, items: Sequence[str], low: int, high: int) -> list[str]:
    size = rng.randint(low, min(high, len(items)))
    return rng.sample(list(items), size)


def random_automaton(
    seed: int,
    max_states: int,
    terminals: Sequence[str],
    edge_density: float = 0.5,
) -> FloydAutomaton:
    """Reproducible random automaton; the generator is local to the call."""
    if max_states < 1:
        raise ValueError("max_states must be at least 1")
    rng = random.Random(seed)
    alphabet = random_alphabet(rng, terminals)
    states = [f"q{i}" for i in range(rng.randint(1, max_states))]
    initial = _subset(rng, states, 1, 2)
    final = _subset(rng, states, 0, len(states))

    push: dict[tuple[str, str], list[str]] = {}
    for q in states:
        for a in terminals:
            if rng.random() < edge_density:
                push[(q, a)] = _subset(rng, states, 1, 2)
    flush: dict[tuple[str, str], list[str]] = {}
    for q in states:
        for r in states:
            if rng.random() < edge_density:
                flush[(q, r)] = _subset(rng, states, 1, 2)

    return FloydAutomaton(
        alphabet=alphabet,
        states=tuple(states),
        initial=tuple(sorted(initial, key=states.index)),
        final=tuple(sorted(final, key=states.index)),
        push_edges=push,
        flush_edges=flush,
    )


def _random_rhs(rng: random.Random, nonterminals: Sequence[str], terminals: Sequence[str], max_len: int) -> tuple[str, ...]:
    rhs: list[str] = []
    nonterminal_next = rng.random() < 0.5
    for _ in range(rng.randint(1, max_len)):
        if nonterminal_next and (not rhs or rhs[-1] in terminals):
            rhs.append(rng.choice(nonterminals))
        else:
            rhs.append(rng.choice(terminals))
        nonterminal_next = rng.random() < 0.5
    return tuple(rhs)


def random_grammar(
    seed: int,
    terminals: Sequence[str] = ("a", "b", "c"),
    max_nonterminals: int = 3,
    max_rules: int = 6,
    max_rhs: int = 3,
    allow_empty: bool = True,
) -> Grammar:
    """Reproducible random reduced operator grammar (conflicts are not excluded)."""
    rng = random.Random(seed)
    nonterminals = [f"N{i}" for i in range(rng.randint(1, max_nonterminals))]
    nonterminals[0] = "S"
    # S -> t keeps the axiom productive whatever else is drawn.
    rules = [Rule(lhs="S", rhs=(rng.choice(terminals),))]
    for _ in range(rng.randint(1, max_rules)):
        lhs = rng.choice(nonterminals)
        if allow_empty and rng.random() < 0.1:
            rules.append(Rule(lhs=lhs, rhs=()))
        else:
            rules.append(Rule(lhs=lhs, rhs=_random_rhs(rng, nonterminals, terminals, max_rhs)))
    return trim(make_grammar("S", drop_dangling(rules, set(nonterminals))))


def random_words(rng: random.Random, terminals: Sequence[str], count: int, max_len: int) -> list[tuple[str, ...]]:
    return [tuple(rng.choice(terminals) for _ in range(rng.randint(0, max_len))) for _ in range(count)]

