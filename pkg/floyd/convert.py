"""
Conversions between Floyd grammars and Floyd automata.

grammar_to_automaton reads the automaton off derivation-tree shapes: states pair
an extended nonterminal (a nonterminal plus the number of one of its rules) with
the extended nonterminal just completed, or ⊥. automaton_to_grammar saturates
rules over quadruples [a, q, p, b], one per chain a[y]b whose support leads the
entry under a from state q to state p.
"""

import logging
from itertools import product
from typing import Iterator, Optional

from pydantic import BaseModel, ConfigDict

from .automaton import FloydAutomaton
from .errors import EqCycleError
from .grammar import Grammar, Rule, compute_opm, make_grammar, require_fischer_shape, trim
from .opm import BORDER, ChainTree, PrecRel

logger = logging.getLogger(__name__)

BOTTOM_NAME = "_"
A2G_AXIOM = "S!"

__all__ = [
    "ExtendedNonterminal",
    "GState",
    "PushTriple",
    "QuadNonterminal",
    "Support",
    "automaton_to_grammar",
    "enumerate_push_triples",
    "grammar_to_automaton",
    "simple_chain_supports",
    "trim",
]


class ExtendedNonterminal(BaseModel):
    """A nonterminal tagged with the 1-based number of one of its rules."""
    model_config = ConfigDict(frozen=True)

    base: str
    rule_index: int

    @property
    def name(self) -> str:
        if self.base[-1:].isdigit():
            return f"{self.base}.{self.rule_index}"
        return f"{self.base}{self.rule_index}"


class GState(BaseModel):
    model_config = ConfigDict(frozen=True)

    context: ExtendedNonterminal
    completed: Optional[ExtendedNonterminal] = None

    @property
    def name(self) -> str:
        done = self.completed.name if self.completed is not None else BOTTOM_NAME
        return f"({self.context.name},{done})"


class PushTriple(BaseModel):
    """Terminal a with parent X, push source context Y and the nonterminal Ẑ just left of a."""
    model_config = ConfigDict(frozen=True)

    terminal: str
    parent: ExtendedNonterminal
    context: ExtendedNonterminal
    rightmost: bool
    left: Optional[ExtendedNonterminal] = None

    @property
    def source(self) -> GState:
        return GState(context=self.context, completed=self.left)

    @property
    def target(self) -> GState:
        return GState(context=self.parent, completed=self.parent if self.rightmost else None)


class QuadNonterminal(BaseModel):
    model_config = ConfigDict(frozen=True)

    left: str
    from_state: str
    to_state: str
    right: str

    @property
    def name(self) -> str:
        return f"[{self.left},{self.from_state},{self.to_state},{self.right}]"


class Support(BaseModel):
    """A simple chain with its support labels: q0, the state after each spine symbol, then the flush target."""
    model_config = ConfigDict(frozen=True)

    chain: ChainTree
    state_labels: tuple[str, ...]


class _Numbering:
    """Extended nonterminals of a grammar, numbered per left-hand side in rule order."""

    def __init__(self, g: Grammar):
        self.g = g
        self.by_base: dict[str, list[ExtendedNonterminal]] = {symbol: [] for symbol in g.nonterminals}
        self.rules: list[tuple[ExtendedNonterminal, Rule]] = []
        for rule in g.rules:
            extended = ExtendedNonterminal(base=rule.lhs, rule_index=len(self.by_base[rule.lhs]) + 1)
            self.by_base[rule.lhs].append(extended)
            self.rules.append((extended, rule))
        self.order = {x: index for index, (x, _) in enumerate(self.rules)}
        self.up = self._ancestors()

    def _ancestors(self) -> dict[ExtendedNonterminal, set[ExtendedNonterminal]]:
        # up(A): contexts a leftmost-descending chain from A can hang under. A child at a
        # position after a terminal hangs under its own rule; a leading child inherits
        # the parent's contexts, and under the axiom the root itself is the context.
        g = self.g
        up_base: dict[str, set[ExtendedNonterminal]] = {symbol: set() for symbol in g.nonterminals}
        changed = True
        while changed:
            changed = False
            for extended, rule in self.rules:
                for j, symbol in enumerate(rule.rhs):
                    if not g.is_nonterminal(symbol):
                        continue
                    if j > 0 or rule.lhs == g.axiom:
                        new = {extended}
                    else:
                        new = up_base[rule.lhs]
                    if not new <= up_base[symbol]:
                        up_base[symbol] |= new
                        changed = True
        return {
            extended: {extended} if extended.base == g.axiom else up_base[extended.base]
            for extended, _ in self.rules
        }

    def versions(self, symbol: str) -> list[ExtendedNonterminal]:
        return self.by_base[symbol]


def enumerate_push_triples(g: Grammar) -> set[PushTriple]:
    numbering = _Numbering(g)
    return _push_triples(numbering)


def _push_triples(numbering: _Numbering) -> set[PushTriple]:
    g = numbering.g
    triples: set[PushTriple] = set()
    for parent, rule in numbering.rules:
        rhs = rule.rhs
        positions = [j for j, symbol in enumerate(rhs) if not g.is_nonterminal(symbol)]
        if not positions:
            continue
        for j in positions:
            contexts = numbering.up[parent] if j == positions[0] else {parent}
            neighbour = rhs[j - 1] if j > 0 and g.is_nonterminal(rhs[j - 1]) else None
            lefts = numbering.versions(neighbour) if neighbour is not None else [None]
            for context in contexts:
                for left in lefts:
                    triples.add(PushTriple(
                        terminal=rhs[j],
                        parent=parent,
                        context=context,
                        rightmost=j == len(rhs) - 1,
                        left=left,
                    ))
    return triples


def grammar_to_automaton(g: Grammar) -> FloydAutomaton:
    """Build the Floyd automaton recognizing L(g); g must already be in normal shape."""
    require_fischer_shape(g)
    alphabet = compute_opm(g)
    numbering = _Numbering(g)

    push: dict[tuple[str, str], set[str]] = {}
    flush: dict[tuple[str, str], set[str]] = {}
    used: set[GState] = set()

    for triple in _push_triples(numbering):
        source, target = triple.source, triple.target
        push.setdefault((source.name, triple.terminal), set()).add(target.name)
        used.update((source, target))

    for parent, rule in numbering.rules:
        rhs = rule.rhs
        if all(g.is_nonterminal(symbol) for symbol in rhs):
            continue
        lasts = numbering.versions(rhs[-1]) if g.is_nonterminal(rhs[-1]) else [parent]
        firsts = numbering.versions(rhs[0]) if g.is_nonterminal(rhs[0]) else [None]
        for context in numbering.up[parent]:
            for last, first in product(lasts, firsts):
                top = GState(context=parent, completed=last)
                below = GState(context=context, completed=first)
                result = GState(context=context, completed=parent)
                flush.setdefault((top.name, below.name), set()).add(result.name)
                used.update((top, below, result))

    initial: list[GState] = []
    final: list[GState] = []
    for root in numbering.versions(g.axiom):
        rule = dict(numbering.rules)[root]
        initial.append(GState(context=root))
        if not rule.rhs:
            final.append(GState(context=root))
        elif len(rule.rhs) == 1 and g.is_nonterminal(rule.rhs[0]):
            final.extend(GState(context=root, completed=x) for x in numbering.versions(rule.rhs[0]))
    used.update(initial)
    used.update(final)

    order = numbering.order
    states = sorted(used, key=lambda s: (order[s.context], -1 if s.completed is None else order[s.completed]))
    automaton = FloydAutomaton(
        alphabet=alphabet,
        states=tuple(s.name for s in states),
        initial=tuple(s.name for s in initial),
        final=tuple(s.name for s in final),
        push_edges={key: tuple(image) for key, image in push.items()},
        flush_edges={key: tuple(image) for key, image in flush.items()},
    )
    logger.info(f"Built automaton with {len(states)} states and {automaton.edge_count()} transitions from {len(g.rules)} rules")
    return automaton


def _spines(a: FloydAutomaton) -> Iterator[tuple[str, tuple[str, ...], str]]:
    """Every a0 ⋖ a1 ≐ … ≐ an ⋗ a(n+1) with compatible borders."""
    alphabet = a.alphabet

    def extend(a0: str, spine: tuple[str, ...]) -> Iterator[tuple[str, tuple[str, ...], str]]:
        last = spine[-1]
        for right in alphabet.symbols:
            if alphabet.rel(last, right) is PrecRel.TAKES and alphabet.borders_compatible(a0, right):
                yield a0, spine, right
        for following in alphabet.terminals:
            if alphabet.rel(last, following) is PrecRel.EQUALS:
                yield from extend(a0, spine + (following,))

    for a0 in alphabet.symbols:
        for a1 in alphabet.terminals:
            if alphabet.rel(a0, a1) is PrecRel.YIELDS:
                yield from extend(a0, (a1,))


def _expand_spine(
    a: FloydAutomaton,
    a0: str,
    spine: tuple[str, ...],
    right: str,
    realized: dict[tuple[str, str, str], set[str]],
) -> Iterator[tuple[QuadNonterminal, tuple[object, ...]]]:
    """Rules [a0,q0,p,right] -> x0 a1 x1 … an xn whose slots use realized quads (or are empty)."""
    lefts = (a0,) + spine
    rights = spine + (right,)

    def slot(i: int, q: str) -> Iterator[tuple[Optional[QuadNonterminal], str]]:
        yield None, q
        for p in realized.get((lefts[i], q, rights[i]), ()):
            yield QuadNonterminal(left=lefts[i], from_state=q, to_state=p, right=rights[i]), p

    def filled(quad: Optional[QuadNonterminal]) -> tuple[object, ...]:
        return (quad,) if quad is not None else ()

    def walk(i: int, q: str, q0_after: str, body: tuple[object, ...]) -> Iterator[tuple[str, tuple[object, ...]]]:
        if i > len(spine):
            for p in a.flush_targets(q, q0_after):
                yield p, body
            return
        for target in a.push_targets(q, spine[i - 1]):
            for quad, after in slot(i, target):
                yield from walk(i + 1, after, q0_after, body + (spine[i - 1],) + filled(quad))

    for q0 in a.states:
        for quad0, q0_after in slot(0, q0):
            for p, body in walk(1, q0_after, q0_after, filled(quad0)):
                yield QuadNonterminal(left=a0, from_state=q0, to_state=p, right=right), body


def automaton_to_grammar(a: FloydAutomaton) -> Grammar:
    """
    Saturate grammar rules over quadruple nonterminals, then trim.

    Each round rebuilds the rules of every spine from the quads realized so far;
    the loop stops when no new quad appears.
    """
    check = a.eq_check
    if not check.ok:
        raise EqCycleError(check.witness)

    spines = list(_spines(a))
    realized: dict[tuple[str, str, str], set[str]] = {}
    rules: dict[QuadNonterminal, set[tuple[object, ...]]] = {}
    rounds = 0
    while True:
        rounds += 1
        fresh = 0
        for a0, spine, right in spines:
            for quad, body in _expand_spine(a, a0, spine, right, realized):
                rules.setdefault(quad, set()).add(body)
        for quad in rules:
            targets = realized.setdefault((quad.left, quad.from_state, quad.right), set())
            if quad.to_state not in targets:
                targets.add(quad.to_state)
                fresh += 1
        logger.debug(f"Saturation round {rounds}: {fresh} new quads, {sum(len(b) for b in rules.values())} rules")
        if not fresh:
            break

    axiom = A2G_AXIOM
    while axiom in a.alphabet.terminals:
        axiom += "!"
    names: dict[QuadNonterminal, str] = {}
    taken = set(a.alphabet.terminals) | {axiom}

    def name(quad: QuadNonterminal) -> str:
        if quad not in names:
            candidate = quad.name
            while candidate in taken:
                candidate += "~"
            taken.add(candidate)
            names[quad] = candidate
        return names[quad]

    for quad in sorted(rules, key=lambda x: (x.left, x.from_state, x.to_state, x.right)):
        name(quad)

    def render(body: tuple[object, ...]) -> tuple[str, ...]:
        return tuple(name(x) if isinstance(x, QuadNonterminal) else x for x in body)

    grammar_rules = [
        Rule(lhs=axiom, rhs=(name(quad),))
        for q in a.initial
        for f in a.final
        if (quad := QuadNonterminal(left=BORDER, from_state=q, to_state=f, right=BORDER)) in rules
    ]
    if set(a.initial) & set(a.final):
        grammar_rules.append(Rule(lhs=axiom, rhs=()))
    if not grammar_rules:
        logger.info("No accepting chain between initial and final states; language is empty")
        return Grammar(nonterminals=(axiom,), terminals=(), axiom=axiom)

    for quad in names:
        for rhs in sorted(render(body) for body in rules[quad]):
            grammar_rules.append(Rule(lhs=names[quad], rhs=rhs))

    result = trim(make_grammar(axiom, grammar_rules))
    logger.info(f"Saturated {len(grammar_rules)} rules in {rounds} rounds; {len(result.rules)} after trimming")
    return result


def simple_chain_supports(a: FloydAutomaton, chain: ChainTree) -> list[Support]:
    """All supports of a simple chain: q0 -a1-> q1 -a2-> … -an-> qn, then q(n+1) ∈ δ_flush(qn, q0)."""
    if not chain.is_simple:
        raise ValueError("only simple chains have supports enumerated directly")
    supports = []

    def walk(i: int, labels: tuple[str, ...]) -> None:
        if i == len(chain.spine):
            for p in a.flush_targets(labels[-1], labels[0]):
                supports.append(Support(chain=chain, state_labels=labels + (p,)))
            return
        for target in a.push_targets(labels[-1], chain.spine[i]):
            walk(i + 1, labels + (target,))

    for q0 in a.states:
        walk(0, (q0,))
    return supports
