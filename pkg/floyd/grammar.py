"""
Operator grammars.

Grammar file format:

    // comment
    start: S
    S -> E
    E -> E + T | T x n | n

`_` alone denotes the empty right-hand side; a token is a nonterminal iff it is the
left-hand side of some rule (the axiom always is).
"""

import logging
import math
from collections import deque
from functools import lru_cache
from itertools import product
from typing import Iterable, Optional, Sequence

from pydantic import BaseModel, ConfigDict, model_validator

from .errors import (
    Conflict,
    ConflictError,
    FischerShapeError,
    GrammarSyntaxError,
    NotReducedError,
    OperatorFormViolation,
    UndeclaredAxiom,
    UnknownToken,
)
from .opm import BORDER, PrecedenceAlphabet, PrecRel, build_alphabet, check_token

logger = logging.getLogger(__name__)

EPSILON = "_"
RESERVED = {BORDER, "->", "|", EPSILON, "start:"}


class Rule(BaseModel):
    """A production lhs -> rhs; an empty rhs is an ε-rule."""
    model_config = ConfigDict(frozen=True)

    lhs: str
    rhs: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.lhs} -> {' '.join(self.rhs) or EPSILON}"


class Grammar(BaseModel):
    """Operator-form context-free grammar with a designated axiom."""
    model_config = ConfigDict(frozen=True)

    nonterminals: tuple[str, ...]
    terminals: tuple[str, ...]
    axiom: str
    rules: tuple[Rule, ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "Grammar":
        nonterminals = set(self.nonterminals)
        terminals = set(self.terminals)
        if nonterminals & terminals:
            overlap = sorted(nonterminals & terminals)[0]
            raise GrammarSyntaxError(f"symbol {overlap!r} is both terminal and nonterminal")
        if BORDER in nonterminals | terminals:
            raise UnknownToken(BORDER, "grammar symbols ('#' is reserved)")
        if self.axiom not in nonterminals:
            raise UndeclaredAxiom(self.axiom)
        for rule in self.rules:
            if rule.lhs not in nonterminals:
                raise GrammarSyntaxError(f"left-hand side {rule.lhs!r} is not a nonterminal")
            for symbol in rule.rhs:
                if symbol not in nonterminals and symbol not in terminals:
                    raise UnknownToken(symbol, "grammar symbols")
            for left, right in zip(rule.rhs, rule.rhs[1:]):
                if left in nonterminals and right in nonterminals:
                    raise OperatorFormViolation(str(rule))
        return self

    def is_nonterminal(self, symbol: str) -> bool:
        return symbol in self.nonterminals

    def rules_for(self, lhs: str) -> tuple[Rule, ...]:
        return tuple(rule for rule in self.rules if rule.lhs == lhs)

    def is_renaming(self, rule: Rule) -> bool:
        return len(rule.rhs) == 1 and rule.rhs[0] in self.nonterminals


def _symbol(token: str, line_number: int) -> str:
    if token in RESERVED:
        raise GrammarSyntaxError(f"reserved token {token!r} used as a grammar symbol", line_number)
    return check_token(token, "grammar symbols")


def _ordered_symbols(axiom: str, rules: Sequence[Rule]) -> tuple[tuple[str, ...], tuple[str, ...]]:
    nonterminals = [axiom]
    for rule in rules:
        if rule.lhs not in nonterminals:
            nonterminals.append(rule.lhs)
    terminals: list[str] = []
    for rule in rules:
        for symbol in rule.rhs:
            if symbol not in nonterminals and symbol not in terminals:
                terminals.append(symbol)
    return tuple(nonterminals), tuple(terminals)


def _canonical(axiom: str, rules: Iterable[Rule]) -> Grammar:
    """Group rules by left-hand side in first-occurrence order (axiom first) and derive symbol lists."""
    rules = list(dict.fromkeys(rules))
    nonterminals, _ = _ordered_symbols(axiom, rules)
    rank = {symbol: index for index, symbol in enumerate(nonterminals)}
    rules.sort(key=lambda rule: rank[rule.lhs])
    nonterminals, terminals = _ordered_symbols(axiom, rules)
    return Grammar(nonterminals=nonterminals, terminals=terminals, axiom=axiom, rules=tuple(rules))


def make_grammar(axiom: str, rules: Iterable[Rule]) -> Grammar:
    """Build a grammar from rules, inferring nonterminals (left-hand sides) and terminals."""
    rules = list(rules)
    if rules and all(rule.lhs != axiom for rule in rules):
        raise UndeclaredAxiom(axiom)
    return _canonical(axiom, rules)


def parse_grammar(text: str) -> Grammar:
    axiom: Optional[str] = None
    rules: list[Rule] = []

    for number, line in enumerate(text.splitlines(), 1):
        content = line.split("//", 1)[0].strip()
        if not content:
            continue
        tokens = content.split()
        if tokens[0] == "start:" or tokens[0].startswith("start:"):
            if axiom is not None:
                raise GrammarSyntaxError("duplicate 'start:' line", number)
            rest = content[len("start:"):].split()
            if len(rest) != 1:
                raise GrammarSyntaxError("expected 'start: <Nonterminal>'", number)
            axiom = _symbol(rest[0], number)
            continue
        if axiom is None:
            raise GrammarSyntaxError("expected 'start: <Nonterminal>' before any rule", number)
        if len(tokens) < 2 or tokens[1] != "->":
            raise GrammarSyntaxError(f"expected '<Nonterminal> -> ...', got {content!r}", number)

        lhs = _symbol(tokens[0], number)
        alternatives: list[list[str]] = [[]]
        for token in tokens[2:]:
            if token == "|":
                alternatives.append([])
            else:
                alternatives[-1].append(token)
        for alternative in alternatives:
            if not alternative:
                raise GrammarSyntaxError(f"empty alternative for {lhs!r} (write '_' for ε)", number)
            if alternative == [EPSILON]:
                rules.append(Rule(lhs=lhs, rhs=()))
                continue
            if EPSILON in alternative:
                raise GrammarSyntaxError("'_' must stand alone in an alternative", number)
            rules.append(Rule(lhs=lhs, rhs=tuple(_symbol(token, number) for token in alternative)))

    if axiom is None:
        raise GrammarSyntaxError("missing 'start: <Nonterminal>' line")
    grammar = make_grammar(axiom, rules)
    logger.debug(f"Parsed grammar: {len(grammar.rules)} rules, {len(grammar.nonterminals)} nonterminals")
    return grammar


def format_grammar(g: Grammar) -> str:
    lines = [f"start: {g.axiom}"]
    for lhs in g.nonterminals:
        alternatives = [" ".join(rule.rhs) or EPSILON for rule in g.rules_for(lhs)]
        if alternatives:
            lines.append(f"{lhs} -> {' | '.join(alternatives)}")
    return "\n".join(lines) + "\n"


class TerminalSets(BaseModel):
    """Left and right terminal sets of every nonterminal."""
    model_config = ConfigDict(frozen=True)

    left: dict[str, frozenset[str]]
    right: dict[str, frozenset[str]]


def terminal_sets(g: Grammar) -> TerminalSets:
    nonterminals = set(g.nonterminals)
    left: dict[str, set[str]] = {symbol: set() for symbol in g.nonterminals}
    right: dict[str, set[str]] = {symbol: set() for symbol in g.nonterminals}

    def edge(rhs: Sequence[str], sets: dict[str, set[str]]) -> set[str]:
        found: set[str] = set()
        if not rhs:
            return found
        if rhs[0] in nonterminals:
            found |= sets[rhs[0]]
            if len(rhs) > 1:
                found.add(rhs[1])
        else:
            found.add(rhs[0])
        return found

    changed = True
    while changed:
        changed = False
        for rule in g.rules:
            for sets, rhs in ((left, rule.rhs), (right, rule.rhs[::-1])):
                new = edge(rhs, sets) - sets[rule.lhs]
                if new:
                    sets[rule.lhs] |= new
                    changed = True

    return TerminalSets(
        left={symbol: frozenset(found) for symbol, found in left.items()},
        right={symbol: frozenset(found) for symbol, found in right.items()},
    )


def compute_opm(g: Grammar) -> PrecedenceAlphabet:
    """
    Derive the precedence matrix of g, # extension included.

    All conflicting pairs are collected with the rules that witness each relation
    before a ConflictError is raised.
    """
    sets = terminal_sets(g)
    cells: dict[tuple[str, str], dict[PrecRel, list[str]]] = {}

    def add(a: str, b: str, rel: PrecRel, witness: str) -> None:
        witnesses = cells.setdefault((a, b), {}).setdefault(rel, [])
        if witness not in witnesses:
            witnesses.append(witness)

    for rule in g.rules:
        rhs = rule.rhs
        for i, symbol in enumerate(rhs):
            following = rhs[i + 1] if i + 1 < len(rhs) else None
            if following is None:
                continue
            if not g.is_nonterminal(symbol):
                if not g.is_nonterminal(following):
                    add(symbol, following, PrecRel.EQUALS, str(rule))
                else:
                    if i + 2 < len(rhs):
                        add(symbol, rhs[i + 2], PrecRel.EQUALS, str(rule))
                    for b in sets.left[following]:
                        add(symbol, b, PrecRel.YIELDS, str(rule))
            else:
                for a in sets.right[symbol]:
                    add(a, following, PrecRel.TAKES, str(rule))

    border_witness = f"axiom {g.axiom}"
    for b in sets.left[g.axiom]:
        add(BORDER, b, PrecRel.YIELDS, border_witness)
    for a in sets.right[g.axiom]:
        add(a, BORDER, PrecRel.TAKES, border_witness)
    add(BORDER, BORDER, PrecRel.EQUALS, "end of input")

    conflicts = [
        Conflict(
            a=a,
            b=b,
            relations=tuple(rel.value for rel in rels),
            witnesses=tuple(f"{rel.pretty} by {w}" for rel, ws in rels.items() for w in ws),
        )
        for (a, b), rels in cells.items()
        if len(rels) > 1
    ]
    if conflicts:
        raise ConflictError(conflicts)

    return build_alphabet(g.terminals, [(a, b, next(iter(rels))) for (a, b), rels in cells.items()])


class ShapeIssue(BaseModel):
    """One violation of the normal shape needed by grammar_to_automaton."""
    model_config = ConfigDict(frozen=True)

    kind: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.rule} ({self.message})"


def validate_fischer_shape(g: Grammar) -> list[ShapeIssue]:
    issues: list[ShapeIssue] = []
    for rule in g.rules:
        if g.axiom in rule.rhs:
            issues.append(ShapeIssue(kind="axiom-in-rhs", rule=str(rule), message="the axiom occurs on a right-hand side"))
        if rule.lhs == g.axiom:
            if rule.rhs and not g.is_renaming(rule):
                issues.append(ShapeIssue(kind="axiom-rule", rule=str(rule), message="axiom rules must be renaming or empty"))
        elif not rule.rhs:
            issues.append(ShapeIssue(kind="empty-rule", rule=str(rule), message="only the axiom may derive ε"))
        elif g.is_renaming(rule):
            issues.append(ShapeIssue(kind="renaming-rule", rule=str(rule), message="only axiom rules may be renaming"))
    return issues


def require_fischer_shape(g: Grammar) -> None:
    issues = validate_fischer_shape(g)
    if issues:
        raise FischerShapeError(issues)


def productive_nonterminals(g: Grammar) -> set[str]:
    productive: set[str] = set()
    changed = True
    while changed:
        changed = False
        for rule in g.rules:
            if rule.lhs in productive:
                continue
            if all(not g.is_nonterminal(s) or s in productive for s in rule.rhs):
                productive.add(rule.lhs)
                changed = True
    return productive


def reachable_nonterminals(g: Grammar) -> set[str]:
    reached = {g.axiom}
    queue = deque([g.axiom])
    while queue:
        current = queue.popleft()
        for rule in g.rules_for(current):
            for symbol in rule.rhs:
                if g.is_nonterminal(symbol) and symbol not in reached:
                    reached.add(symbol)
                    queue.append(symbol)
    return reached


def trim(g: Grammar) -> Grammar:
    """Drop nonproductive, then unreachable, nonterminals and their rules."""
    productive = productive_nonterminals(g)
    rules = [
        rule for rule in g.rules
        if rule.lhs in productive and all(not g.is_nonterminal(s) or s in productive for s in rule.rhs)
    ]
    if g.axiom not in productive:
        logger.debug(f"Axiom {g.axiom} is unproductive; language is empty")
        return Grammar(nonterminals=(g.axiom,), terminals=(), axiom=g.axiom)

    kept = _canonical(g.axiom, rules)
    reachable = reachable_nonterminals(kept)
    trimmed = _canonical(g.axiom, [rule for rule in kept.rules if rule.lhs in reachable])
    logger.debug(f"Trimmed grammar from {len(g.rules)} to {len(trimmed.rules)} rules")
    return trimmed


def is_reduced(g: Grammar) -> bool:
    return not useless_nonterminals(g)


def useless_nonterminals(g: Grammar) -> list[str]:
    useful = productive_nonterminals(g) & reachable_nonterminals(g)
    return [symbol for symbol in g.nonterminals if symbol not in useful]


def fresh_name(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    name = base
    while name in taken:
        name += "'"
    return name


def nullable_nonterminals(g: Grammar) -> set[str]:
    nullable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for rule in g.rules:
            if rule.lhs not in nullable and all(s in nullable for s in rule.rhs):
                nullable.add(rule.lhs)
                changed = True
    return nullable


def drop_dangling(rules: list[Rule], nonterminals: set[str]) -> list[Rule]:
    """Remove rules mentioning nonterminals left without any rule (those that only derived ε)."""
    while True:
        defined = {rule.lhs for rule in rules}
        kept = [rule for rule in rules if all(s in defined or s not in nonterminals for s in rule.rhs)]
        if len(kept) == len(rules):
            return kept
        rules = kept


def normalize(g: Grammar) -> Grammar:
    """
    Bring a reduced operator grammar into the shape grammar_to_automaton expects.

    Steps: a fresh axiom when the axiom is recursive or has non-renaming rules,
    ε-elimination keeping only axiom -> ε, and inlining of non-axiom renaming rules.
    """
    useless = useless_nonterminals(g)
    if useless:
        raise NotReducedError(useless)

    axiom = g.axiom
    rules = list(g.rules)
    needs_fresh = any(axiom in rule.rhs for rule in rules) or any(
        rule.lhs == axiom and rule.rhs and not g.is_renaming(rule) for rule in rules
    )
    if needs_fresh:
        fresh = fresh_name(axiom + "'", g.nonterminals + g.terminals)
        rules.insert(0, Rule(lhs=fresh, rhs=(axiom,)))
        axiom = fresh
        logger.debug(f"Introduced fresh axiom {fresh}")

    staged = make_grammar(axiom, rules)
    nullable = nullable_nonterminals(staged)
    without_empty: list[Rule] = []
    for rule in staged.rules:
        slots = [
            (symbol,) if symbol not in nullable else (symbol, None)
            for symbol in rule.rhs
        ]
        for choice in product(*slots):
            rhs = tuple(symbol for symbol in choice if symbol is not None)
            if rhs:
                without_empty.append(Rule(lhs=rule.lhs, rhs=rhs))
    if axiom in nullable:
        without_empty.append(Rule(lhs=axiom, rhs=()))
    staged = make_grammar(axiom, drop_dangling(without_empty, set(staged.nonterminals)))

    def unit_closure(start: str) -> list[str]:
        closure = [start]
        for current in closure:
            for rule in staged.rules_for(current):
                if staged.is_renaming(rule) and rule.rhs[0] not in closure:
                    closure.append(rule.rhs[0])
        return closure

    inlined: list[Rule] = []
    for lhs in staged.nonterminals:
        if lhs == axiom:
            inlined.extend(staged.rules_for(lhs))
            continue
        for source in unit_closure(lhs):
            for rule in staged.rules_for(source):
                if not staged.is_renaming(rule):
                    inlined.append(Rule(lhs=lhs, rhs=rule.rhs))

    result = trim(make_grammar(axiom, inlined))
    logger.info(f"Normalized grammar: {len(g.rules)} -> {len(result.rules)} rules")
    return result


class CFRecognizer:
    """
    Membership by breadth-first enumeration of leftmost derivations.

    A sentential form is kept as (matched, rest): the length of the terminal prefix
    already matched against the word and the remaining symbols. Forms whose
    terminals cannot be embedded in the unread suffix, with each nonterminal
    occupying at least its minimal yield, are pruned.
    """

    def __init__(self, g: Grammar):
        self.g = g
        self.nonterminals = frozenset(g.nonterminals)
        self.alternatives = {symbol: [rule.rhs for rule in g.rules_for(symbol)] for symbol in g.nonterminals}
        self.min_yield = self._min_yield()
        self.max_rhs = max((len(rule.rhs) for rule in g.rules), default=1)

    def _min_yield(self) -> dict[str, float]:
        best: dict[str, float] = {symbol: math.inf for symbol in self.g.nonterminals}
        changed = True
        while changed:
            changed = False
            for rule in self.g.rules:
                size = sum(best[s] if s in self.nonterminals else 1 for s in rule.rhs)
                if size < best[rule.lhs]:
                    best[rule.lhs] = size
                    changed = True
        return best

    def _fits(self, word: tuple[str, ...], matched: int, rest: tuple[str, ...]) -> bool:
        position = matched
        for symbol in rest:
            if symbol in self.nonterminals:
                position += self.min_yield[symbol]
                if position > len(word):
                    return False
            else:
                try:
                    position = word.index(symbol, int(position)) + 1
                except ValueError:
                    return False
        return position <= len(word)

    def accepts(self, word: Sequence[str]) -> bool:
        word = tuple(word)
        # A minimal derivation never holds more pending symbols than this.
        max_form = (len(word) + 1) * len(self.nonterminals) * self.max_rhs + 1
        start = (0, (self.g.axiom,))
        if not self._fits(word, *start):
            return False
        seen = {start}
        queue = deque([start])
        while queue:
            matched, rest = queue.popleft()
            while rest and rest[0] not in self.nonterminals:
                if matched >= len(word) or word[matched] != rest[0]:
                    break
                matched += 1
                rest = rest[1:]
            else:
                if not rest:
                    if matched == len(word):
                        return True
                    continue
                head, tail = rest[0], rest[1:]
                for rhs in self.alternatives[head]:
                    form = (matched, rhs + tail)
                    if form in seen or len(form[1]) > max_form or not self._fits(word, *form):
                        continue
                    seen.add(form)
                    queue.append(form)
        return False


@lru_cache(maxsize=64)
def recognizer_for(g: Grammar) -> CFRecognizer:
    return CFRecognizer(g)


def cf_membership(g: Grammar, w: Sequence[str]) -> bool:
    """True iff the axiom derives w."""
    return recognizer_for(g).accepts(w)
