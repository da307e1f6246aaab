"""
Operator precedence alphabets.

This module provides:
1. PrecRel and PrecedenceAlphabet, the conflict-free matrix over Σ ∪ {#}
2. Validation (build_alphabet) and the ≐-cycle check
3. StructuralRun, the state-free stack machine driven by the matrix alone
4. parse_chain, which decomposes a word into its chain tree
5. The matrix text format (`<a> <rel> <b>` lines, `//` comments)
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import AutomatonFormatError, Conflict, ConflictError, UnknownToken

logger = logging.getLogger(__name__)

BORDER = "#"


class PrecRel(str, Enum):
    """One of the three precedence relations."""
    YIELDS = "<"
    EQUALS = "="
    TAKES = ">"

    @property
    def pretty(self) -> str:
        return {"<": "⋖", "=": "≐", ">": "⋗"}[self.value]


class MoveKind(str, Enum):
    MARK = "mark"
    PUSH = "push"
    FLUSH = "flush"


# Relation between the stack top and the lookahead decides the move kind.
MOVE_FOR_RELATION = {
    PrecRel.YIELDS: MoveKind.MARK,
    PrecRel.EQUALS: MoveKind.PUSH,
    PrecRel.TAKES: MoveKind.FLUSH,
}


def check_token(token: str, context: str = "token") -> str:
    """Reject empty tokens and tokens containing whitespace."""
    if not token or any(ch.isspace() for ch in token):
        raise UnknownToken(token, context)
    return token


class PrecedenceAlphabet(BaseModel):
    """Terminal set plus a conflict-free precedence matrix over terminals ∪ {#}."""
    model_config = ConfigDict(frozen=True)

    terminals: tuple[str, ...]
    entries: dict[tuple[str, str], PrecRel] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_tokens(self) -> "PrecedenceAlphabet":
        if BORDER in self.terminals:
            raise UnknownToken(BORDER, "terminals ('#' is reserved)")
        known = set(self.terminals) | {BORDER}
        for a, b in self.entries:
            for token in (a, b):
                if token not in known:
                    raise UnknownToken(token, "declared terminals")
        return self

    @property
    def symbols(self) -> tuple[str, ...]:
        """Terminals followed by the border symbol."""
        return self.terminals + (BORDER,)

    def rel(self, a: str, b: str) -> Optional[PrecRel]:
        """Unchecked lookup, for hot loops."""
        return self.entries.get((a, b))

    def relation(self, a: str, b: str) -> Optional[PrecRel]:
        known = self.symbols
        for token in (a, b):
            if token not in known:
                raise UnknownToken(token, "alphabet")
        return self.entries.get((a, b))

    def borders_compatible(self, left: str, right: str) -> bool:
        """A chain between left and right needs a relation, except at the two ends of input."""
        if left == BORDER and right == BORDER:
            return True
        return (left, right) in self.entries

    def filled_cells(self) -> int:
        return len(self.entries)

    def ordered_entries(self) -> list[tuple[str, str, PrecRel]]:
        """Entries sorted by declaration order, rows then columns, # last."""
        order = {symbol: index for index, symbol in enumerate(self.symbols)}
        pairs = sorted(self.entries, key=lambda pair: (order[pair[0]], order[pair[1]]))
        return [(a, b, self.entries[(a, b)]) for a, b in pairs]


def relation(alphabet: PrecedenceAlphabet, a: str, b: str) -> Optional[PrecRel]:
    """Return the relation stored for (a, b), or None when the cell is empty."""
    return alphabet.relation(a, b)


def build_alphabet(
    terminals: Iterable[str],
    entries: Iterable[tuple[str, str, Union[PrecRel, str]]],
) -> PrecedenceAlphabet:
    """
    Validate and assemble a precedence alphabet.

    Every pair carrying two distinct relations is collected before raising, so a
    ConflictError lists all of them at once.
    """
    terminal_list: list[str] = []
    for token in terminals:
        check_token(token, "terminals")
        if token == BORDER:
            raise UnknownToken(BORDER, "terminals ('#' is reserved)")
        if token not in terminal_list:
            terminal_list.append(token)
    known = set(terminal_list) | {BORDER}

    cells: dict[tuple[str, str], list[PrecRel]] = {}
    for a, b, rel in entries:
        for token in (a, b):
            if token not in known:
                raise UnknownToken(token, "declared terminals")
        rel = PrecRel(rel)
        seen = cells.setdefault((a, b), [])
        if rel not in seen:
            seen.append(rel)

    conflicts = [
        Conflict(a=a, b=b, relations=tuple(r.value for r in rels))
        for (a, b), rels in cells.items()
        if len(rels) > 1
    ]
    if conflicts:
        raise ConflictError(conflicts)

    return PrecedenceAlphabet(
        terminals=tuple(terminal_list),
        entries={pair: rels[0] for pair, rels in cells.items()},
    )


class EqCycleResult(BaseModel):
    """Outcome of the ≐-cycle check: ok with the longest ≐-chain, or a cycle witness."""
    model_config = ConfigDict(frozen=True)

    ok: bool
    max_chain: Optional[int] = None
    witness: tuple[str, ...] = ()

    @property
    def rhs_bound(self) -> Optional[int]:
        """Upper bound on right-hand-side length, 2·c + 1."""
        return None if self.max_chain is None else 2 * self.max_chain + 1


def equals_graph(alphabet: PrecedenceAlphabet) -> nx.DiGraph:
    """Directed graph of ≐ edges among terminals (# excluded)."""
    graph = nx.DiGraph()
    graph.add_nodes_from(alphabet.terminals)
    graph.add_edges_from(
        (a, b)
        for (a, b), rel in alphabet.entries.items()
        if rel is PrecRel.EQUALS and BORDER not in (a, b)
    )
    return graph


def eq_cycle_check(alphabet: PrecedenceAlphabet) -> EqCycleResult:
    graph = equals_graph(alphabet)
    try:
        cycle = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        longest = len(nx.dag_longest_path(graph)) if graph.number_of_nodes() else 0
        return EqCycleResult(ok=True, max_chain=longest)
    witness = tuple(u for u, _ in cycle)
    logger.debug(f"≐-cycle found: {witness}")
    return EqCycleResult(ok=False, witness=witness)


class ChainTree(BaseModel):
    """
    A chain a0[x0 a1 x1 ... an xn]a(n+1).

    `spine` holds a1..an and `children` holds x0..xn, each either None (empty) or a
    nested chain bordered by its two spine neighbours.
    """
    model_config = ConfigDict(frozen=True)

    border: tuple[str, str]
    spine: tuple[str, ...]
    children: tuple[Optional["ChainTree"], ...]

    @model_validator(mode="after")
    def _check_shape(self) -> "ChainTree":
        if not self.spine:
            raise ValueError("chain spine must be nonempty")
        if len(self.children) != len(self.spine) + 1:
            raise ValueError("a chain has exactly one child slot around each spine symbol")
        return self

    @property
    def is_simple(self) -> bool:
        return all(child is None for child in self.children)

    def frontier(self) -> tuple[str, ...]:
        """The word spelled by the chain, borders excluded."""
        word: list[str] = []
        for index, child in enumerate(self.children):
            if child is not None:
                word.extend(child.frontier())
            if index < len(self.spine):
                word.append(self.spine[index])
        return tuple(word)

    def _inner(self) -> str:
        parts: list[str] = []
        for index, child in enumerate(self.children):
            if child is not None:
                parts.append(f"[{child._inner()}]")
            if index < len(self.spine):
                parts.append(self.spine[index])
        return " ".join(parts)

    def render(self) -> str:
        left, right = self.border
        return f"{left}[{self._inner()}]{right}"


ChainTree.model_rebuild()


class NotAChain(BaseModel):
    """Why a word is not a chain; position is 1-based, len(word)+1 means the right border."""
    model_config = ConfigDict(frozen=True)

    position: int
    reason: str


@dataclass
class _Slot:
    symbol: str
    marked: bool
    before: Optional[ChainTree] = None
    after: Optional[ChainTree] = None


class StructuralRun:
    """
    The stack discipline of Floyd automata with states erased.

    Tokens are fed one at a time; each feed performs the flushes the token forces
    and then pushes or marks it. Because the matrix holds at most one relation per
    cell the sequence of moves is a function of the input alone.
    """

    def __init__(self, alphabet: PrecedenceAlphabet, bottom: str = BORDER, build_trees: bool = False):
        self.alphabet = alphabet
        self.build_trees = build_trees
        self._stack: list[_Slot] = [_Slot(bottom, False)]
        self.position = 0
        self.moves: list[MoveKind] = []
        # Positions p > 0 where, before reading token p, the stack is back to its bottom.
        self.returns: list[int] = []
        self.dead_at: Optional[int] = None
        self.dead_reason: Optional[str] = None

    @property
    def alive(self) -> bool:
        return self.dead_at is None

    @property
    def at_bottom(self) -> bool:
        return len(self._stack) == 1

    @property
    def height(self) -> int:
        return len(self._stack)

    def shape(self) -> tuple[tuple[str, bool], ...]:
        return tuple((slot.symbol, slot.marked) for slot in self._stack)

    def _die(self, reason: str) -> bool:
        self.dead_at = self.position + 1
        self.dead_reason = reason
        return False

    def _flush(self, lookahead: str) -> bool:
        stack = self._stack
        marked = next((i for i in range(len(stack) - 1, 0, -1) if stack[i].marked), None)
        if marked is None:
            return self._die(f"flush before {lookahead!r} finds no marked symbol")
        group = stack[marked:]
        below = stack[marked - 1]
        del stack[marked:]
        if self.build_trees:
            children = (group[0].before,) + tuple(slot.after for slot in group)
            below.after = ChainTree(
                border=(below.symbol, lookahead),
                spine=tuple(slot.symbol for slot in group),
                children=children,
            )
        self.moves.append(MoveKind.FLUSH)
        return True

    def feed(self, token: str) -> bool:
        """Consume one token; returns False once the run is dead."""
        if not self.alive:
            return False
        while True:
            top = self._stack[-1]
            rel = self.alphabet.rel(top.symbol, token)
            if rel is not PrecRel.TAKES:
                break
            if not self._flush(token):
                return False
        if len(self._stack) == 1 and self.position > 0:
            self.returns.append(self.position)
        if rel is None:
            return self._die(f"no relation between {top.symbol!r} and {token!r}")
        if rel is PrecRel.YIELDS:
            self._stack.append(_Slot(token, True, before=top.after))
            top.after = None
            self.moves.append(MoveKind.MARK)
        else:
            self._stack.append(_Slot(token, False))
            self.moves.append(MoveKind.PUSH)
        self.position += 1
        return True

    def finish(self, end: str = BORDER) -> bool:
        """Flush against the right border; True iff the stack is back to its bottom."""
        if not self.alive:
            return False
        while len(self._stack) > 1 and self.alphabet.rel(self._stack[-1].symbol, end) is PrecRel.TAKES:
            if not self._flush(end):
                return False
        return self.at_bottom

    @property
    def tree(self) -> Optional[ChainTree]:
        return self._stack[0].after


def structural_moves(alphabet: PrecedenceAlphabet, word: Sequence[str]) -> Optional[list[MoveKind]]:
    """Move kinds of the state-free run on word#, or None if it dies or ends above the bottom."""
    run = StructuralRun(alphabet)
    for token in word:
        if not run.feed(token):
            return None
    if not run.finish(BORDER):
        return None
    return run.moves


def parse_chain(
    alphabet: PrecedenceAlphabet,
    a0: str,
    y: Sequence[str],
    a1: str,
) -> Union[ChainTree, NotAChain]:
    """Decompose y into the unique chain a0[y]a1, or report where it breaks."""
    alphabet.relation(a0, a1)
    for token in y:
        if token not in alphabet.terminals:
            raise UnknownToken(token, "terminals")
    if not y:
        return NotAChain(position=0, reason="the empty word is not a chain")

    run = StructuralRun(alphabet, bottom=a0, build_trees=True)
    for token in y:
        if not run.feed(token):
            return NotAChain(position=run.dead_at, reason=run.dead_reason)
    if not run.finish(a1):
        reason = run.dead_reason or f"word does not reduce to a single chain between {a0!r} and {a1!r}"
        return NotAChain(position=len(y) + 1, reason=reason)
    if not alphabet.borders_compatible(a0, a1):
        return NotAChain(position=len(y) + 1, reason=f"no relation between borders {a0!r} and {a1!r}")
    return run.tree


def parse_matrix_line(line: str, line_number: Optional[int] = None) -> Optional[tuple[str, str, PrecRel]]:
    """Parse one `<a> <rel> <b>` line; blank and comment-only lines give None."""
    text = line.split("//", 1)[0].strip()
    if not text:
        return None
    parts = text.split()
    if len(parts) != 3 or parts[1] not in {"<", "=", ">"}:
        raise AutomatonFormatError(f"expected '<a> <rel> <b>' with rel in < = >, got {text!r}", line_number)
    return parts[0], parts[2], PrecRel(parts[1])


def parse_matrix(text: str, terminals: Optional[Sequence[str]] = None) -> PrecedenceAlphabet:
    """Read a matrix file; terminals default to first-occurrence order in the entries."""
    entries = []
    for number, line in enumerate(text.splitlines(), 1):
        entry = parse_matrix_line(line, number)
        if entry is not None:
            entries.append(entry)
    if terminals is None:
        terminals = []
        for a, b, _ in entries:
            for token in (a, b):
                if token != BORDER and token not in terminals:
                    terminals.append(token)
    return build_alphabet(terminals, entries)


def format_matrix(alphabet: PrecedenceAlphabet) -> str:
    return "".join(f"{a} {rel.value} {b}\n" for a, b, rel in alphabet.ordered_entries())
