"""
Floyd automata: representation, push/mark/flush semantics, acceptance and determinization.

Automaton file format:

    states: q0 q1
    initial: q0
    final: q0
    terminals: a ra b rb
    matrix:
    # < a
    a = ra
    push:
    q0 a q1
    flush:
    q1 q0 q0        // q0 ∈ δ_flush(q1, q0)
"""

import logging
from collections import deque
from functools import cached_property
from typing import Iterable, NamedTuple, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import (
    AutomatonFormatError,
    AutomatonValidationError,
    EqCycleError,
    NoAcceptingRun,
    UnknownToken,
)
from .opm import (
    BORDER,
    MOVE_FOR_RELATION,
    EqCycleResult,
    MoveKind,
    PrecedenceAlphabet,
    PrecRel,
    build_alphabet,
    eq_cycle_check,
    format_matrix,
    parse_matrix_line,
)

logger = logging.getLogger(__name__)

SECTIONS = ("states", "initial", "final", "terminals", "matrix", "push", "flush")


class StackEntry(NamedTuple):
    """One stack cell: a symbol (primed when marked) decorated with a state."""
    symbol: str
    marked: bool
    state: str

    def render(self) -> str:
        mark = "'" if self.marked else ""
        return f"[{self.symbol}{mark}:{self.state}]"


Stack = tuple[StackEntry, ...]


class Configuration(BaseModel):
    """A stack plus the input still to be read (the terminator # is implicit)."""
    model_config = ConfigDict(frozen=True)

    stack: tuple[StackEntry, ...]
    input: tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check_bottom(self) -> "Configuration":
        if not self.stack:
            raise ValueError("stack must hold at least the bottom entry")
        bottom = self.stack[0]
        if bottom.symbol != BORDER or bottom.marked:
            raise ValueError("bottom entry must be an unmarked '#'")
        if any(entry.symbol == BORDER for entry in self.stack[1:]):
            raise ValueError("'#' only occurs at the stack bottom")
        return self

    @property
    def top(self) -> StackEntry:
        return self.stack[-1]

    @property
    def lookahead(self) -> str:
        return self.input[0] if self.input else BORDER

    @property
    def marked_count(self) -> int:
        return sum(1 for entry in self.stack if entry.marked)

    def render(self) -> str:
        stack = "".join(entry.render() for entry in self.stack)
        remaining = " ".join(self.input + (BORDER,))
        return f"{stack} | {remaining}"


class TraceStep(BaseModel):
    """A configuration and the move that produced it (None for the starting one)."""
    model_config = ConfigDict(frozen=True)

    move: Optional[MoveKind] = None
    configuration: Configuration


class Trace(BaseModel):
    model_config = ConfigDict(frozen=True)

    word: tuple[str, ...]
    steps: tuple[TraceStep, ...]
    depth: int = 0

    @property
    def moves(self) -> list[MoveKind]:
        return [step.move for step in self.steps if step.move is not None]

    @property
    def configurations(self) -> list[Configuration]:
        return [step.configuration for step in self.steps]


class FloydAutomaton(BaseModel):
    """States, initial/final sets and push/flush relations over a precedence alphabet."""
    model_config = ConfigDict(frozen=True)

    alphabet: PrecedenceAlphabet
    states: tuple[str, ...]
    initial: tuple[str, ...] = ()
    final: tuple[str, ...] = ()
    push_edges: dict[tuple[str, str], tuple[str, ...]] = Field(default_factory=dict)
    flush_edges: dict[tuple[str, str], tuple[str, ...]] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _canonical_images(cls, data):
        # Images are deduplicated and kept in state declaration order; empty images dropped.
        if not isinstance(data, dict) or "states" not in data:
            return data
        rank = {state: index for index, state in enumerate(data["states"])}
        data = dict(data)
        for key in ("push_edges", "flush_edges"):
            edges = data.get(key) or {}
            data[key] = {
                tuple(pair): tuple(sorted(set(image), key=lambda s: (rank.get(s, len(rank)), s)))
                for pair, image in edges.items()
                if image
            }
        for key in ("initial", "final"):
            data[key] = tuple(dict.fromkeys(data.get(key) or ()))
        return data

    @model_validator(mode="after")
    def _check_edges(self) -> "FloydAutomaton":
        states = set(self.states)
        if len(states) != len(self.states):
            raise AutomatonValidationError("duplicate state declaration")
        for name, subset in (("initial", self.initial), ("final", self.final)):
            unknown = [q for q in subset if q not in states]
            if unknown:
                raise AutomatonValidationError(f"{name} mentions undeclared state {unknown[0]!r}")
        terminals = set(self.alphabet.terminals)
        for (q, a), image in self.push_edges.items():
            if a not in terminals:
                raise AutomatonValidationError(f"push edge on undeclared terminal {a!r}")
            for state in (q, *image):
                if state not in states:
                    raise AutomatonValidationError(f"push edge mentions undeclared state {state!r}")
        for (q, r), image in self.flush_edges.items():
            for state in (q, r, *image):
                if state not in states:
                    raise AutomatonValidationError(f"flush edge mentions undeclared state {state!r}")
        return self

    @cached_property
    def eq_check(self) -> EqCycleResult:
        return eq_cycle_check(self.alphabet)

    @cached_property
    def rank(self) -> dict[str, int]:
        return {state: index for index, state in enumerate(self.states)}

    def push_targets(self, q: str, a: str) -> tuple[str, ...]:
        return self.push_edges.get((q, a), ())

    def flush_targets(self, q: str, r: str) -> tuple[str, ...]:
        return self.flush_edges.get((q, r), ())

    def edge_count(self) -> int:
        return sum(len(i) for i in self.push_edges.values()) + sum(len(i) for i in self.flush_edges.values())

    def with_final(self, final: Iterable[str]) -> "FloydAutomaton":
        return self.model_copy(update={"final": tuple(dict.fromkeys(final))})


def _successors(a: FloydAutomaton, stack: Stack, token: str, at_end: bool) -> list[tuple[MoveKind, Stack, int]]:
    """
    One-step moves as (kind, new stack, tokens consumed); at_end allows flushes only.

    The kind comes from the single matrix cell M(top symbol, token), so every
    successor of a configuration is the same kind of move. Only the states differ.
    """
    top = stack[-1]
    rel = a.alphabet.rel(top.symbol, token)
    if rel is None:
        return []
    if rel is PrecRel.TAKES:
        marked = len(stack) - 1
        while marked > 0 and not stack[marked].marked:
            marked -= 1
        if marked == 0:
            return []
        below = stack[marked - 1]
        base = stack[:marked - 1]
        return [
            (MoveKind.FLUSH, base + (below._replace(state=p),), 0)
            for p in a.flush_edges.get((top.state, below.state), ())
        ]
    if at_end:
        return []
    move = MOVE_FOR_RELATION[rel]
    marked = rel is PrecRel.YIELDS
    return [(move, stack + (StackEntry(token, marked, p),), 1) for p in a.push_edges.get((top.state, token), ())]


def _require_acyclic(a: FloydAutomaton) -> None:
    result = a.eq_check
    if not result.ok:
        raise EqCycleError(result.witness)


def _check_word(a: FloydAutomaton, word: Sequence[str]) -> tuple[str, ...]:
    terminals = set(a.alphabet.terminals)
    for token in word:
        if token not in terminals:
            raise UnknownToken(token, "terminals")
    return tuple(word)


Node = tuple[int, Stack]


class _Exploration:
    """Depth-first search over (position, stack) nodes, successors in declaration order."""

    def __init__(self, a: FloydAutomaton, tokens: Sequence[str], lookahead: str = BORDER, keep_parents: bool = False):
        self.a = a
        self.tokens = tuple(tokens)
        self.lookahead = lookahead
        self.keep_parents = keep_parents
        self.parents: dict[Node, tuple[Optional[Node], Optional[MoveKind]]] = {}
        self.longest = 0

    def run(self, starts: Iterable[str], goal: Optional[set[str]] = None) -> tuple[Optional[Node], set[str]]:
        """Return the first goal node found (if goal is given) and every reachable end state."""
        n = len(self.tokens)
        visited: set[Node] = set()
        todo: list[Node] = []
        for q in reversed(list(dict.fromkeys(starts))):
            node = (0, (StackEntry(BORDER, False, q),))
            if node not in visited:
                visited.add(node)
                todo.append(node)
                if self.keep_parents:
                    self.parents[node] = (None, None)
        ends: set[str] = set()
        while todo:
            node = todo.pop()
            position, stack = node
            self.longest = max(self.longest, position)
            at_end = position == n
            if at_end and len(stack) == 1:
                state = stack[0].state
                ends.add(state)
                if goal is not None and state in goal:
                    return node, ends
                continue
            token = self.tokens[position] if not at_end else self.lookahead
            moves = _successors(self.a, stack, token, at_end)
            for move, new_stack, consumed in reversed(moves):
                child = (position + consumed, new_stack)
                if child in visited:
                    continue
                visited.add(child)
                todo.append(child)
                if self.keep_parents:
                    self.parents[child] = (node, move)
        return None, ends

    def path(self, node: Node) -> list[tuple[Optional[MoveKind], Node]]:
        steps: list[tuple[Optional[MoveKind], Node]] = []
        current: Optional[Node] = node
        while current is not None:
            parent, move = self.parents[current]
            steps.append((move, current))
            current = parent
        return steps[::-1]


def step(a: FloydAutomaton, c: Configuration) -> list[tuple[MoveKind, Configuration]]:
    """All one-step successors of c; dead configurations have none."""
    at_end = not c.input
    result = []
    for move, stack, consumed in _successors(a, c.stack, c.lookahead, at_end):
        result.append((move, Configuration(stack=stack, input=c.input[consumed:])))
    return result


def accepts(a: FloydAutomaton, w: Sequence[str]) -> bool:
    _require_acyclic(a)
    word = _check_word(a, w)
    found, _ = _Exploration(a, word).run(a.initial, goal=set(a.final))
    return found is not None


def trace(a: FloydAutomaton, w: Sequence[str]) -> Trace:
    """The first accepting computation under declaration-ordered search, or NoAcceptingRun."""
    _require_acyclic(a)
    word = _check_word(a, w)
    search = _Exploration(a, word, keep_parents=True)
    found, _ = search.run(a.initial, goal=set(a.final))
    if found is None:
        logger.debug(f"No accepting run for {word}; longest prefix {search.longest}")
        raise NoAcceptingRun(word, word[:search.longest])

    steps = []
    depth = 0
    for move, (position, stack) in search.path(found):
        configuration = Configuration(stack=stack, input=word[position:])
        depth = max(depth, configuration.marked_count)
        steps.append(TraceStep(move=move, configuration=configuration))
    return Trace(word=word, steps=tuple(steps), depth=depth)


def return_states(
    a: FloydAutomaton,
    starts: Iterable[str],
    tokens: Sequence[str],
    lookahead: str = BORDER,
) -> frozenset[str]:
    """States q' such that [#,q] reading tokens, then flushing against lookahead, ends at [#,q']."""
    _, ends = _Exploration(a, _check_word(a, tokens), lookahead).run(starts)
    return frozenset(ends)


def is_deterministic(a: FloydAutomaton) -> bool:
    if len(a.initial) != 1:
        return False
    images = list(a.push_edges.values()) + list(a.flush_edges.values())
    return all(len(image) <= 1 for image in images)


class FlushSupport(BaseModel):
    """Endpoints of the support of one reduced chain: the rewritten entry before and after."""
    model_config = ConfigDict(frozen=True)

    step: int
    symbol: str
    before: str
    after: str
    popped: tuple[StackEntry, ...]


def flush_supports(t: Trace) -> list[FlushSupport]:
    supports = []
    for index in range(1, len(t.steps)):
        if t.steps[index].move is not MoveKind.FLUSH:
            continue
        previous = t.steps[index - 1].configuration.stack
        current = t.steps[index].configuration.stack
        rewritten = len(current) - 1
        supports.append(FlushSupport(
            step=index,
            symbol=current[rewritten].symbol,
            before=previous[rewritten].state,
            after=current[rewritten].state,
            popped=previous[rewritten + 1:],
        ))
    return supports


# Subset states -------------------------------------------------------------

_SPECIAL = set("\\|/;<>")


def _escape(token: str) -> str:
    return "".join("\\" + ch if ch in _SPECIAL else ch for ch in token)


class SubsetState(BaseModel):
    """A determinized state ⟨b, K⟩ with K a set of (state, state-or-⊥) pairs."""
    model_config = ConfigDict(frozen=True)

    base: str
    pairs: tuple[tuple[str, Optional[str]], ...]

    @property
    def name(self) -> str:
        body = ";".join(f"{_escape(h)}/{_escape(t) if t is not None else ''}" for h, t in self.pairs)
        return f"<{_escape(self.base)}|{body}>"


def decode_subset_state(name: str) -> SubsetState:
    if not (name.startswith("<") and name.endswith(">")):
        raise AutomatonFormatError(f"not a determinized state name: {name!r}")
    body = name[1:-1]
    parts: list[str] = []
    separators: list[str] = []
    current: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            current.append(body[i + 1])
            i += 2
            continue
        if ch in "|/;":
            parts.append("".join(current))
            separators.append(ch)
            current = []
        else:
            current.append(ch)
        i += 1
    parts.append("".join(current))

    if not separators or separators[0] != "|":
        raise AutomatonFormatError(f"not a determinized state name: {name!r}")
    base, rest = parts[0], parts[1:]
    if rest == [""]:
        return SubsetState(base=base, pairs=())
    expected = ["/" if k % 2 == 0 else ";" for k in range(len(separators) - 1)]
    if separators[1:] != expected or len(rest) % 2:
        raise AutomatonFormatError(f"malformed pair list in {name!r}")
    pairs = tuple((rest[k], rest[k + 1] or None) for k in range(0, len(rest), 2))
    return SubsetState(base=base, pairs=pairs)


def determinize(a: FloydAutomaton) -> FloydAutomaton:
    """
    Subset construction over pairs ⟨b, K⟩.

    b is the stack symbol the state decorates; each (h, t) ∈ K pairs a current
    state h with the state t the automaton was in when the enclosing chain was
    opened (⊥ for the bottom). States are discovered lazily from ⟨#, I×{⊥}⟩;
    flushes are explored over every ordered pair of discovered states.
    """
    rank = a.rank

    def order(pairs: Iterable[tuple[str, Optional[str]]]) -> tuple[tuple[str, Optional[str]], ...]:
        return tuple(sorted(set(pairs), key=lambda p: (rank[p[0]], -1 if p[1] is None else rank[p[1]])))

    initial = SubsetState(base=BORDER, pairs=order((q, None) for q in a.initial))
    discovered: dict[str, SubsetState] = {initial.name: initial}
    queue = deque([initial])
    push_edges: dict[tuple[str, str], tuple[str, ...]] = {}
    flush_edges: dict[tuple[str, str], tuple[str, ...]] = {}

    def reach(state: SubsetState) -> str:
        if state.name not in discovered:
            discovered[state.name] = state
            queue.append(state)
        return state.name

    def flush(top: SubsetState, below: SubsetState) -> None:
        below_pairs: dict[str, list[Optional[str]]] = {}
        for q, p in below.pairs:
            below_pairs.setdefault(q, []).append(p)
        pairs = [
            (h, p)
            for r, q in top.pairs
            for p in below_pairs.get(q, ())
            for h in a.flush_edges.get((r, q), ())
        ]
        if pairs:
            target = reach(SubsetState(base=below.base, pairs=order(pairs)))
            flush_edges[(top.name, below.name)] = (target,)

    seen: list[SubsetState] = []
    while queue:
        state = queue.popleft()
        for token in a.alphabet.terminals:
            rel = a.alphabet.rel(state.base, token)
            if rel is PrecRel.YIELDS:
                pairs = [(h, q) for q, _ in state.pairs for h in a.push_edges.get((q, token), ())]
            elif rel is PrecRel.EQUALS:
                pairs = [(h, p) for q, p in state.pairs for h in a.push_edges.get((q, token), ())]
            else:
                continue
            if pairs:
                push_edges[(state.name, token)] = (reach(SubsetState(base=token, pairs=order(pairs))),)
        seen.append(state)
        for other in seen:
            flush(state, other)
            if other is not state:
                flush(other, state)

    names = sorted(discovered)
    final = [
        name for name in names
        if discovered[name].base == BORDER
        and any(t is None and h in a.final for h, t in discovered[name].pairs)
    ]
    logger.info(f"Determinized {len(a.states)} states into {len(names)} subset states")
    return FloydAutomaton(
        alphabet=a.alphabet,
        states=tuple(names),
        initial=(initial.name,),
        final=tuple(final),
        push_edges=push_edges,
        flush_edges=flush_edges,
    )


# File formats --------------------------------------------------------------

def parse_automaton(text: str) -> FloydAutomaton:
    lists: dict[str, list[str]] = {}
    matrix: list[tuple[str, str, PrecRel]] = []
    push: list[tuple[str, str, str]] = []
    flush: list[tuple[str, str, str]] = []
    section: Optional[str] = None

    for number, line in enumerate(text.splitlines(), 1):
        content = line.split("//", 1)[0].strip()
        if not content:
            continue
        head, colon, rest = content.partition(":")
        if colon and head.strip() in SECTIONS and " " not in head.strip():
            section = head.strip()
            if section in ("states", "initial", "final", "terminals"):
                lists.setdefault(section, []).extend(rest.split())
            elif rest.strip():
                raise AutomatonFormatError(f"section '{section}:' takes its entries on the following lines", number)
            continue
        if section is None:
            raise AutomatonFormatError(f"line outside any section: {content!r}", number)
        if section in ("states", "initial", "final", "terminals"):
            lists[section].extend(content.split())
        elif section == "matrix":
            matrix.append(parse_matrix_line(content, number))
        else:
            parts = content.split()
            if len(parts) != 3:
                raise AutomatonFormatError(f"expected three tokens in '{section}:' line, got {content!r}", number)
            (push if section == "push" else flush).append(tuple(parts))

    if "states" not in lists:
        raise AutomatonFormatError("missing 'states:' section")

    if "terminals" in lists:
        terminals = lists["terminals"]
    else:
        terminals = []
        for a, b, _ in matrix:
            for token in (a, b):
                if token != BORDER and token not in terminals:
                    terminals.append(token)
        for _, token, _ in push:
            if token not in terminals:
                terminals.append(token)
    alphabet = build_alphabet(terminals, matrix)

    push_edges: dict[tuple[str, str], list[str]] = {}
    for q, token, p in push:
        push_edges.setdefault((q, token), []).append(p)
    flush_edges: dict[tuple[str, str], list[str]] = {}
    for q, r, p in flush:
        flush_edges.setdefault((q, r), []).append(p)

    automaton = FloydAutomaton(
        alphabet=alphabet,
        states=tuple(dict.fromkeys(lists["states"])),
        initial=tuple(lists.get("initial", ())),
        final=tuple(lists.get("final", ())),
        push_edges=push_edges,
        flush_edges=flush_edges,
    )
    logger.debug(f"Parsed automaton: {len(automaton.states)} states, {automaton.edge_count()} edges")
    return automaton


def format_automaton(a: FloydAutomaton) -> str:
    rank = a.rank
    terminal_rank = {token: index for index, token in enumerate(a.alphabet.terminals)}
    lines = [
        f"states: {' '.join(a.states)}".rstrip(),
        f"initial: {' '.join(a.initial)}".rstrip(),
        f"final: {' '.join(a.final)}".rstrip(),
        f"terminals: {' '.join(a.alphabet.terminals)}".rstrip(),
        "matrix:",
    ]
    lines.extend(format_matrix(a.alphabet).splitlines())
    lines.append("push:")
    for (q, token) in sorted(a.push_edges, key=lambda k: (rank[k[0]], terminal_rank[k[1]])):
        lines.extend(f"{q} {token} {p}" for p in a.push_edges[(q, token)])
    lines.append("flush:")
    for (q, r) in sorted(a.flush_edges, key=lambda k: (rank[k[0]], rank[k[1]])):
        lines.extend(f"{q} {r} {p}" for p in a.flush_edges[(q, r)])
    return "\n".join(lines) + "\n"


def format_trace(t: Trace) -> str:
    lines = []
    for item in t.steps:
        move = item.move.value if item.move is not None else "start"
        lines.append(f"{move}  {item.configuration.render()}")
    return "\n".join(lines) + "\n"
