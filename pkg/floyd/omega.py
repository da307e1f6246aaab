"""
Acceptance of ultimately periodic infinite words u·v^ω.

A lasso is accepted when some run visits a configuration whose stack is exactly
[#, q] with q final infinitely often. The move kinds do not depend on states, so
the positions where the stack empties are computed once by the state-free run;
when two of them fall at the same offset of the period the structure repeats,
and acceptance reduces to a Büchi cycle search over (state, return index) nodes.
"""

import logging
from enum import Enum
from typing import Optional, Sequence

import networkx as nx
from pydantic import BaseModel, ConfigDict, field_validator

from .automaton import FloydAutomaton, return_states
from .errors import EqCycleError, UnknownToken
from .opm import PrecedenceAlphabet, StructuralRun, eq_cycle_check

logger = logging.getLogger(__name__)


class LassoWord(BaseModel):
    """The infinite word prefix · period^ω."""
    model_config = ConfigDict(frozen=True)

    prefix: tuple[str, ...] = ()
    period: tuple[str, ...]

    @field_validator("period")
    @classmethod
    def _nonempty(cls, period: tuple[str, ...]) -> tuple[str, ...]:
        if not period:
            raise ValueError("the period of a lasso word must be nonempty")
        return period

    @classmethod
    def from_text(cls, prefix: str, period: str) -> "LassoWord":
        return cls(prefix=tuple(prefix.split()), period=tuple(period.split()))

    def token_at(self, position: int) -> str:
        if position < len(self.prefix):
            return self.prefix[position]
        return self.period[(position - len(self.prefix)) % len(self.period)]

    def slice(self, start: int, stop: int) -> tuple[str, ...]:
        return tuple(self.token_at(i) for i in range(start, stop))

    def offset(self, position: int) -> int:
        """Offset within the period of a position at or after the prefix."""
        return (position - len(self.prefix)) % len(self.period)

    def render(self) -> str:
        prefix = " ".join(self.prefix)
        return f"{prefix + ' ' if prefix else ''}({' '.join(self.period)})^ω"


class ReturnKind(str, Enum):
    PERIODIC = "periodic"
    FINITE = "finite"
    UNDETERMINED = "undetermined"


class ReturnPositions(BaseModel):
    """Where the state-free run is back at the bottom of the stack."""
    model_config = ConfigDict(frozen=True)

    kind: ReturnKind
    positions: tuple[int, ...] = ()
    start: Optional[int] = None
    period: Optional[int] = None
    died_at: Optional[int] = None

    def tail(self) -> tuple[int, ...]:
        """Returns in one period of the repeating part, starting at `start`."""
        if self.kind is not ReturnKind.PERIODIC:
            return ()
        return tuple(p for p in self.positions if self.start <= p < self.start + self.period)


class VerdictKind(str, Enum):
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    UNDETERMINED = "Undetermined"


class AcceptanceWitness(BaseModel):
    """A final state q revisited at positions p < p2 with the same period offset."""
    model_config = ConfigDict(frozen=True)

    state: str
    position: int
    next_position: int
    stem: tuple[tuple[str, int], ...]
    cycle: tuple[tuple[str, int], ...]

    def describe(self) -> str:
        loop = " -> ".join(f"{q}@{i}" for q, i in self.cycle)
        return f"[#,{self.state}] at positions {self.position} and {self.next_position}; cycle {loop}"


class OmegaVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: VerdictKind
    reason: Optional[str] = None
    witness: Optional[AcceptanceWitness] = None
    position: Optional[int] = None
    returns: Optional[ReturnPositions] = None

    def describe(self) -> str:
        if self.kind is VerdictKind.ACCEPTED:
            return f"{self.kind.value}: {self.witness.describe()}"
        if self.kind is VerdictKind.REJECTED:
            return f"{self.kind.value}: {self.reason}"
        return f"{self.kind.value}: budget exhausted at position {self.position}"


def default_budget(a: FloydAutomaton, lasso: LassoWord) -> int:
    return len(lasso.prefix) + (len(a.states) ** 2 + 2) * len(lasso.period)


def _check_lasso(alphabet: PrecedenceAlphabet, lasso: LassoWord) -> None:
    terminals = set(alphabet.terminals)
    for token in lasso.prefix + lasso.period:
        if token not in terminals:
            raise UnknownToken(token, "terminals")


def return_positions(alphabet: PrecedenceAlphabet, lasso: LassoWord, budget: int) -> ReturnPositions:
    check = eq_cycle_check(alphabet)
    if not check.ok:
        raise EqCycleError(check.witness)
    _check_lasso(alphabet, lasso)

    run = StructuralRun(alphabet)
    first_at_offset: dict[int, int] = {}
    reported = 0
    for position in range(budget):
        alive = run.feed(lasso.token_at(position))
        for p in run.returns[reported:]:
            if p >= len(lasso.prefix):
                offset = lasso.offset(p)
                if offset in first_at_offset:
                    start = first_at_offset[offset]
                    return ReturnPositions(
                        kind=ReturnKind.PERIODIC,
                        positions=tuple(run.returns),
                        start=start,
                        period=p - start,
                    )
                first_at_offset[offset] = p
        reported = len(run.returns)
        if not alive:
            return ReturnPositions(kind=ReturnKind.FINITE, positions=tuple(run.returns), died_at=run.dead_at)
    return ReturnPositions(kind=ReturnKind.UNDETERMINED, positions=tuple(run.returns))


def _segment_graph(a: FloydAutomaton, lasso: LassoWord, tail: Sequence[int], period: int) -> nx.DiGraph:
    graph = nx.DiGraph()
    bounds = list(tail) + [tail[0] + period]
    for index in range(len(tail)):
        start, stop = bounds[index], bounds[index + 1]
        tokens = lasso.slice(start, stop)
        lookahead = lasso.token_at(stop)
        following = (index + 1) % len(tail)
        for q in a.states:
            graph.add_node((q, index))
            for target in sorted(return_states(a, [q], tokens, lookahead), key=a.rank.get):
                graph.add_edge((q, index), (target, following))
    return graph


def omega_accepts(a: FloydAutomaton, lasso: LassoWord, budget: Optional[int] = None) -> OmegaVerdict:
    check = a.eq_check
    if not check.ok:
        raise EqCycleError(check.witness)
    budget = budget if budget is not None else default_budget(a, lasso)

    returns = return_positions(a.alphabet, lasso, budget)
    if returns.kind is ReturnKind.UNDETERMINED:
        logger.info(f"Omega: no repeating return structure within {budget} tokens")
        return OmegaVerdict(kind=VerdictKind.UNDETERMINED, position=budget, returns=returns)
    if returns.kind is ReturnKind.FINITE:
        logger.info(f"Omega: structural run dies at position {returns.died_at}")
        return OmegaVerdict(kind=VerdictKind.REJECTED, reason="no-returns", returns=returns)

    tail = returns.tail()
    entry_states = return_states(a, a.initial, lasso.slice(0, tail[0]), lasso.token_at(tail[0]))
    graph = _segment_graph(a, lasso, tail, returns.period)
    entries = [(q, 0) for q in a.states if q in entry_states]
    final = set(a.final)

    reachable: set[tuple[str, int]] = set(entries)
    for node in entries:
        reachable |= nx.descendants(graph, node)
    sub = graph.subgraph(reachable)

    for component in nx.strongly_connected_components(sub):
        accepting = sorted((n for n in component if n[0] in final), key=lambda n: (n[1], a.rank[n[0]]))
        if not accepting:
            continue
        node = accepting[0]
        if len(component) == 1 and not sub.has_edge(node, node):
            continue
        witness = _witness(sub, entries, node, tail, returns.period)
        verdict = OmegaVerdict(kind=VerdictKind.ACCEPTED, witness=witness, returns=returns)
        if not replay_witness(a, lasso, witness):
            raise AssertionError(f"witness failed replay: {witness.describe()}")
        logger.info(f"Omega: accepted via {witness.describe()}")
        return verdict

    logger.info("Omega: no reachable cycle through a final state")
    return OmegaVerdict(kind=VerdictKind.REJECTED, reason="no-accepting-cycle", returns=returns)


def _witness(
    graph: nx.DiGraph,
    entries: Sequence[tuple[str, int]],
    node: tuple[str, int],
    tail: Sequence[int],
    period: int,
) -> AcceptanceWitness:
    stem = next(nx.shortest_path(graph, entry, node) for entry in entries if nx.has_path(graph, entry, node))
    if graph.has_edge(node, node):
        cycle = [node, node]
    else:
        successor = next(s for s in graph.successors(node) if nx.has_path(graph, s, node))
        cycle = [node] + nx.shortest_path(graph, successor, node)
    wraps = sum(1 for (_, i), (_, j) in zip(cycle, cycle[1:]) if j <= i)
    position = tail[node[1]]
    return AcceptanceWitness(
        state=node[0],
        position=position,
        next_position=position + wraps * period,
        stem=tuple(stem),
        cycle=tuple(cycle),
    )


def replay_witness(a: FloydAutomaton, lasso: LassoWord, witness: AcceptanceWitness) -> bool:
    """Check, with the finite-word interpreter alone, that the witness really loops through [#, q]."""
    p, p2, q = witness.position, witness.next_position, witness.state
    if p2 <= p or p < len(lasso.prefix) or lasso.offset(p) != lasso.offset(p2):
        return False
    if q not in a.final:
        return False
    reached = return_states(a, a.initial, lasso.slice(0, p), lasso.token_at(p))
    if q not in reached:
        return False
    return q in return_states(a, [q], lasso.slice(p, p2), lasso.token_at(p2))
