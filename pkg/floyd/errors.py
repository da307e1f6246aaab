"""Exception hierarchy for the floyd toolkit.

Every error carries the exit code the CLI maps it to:
- 1: the input could not be read (syntax, format, unknown tokens)
- 2: the input was read but fails validation (conflicts, shape, ≐-cycles)
- 3: a word has no accepting run
"""

from typing import Optional, Sequence

from pydantic import BaseModel, ConfigDict


class Conflict(BaseModel):
    """A matrix cell holding more than one precedence relation."""
    model_config = ConfigDict(frozen=True)

    a: str
    b: str
    relations: tuple[str, ...]
    witnesses: tuple[str, ...] = ()

    def describe(self) -> str:
        text = f"({self.a}, {self.b}): {' '.join(self.relations)}"
        if self.witnesses:
            text += f"  from {'; '.join(self.witnesses)}"
        return text


class FloydError(Exception):
    """Base class for every error raised by the toolkit."""
    exit_code = 1


class InputError(FloydError):
    """The input could not be read."""
    exit_code = 1


class ValidationError(FloydError):
    """The input was read but is not acceptable to the requested operation."""
    exit_code = 2


class UnknownToken(InputError):
    def __init__(self, token: str, context: str = "alphabet"):
        self.token = token
        super().__init__(f"Unknown token {token!r} (not in {context})")


class GrammarSyntaxError(InputError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class AutomatonFormatError(InputError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class OperatorFormViolation(InputError):
    def __init__(self, rule: str):
        self.rule = rule
        super().__init__(f"Rule is not in operator form (adjacent nonterminals): {rule}")


class UndeclaredAxiom(InputError):
    def __init__(self, axiom: str):
        self.axiom = axiom
        super().__init__(f"Axiom {axiom!r} is not the left-hand side of any rule")


class ConflictError(ValidationError):
    def __init__(self, conflicts: Sequence[Conflict]):
        self.conflicts = list(conflicts)
        lines = "\n".join(f"  {c.describe()}" for c in self.conflicts)
        super().__init__(f"Precedence conflicts on {len(self.conflicts)} pair(s):\n{lines}")


class EqCycleError(ValidationError):
    def __init__(self, witness: Sequence[str]):
        self.witness = tuple(witness)
        cycle = " = ".join(self.witness + self.witness[:1])
        super().__init__(f"Matrix has a ≐-cycle: {cycle}")


class FischerShapeError(ValidationError):
    def __init__(self, issues: Sequence[object]):
        self.issues = list(issues)
        lines = "\n".join(f"  {issue}" for issue in self.issues)
        super().__init__(f"Grammar is not in the required normal shape:\n{lines}")


class NotReducedError(ValidationError):
    def __init__(self, nonterminals: Sequence[str]):
        self.nonterminals = tuple(nonterminals)
        super().__init__(f"Grammar is not reduced; useless nonterminals: {', '.join(self.nonterminals)}")


class AutomatonValidationError(ValidationError):
    """Edges mention undeclared states or terminals."""


class NoAcceptingRun(FloydError):
    exit_code = 3

    def __init__(self, word: Sequence[str], longest_prefix: Sequence[str]):
        self.word = tuple(word)
        self.longest_prefix = tuple(longest_prefix)
        super().__init__(
            f"No accepting run for {' '.join(self.word) or 'ε'!r}; "
            f"longest prefix read: {' '.join(self.longest_prefix) or 'ε'!r}"
        )
