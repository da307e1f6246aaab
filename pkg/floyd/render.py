"""Rich table views of precedence matrices, traces and agreement reports."""

from rich.table import Table as RichTable
from rich.text import Text

from .automaton import Trace
from .oracle import AgreementReport
from .opm import BORDER, PrecedenceAlphabet

RELATION_STYLES = {"<": "green", "=": "yellow", ">": "red"}


def matrix_table(alphabet: PrecedenceAlphabet) -> RichTable:
    """Rows are the left symbol, columns the right one; # comes last in both."""
    symbols = list(alphabet.terminals) + [BORDER]
    table = RichTable(show_header=True, header_style="bold", box=None)
    table.add_column("", style="cyan")
    for symbol in symbols:
        table.add_column(symbol, justify="center")

    for a in symbols:
        cells = []
        for b in symbols:
            rel = alphabet.rel(a, b)
            cells.append(Text(rel.pretty, style=RELATION_STYLES[rel.value]) if rel is not None else Text(""))
        table.add_row(a, *cells)
    return table


def trace_table(t: Trace) -> RichTable:
    table = RichTable(show_header=True, header_style="bold", box=None)
    table.add_column("#", style="dim", justify="right")
    table.add_column("Move", style="cyan")
    table.add_column("Stack")
    table.add_column("Remaining", style="dim")

    for index, item in enumerate(t.steps):
        move = item.move.value if item.move is not None else "start"
        stack = "".join(entry.render() for entry in item.configuration.stack)
        remaining = " ".join(item.configuration.input + (BORDER,))
        table.add_row(str(index), move, stack, remaining)
    return table


def report_table(report: AgreementReport) -> RichTable:
    table = RichTable(show_header=True, header_style="bold", box=None)
    table.add_column("Word", style="cyan")
    table.add_column("Left")
    table.add_column("Right")
    for d in report.disagreements:
        table.add_row(" ".join(d.word) or "ε", str(d.left).lower(), str(d.right).lower())
    return table
