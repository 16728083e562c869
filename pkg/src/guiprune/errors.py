"""Exception hierarchy.

Every error raised for a domain reason derives from :class:`GuiPruneError`
so the CLI can map it to a single exit code.
"""


class GuiPruneError(Exception):
    """Base class for domain errors."""


class ConfigError(GuiPruneError, ValueError):
    """Invalid hyperparameters or a malformed configuration document."""


class BudgetTooSmall(GuiPruneError):
    """The history budget cannot give every frame at least one token."""


class QuotaExceedsOriginal(GuiPruneError):
    """A frame quota asks for more tokens than the frame has (no upscaling)."""


class KTooLarge(GuiPruneError):
    """Asked to select more items than are available."""


class EmptyBudget(GuiPruneError):
    """The current-frame budget floors to zero tokens."""


class GridMismatch(GuiPruneError):
    """Array or map dimensions do not cover the token grid."""


class ParseError(GuiPruneError):
    """Malformed input file; carries the offending line and column."""

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = [str(path)] if path is not None else []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(", ".join(where) + ": " + message if where else message)
