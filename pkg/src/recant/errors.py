"""Exception types shared across the package."""

from __future__ import annotations


class RecantError(Exception):
    """Base class for all package-specific errors."""


class GraphError(RecantError):
    """Malformed graph: unknown vertex, duplicate edge, self loop, or cycle."""


class BundleError(RecantError):
    """Invalid path bundle: non-proper path or edge-inconsistent path set."""


class RecantingDistrictError(RecantError):
    """A recanting district blocks identification from interventional densities.

    Carries the list of RecantingReport witnesses in ``reports``.
    """

    def __init__(self, reports):
        self.reports = list(reports)
        names = "; ".join(
            "{%s} via %s" % (",".join(r.district), r.treatment) for r in self.reports
        )
        super().__init__(f"recanting district(s): {names}")


class NotIdentifiableError(RecantError):
    """An interventional term is not identifiable from the observed joint.

    Carries the ``Hedge`` witness in ``hedge``.
    """

    def __init__(self, hedge):
        self.hedge = hedge
        super().__init__(str(hedge))


class PositivityError(RecantError):
    """Evaluation hit a zero-probability conditioning event that no enclosing
    factor forces to zero."""


class ModelError(RecantError):
    """Malformed discrete SCM: incomplete mechanism table or bad noise spec."""


class EnumerationLimitError(RecantError):
    """Exogenous configuration space exceeds the enumeration guard."""


class ConstructionError(RecantError):
    """A counterexample model pair failed its built-in verification."""


class ParseError(RecantError):
    """Syntax or semantic error in a text input; carries line/column."""

    def __init__(self, message, line=None, column=None, code="syntax"):
        self.line = line
        self.column = column
        self.code = code
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
