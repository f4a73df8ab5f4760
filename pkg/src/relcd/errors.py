"""Shared exception types."""


class Infeasible(RuntimeError):
    """A generation request cannot be satisfied under its constraints.

    Raised when dependency sampling exhausts the candidate pool or a
    skeleton density cannot be realized under cardinality constraints.
    """
