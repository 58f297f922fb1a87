"""Node-count budgets for exhaustive searches.

Budgets count visited nodes (relations, teams, evaluator calls), not
wall-clock time, so identical runs exhaust at identical points.
"""

from __future__ import annotations

from .errors import ResourceExhausted

DEFAULT_NODE_BUDGET = 5_000_000
DEFAULT_RELATION_BITS = 22  # enumerate at most 2^22 relations in one stream


class Budget:
    """A mutable counter that raises ResourceExhausted when spent."""

    def __init__(self, limit: int, what: str = "search"):
        if limit <= 0:
            raise ValueError("budget limit must be positive")
        self.limit = limit
        self.used = 0
        self.what = what

    def charge(self, amount: int = 1) -> None:
        self.used += amount
        if self.used > self.limit:
            raise ResourceExhausted(
                f"{self.what} exceeded budget of {self.limit} nodes")

    def check_upfront(self, needed: int) -> None:
        """Fail fast when a closed-form count already exceeds the budget."""
        if needed > self.limit - self.used:
            raise ResourceExhausted(
                f"{self.what} needs {needed} nodes, budget has "
                f"{self.limit - self.used} left")
