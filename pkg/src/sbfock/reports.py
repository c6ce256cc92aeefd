"""Lightweight result records shared by the verification-style operations."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckResult:
    """Outcome of a single named check.

    ``max_violation`` is an absolute magnitude for identity checks and a
    ratio overshoot (max LHS/RHS - 1, clipped at 0) for inequality checks.
    ``skipped`` marks checks whose preconditions did not hold; a skipped
    check never fails.
    """

    name: str
    passed: bool
    max_violation: float
    tolerance: float
    skipped: bool = False
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if self.skipped:
            return "SKIPPED"
        return "PASS" if self.passed else "FAIL"


@dataclass
class CheckSuite:
    """A named bundle of :class:`CheckResult` rows."""

    name: str
    results: list = field(default_factory=list)

    def add(self, result: CheckResult) -> None:
        self.results.append(result)

    @property
    def passed(self) -> bool:
        return all(r.passed or r.skipped for r in self.results)

    def worst(self) -> float:
        active = [r.max_violation for r in self.results if not r.skipped]
        return max(active) if active else 0.0

    def summary_lines(self):
        for r in self.results:
            yield f"{self.name}/{r.name}: {r.verdict} (max violation {r.max_violation:.3e}, tol {r.tolerance:.1e})"
