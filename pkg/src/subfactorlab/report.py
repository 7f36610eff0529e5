"""Pass/fail reports shared by all verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field


class AxiomViolation(ValueError):
    """Raised when a construction cannot proceed because an axiom fails."""


@dataclass
class Check:
    name: str
    passed: bool
    deviation: float
    tol: float
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "deviation": self.deviation,
            "tol": self.tol,
            "note": self.note,
        }


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, deviation: float, tol: float, note: str = "") -> Check:
        dev = float(deviation)
        chk = Check(name, bool(dev < tol), dev, tol, note)
        self.checks.append(chk)
        return chk

    def add_bool(self, name: str, ok: bool, note: str = "") -> Check:
        chk = Check(name, bool(ok), 0.0 if ok else 1.0, 0.5, note)
        self.checks.append(chk)
        return chk

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.deviation, c.tol, c.note))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_deviation(self) -> float:
        return max((c.deviation for c in self.checks), default=0.0)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "checks": [c.to_dict() for c in self.checks],
        }

    def summary(self) -> str:
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            flag = "ok  " if c.passed else "FAIL"
            lines.append(f"  [{flag}] {c.name}: deviation {c.deviation:.3e} (tol {c.tol:.1e}) {c.note}".rstrip())
        return "\n".join(lines)
