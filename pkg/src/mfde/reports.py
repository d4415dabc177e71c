"""Small report containers shared by the diagnostic entry points."""

from dataclasses import dataclass, field

__all__ = ["CheckResult", "DiagnosticsReport"]


@dataclass
class CheckResult:
    """Outcome of one named check: measured value against a threshold."""
    name: str
    passed: bool
    value: float = 0.0
    threshold: float = 0.0
    detail: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": float(self.value),
            "threshold": float(self.threshold),
            "detail": self.detail,
        }


@dataclass
class DiagnosticsReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, value=0.0, threshold=0.0, detail=""):
        self.checks.append(CheckResult(name, bool(passed), value, threshold, detail))

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __iter__(self):
        return iter(self.checks)

    def __len__(self):
        return len(self.checks)

    def to_dict(self):
        return {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }
