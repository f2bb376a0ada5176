"""
Verification reports.

Checks never raise on a failed claim; they record a CheckEntry with an
optional witness. Reports render as JSON or as a pandas table.
"""

from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, Field


class CheckEntry(BaseModel):
    """One verified (or refuted) statement."""

    name: str
    passed: bool
    witness: Optional[Any] = Field(default=None, description="Counterexample when the check fails")
    detail: Optional[str] = None


class CheckReport(BaseModel):
    """A group of checks instantiating one statement about the spectral presheaf."""

    title: str
    claim: str = Field(default="", description="Glossary-keyed statement this report instantiates")
    entries: List[CheckEntry] = Field(default_factory=list)
    values: Dict[str, Any] = Field(default_factory=dict, description="Computed counts and orders")

    def add(self, name: str, passed: bool, witness: Any = None, detail: Optional[str] = None) -> bool:
        self.entries.append(CheckEntry(name=name, passed=bool(passed), witness=witness, detail=detail))
        return bool(passed)

    def extend(self, other: 'CheckReport', prefix: str = ""):
        for entry in other.entries:
            self.entries.append(entry.model_copy(update={'name': f"{prefix}{entry.name}"}))
        self.values.update({f"{prefix}{k}": v for k, v in other.values.items()})

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    def entry(self, name: str) -> CheckEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(f"No check named {name!r} in report {self.title!r}")

    def failures(self) -> List[CheckEntry]:
        return [entry for entry in self.entries if not entry.passed]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {'check': e.name, 'result': 'pass' if e.passed else 'FAIL',
             'witness': '' if e.witness is None else str(e.witness)}
            for e in self.entries
        ]
        return pd.DataFrame(rows, columns=['check', 'result', 'witness'])

    def to_text(self) -> str:
        lines = [self.title]
        if self.claim:
            lines.append(f"  instantiates: {self.claim}")
        for key, value in self.values.items():
            lines.append(f"  {key}: {value}")
        if self.entries:
            lines.append(self.to_frame().to_string(index=False))
        lines.append(f"  overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)
